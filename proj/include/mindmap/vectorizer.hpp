#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mindmap/textprep.hpp"

namespace mindmap {

/// Sparse row with strictly increasing column ids.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }
  double weight(std::uint32_t column) const;
  double squared_norm() const;
  double norm() const;
  double dot(const SparseVector& other) const;

  bool operator==(const SparseVector&) const = default;
};

struct Vocabulary {
  std::vector<std::string> terms;           // lexicographic
  std::vector<std::size_t> df;              // aligned with terms
  std::unordered_map<std::string, std::uint32_t> index;
  std::size_t n_docs = 0;

  std::size_t size() const { return terms.size(); }
  std::optional<std::uint32_t> find(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const;

  static Vocabulary from_terms(std::vector<std::pair<std::string, std::size_t>> term_df,
                               std::size_t n_docs);
};

struct TfIdfModel {
  Vocabulary vocabulary;
  std::size_t n_docs = 0;
  std::map<std::string, SparseVector, std::less<>> rows;

  const SparseVector* row(std::string_view id) const;
};

inline constexpr std::string_view kIdfVariant = "smooth: ln((1+n_docs)/(1+df))+1";

/// Keeps tokens with min_df <= df <= ceil(max_df_ratio * n_docs).
/// Throws Error{EmptyVocabulary} when nothing survives and
/// Error{DomainError} for out-of-range thresholds.
Vocabulary build_vocabulary(const std::vector<CleanDocument>& docs, std::size_t min_df,
                            double max_df_ratio);

/// ln((1 + n_docs) / (1 + df)) + 1; Error{DomainError} unless 1 <= df <= n_docs.
double idf(std::size_t df, std::size_t n_docs);

/// Raw count times idf, then L2-normalized per row. Out-of-vocabulary tokens
/// are ignored; an empty document maps to the zero vector.
TfIdfModel tfidf_rows(const std::vector<CleanDocument>& docs, const Vocabulary& vocab);

double cosine(const SparseVector& a, const SparseVector& b);

/// `term<TAB>df` per line.
std::string format_vocab_tsv(const Vocabulary& vocab);
Vocabulary parse_vocab_tsv(std::string_view text, std::size_t n_docs);

/// Little-endian binary: magic "MMVEC001", u64 n_docs, u64 n_terms, u64 n_rows,
/// then per row: u32 id length, id bytes, u32 nnz, nnz x (u32 column, f64 weight).
std::string encode_vectors(const TfIdfModel& model);
TfIdfModel decode_vectors(std::string_view bytes, Vocabulary vocab);

}  // namespace mindmap
