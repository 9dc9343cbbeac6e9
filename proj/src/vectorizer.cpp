#include "mindmap/vectorizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "mindmap/error.hpp"
#include "mindmap/util.hpp"

namespace mindmap {

double SparseVector::weight(std::uint32_t column) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), column,
                             [](const auto& e, std::uint32_t c) { return e.first < c; });
  return it != entries.end() && it->first == column ? it->second : 0.0;
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (const auto& [_, w] : entries) s += w * w;
  return s;
}

double SparseVector::norm() const { return std::sqrt(squared_norm()); }

double SparseVector::dot(const SparseVector& other) const {
  double s = 0.0;
  auto a = entries.begin();
  auto b = other.entries.begin();
  while (a != entries.end() && b != other.entries.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      s += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return s;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view term) const {
  auto it = index.find(std::string(term));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::document_frequency(std::string_view term) const {
  auto col = find(term);
  return col ? df[*col] : 0;
}

Vocabulary Vocabulary::from_terms(std::vector<std::pair<std::string, std::size_t>> term_df,
                                  std::size_t n_docs) {
  std::sort(term_df.begin(), term_df.end());
  Vocabulary v;
  v.n_docs = n_docs;
  v.terms.reserve(term_df.size());
  v.df.reserve(term_df.size());
  for (auto& [term, df] : term_df) {
    if (!v.index.emplace(term, static_cast<std::uint32_t>(v.terms.size())).second)
      throw Error(ErrorKind::InconsistentStore, "duplicate vocabulary term " + term);
    v.terms.push_back(std::move(term));
    v.df.push_back(df);
  }
  return v;
}

const SparseVector* TfIdfModel::row(std::string_view id) const {
  auto it = rows.find(id);
  return it == rows.end() ? nullptr : &it->second;
}

Vocabulary build_vocabulary(const std::vector<CleanDocument>& docs, std::size_t min_df,
                            double max_df_ratio) {
  if (min_df < 1) throw Error(ErrorKind::DomainError, "min_df must be >= 1");
  if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0))
    throw Error(ErrorKind::DomainError, "max_df_ratio must be in (0, 1]");

  std::map<std::string, std::size_t, std::less<>> df;
  for (const auto& doc : docs) {
    std::vector<std::string_view> seen(doc.tokens.begin(), doc.tokens.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto t : seen) {
      auto it = df.find(t);
      if (it == df.end()) it = df.emplace(std::string(t), 0).first;
      ++it->second;
    }
  }
  const auto max_df =
      static_cast<std::size_t>(std::ceil(max_df_ratio * static_cast<double>(docs.size())));
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= min_df && count <= max_df) kept.emplace_back(term, count);
  }
  if (kept.empty()) throw Error(ErrorKind::EmptyVocabulary, "no term survives df pruning");
  return Vocabulary::from_terms(std::move(kept), docs.size());
}

double idf(std::size_t df, std::size_t n_docs) {
  if (df < 1 || df > n_docs)
    throw Error(ErrorKind::DomainError, "idf needs 1 <= df <= n_docs (df=" +
                                            std::to_string(df) + ", n_docs=" +
                                            std::to_string(n_docs) + ")");
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

TfIdfModel tfidf_rows(const std::vector<CleanDocument>& docs, const Vocabulary& vocab) {
  std::vector<double> idf_table(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) idf_table[i] = idf(vocab.df[i], vocab.n_docs);

  TfIdfModel model;
  model.vocabulary = vocab;
  model.n_docs = vocab.n_docs;
  for (const auto& doc : docs) {
    std::map<std::uint32_t, std::size_t> counts;
    for (const auto& t : doc.tokens) {
      if (auto col = vocab.find(t)) ++counts[*col];
    }
    SparseVector row;
    row.entries.reserve(counts.size());
    for (auto [col, n] : counts) row.entries.emplace_back(col, static_cast<double>(n) * idf_table[col]);
    const double n = row.norm();
    if (n > 0.0) {
      for (auto& e : row.entries) e.second /= n;
    }
    model.rows[doc.recording_id] = std::move(row);
  }
  return model;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::string format_vocab_tsv(const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out += vocab.terms[i];
    out.push_back('\t');
    out += std::to_string(vocab.df[i]);
    out.push_back('\n');
  }
  return out;
}

Vocabulary parse_vocab_tsv(std::string_view text, std::size_t n_docs) {
  std::vector<std::pair<std::string, std::size_t>> term_df;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::MalformedLine, "vocab.tsv line " + std::to_string(line_no));
    term_df.emplace_back(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
  }
  return Vocabulary::from_terms(std::move(term_df), n_docs);
}

namespace {

constexpr char kMagic[8] = {'M', 'M', 'V', 'E', 'C', '0', '0', '1'};

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::InconsistentStore, "truncated vectors.bin");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_vectors(const TfIdfModel& model) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, model.n_docs);
  put<std::uint64_t>(out, model.vocabulary.size());
  put<std::uint64_t>(out, model.rows.size());
  for (const auto& [id, row] : model.rows) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(row.entries.size()));
    for (const auto& [col, w] : row.entries) {
      put<std::uint32_t>(out, col);
      put<double>(out, w);
    }
  }
  return out;
}

TfIdfModel decode_vectors(std::string_view bytes, Vocabulary vocab) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
    throw Error(ErrorKind::InconsistentStore, "vectors.bin has wrong magic/version");
  TfIdfModel model;
  model.n_docs = in.get<std::uint64_t>();
  const auto n_terms = in.get<std::uint64_t>();
  const auto n_rows = in.get<std::uint64_t>();
  if (n_terms != vocab.size())
    throw Error(ErrorKind::InconsistentStore, "vectors.bin and vocab.tsv disagree on term count");
  vocab.n_docs = model.n_docs;
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    std::string id(in.take(in.get<std::uint32_t>()));
    SparseVector row;
    const auto nnz = in.get<std::uint32_t>();
    row.entries.reserve(nnz);
    for (std::uint32_t i = 0; i < nnz; ++i) {
      const auto col = in.get<std::uint32_t>();
      const auto w = in.get<double>();
      if (col >= n_terms) throw Error(ErrorKind::InconsistentStore, "column out of range");
      row.entries.emplace_back(col, w);
    }
    model.rows.emplace(std::move(id), std::move(row));
  }
  if (!in.done()) throw Error(ErrorKind::InconsistentStore, "trailing bytes in vectors.bin");
  model.vocabulary = std::move(vocab);
  return model;
}

}  // namespace mindmap
