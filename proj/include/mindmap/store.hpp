#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindmap/corpus.hpp"
#include "mindmap/curation.hpp"
#include "mindmap/illustrator.hpp"
#include "mindmap/search.hpp"
#include "mindmap/textprep.hpp"
#include "mindmap/topics.hpp"
#include "mindmap/vectorizer.hpp"

namespace mindmap {

inline constexpr int kStoreFormatVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

/// File layout of a derived store directory.
struct DerivedPaths {
  std::filesystem::path root;

  std::filesystem::path recordings() const { return root / "recordings.json"; }
  std::filesystem::path tokens_dir() const { return root / "tokens"; }
  std::filesystem::path vocab() const { return root / "vocab.tsv"; }
  std::filesystem::path vectors() const { return root / "vectors.bin"; }
  std::filesystem::path session() const { return root / "session.json"; }
  std::filesystem::path categories() const { return root / "categories.json"; }
  std::filesystem::path topics() const { return root / "topics.json"; }
  std::filesystem::path images_dir() const { return root / "images"; }
  std::filesystem::path search_index() const { return root / "search_index.json"; }
  std::filesystem::path enrich_failures() const { return root / "enrich_failures.json"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
};

/// Pretty-printed, key-sorted, newline-terminated; invalid UTF-8 replaced.
std::string dump_json(const nlohmann::json& j);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json recordings_to_json(const std::vector<Recording>& recordings);
std::vector<Recording> recordings_from_json(const nlohmann::json& j);

void write_tokens(const DerivedPaths& paths, const std::vector<CleanDocument>& docs);
std::vector<CleanDocument> read_tokens(const DerivedPaths& paths, const std::vector<Recording>& recordings);

void write_model(const DerivedPaths& paths, const TfIdfModel& model);
TfIdfModel read_model(const DerivedPaths& paths);

/// Manifest helpers. Stage timestamps live under stages.<name>.completed_at
/// and are the only time-dependent values in a store.
nlohmann::json read_manifest(const DerivedPaths& paths);
/// `config`, when given, replaces the top-level "config" object.
void update_manifest(const DerivedPaths& paths, const std::string& stage, const nlohmann::json& fields,
                     const nlohmann::json* config = nullptr);
/// Manifest with every completed_at removed, for reproducibility checks.
nlohmann::json manifest_without_timestamps(const nlohmann::json& manifest);

/// sha256 over the files the search index is derived from.
std::string index_source_digest(const DerivedPaths& paths);

/// Immutable in-memory view of a derived store, as served by the API.
struct StoreSnapshot {
  bool loaded = false;
  std::string load_error;
  std::filesystem::path corpus_root;
  std::vector<Recording> recordings;            // sorted by id
  std::vector<Category> categories;
  std::map<std::string, std::string, std::less<>> topic_of;
  std::map<std::string, ImageAsset, std::less<>> images;  // by target
  std::filesystem::path images_dir;
  SearchIndex index;
  StopwordList stopwords;
  LemmaTable lemmas;

  const Recording* find(std::string_view id) const;
  const Category* category(std::string_view name) const;
  std::string category_of(std::string_view id) const;

  /// Never throws: a missing or broken store yields loaded == false.
  static StoreSnapshot load(const std::filesystem::path& derived_root);
};

}  // namespace mindmap
