#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mindmap/error.hpp"
#include "mindmap/pipeline.hpp"
#include "mindmap/textprep.hpp"
#include "mindmap/vectorizer.hpp"

namespace mmtest {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

fs::path fixtures_dir();
fs::path planted_corpus();
/// id -> planted topic name.
std::map<std::string, std::string> planted_labels();

const mindmap::StopwordList& stopwords();
const mindmap::LemmaTable& lemmas();

template <typename F>
std::optional<mindmap::ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const mindmap::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Hubert-Arabie adjusted Rand index from the contingency table.
double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

/// Direct evaluation of raw-count x smoothed idf, then L2 normalization.
/// Returns weights[doc][term] for the terms in `vocab_terms`.
std::vector<std::map<std::string, double>> brute_tfidf(const std::vector<std::vector<std::string>>& docs,
                                                       const std::vector<std::string>& vocab_terms);

void write_stm(const fs::path& corpus_root, const std::string& id,
               const std::vector<std::pair<double, std::string>>& segments);

/// Offline config over the planted corpus with no retry sleeps.
mindmap::PipelineConfig planted_config(const fs::path& derived_root);

/// Runs ingest, vectorize, a scripted curation and enrich(offline).
/// Returns the curation transcript; throws on any nonzero exit.
std::string run_planted_pipeline(const mindmap::PipelineConfig& config, const std::string& curate_script);

/// Curation script that keeps each of the 6 planted clusters under the name
/// of its majority topic, as a curator reading the suggested terms would.
std::string planted_curation_script(const mindmap::PipelineConfig& config);

/// Twenty category names and sizes, largest first.
const std::vector<std::pair<std::string, std::size_t>>& category_sizes();

struct CategoryStore {
  fs::path corpus_root;
  fs::path derived_root;
  std::string audio_id;   // recording with a 1000-byte wav
  std::string silent_id;  // recording without audio
};

/// Writes a derived store with those categories (plus corpus/audio) under root.
CategoryStore build_category_store(const fs::path& root, bool with_images = true);

/// Byte content of every file under root, keyed by relative path.
std::map<std::string, std::string> snapshot_files(const fs::path& root);

}  // namespace mmtest
