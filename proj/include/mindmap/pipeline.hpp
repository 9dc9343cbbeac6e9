#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "mindmap/illustrator.hpp"
#include "mindmap/topics.hpp"

namespace mindmap {

inline constexpr const char* kLlmKeyEnv = "MINDMAP_LLM_KEY";
inline constexpr const char* kImgKeyEnv = "MINDMAP_IMG_KEY";

/// Settings for every pipeline stage, read from a `key = value` file.
/// Relative paths resolve against the config file's directory. Credentials
/// are never read from the file, only from MINDMAP_LLM_KEY and
/// MINDMAP_IMG_KEY.
struct PipelineConfig {
  std::filesystem::path corpus_root;
  std::filesystem::path derived_root;
  std::filesystem::path stopword_path;
  std::filesystem::path lemma_path;
  std::size_t min_df = 2;
  double max_df_ratio = 0.5;
  std::uint64_t seed = 42;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  std::size_t label_terms = 5;
  std::string residual_name = "Miscellaneous";

  std::string topic_provider = "offline";  // offline | chat | replay
  std::string llm_endpoint;
  std::string llm_model = "gpt-3.5-turbo";
  std::filesystem::path llm_replay_path;
  std::size_t transcript_budget = kDefaultTranscriptBudget;

  std::string image_provider = "procedural";  // procedural | remote
  std::string img_endpoint;
  std::uint32_t image_width = kDefaultImageSize;
  std::uint32_t image_height = kDefaultImageSize;
  double image_price = kDefaultImagePrice;

  std::size_t concurrency = 4;
  std::int64_t retry_delay_ms = 1000;

  std::string bind = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::filesystem::path static_dir;

  PipelineConfig();

  /// Error{Config} on unknown keys or unparsable values.
  static PipelineConfig parse(std::string_view text, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);

  RetryPolicy retry_policy() const;
  /// Reproducibility record for the manifest; no secrets, no derived_root.
  nlohmann::json to_manifest_json() const;
};

std::unique_ptr<TopicProvider> make_topic_provider(const PipelineConfig& config);
std::unique_ptr<ImageProvider> make_image_provider(const PipelineConfig& config);

/// Each command returns a process exit code and reports on `out` / `err`.
int cmd_ingest(const PipelineConfig& config, std::ostream& out, std::ostream& err);
int cmd_vectorize(const PipelineConfig& config, std::ostream& out, std::ostream& err);

/// Line-oriented curation loop: round [k] | show <c> | keep <c> as <name> |
/// drop <c> | commit | status | finish [name] | help | quit. End of input
/// behaves like quit.
int cmd_curate(const PipelineConfig& config, std::istream& in, std::ostream& out, std::ostream& err);

/// Provider overrides for enrichment; null members fall back to the config.
struct EnrichProviders {
  TopicProvider* topic = nullptr;
  ImageProvider* image = nullptr;
};

int cmd_enrich(const PipelineConfig& config, std::ostream& out, std::ostream& err,
               EnrichProviders providers = {});

}  // namespace mindmap
