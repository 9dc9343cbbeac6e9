#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mindmap {

/// One utterance line of an STM transcript.
struct StmSegment {
  std::string source_id;
  std::string channel;
  std::string speaker_label;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string condition_label;
  std::string text;

  bool operator==(const StmSegment&) const = default;
};

struct Recording {
  std::string id;
  std::string speaker;
  std::string title;
  std::string raw_transcript;
  /// Relative to the corpus root, e.g. "audio/AliceJones_2016.wav".
  std::optional<std::filesystem::path> audio_path;
  double duration_s = 0.0;

  bool operator==(const Recording&) const = default;
};

struct Corpus {
  std::vector<Recording> recordings;  // sorted by id
  std::filesystem::path root;

  const Recording* find(std::string_view id) const;
  bool operator==(const Corpus&) const = default;
};

struct RecordingMetadata {
  std::string speaker;
  std::string title;

  bool operator==(const RecordingMetadata&) const = default;
};

using MetadataTable = std::map<std::string, RecordingMetadata, std::less<>>;

/// Parses STM text. Lines starting with ";;" and blank lines are skipped;
/// the first six whitespace-separated fields are positional and the rest of
/// the line is the utterance text. Throws Error{MalformedLine} on the first
/// bad line.
std::vector<StmSegment> parse_stm(std::string_view stm_text);

/// Splits a TED-LIUM style stem ("SpeakerName_2016X") into display strings.
/// A sidecar entry for the id wins over the derived values.
RecordingMetadata recording_metadata(std::string_view id,
                                     const MetadataTable* sidecar = nullptr);

/// Reads `metadata.tsv` (header row `id<TAB>speaker<TAB>title`).
MetadataTable load_metadata_sidecar(const std::filesystem::path& path);

/// Loads `<root>/stm/*.stm` with optional `<root>/audio/` and
/// `<root>/metadata.tsv`.
Corpus load_corpus(const std::filesystem::path& root);

/// Space-join of segment texts, ordered by start time (stable for ties).
std::string join_transcript(const std::vector<StmSegment>& segments);

double transcript_duration(const std::vector<StmSegment>& segments);

}  // namespace mindmap
