#include "mindmap/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "mindmap/error.hpp"
#include "mindmap/util.hpp"

namespace mindmap {

namespace fs = std::filesystem;

namespace {

// TED-LIUM marks untranscribed stretches with this pseudo-utterance.
constexpr std::string_view kIgnoredSegment = "ignore_time_segment_in_scoring";

bool parse_seconds(std::string_view field, double& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string_view next_field(std::string_view line, std::size_t& pos) {
  while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
  std::size_t start = pos;
  while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
  return line.substr(start, pos - start);
}

std::string camel_split(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char c = s[i];
    if (i > 0 && std::isupper(c)) {
      const unsigned char prev = s[i - 1];
      const bool next_lower =
          i + 1 < s.size() && std::islower(static_cast<unsigned char>(s[i + 1]));
      // "ElKhani" -> "El Khani"; "JRRTolkien" -> "JRR Tolkien"
      if (std::islower(prev) || std::isdigit(prev) || (std::isupper(prev) && next_lower))
        out.push_back(' ');
    }
    out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace

const Recording* Corpus::find(std::string_view id) const {
  auto it = std::lower_bound(recordings.begin(), recordings.end(), id,
                             [](const Recording& r, std::string_view v) { return r.id < v; });
  return it != recordings.end() && it->id == id ? &*it : nullptr;
}

std::vector<StmSegment> parse_stm(std::string_view stm_text) {
  std::vector<StmSegment> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= stm_text.size()) {
    auto end = stm_text.find('\n', start);
    if (end == std::string_view::npos) end = stm_text.size();
    std::string_view line = stm_text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t pos = 0;
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos == line.size() || line.substr(pos).starts_with(";;")) {
      if (end == stm_text.size()) break;
      continue;
    }

    std::string_view fields[6];
    for (auto& f : fields) f = next_field(line, pos);
    StmSegment seg;
    if (fields[5].empty() || !parse_seconds(fields[3], seg.start_s) ||
        !parse_seconds(fields[4], seg.end_s)) {
      throw Error(ErrorKind::MalformedLine, "line " + std::to_string(line_no));
    }
    seg.source_id = fields[0];
    seg.channel = fields[1];
    seg.speaker_label = fields[2];
    seg.condition_label = fields[5];
    seg.text = trim(line.substr(pos));
    out.push_back(std::move(seg));
    if (end == stm_text.size()) break;
  }
  return out;
}

std::string join_transcript(const std::vector<StmSegment>& segments) {
  std::vector<const StmSegment*> ordered;
  ordered.reserve(segments.size());
  for (const auto& s : segments) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const StmSegment* a, const StmSegment* b) { return a->start_s < b->start_s; });
  std::string out;
  for (const auto* s : ordered) {
    if (s->text.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += s->text;
  }
  return out;
}

double transcript_duration(const std::vector<StmSegment>& segments) {
  if (segments.empty()) return 0.0;
  double first = segments.front().start_s;
  double last = segments.front().end_s;
  for (const auto& s : segments) {
    first = std::min(first, s.start_s);
    last = std::max(last, s.end_s);
  }
  return std::max(0.0, last - first);
}

RecordingMetadata recording_metadata(std::string_view id, const MetadataTable* sidecar) {
  if (sidecar) {
    if (auto it = sidecar->find(id); it != sidecar->end()) return it->second;
  }
  const auto underscore = id.find('_');
  const std::string_view head = id.substr(0, underscore);
  if (head.empty()) return {std::string(id), std::string(id)};
  RecordingMetadata meta;
  meta.speaker = camel_split(head);
  meta.title = meta.speaker;
  if (underscore != std::string_view::npos && underscore + 1 < id.size())
    meta.title += " (" + std::string(id.substr(underscore + 1)) + ")";
  return meta;
}

MetadataTable load_metadata_sidecar(const fs::path& path) {
  MetadataTable table;
  const std::string text = read_file(path);
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) continue;  // header
    if (trim(line).empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() < 3)
      throw Error(ErrorKind::MalformedLine,
                  path.filename().string() + " line " + std::to_string(line_no));
    table[cols[0]] = RecordingMetadata{cols[1], cols[2]};
  }
  return table;
}

Corpus load_corpus(const fs::path& root) {
  const fs::path stm_dir = root / "stm";
  if (!fs::is_directory(stm_dir))
    throw Error(ErrorKind::MissingDirectory, stm_dir.string());

  MetadataTable sidecar;
  const bool has_sidecar = fs::is_regular_file(root / "metadata.tsv");
  if (has_sidecar) sidecar = load_metadata_sidecar(root / "metadata.tsv");

  std::vector<fs::path> stm_files;
  for (const auto& entry : fs::directory_iterator(stm_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".stm")
      stm_files.push_back(entry.path());
  }
  std::sort(stm_files.begin(), stm_files.end());

  Corpus corpus;
  corpus.root = root;
  const fs::path audio_dir = root / "audio";
  for (const auto& file : stm_files) {
    std::vector<StmSegment> segments;
    try {
      segments = parse_stm(read_file(file));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MalformedLine) throw;
      throw Error(ErrorKind::MalformedLine,
                  file.filename().string() + " " + e.detail());
    }
    std::erase_if(segments, [](const StmSegment& s) { return s.text == kIgnoredSegment; });

    Recording rec;
    rec.id = file.stem().string();
    auto meta = recording_metadata(rec.id, has_sidecar ? &sidecar : nullptr);
    rec.speaker = std::move(meta.speaker);
    rec.title = std::move(meta.title);
    rec.raw_transcript = join_transcript(segments);
    rec.duration_s = transcript_duration(segments);
    for (const char* ext : {".wav", ".mp3", ".sph"}) {
      if (fs::is_regular_file(audio_dir / (rec.id + ext))) {
        rec.audio_path = fs::path("audio") / (rec.id + ext);
        break;
      }
    }
    corpus.recordings.push_back(std::move(rec));
  }
  std::sort(corpus.recordings.begin(), corpus.recordings.end(),
            [](const Recording& a, const Recording& b) { return a.id < b.id; });
  return corpus;
}

}  // namespace mindmap
