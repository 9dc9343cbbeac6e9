#include "mindmap/store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include "mindmap/error.hpp"
#include "mindmap/util.hpp"

namespace mindmap {

namespace fs = std::filesystem;
using nlohmann::json;

std::string dump_json(const json& j) {
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, dump_json(j)); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InconsistentStore, path.filename().string() + ": " + e.what());
  }
}

json recordings_to_json(const std::vector<Recording>& recordings) {
  json out = json::array();
  for (const auto& r : recordings) {
    out.push_back(json{{"id", r.id},
                       {"speaker", r.speaker},
                       {"title", r.title},
                       {"audio_path", r.audio_path ? json(r.audio_path->generic_string()) : json(nullptr)},
                       {"duration_s", r.duration_s},
                       {"raw_transcript", r.raw_transcript}});
  }
  return out;
}

std::vector<Recording> recordings_from_json(const json& j) {
  std::vector<Recording> out;
  for (const auto& item : j) {
    Recording r;
    r.id = item.at("id").get<std::string>();
    r.speaker = item.at("speaker").get<std::string>();
    r.title = item.at("title").get<std::string>();
    if (!item.at("audio_path").is_null()) r.audio_path = item["audio_path"].get<std::string>();
    r.duration_s = item.at("duration_s").get<double>();
    r.raw_transcript = item.at("raw_transcript").get<std::string>();
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const Recording& a, const Recording& b) { return a.id < b.id; });
  return out;
}

void write_tokens(const DerivedPaths& paths, const std::vector<CleanDocument>& docs) {
  fs::create_directories(paths.tokens_dir());
  for (const auto& d : docs)
    write_file_atomic(paths.tokens_dir() / (d.recording_id + ".txt"), join_tokens(d.tokens) + "\n");
}

std::vector<CleanDocument> read_tokens(const DerivedPaths& paths, const std::vector<Recording>& recordings) {
  std::vector<CleanDocument> docs;
  for (const auto& r : recordings) {
    const auto file = paths.tokens_dir() / (r.id + ".txt");
    if (!fs::is_regular_file(file))
      throw Error(ErrorKind::InconsistentStore, "missing tokens for " + r.id + "; run ingest");
    docs.push_back(CleanDocument{r.id, split_whitespace(read_file(file))});
  }
  return docs;
}

void write_model(const DerivedPaths& paths, const TfIdfModel& model) {
  write_file_atomic(paths.vocab(), format_vocab_tsv(model.vocabulary));
  write_file_atomic(paths.vectors(), encode_vectors(model));
}

TfIdfModel read_model(const DerivedPaths& paths) {
  const auto bytes = read_file(paths.vectors());
  // decode_vectors takes n_docs from the vectors.bin header.
  return decode_vectors(bytes, parse_vocab_tsv(read_file(paths.vocab()), 0));
}

json read_manifest(const DerivedPaths& paths) {
  if (!fs::is_regular_file(paths.manifest())) return json::object();
  return read_json(paths.manifest());
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void update_manifest(const DerivedPaths& paths, const std::string& stage, const json& fields,
                     const json* config) {
  json m = read_manifest(paths);
  if (config) m["config"] = *config;
  m["format_version"] = kStoreFormatVersion;
  m["tool_version"] = kToolVersion;
  json entry = fields;
  entry["completed_at"] = utc_now();
  m["stages"][stage] = std::move(entry);
  write_json(paths.manifest(), m);
}

json manifest_without_timestamps(const json& manifest) {
  json m = manifest;
  if (m.contains("stages"))
    for (auto& [_, stage] : m["stages"].items()) stage.erase("completed_at");
  return m;
}

std::string index_source_digest(const DerivedPaths& paths) {
  std::string acc;
  for (const auto& p : {paths.recordings(), paths.categories(), paths.topics(), paths.vocab(), paths.vectors()}) {
    acc += p.filename().string();
    acc += fs::is_regular_file(p) ? sha256_hex(read_file(p)) : std::string("-");
    acc.push_back('\n');
  }
  return sha256_hex(acc);
}

const Recording* StoreSnapshot::find(std::string_view id) const {
  auto it = std::lower_bound(recordings.begin(), recordings.end(), id,
                             [](const Recording& r, std::string_view v) { return r.id < v; });
  return it != recordings.end() && it->id == id ? &*it : nullptr;
}

const Category* StoreSnapshot::category(std::string_view name) const {
  for (const auto& c : categories)
    if (c.name == name) return &c;
  return nullptr;
}

std::string StoreSnapshot::category_of(std::string_view id) const {
  auto it = index.category_of.find(id);
  return it == index.category_of.end() ? std::string() : it->second;
}

StoreSnapshot StoreSnapshot::load(const fs::path& derived_root) {
  StoreSnapshot s;
  const DerivedPaths paths{derived_root};
  try {
    if (!fs::is_regular_file(paths.recordings()) || !fs::is_regular_file(paths.categories())) {
      s.load_error = "derived store at " + derived_root.string() + " has no recordings/categories";
      return s;
    }
    const json manifest = read_manifest(paths);
    const json config = manifest.value("config", json::object());
    s.corpus_root = config.value("corpus_root", std::string());
    const auto stop_path = config.value("stopword_path", default_stopword_path().string());
    const auto lemma_path = config.value("lemma_path", default_lemma_path().string());
    s.stopwords = StopwordList::from_file(fs::is_regular_file(stop_path) ? fs::path(stop_path) : default_stopword_path());
    s.lemmas = LemmaTable::from_file(fs::is_regular_file(lemma_path) ? fs::path(lemma_path) : default_lemma_path());

    s.recordings = recordings_from_json(read_json(paths.recordings()));
    s.categories = categories_from_json(read_json(paths.categories()));
    std::vector<TopicAssignment> topics;
    if (fs::is_regular_file(paths.topics())) topics = topics_from_json(read_json(paths.topics()));
    for (const auto& t : topics) s.topic_of[t.recording_id] = t.topic;

    s.images_dir = paths.images_dir();
    if (fs::is_regular_file(paths.images_dir() / "manifest.json")) {
      ImageCache cache(paths.images_dir());
      const json manifest = read_json(paths.images_dir() / "manifest.json");
      for (const auto& [target, _] : manifest.items()) {
        auto asset = cache.find(target);
        if (asset && fs::is_regular_file(paths.images_dir() / asset->file)) s.images[target] = *asset;
      }
    }

    bool have_index = false;
    if (fs::is_regular_file(paths.search_index())) {
      const json stored = read_json(paths.search_index());
      if (stored.value("source_digest", "") == index_source_digest(paths)) {
        s.index = index_from_json(stored.at("index"));
        have_index = true;
      }
    }
    if (!have_index) {
      std::optional<TfIdfModel> model;
      if (fs::is_regular_file(paths.vectors()) && fs::is_regular_file(paths.vocab())) model = read_model(paths);
      s.index = build_index(model ? &*model : nullptr, s.recordings, topics, s.categories, s.stopwords, s.lemmas);
    }
    s.loaded = true;
  } catch (const std::exception& e) {
    s = StoreSnapshot{};
    s.load_error = e.what();
  }
  return s;
}

}  // namespace mindmap
