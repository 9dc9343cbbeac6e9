#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mindmap/curation.hpp"
#include "mindmap/illustrator.hpp"
#include "mindmap/store.hpp"
#include "mindmap/topics.hpp"
#include "mindmap/util.hpp"

namespace mmtest {

using nlohmann::json;

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "mindmap-test-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path fixtures_dir() { return MINDMAP_TEST_FIXTURES; }
fs::path planted_corpus() { return fixtures_dir() / "planted"; }

std::map<std::string, std::string> planted_labels() {
  std::map<std::string, std::string> out;
  std::istringstream in(mindmap::read_file(planted_corpus() / "labels.tsv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    auto cols = mindmap::split(line, '\t');
    if (cols.size() == 2) out[cols[0]] = cols[1];
  }
  return out;
}

const mindmap::StopwordList& stopwords() {
  static const auto list = mindmap::StopwordList::from_file(mindmap::default_stopword_path());
  return list;
}

const mindmap::LemmaTable& lemmas() {
  static const auto table = mindmap::LemmaTable::from_file(mindmap::default_lemma_path());
  return table;
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const double n = static_cast<double>(a.size());
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [_, v] : cells) index += c2(v);
  for (const auto& [_, v] : rows) sum_rows += c2(v);
  for (const auto& [_, v] : cols) sum_cols += c2(v);
  const double expected = sum_rows * sum_cols / c2(n);
  const double max_index = (sum_rows + sum_cols) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<std::map<std::string, double>> brute_tfidf(const std::vector<std::vector<std::string>>& docs,
                                                       const std::vector<std::string>& vocab_terms) {
  const double n = static_cast<double>(docs.size());
  std::vector<std::map<std::string, double>> out(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& term : vocab_terms) {
      double count = 0;
      for (const auto& tok : docs[d])
        if (tok == term) count += 1;
      if (count == 0) continue;
      double df = 0;
      for (const auto& other : docs)
        if (std::find(other.begin(), other.end(), term) != other.end()) df += 1;
      out[d][term] = count * (std::log((1 + n) / (1 + df)) + 1);
    }
    double sq = 0;
    for (const auto& [_, w] : out[d]) sq += w * w;
    for (auto& [_, w] : out[d]) w /= std::sqrt(sq);
  }
  return out;
}

void write_stm(const fs::path& corpus_root, const std::string& id,
               const std::vector<std::pair<double, std::string>>& segments) {
  fs::create_directories(corpus_root / "stm");
  std::ofstream out(corpus_root / "stm" / (id + ".stm"));
  for (const auto& [start, text] : segments)
    out << id << " 1 " << id << " " << start << " " << start + 1.0 << " <o,f0,male> " << text << "\n";
}

mindmap::PipelineConfig planted_config(const fs::path& derived_root) {
  mindmap::PipelineConfig c;
  c.corpus_root = planted_corpus();
  c.derived_root = derived_root;
  c.retry_delay_ms = 0;
  c.concurrency = 4;
  c.image_width = 64;
  c.image_height = 64;
  return c;
}

std::string planted_curation_script(const mindmap::PipelineConfig& config) {
  const mindmap::DerivedPaths paths{config.derived_root};
  const auto model = mindmap::read_model(paths);
  std::vector<std::string> ids;
  for (const auto& [id, _] : model.rows) ids.push_back(id);
  const auto session = mindmap::start_session(ids, config.seed);
  const auto proposal = mindmap::run_round(session, model, 6, session.seed + session.round, config.label_terms);
  std::string script = "round 6\n";
  std::set<std::string> used;
  for (const auto& c : proposal.clusters) {
    std::string name = c.suggested_terms.empty() ? "Cluster" : mindmap::title_case(c.suggested_terms[0]);
    if (!used.insert(mindmap::ascii_lower(name)).second) name += " " + std::to_string(c.id);
    script += "keep " + std::to_string(c.id) + " as " + name + "\n";
  }
  script += "commit\nfinish\nquit\n";
  return script;
}

std::string run_planted_pipeline(const mindmap::PipelineConfig& config, const std::string& curate_script) {
  std::ostringstream out, err;
  if (mindmap::cmd_ingest(config, out, err) != 0) throw std::runtime_error("ingest: " + err.str());
  if (mindmap::cmd_vectorize(config, out, err) != 0) throw std::runtime_error("vectorize: " + err.str());
  std::istringstream in(curate_script.empty() ? planted_curation_script(config) : curate_script);
  std::ostringstream repl;
  if (mindmap::cmd_curate(config, in, repl, err) != 0) throw std::runtime_error("curate: " + err.str());
  if (mindmap::cmd_enrich(config, out, err) != 0) throw std::runtime_error("enrich: " + err.str());
  return repl.str();
}

const std::vector<std::pair<std::string, std::size_t>>& category_sizes() {
  static const std::vector<std::pair<std::string, std::size_t>> rows = {
      {"Computer Science", 44}, {"Climate", 42},    {"Health", 39},      {"Studying and Learning", 36},
      {"Brain", 36},            {"Music", 33},      {"World", 33},       {"Technology", 32},
      {"Cancer", 28},           {"Psychology", 28}, {"Food", 26},        {"School", 26},
      {"Robotics", 24},         {"Linguistics", 24}, {"Book", 24},       {"Genetics", 23},
      {"Africa", 23},           {"Video", 23},      {"Insects", 22},     {"Poetry", 21}};
  return rows;
}

CategoryStore build_category_store(const fs::path& root, bool with_images) {
  CategoryStore s{root / "corpus", root / "derived", {}, {}};
  const mindmap::DerivedPaths paths{s.derived_root};
  fs::create_directories(s.corpus_root / "audio");
  fs::create_directories(s.derived_root);

  std::vector<mindmap::Recording> recordings;
  std::vector<mindmap::Category> categories;
  std::vector<mindmap::TopicAssignment> topics;
  for (std::size_t c = 0; c < category_sizes().size(); ++c) {
    const auto& [name, count] = category_sizes()[c];
    mindmap::Category cat{name, {}, {}, 1};
    for (std::size_t i = 0; i < count; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "Speaker%02zuTalk%02zu_%zu", c, i, 2000 + i);
      mindmap::Recording r;
      r.id = id;
      const auto meta = mindmap::recording_metadata(r.id);
      r.speaker = meta.speaker;
      r.title = "Talk " + std::to_string(i) + " on " + name;
      r.raw_transcript = "a talk about " + name + " number " + std::to_string(i);
      r.duration_s = 60.0 + static_cast<double>(i);
      recordings.push_back(r);
      cat.member_ids.push_back(r.id);
      topics.push_back({r.id, mindmap::title_case(name), mindmap::TopicSource::TfidfFallback, std::nullopt});
    }
    std::sort(cat.member_ids.begin(), cat.member_ids.end());
    categories.push_back(cat);
  }
  std::sort(recordings.begin(), recordings.end(),
            [](const mindmap::Recording& a, const mindmap::Recording& b) { return a.id < b.id; });

  // One recording in Music carries a 1000-byte "wav"; bytes are i % 251.
  s.audio_id = categories[5].member_ids.front();
  s.silent_id = categories[5].member_ids.back();
  std::string audio(1000, '\0');
  for (std::size_t i = 0; i < audio.size(); ++i) audio[i] = static_cast<char>(i % 251);
  mindmap::write_file_atomic(s.corpus_root / "audio" / (s.audio_id + ".wav"), audio);
  for (auto& r : recordings)
    if (r.id == s.audio_id) r.audio_path = fs::path("audio") / (s.audio_id + ".wav");

  mindmap::write_json(paths.recordings(), mindmap::recordings_to_json(recordings));
  mindmap::write_json(paths.categories(), mindmap::categories_to_json(categories));
  mindmap::write_json(paths.topics(), mindmap::topics_to_json(topics));
  mindmap::PipelineConfig config;
  config.corpus_root = s.corpus_root;
  const json manifest_config = config.to_manifest_json();
  mindmap::update_manifest(paths, "fixture", json{{"recordings", recordings.size()}}, &manifest_config);

  if (with_images) {
    mindmap::ImageCache cache(paths.images_dir());
    mindmap::ProceduralImageProvider provider;
    std::vector<mindmap::ImageRequest> requests;
    for (std::size_t i = 0; i < recordings.size(); ++i)
      requests.push_back(mindmap::recording_image_request(recordings[i].id, "topic", 64, 64));
    for (const auto& c : categories) requests.push_back(mindmap::category_image_request(c.name, 64, 64));
    mindmap::parallel_for(requests.size(), 8, [&](std::size_t i) { cache.generate(requests[i], provider); });
    cache.save();
  }
  return s;
}

std::map<std::string, std::string> snapshot_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out[fs::relative(entry.path(), root).generic_string()] = mindmap::read_file(entry.path());
  return out;
}

}  // namespace mmtest
