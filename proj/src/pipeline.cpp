#include "mindmap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "mindmap/corpus.hpp"
#include "mindmap/curation.hpp"
#include "mindmap/error.hpp"
#include "mindmap/search.hpp"
#include "mindmap/store.hpp"
#include "mindmap/textprep.hpp"
#include "mindmap/util.hpp"
#include "mindmap/vectorizer.hpp"

namespace mindmap {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

PipelineConfig::PipelineConfig()
    : stopword_path(default_stopword_path()), lemma_path(default_lemma_path()) {}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error(ErrorKind::Config, key + ": not a number: " + value);
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() || base.empty() ? p.lexically_normal() : (base / p).lexically_normal();
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));

    if (key == "corpus_root") c.corpus_root = resolve(base_dir, value);
    else if (key == "derived_root") c.derived_root = resolve(base_dir, value);
    else if (key == "stopword_path") c.stopword_path = resolve(base_dir, value);
    else if (key == "lemma_path") c.lemma_path = resolve(base_dir, value);
    else if (key == "min_df") c.min_df = parse_number<std::size_t>(key, value);
    else if (key == "max_df_ratio") c.max_df_ratio = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "max_iter") c.max_iter = parse_number<std::size_t>(key, value);
    else if (key == "tol") c.tol = parse_number<double>(key, value);
    else if (key == "label_terms") c.label_terms = parse_number<std::size_t>(key, value);
    else if (key == "residual_name") c.residual_name = value;
    else if (key == "topic_provider") c.topic_provider = value;
    else if (key == "llm_endpoint") c.llm_endpoint = value;
    else if (key == "llm_model") c.llm_model = value;
    else if (key == "llm_replay_path") c.llm_replay_path = resolve(base_dir, value);
    else if (key == "transcript_budget") c.transcript_budget = parse_number<std::size_t>(key, value);
    else if (key == "image_provider") c.image_provider = value;
    else if (key == "img_endpoint") c.img_endpoint = value;
    else if (key == "image_width") c.image_width = parse_number<std::uint32_t>(key, value);
    else if (key == "image_height") c.image_height = parse_number<std::uint32_t>(key, value);
    else if (key == "image_price") c.image_price = parse_number<double>(key, value);
    else if (key == "concurrency") c.concurrency = parse_number<std::size_t>(key, value);
    else if (key == "retry_delay_ms") c.retry_delay_ms = parse_number<std::int64_t>(key, value);
    else if (key == "bind") c.bind = value;
    else if (key == "port") c.port = parse_number<int>(key, value);
    else if (key == "cors_origin") c.cors_origin = value;
    else if (key == "static_dir") c.static_dir = resolve(base_dir, value);
    else throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": unknown key " + key);
  }
  if (c.topic_provider != "offline" && c.topic_provider != "chat" && c.topic_provider != "replay")
    throw Error(ErrorKind::Config, "topic_provider must be offline, chat or replay");
  if (c.image_provider != "procedural" && c.image_provider != "remote")
    throw Error(ErrorKind::Config, "image_provider must be procedural or remote");
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  auto base = fs::absolute(path).parent_path();
  return parse(read_file(path), base);
}

RetryPolicy PipelineConfig::retry_policy() const {
  RetryPolicy p;
  p.initial_delay = std::chrono::milliseconds(retry_delay_ms);
  return p;
}

namespace {

std::string absolute_string(const fs::path& p) {
  return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string();
}

}  // namespace

json PipelineConfig::to_manifest_json() const {
  return json{{"corpus_root", absolute_string(corpus_root)},
              {"stopword_path", absolute_string(stopword_path)},
              {"lemma_path", absolute_string(lemma_path)},
              {"min_df", min_df},
              {"max_df_ratio", max_df_ratio},
              {"seed", seed},
              {"max_iter", max_iter},
              {"tol", tol},
              {"label_terms", label_terms},
              {"residual_name", residual_name},
              {"topic_provider", topic_provider},
              {"llm_endpoint", llm_endpoint},
              {"llm_model", llm_model},
              {"transcript_budget", transcript_budget},
              {"image_provider", image_provider},
              {"img_endpoint", img_endpoint},
              {"image_width", image_width},
              {"image_height", image_height},
              {"idf_variant", kIdfVariant},
              {"tf", "raw_count"},
              {"normalization", "l2"}};
}

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

std::unique_ptr<TopicProvider> make_topic_provider(const PipelineConfig& config) {
  if (config.topic_provider == "chat") {
    if (config.llm_endpoint.empty()) throw Error(ErrorKind::Config, "topic_provider=chat needs llm_endpoint");
    return std::make_unique<ChatCompletionProvider>(
        ChatCompletionConfig{config.llm_endpoint, config.llm_model, env_or_empty(kLlmKeyEnv)});
  }
  if (config.topic_provider == "replay")
    return std::make_unique<ReplayTopicProvider>(ReplayTopicProvider::from_file(config.llm_replay_path));
  return nullptr;
}

std::unique_ptr<ImageProvider> make_image_provider(const PipelineConfig& config) {
  if (config.image_provider == "remote") {
    if (config.img_endpoint.empty()) throw Error(ErrorKind::Config, "image_provider=remote needs img_endpoint");
    return std::make_unique<RemoteImageProvider>(
        RemoteImageConfig{config.img_endpoint, env_or_empty(kImgKeyEnv)});
  }
  return std::make_unique<ProceduralImageProvider>();
}

// ---------------------------------------------------------------------------
// ingest / vectorize

namespace {

void require_paths(const PipelineConfig& config) {
  if (config.corpus_root.empty()) throw Error(ErrorKind::Config, "corpus_root is not set");
  if (config.derived_root.empty()) throw Error(ErrorKind::Config, "derived_root is not set");
}

template <typename Fn>
int run_reporting(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_ingest(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
  return run_reporting(err, [&] {
    require_paths(config);
    const Corpus corpus = load_corpus(config.corpus_root);
    const auto stopwords = StopwordList::from_file(config.stopword_path);
    const auto lemmas = LemmaTable::from_file(config.lemma_path);

    std::vector<CleanDocument> docs(corpus.recordings.size());
    parallel_for(docs.size(), config.concurrency, [&](std::size_t i) {
      const auto& r = corpus.recordings[i];
      docs[i] = CleanDocument{r.id, clean_tokens(r.raw_transcript, stopwords, lemmas)};
    });

    const DerivedPaths paths{config.derived_root};
    fs::create_directories(paths.root);
    write_json(paths.recordings(), recordings_to_json(corpus.recordings));
    write_tokens(paths, docs);

    const auto with_audio = std::count_if(corpus.recordings.begin(), corpus.recordings.end(),
                                          [](const Recording& r) { return r.audio_path.has_value(); });
    const json manifest_config = config.to_manifest_json();
    update_manifest(paths, "ingest",
                    json{{"recordings", corpus.recordings.size()},
                         {"with_audio", with_audio},
                         {"stopwords", stopwords.source_name()},
                         {"stopword_count", stopwords.words().size()},
                         {"lemma_entries", lemmas.size()}},
                    &manifest_config);
    out << corpus.recordings.size() << " recordings (" << with_audio << " with audio)\n";
    return 0;
  });
}

int cmd_vectorize(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
  return run_reporting(err, [&] {
    require_paths(config);
    const DerivedPaths paths{config.derived_root};
    if (!fs::is_regular_file(paths.recordings()))
      throw Error(ErrorKind::InconsistentStore, "no recordings.json; run ingest first");
    const auto recordings = recordings_from_json(read_json(paths.recordings()));
    const auto docs = read_tokens(paths, recordings);
    const auto vocab = build_vocabulary(docs, config.min_df, config.max_df_ratio);
    const auto model = tfidf_rows(docs, vocab);
    write_model(paths, model);
    update_manifest(paths, "vectorize",
                    json{{"terms", vocab.size()},
                         {"documents", model.n_docs},
                         {"min_df", config.min_df},
                         {"max_df_ratio", config.max_df_ratio},
                         {"idf_variant", kIdfVariant},
                         {"tf", "raw_count"},
                         {"normalization", "l2"},
                         {"vectors_format", "MMVEC001"}});
    out << vocab.size() << " terms over " << model.n_docs << " documents\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// curate

namespace {

class CurationRepl {
 public:
  CurationRepl(const PipelineConfig& config, std::ostream& out)
      : config_(config), paths_{config.derived_root}, out_(out) {
    if (!fs::is_regular_file(paths_.vectors()))
      throw Error(ErrorKind::InconsistentStore, "no vectors.bin; run vectorize first");
    model_ = read_model(paths_);
    recordings_ = recordings_from_json(read_json(paths_.recordings()));
    if (fs::is_regular_file(paths_.session())) {
      session_ = session_from_json(read_json(paths_.session()));
      out_ << "resumed session at round " << session_.round << ": " << session_.accepted.size()
           << " categories, " << session_.unassigned.size() << " unassigned\n";
    } else {
      std::vector<std::string> ids;
      for (const auto& r : recordings_) ids.push_back(r.id);
      session_ = start_session(ids, config.seed);
      persist();
      out_ << "new session: " << ids.size() << " unassigned\n";
    }
  }

  // Returns false when the loop should end.
  bool handle(const std::string& line) {
    auto words = split_whitespace(line);
    if (words.empty()) return true;
    const auto& cmd = words[0];
    try {
      if (cmd == "round") return round(words);
      if (cmd == "show") return show(words);
      if (cmd == "keep") return keep(line);
      if (cmd == "drop") return drop(words);
      if (cmd == "commit") return commit();
      if (cmd == "status") return status();
      if (cmd == "finish") return finish(line);
      if (cmd == "help") return help();
      if (cmd == "quit" || cmd == "exit") return quit();
      out_ << "error: unknown command '" << cmd << "' (try help)\n";
    } catch (const Error& e) {
      out_ << "error: " << e.what() << "\n";
    }
    return true;
  }

  bool quit() {
    persist();
    if (!staged_.empty()) out_ << "note: " << staged_.size() << " staged keep(s) discarded\n";
    out_ << "session saved at round " << session_.round << "\n";
    return false;
  }

 private:
  static std::optional<std::size_t> parse_index(const std::string& s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  }

  const ProposedCluster& cluster(const std::string& arg) const {
    if (!proposal_) throw Error(ErrorKind::UnknownCluster, "no proposal; run 'round' first");
    auto idx = parse_index(arg);
    if (!idx || *idx >= proposal_->clusters.size())
      throw Error(ErrorKind::UnknownCluster, "cluster " + arg + " (have " +
                                                 std::to_string(proposal_->clusters.size()) + ")");
    return proposal_->clusters[*idx];
  }

  bool round(const std::vector<std::string>& words) {
    std::size_t k = default_round_k(session_.unassigned.size());
    if (words.size() > 1) {
      auto parsed = parse_index(words[1]);
      if (!parsed) throw Error(ErrorKind::BadK, "k must be a positive integer");
      k = *parsed;
    }
    KMeansOptions base;
    base.max_iter = config_.max_iter;
    base.tol = config_.tol;
    proposal_ = run_round(session_, model_, k, session_.seed + session_.round, config_.label_terms, base);
    staged_.clear();
    out_ << "round " << session_.round << ": " << k << " clusters over " << session_.unassigned.size()
         << " unassigned recordings\n";
    for (const auto& c : proposal_->clusters) {
      out_ << "  [" << c.id << "] " << c.member_ids.size() << " recordings: ";
      for (std::size_t i = 0; i < c.suggested_terms.size(); ++i)
        out_ << (i ? ", " : "") << c.suggested_terms[i];
      if (c.low_confidence) out_ << " (low confidence)";
      out_ << "\n";
    }
    return true;
  }

  bool show(const std::vector<std::string>& words) {
    if (words.size() < 2) throw Error(ErrorKind::UnknownCluster, "usage: show <cluster>");
    const auto& c = cluster(words[1]);
    out_ << "cluster " << c.id << " (" << c.member_ids.size() << "):\n";
    for (const auto& id : c.member_ids) {
      const auto it = std::lower_bound(recordings_.begin(), recordings_.end(), id,
                                       [](const Recording& r, const std::string& v) { return r.id < v; });
      out_ << "  " << id << "  stm/" << id << ".stm";
      if (it != recordings_.end() && it->id == id) {
        if (it->audio_path) out_ << "  " << it->audio_path->generic_string();
        out_ << "  \"" << it->title << "\"";
      }
      out_ << "\n";
    }
    return true;
  }

  bool keep(const std::string& line) {
    // keep <cluster> as <name...>
    const auto words = split_whitespace(line);
    const auto as = line.find(" as ");
    if (words.size() < 4 || words[2] != "as" || as == std::string::npos)
      throw Error(ErrorKind::UnknownCluster, "usage: keep <cluster> as <name>");
    const auto& c = cluster(words[1]);
    const std::string name = trim(std::string_view(line).substr(as + 4));
    if (session_.has_category(name)) throw Error(ErrorKind::DuplicateName, name);
    for (const auto& s : staged_) {
      if (s.cluster_id == c.id) throw Error(ErrorKind::UnknownCluster, "cluster already kept as " + s.name);
      if (same_category_name(s.name, name)) throw Error(ErrorKind::DuplicateName, name);
    }
    staged_.push_back(Selection{c.id, name});
    out_ << "staged cluster " << c.id << " as \"" << name << "\"\n";
    return true;
  }

  bool drop(const std::vector<std::string>& words) {
    if (words.size() < 2) throw Error(ErrorKind::UnknownCluster, "usage: drop <cluster>");
    const auto& c = cluster(words[1]);
    std::erase_if(staged_, [&](const Selection& s) { return s.cluster_id == c.id; });
    out_ << "unstaged cluster " << c.id << "\n";
    return true;
  }

  bool commit() {
    if (!proposal_) throw Error(ErrorKind::UnknownCluster, "no proposal; run 'round' first");
    session_ = accept(session_, *proposal_, staged_);
    persist();
    out_ << "committed " << staged_.size() << " categories; " << session_.accepted.size()
         << " total, " << session_.unassigned.size() << " unassigned\n";
    proposal_.reset();
    staged_.clear();
    return true;
  }

  bool status() {
    out_ << "round " << session_.round << ", " << session_.accepted.size() << " categories, "
         << session_.unassigned.size() << " unassigned, " << staged_.size() << " staged\n";
    for (const auto& c : session_.accepted) out_ << "  " << c.name << " (" << c.member_ids.size() << ")\n";
    return true;
  }

  bool finish(const std::string& line) {
    auto words = split_whitespace(line);
    std::string name = config_.residual_name;
    if (words.size() > 1) name = trim(std::string_view(line).substr(line.find(words[1])));
    const auto categories = finalize(session_, name, &model_, config_.label_terms);
    write_json(paths_.categories(), categories_to_json(categories));
    persist();
    update_manifest(paths_, "curate",
                    json{{"categories", categories.size()},
                         {"rounds", session_.round},
                         {"residual", session_.unassigned.empty() ? 0 : session_.unassigned.size()}});
    out_ << "wrote " << categories.size() << " categories to " << paths_.categories().filename().string() << "\n";
    return true;
  }

  bool help() {
    out_ << "commands:\n"
            "  round [k]              cluster the unassigned recordings\n"
            "  show <c>               list members of cluster c\n"
            "  keep <c> as <name>     stage cluster c as a category\n"
            "  drop <c>               unstage cluster c\n"
            "  commit                 accept staged clusters\n"
            "  status                 show session state\n"
            "  finish [name]          write categories.json, leftovers go to [name]\n"
            "  quit                   save and exit\n";
    return true;
  }

  void persist() { write_json(paths_.session(), session_to_json(session_)); }

  const PipelineConfig& config_;
  DerivedPaths paths_;
  std::ostream& out_;
  TfIdfModel model_;
  std::vector<Recording> recordings_;
  CurationSession session_;
  std::optional<RoundProposal> proposal_;
  std::vector<Selection> staged_;
};

}  // namespace

int cmd_curate(const PipelineConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
  return run_reporting(err, [&] {
    require_paths(config);
    CurationRepl repl(config, out);
    std::string line;
    while (true) {
      out << "curate> " << std::flush;
      if (!std::getline(in, line)) {
        out << "\n";
        repl.quit();
        break;
      }
      if (!repl.handle(line)) break;
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------
// enrich

int cmd_enrich(const PipelineConfig& config, std::ostream& out, std::ostream& err,
               EnrichProviders providers) {
  return run_reporting(err, [&] {
    require_paths(config);
    const DerivedPaths paths{config.derived_root};
    if (!fs::is_regular_file(paths.categories()))
      throw Error(ErrorKind::InconsistentStore, "no categories.json; finish curation first");
    const auto recordings = recordings_from_json(read_json(paths.recordings()));
    const auto categories = categories_from_json(read_json(paths.categories()));
    const TfIdfModel model = read_model(paths);

    std::unique_ptr<TopicProvider> own_topic;
    TopicProvider* topic_provider = providers.topic;
    if (!topic_provider) {
      own_topic = make_topic_provider(config);
      topic_provider = own_topic.get();
    }
    std::unique_ptr<ImageProvider> own_image;
    ImageProvider* image_provider = providers.image;
    if (!image_provider) {
      own_image = make_image_provider(config);
      image_provider = own_image.get();
    }

    // Topics. LLM answers from an earlier run are reused; fallback topics are
    // cheap and recomputed.
    std::map<std::string, TopicAssignment> previous;
    if (fs::is_regular_file(paths.topics()))
      for (auto& t : topics_from_json(read_json(paths.topics())))
        if (t.provider == TopicSource::Llm) previous.emplace(t.recording_id, std::move(t));

    TopicOptions topic_options;
    topic_options.transcript_budget = config.transcript_budget;
    topic_options.retry = config.retry_policy();
    std::vector<TopicAssignment> topics(recordings.size());
    parallel_for(recordings.size(), config.concurrency, [&](std::size_t i) {
      const auto& r = recordings[i];
      if (topic_provider) {
        if (auto it = previous.find(r.id); it != previous.end()) {
          topics[i] = it->second;
          return;
        }
      }
      topics[i] = extract_topic(r, model.row(r.id), model.vocabulary, topic_provider, topic_options);
    });
    write_json(paths.topics(), topics_to_json(topics));

    // Illustrations.
    ImageCache cache(paths.images_dir());
    std::vector<ImageRequest> requests;
    for (std::size_t i = 0; i < recordings.size(); ++i)
      requests.push_back(recording_image_request(recordings[i].id, topics[i].topic, config.image_width,
                                                 config.image_height));
    for (const auto& c : categories)
      requests.push_back(category_image_request(c.name, config.image_width, config.image_height));

    const RetryPolicy retry = config.retry_policy();
    std::vector<std::optional<std::string>> failures(requests.size());
    std::atomic<std::size_t> cached{0};
    parallel_for(requests.size(), config.concurrency, [&](std::size_t i) {
      try {
        if (cache.generate(requests[i], *image_provider, retry).cache_hit) ++cached;
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    });
    cache.save();

    json failure_report = json::array();
    for (std::size_t i = 0; i < requests.size(); ++i)
      if (failures[i]) failure_report.push_back(json{{"target", requests[i].target}, {"error", *failures[i]}});
    write_json(paths.enrich_failures(), failure_report);

    // Search index cache.
    const auto stopwords = StopwordList::from_file(config.stopword_path);
    const auto lemmas = LemmaTable::from_file(config.lemma_path);
    const auto index = build_index(&model, recordings, topics, categories, stopwords, lemmas);
    write_json(paths.search_index(), json{{"source_digest", index_source_digest(paths)},
                                          {"index", index_to_json(index)}});

    const std::size_t llm = std::count_if(topics.begin(), topics.end(),
                                          [](const TopicAssignment& t) { return t.provider == TopicSource::Llm; });
    const std::size_t generated = cache.renders();
    json stage{{"topic_provider", topic_provider ? topic_provider->name() : std::string("offline")},
               {"image_provider", image_provider->name()},
               {"topics_llm", llm},
               {"topics_fallback", topics.size() - llm},
               {"images_generated", generated},
               {"images_cached", cached.load()},
               {"images_failed", failure_report.size()}};
    if (image_provider->kind() == ImageSource::Remote)
      stage["estimated_cost"] = static_cast<double>(generated) * config.image_price;
    update_manifest(paths, "enrich", stage);

    out << "topics: " << topics.size() << " (" << llm << " llm, " << topics.size() - llm << " fallback)\n";
    out << "images: " << generated << " generated, " << cached.load() << " cached, "
        << failure_report.size() << " failed\n";
    if (image_provider->kind() == ImageSource::Remote)
      out << "estimated image cost: " << static_cast<double>(generated) * config.image_price << "\n";
    if (!failure_report.empty()) {
      err << "warning: " << failure_report.size() << " illustration(s) failed; see "
          << paths.enrich_failures().filename().string() << "\n";
      for (const auto& f : failure_report)
        err << "  " << f["target"].get<std::string>() << ": " << f["error"].get<std::string>() << "\n";
    }
    return 0;
  });
}

}  // namespace mindmap
