// Acceptance run: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mindmap/clusterer.hpp"
#include "mindmap/curation.hpp"
#include "mindmap/search.hpp"
#include "mindmap/server.hpp"
#include "mindmap/store.hpp"
#include "mindmap/util.hpp"
#include "support.hpp"

using namespace mindmap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome tfidf_oracle() {
  const std::vector<std::vector<std::string>> tokens = {
      {"cat", "dog", "cat", "bird"},
      {"dog", "fish"},
      {"cat", "cat", "cat"},
      {"bird", "fish", "whale", "dog", "dog"},
      {"whale"}};
  const auto t0 = Clock::now();
  std::vector<CleanDocument> docs;
  for (std::size_t i = 0; i < tokens.size(); ++i) docs.push_back({"doc" + std::to_string(i), tokens[i]});
  const auto vocab = build_vocabulary(docs, 1, 1.0);
  const auto model = tfidf_rows(docs, vocab);
  const double elapsed = seconds_since(t0);
  const auto oracle = mmtest::brute_tfidf(tokens, vocab.terms);
  double worst = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (std::uint32_t t = 0; t < vocab.size(); ++t) {
      auto it = oracle[d].find(vocab.terms[t]);
      const double expected = it == oracle[d].end() ? 0.0 : it->second;
      worst = std::max(worst, std::abs(model.row(docs[d].recording_id)->weight(t) - expected));
    }
  return {worst <= 1e-9 && elapsed < 1.0,
          "max |diff| " + fmt("%.3g", worst) + " (tol 1e-9), " + fmt("%.4f", elapsed) + " s (< 1 s)"};
}

Outcome kmeans_blobs() {
  std::mt19937_64 rng(2024);
  const double spread = 0.5;
  std::normal_distribution<double> noise(0.0, spread);
  const std::vector<std::pair<double, double>> centers = {{0, 0}, {10, 0}, {5, 9}};  // >= 10 x spread apart
  std::vector<std::vector<double>> pts;
  std::vector<std::size_t> truth;
  for (std::size_t i = 0; i < 100; ++i) {
    pts.push_back({centers[i % 3].first + noise(rng), centers[i % 3].second + noise(rng)});
    truth.push_back(i % 3);
  }
  const auto rows = to_sparse(pts);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < pts.size(); ++i) ids.push_back("p" + std::to_string(i));
  bool ok = true;
  double worst_ari = 1.0;
  bool monotone = true;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(rows, ids, 2, KMeansOptions{3, seed, 300, 1e-6});
    const double ari = mmtest::adjusted_rand_index(r.assignments, truth);
    worst_ari = std::min(worst_ari, ari);
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
      if (r.inertia_trace[i] > r.inertia_trace[i - 1]) {
        monotone = false;
        std::cerr << "seed " << seed << " step " << i << ": " << r.inertia_trace[i - 1] << " -> " << r.inertia_trace[i] << " diff " << r.inertia_trace[i] - r.inertia_trace[i - 1] << "\n";
      }
  }
  const double elapsed = seconds_since(t0);
  ok = std::abs(worst_ari - 1.0) < 1e-12 && monotone && elapsed < 1.0;
  return {ok, "min ARI " + fmt("%.6f", worst_ari) + " over seeds 0-9, trace " +
                  (monotone ? "non-increasing" : "INCREASED") + ", " + fmt("%.4f", elapsed) + " s (< 1 s)"};
}

Outcome kmeans_bruteforce() {
  const std::vector<std::vector<double>> pts = {{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  const auto rows = to_sparse(pts);
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  const auto r = kmeans(rows, ids, 2, KMeansOptions{2, 42, 300, 1e-6});

  auto inertia_of = [&](const std::vector<std::size_t>& labels) {
    double total = 0;
    for (std::size_t c = 0; c < 2; ++c) {
      double mx = 0, my = 0, n = 0;
      for (std::size_t i = 0; i < 4; ++i)
        if (labels[i] == c) mx += pts[i][0], my += pts[i][1], n += 1;
      if (n == 0) return std::numeric_limits<double>::infinity();
      mx /= n;
      my /= n;
      for (std::size_t i = 0; i < 4; ++i)
        if (labels[i] == c) total += (pts[i][0] - mx) * (pts[i][0] - mx) + (pts[i][1] - my) * (pts[i][1] - my);
    }
    return total;
  };
  auto canonical = [](std::vector<std::size_t> labels) {
    if (labels[0] != 0)
      for (auto& l : labels) l = 1 - l;
    return labels;
  };
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_labels;
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::vector<std::size_t> labels(4);
    for (std::size_t i = 0; i < 4; ++i) labels[i] = (mask >> i) & 1U;
    const double v = inertia_of(labels);
    if (v < best) best = v, best_labels = labels;
  }
  const bool same = canonical(r.assignments) == canonical(best_labels);
  return {same && std::abs(r.inertia - best) < 1e-9,
          "kmeans inertia " + fmt("%.6f", r.inertia) + ", exhaustive minimum " + fmt("%.6f", best) +
              (same ? ", partitions equal" : ", partitions DIFFER")};
}

Outcome curation_end_to_end() {
  mmtest::TempDir dir;
  const auto config = mmtest::planted_config(dir.path());
  const auto t0 = Clock::now();
  std::string script = "round 6\n";
  for (int i = 0; i < 6; ++i) script += "keep " + std::to_string(i) + " as Topic " + std::to_string(i) + "\n";
  script += "commit\nfinish\nquit\n";

  std::ostringstream out, err;
  if (cmd_ingest(config, out, err) || cmd_vectorize(config, out, err)) return {false, "pipeline failed: " + err.str()};
  std::istringstream in(script);
  if (cmd_curate(config, in, out, err)) return {false, "curate failed: " + err.str()};
  const double elapsed = seconds_since(t0);

  const DerivedPaths paths{config.derived_root};
  const auto session = session_from_json(read_json(paths.session()));
  const auto categories = categories_from_json(read_json(paths.categories()));
  const auto labels = mmtest::planted_labels();
  double worst = 1.0;
  std::set<std::string> covered;
  std::size_t total = 0;
  for (const auto& c : categories) {
    std::map<std::string, std::size_t> counts;
    for (const auto& id : c.member_ids) counts[labels.at(id)]++, covered.insert(id), ++total;
    std::size_t top = 0;
    for (const auto& [_, n] : counts) top = std::max(top, n);
    worst = std::min(worst, static_cast<double>(top) / static_cast<double>(c.member_ids.size()));
  }
  const bool partition = covered.size() == labels.size() && total == labels.size();
  const bool ok = session.accepted.size() == 6 && categories.size() == 6 && worst >= 0.8 && partition && elapsed < 10.0;
  return {ok, std::to_string(session.accepted.size()) + " accepted, " + std::to_string(categories.size()) +
                  " final categories, min purity " + fmt("%.3f", worst) + " (>= 0.8), " +
                  (partition ? "total partition" : "NOT a partition") + ", " + fmt("%.2f", elapsed) + " s (< 10 s)"};
}

Outcome pipeline_determinism() {
  mmtest::TempDir a, b;
  std::map<std::string, std::string> files[2];
  json manifests[2];
  fs::path roots[2] = {a.path(), b.path()};
  for (int i = 0; i < 2; ++i) {
    const auto config = mmtest::planted_config(roots[i]);
    mmtest::run_planted_pipeline(config, "");
    files[i] = mmtest::snapshot_files(roots[i]);
    manifests[i] = manifest_without_timestamps(read_manifest(DerivedPaths{roots[i]}));
    files[i].erase("manifest.json");
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : files[0]) {
    auto it = files[1].find(name);
    if (it == files[1].end() || it->second != bytes) ++differing;
  }
  const bool ok = files[0].size() == files[1].size() && differing == 0 && manifests[0] == manifests[1] &&
                  files[0].size() > 60;
  return {ok, std::to_string(files[0].size()) + " files compared, " + std::to_string(differing) +
                  " differ, manifests (minus timestamps) " + (manifests[0] == manifests[1] ? "equal" : "DIFFER")};
}

Outcome duplicate_topics() {
  mmtest::TempDir dir;
  const auto corpus = dir.path() / "corpus";
  mmtest::write_stm(corpus, "rec_A", {{0.0, "attackers guessed the password of the bank"}});
  mmtest::write_stm(corpus, "rec_B", {{0.0, "a teenager broke into the school network"}});
  mmtest::write_stm(corpus, "rec_C", {{0.0, "phishing emails trick employees into clicking"}});
  auto config = mmtest::planted_config(dir.path() / "derived");
  config.corpus_root = corpus;
  config.min_df = 1;
  config.max_df_ratio = 1.0;

  // A replayed LLM answers "Hackers" for every transcript.
  json replay = json::object();
  for (const auto& r : load_corpus(corpus).recordings)
    replay[sha256_hex(std::string_view(build_topic_prompt(r.raw_transcript)))] = "Hackers";
  config.topic_provider = "replay";
  config.llm_replay_path = dir.path() / "replay.json";
  write_file_atomic(config.llm_replay_path, replay.dump());

  std::ostringstream out, err;
  std::istringstream in("finish\n");
  if (cmd_ingest(config, out, err) || cmd_vectorize(config, out, err) || cmd_curate(config, in, out, err) ||
      cmd_enrich(config, out, err))
    return {false, "pipeline failed: " + err.str()};
  const DerivedPaths paths{config.derived_root};
  std::size_t hackers = 0;
  for (const auto& t : topics_from_json(read_json(paths.topics()))) hackers += t.topic == "Hackers";
  std::set<std::string> digests;
  for (const char* id : {"rec_A", "rec_B", "rec_C"}) {
    const auto file = paths.images_dir() / (std::string(id) + ".png");
    if (fs::is_regular_file(file)) digests.insert(sha256_hex(read_binary(file)));
  }
  return {hackers == 3 && digests.size() == 3,
          std::to_string(hackers) + " recordings with topic \"Hackers\", " + std::to_string(digests.size()) +
              " pairwise-distinct image digests"};
}

Outcome search_self_retrieval() {
  const std::vector<std::string> titles = {
      "Secret life of falcons",   "Bridges that float",        "Candles and clockmakers",
      "Deserts bloom at night",   "Engines of the old railway", "Gardens on rooftops",
      "Harbors of the north",     "Islands made of plastic",   "Jungles under glass",
      "Kettles and tea ceremony", "Ladders into caves",         "Mirrors in astronomy",
      "Needles and quilting",     "Orchards after frost",      "Pianos built by hand",
      "Quarries turned to lakes", "Rivers that run backwards", "Saddles for camels",
      "Tunnels beneath cities",   "Violins from spruce"};
  const std::vector<std::string> filler = {"people", "story", "world", "idea", "today", "question", "answer"};
  std::vector<Recording> recordings;
  std::vector<Category> categories(4);
  std::vector<TopicAssignment> topics;
  std::vector<CleanDocument> docs;
  std::mt19937_64 rng(3);
  for (std::size_t i = 0; i < titles.size(); ++i) {
    Recording r;
    r.id = "talk" + std::to_string(100 + i);
    r.title = titles[i];
    for (int w = 0; w < 40; ++w) r.raw_transcript += filler[rng() % filler.size()] + " ";
    recordings.push_back(r);
    topics.push_back({r.id, "General", TopicSource::TfidfFallback, std::nullopt});
    categories[i % 4].name = "Group " + std::to_string(i % 4);
    categories[i % 4].member_ids.push_back(r.id);
    docs.push_back({r.id, clean_tokens(r.raw_transcript, mmtest::stopwords(), mmtest::lemmas())});
  }
  const auto model = tfidf_rows(docs, build_vocabulary(docs, 1, 1.0));
  const auto index = build_index(&model, recordings, topics, categories, mmtest::stopwords(), mmtest::lemmas());
  std::size_t rank1 = 0, leaks = 0, filtered_queries = 0;
  for (const auto& r : recordings) {
    const auto hits = search(index, r.title, {}, 25, mmtest::stopwords(), mmtest::lemmas());
    if (!hits.empty() && hits[0].recording_id == r.id) ++rank1;
    for (const auto& c : categories) {
      ++filtered_queries;
      for (const auto& h : search(index, r.title, {c.name}, 25, mmtest::stopwords(), mmtest::lemmas()))
        if (h.category != c.name || index.category_of.at(h.recording_id) != c.name) ++leaks;
    }
  }
  return {rank1 == titles.size() && leaks == 0,
          std::to_string(rank1) + "/" + std::to_string(titles.size()) + " titles at rank 1, " +
              std::to_string(leaks) + " out-of-category hits over " + std::to_string(filtered_queries) +
              " filtered queries"};
}

Outcome api_contract() {
  mmtest::TempDir dir;
  const auto info = mmtest::build_category_store(dir.path());
  auto store = std::make_shared<const StoreSnapshot>(StoreSnapshot::load(info.derived_root));
  ApiServer server(store);
  const int port = server.bind_to_any_port("127.0.0.1");
  if (port <= 0) return {false, "could not bind a loopback port"};
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  std::ostringstream detail;
  bool ok = true;
  auto cats = cli.Get("/api/categories");
  if (!cats || cats->status != 200) {
    ok = false;
    detail << "categories request failed; ";
  } else {
    const auto body = json::parse(cats->body);
    const std::vector<std::pair<std::string, int>> want = {{"Computer Science", 44}, {"Climate", 42}, {"Health", 39}};
    for (std::size_t i = 0; i < want.size(); ++i) {
      const bool match = body.size() > i && body[i]["name"] == want[i].first && body[i]["count"] == want[i].second;
      ok &= match;
    }
    detail << "top3 " << body[0]["name"].get<std::string>() << "=" << body[0]["count"] << ", "
           << body[1]["name"].get<std::string>() << "=" << body[1]["count"] << ", "
           << body[2]["name"].get<std::string>() << "=" << body[2]["count"] << "; ";
  }
  auto graph = cli.Get("/api/mindmap?categories=Music");
  std::size_t nodes = 0;
  if (graph && graph->status == 200) {
    const auto body = json::parse(graph->body);
    if (body["clusters"].size() == 1) nodes = body["clusters"][0]["nodes"].size();
  }
  ok &= nodes == 33;
  detail << "Music nodes " << nodes << "; ";

  auto audio = cli.Get("/api/recordings/" + info.audio_id + "/audio", {{"Range", "bytes=0-99"}});
  std::string expected(100, '\0');
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = static_cast<char>(i % 251);
  const bool range_ok = audio && audio->status == 206 && audio->body == expected &&
                        audio->get_header_value("Content-Range") == "bytes 0-99/1000";
  ok &= range_ok;
  detail << "range bytes=0-99 -> " << (audio ? std::to_string(audio->status) : std::string("no response")) << ", "
         << (audio ? audio->body.size() : 0) << " bytes, Content-Range \""
         << (audio ? audio->get_header_value("Content-Range") : std::string()) << "\"";
  server.stop();
  thread.join();
  return {ok, detail.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"tfidf-oracle-equivalence", tfidf_oracle},
      {"kmeans-planted-blobs", kmeans_blobs},
      {"kmeans-bruteforce-optimality", kmeans_bruteforce},
      {"curation-end-to-end", curation_end_to_end},
      {"pipeline-determinism", pipeline_determinism},
      {"duplicate-topic-distinctness", duplicate_topics},
      {"search-self-retrieval", search_self_retrieval},
      {"api-contract", api_contract},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
