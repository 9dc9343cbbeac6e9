#include "mindmap/server.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>

#include <httplib.h>

#include "mindmap/error.hpp"
#include "mindmap/pipeline.hpp"
#include "mindmap/util.hpp"

namespace mindmap {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Byte ranges

std::string RangePlan::content_range() const {
  if (kind == RangeKind::Unsatisfiable) return "bytes */" + std::to_string(size);
  return "bytes " + std::to_string(first) + "-" + std::to_string(last) + "/" + std::to_string(size);
}

namespace {

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

RangePlan plan_range(std::optional<std::string_view> range_header, std::uint64_t size) {
  RangePlan full{RangeKind::Full, 0, size == 0 ? 0 : size - 1, size};
  if (!range_header) return full;
  const std::string header = trim(*range_header);
  constexpr std::string_view unit = "bytes=";
  if (header.size() < unit.size() || ascii_lower(header.substr(0, unit.size())) != unit) return full;
  const std::string spec = trim(std::string_view(header).substr(unit.size()));
  if (spec.find(',') != std::string::npos) return full;
  const auto dash = spec.find('-');
  if (dash == std::string::npos) return full;
  const auto head = std::string_view(spec).substr(0, dash);
  const auto tail = std::string_view(spec).substr(dash + 1);

  RangePlan unsat{RangeKind::Unsatisfiable, 0, 0, size};
  if (head.empty()) {
    const auto n = parse_u64(tail);
    if (!n) return full;
    if (*n == 0 || size == 0) return unsat;
    return RangePlan{RangeKind::Partial, *n >= size ? 0 : size - *n, size - 1, size};
  }
  const auto first = parse_u64(head);
  if (!first) return full;
  std::uint64_t last = size == 0 ? 0 : size - 1;
  if (!tail.empty()) {
    const auto parsed = parse_u64(tail);
    if (!parsed || *parsed < *first) return full;
    last = std::min(*parsed, last);
  }
  if (*first >= size) return unsat;
  return RangePlan{RangeKind::Partial, *first, last, size};
}

std::string_view audio_content_type(const fs::path& path) {
  const auto ext = ascii_lower(path.extension().string());
  if (ext == ".wav") return "audio/wav";
  if (ext == ".mp3") return "audio/mpeg";
  return "application/octet-stream";
}

// ---------------------------------------------------------------------------
// JSON endpoints

namespace {

json error_body(std::string_view message) { return json{{"error", message}}; }

ApiResult not_loaded(const StoreSnapshot& store) {
  return ApiResult{503, error_body("store not loaded: " + store.load_error), {}};
}

json url_or_null(const std::optional<std::string>& url) { return url ? json(*url) : json(nullptr); }

std::string topic_of(const StoreSnapshot& store, std::string_view id) {
  auto it = store.topic_of.find(id);
  return it == store.topic_of.end() ? std::string() : it->second;
}

std::optional<fs::path> audio_file(const StoreSnapshot& store, const Recording& r) {
  if (!r.audio_path) return std::nullopt;
  const fs::path p = r.audio_path->is_absolute() ? *r.audio_path : store.corpus_root / *r.audio_path;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  return p;
}

// Comma list, trimmed, empties dropped, first occurrence kept.
std::vector<std::string> name_list(std::string_view param) {
  std::vector<std::string> names;
  for (const auto& part : split(param, ',')) {
    auto name = trim(part);
    if (!name.empty() && std::find(names.begin(), names.end(), name) == names.end())
      names.push_back(std::move(name));
  }
  return names;
}

}  // namespace

std::optional<std::string> image_url(const StoreSnapshot& store, std::string_view target) {
  auto it = store.images.find(target);
  if (it == store.images.end()) return std::nullopt;
  return "/api/illustrations/" + url_encode(target) + ".png?v=" + it->second.digest.substr(0, 16);
}

ApiResult api_categories(const StoreSnapshot& store) {
  if (!store.loaded) return not_loaded(store);
  std::vector<const Category*> order;
  for (const auto& c : store.categories) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Category* a, const Category* b) {
    if (a->member_ids.size() != b->member_ids.size()) return a->member_ids.size() > b->member_ids.size();
    return a->name < b->name;
  });
  json body = json::array();
  for (const auto* c : order)
    body.push_back(json{{"name", c->name},
                        {"count", c->member_ids.size()},
                        {"image_url", url_or_null(image_url(store, category_target(c->name)))}});
  return ApiResult{200, std::move(body), {}};
}

ApiResult api_mindmap(const StoreSnapshot& store, std::optional<std::string_view> categories) {
  if (!store.loaded) return not_loaded(store);
  if (!categories) return ApiResult{400, error_body("categories parameter is required"), {}};
  const auto names = name_list(*categories);
  if (names.empty()) return ApiResult{400, error_body("categories parameter is empty"), {}};

  ApiResult result;
  json clusters = json::array();
  for (const auto& name : names) {
    const Category* c = store.category(name);
    if (!c) {
      result.warnings.push_back("unknown category: " + name);
      continue;
    }
    const auto hub_image = url_or_null(image_url(store, category_target(c->name)));
    json nodes = json::array();
    for (const auto& id : c->member_ids) {
      const Recording* r = store.find(id);
      nodes.push_back(json{{"recording_id", id},
                           {"title", r ? r->title : id},
                           {"speaker", r ? r->speaker : std::string()},
                           {"topic", topic_of(store, id)},
                           {"image_url", url_or_null(image_url(store, id))}});
    }
    clusters.push_back(json{{"category", c->name},
                            {"count", c->member_ids.size()},
                            {"image_url", hub_image},
                            {"hub", json{{"id", "category:" + c->name}, {"label", c->name}, {"image_url", hub_image}}},
                            {"nodes", std::move(nodes)}});
  }
  result.body = json{{"clusters", std::move(clusters)}, {"warnings", result.warnings}};
  return result;
}

ApiResult api_recording(const StoreSnapshot& store, std::string_view id) {
  if (!store.loaded) return not_loaded(store);
  const Recording* r = store.find(id);
  if (!r) return ApiResult{404, error_body("unknown recording: " + std::string(id)), {}};
  const bool audio = audio_file(store, *r).has_value();
  json body{{"id", r->id},
            {"title", r->title},
            {"speaker", r->speaker},
            {"topic", topic_of(store, r->id)},
            {"category", store.category_of(r->id)},
            {"transcript", r->raw_transcript},
            {"duration_s", r->duration_s},
            {"audio_available", audio},
            {"audio_url", audio ? json("/api/recordings/" + url_encode(r->id) + "/audio") : json(nullptr)},
            {"image_url", url_or_null(image_url(store, r->id))}};
  return ApiResult{200, std::move(body), {}};
}

ApiResult api_search(const StoreSnapshot& store, std::optional<std::string_view> q,
                     std::optional<std::string_view> categories, std::optional<std::string_view> k) {
  if (!store.loaded) return not_loaded(store);
  if (!q) return ApiResult{400, error_body("q parameter is required"), {}};
  std::size_t top_k = kDefaultSearchK;
  if (k) {
    const auto parsed = parse_u64(trim(*k));
    if (!parsed || *parsed == 0) return ApiResult{400, error_body("k must be a positive integer"), {}};
    top_k = static_cast<std::size_t>(*parsed);
  }
  ApiResult result;
  std::set<std::string> names;
  if (categories) {
    for (auto& n : name_list(*categories)) names.insert(std::move(n));
    for (const auto& unknown : filter_by_categories(store.index, names).unknown)
      result.warnings.push_back("unknown category: " + unknown);
  }
  json body = json::array();
  for (const auto& hit : search(store.index, *q, names, top_k, store.stopwords, store.lemmas)) {
    const Recording* r = store.find(hit.recording_id);
    body.push_back(json{{"recording_id", hit.recording_id},
                        {"title", r ? r->title : hit.recording_id},
                        {"speaker", r ? r->speaker : std::string()},
                        {"topic", topic_of(store, hit.recording_id)},
                        {"category", hit.category},
                        {"score", hit.score},
                        {"matched_terms", hit.matched_terms},
                        {"image_url", url_or_null(image_url(store, hit.recording_id))}});
  }
  result.body = std::move(body);
  return result;
}

// ---------------------------------------------------------------------------
// HTTP

struct ApiServer::Impl {
  std::shared_ptr<const StoreSnapshot> store;
  ServerOptions options;
  httplib::Server http;

  static std::optional<std::string_view> param(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    auto it = req.params.find(key);
    return std::string_view(it->second);
  }

  static void reply(httplib::Response& res, const ApiResult& r) {
    res.status = r.status;
    if (!r.warnings.empty()) {
      std::string joined;
      for (const auto& w : r.warnings) joined += (joined.empty() ? "" : "; ") + w;
      res.set_header("X-Mindmap-Warnings", joined);
    }
    res.set_content(r.body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
  }

  void serve_audio(const httplib::Request& req, httplib::Response& res) {
    if (!store->loaded) return reply(res, not_loaded(*store));
    const std::string id = req.matches[1];
    const Recording* r = store->find(id);
    if (!r) return reply(res, ApiResult{404, error_body("unknown recording: " + id), {}});
    const auto path = audio_file(*store, *r);
    if (!path) return reply(res, ApiResult{404, error_body("no audio for " + id), {}});

    const std::uint64_t size = fs::file_size(*path);
    std::optional<std::string> header;
    if (req.has_header("Range")) header = req.get_header_value("Range");
    const RangePlan plan = plan_range(header ? std::optional<std::string_view>(*header) : std::nullopt, size);
    // Ranges are answered here; stop httplib from re-slicing the body.
    const_cast<httplib::Request&>(req).ranges.clear();
    res.set_header("Accept-Ranges", "bytes");

    if (plan.kind == RangeKind::Unsatisfiable) {
      res.status = 416;
      res.set_header("Content-Range", plan.content_range());
      return;
    }
    const std::uint64_t offset = plan.kind == RangeKind::Partial ? plan.first : 0;
    const std::uint64_t length = plan.kind == RangeKind::Partial ? plan.length() : size;
    res.status = plan.kind == RangeKind::Partial ? 206 : 200;
    if (plan.kind == RangeKind::Partial) res.set_header("Content-Range", plan.content_range());

    auto file = std::make_shared<std::ifstream>(*path, std::ios::binary);
    if (!*file) return reply(res, ApiResult{500, error_body("cannot open audio for " + id), {}});
    res.set_content_provider(
        static_cast<std::size_t>(length), std::string(audio_content_type(*path)),
        [file, offset](std::size_t done, std::size_t remaining, httplib::DataSink& sink) {
          std::vector<char> buffer(std::min(remaining, kAudioChunkBytes));
          file->seekg(static_cast<std::streamoff>(offset + done));
          file->read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
          const auto got = static_cast<std::size_t>(file->gcount());
          if (got == 0) return false;
          return sink.write(buffer.data(), got);
        });
  }

  void serve_image(const httplib::Request& req, httplib::Response& res) {
    if (!store->loaded) return reply(res, not_loaded(*store));
    const std::string target = req.matches[1];
    auto it = store->images.find(target);
    if (it == store->images.end())
      return reply(res, ApiResult{404, error_body("no illustration for " + target), {}});
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_binary(store->images_dir / it->second.file);
    } catch (const std::exception&) {
      return reply(res, ApiResult{404, error_body("illustration file missing for " + target), {}});
    }
    res.set_header("Cache-Control", "public, max-age=31536000, immutable");
    res.set_header("ETag", "\"" + it->second.digest + "\"");
    res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
  }

  void install() {
    http.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                              {"Access-Control-Expose-Headers",
                               "Content-Range, Accept-Ranges, Content-Length, X-Mindmap-Warnings"}});
    http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
      res.set_header("Access-Control-Allow-Methods", "GET, HEAD, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Range, Content-Type");
      res.set_header("Access-Control-Max-Age", "86400");
    });
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      reply(res, ApiResult{500, error_body(message), {}});
    });

    http.Get("/api/categories", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, api_categories(*store));
    });
    http.Get("/api/mindmap", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api_mindmap(*store, param(req, "categories")));
    });
    http.Get("/api/search", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api_search(*store, param(req, "q"), param(req, "categories"), param(req, "k")));
    });
    http.Get(R"(/api/recordings/([^/]+)/audio)", [this](const httplib::Request& req, httplib::Response& res) {
      serve_audio(req, res);
    });
    http.Get(R"(/api/recordings/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api_recording(*store, req.matches[1].str()));
    });
    http.Get(R"(/api/illustrations/([^/]+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      serve_image(req, res);
    });
    http.Get(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      reply(res, ApiResult{404, error_body("no such endpoint"), {}});
    });

    if (!options.static_dir.empty() && fs::is_directory(options.static_dir)) {
      http.set_mount_point("/", options.static_dir.string());
      // Client-side routes fall back to the bundle's index.html.
      const auto index = options.static_dir / "index.html";
      if (fs::is_regular_file(index)) {
        http.Get(R"(/.*)", [index](const httplib::Request&, httplib::Response& res) {
          res.set_content(read_file(index), "text/html");
        });
      }
    }
  }
};

ApiServer::ApiServer(std::shared_ptr<const StoreSnapshot> store, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->store = std::move(store);
  impl_->options = std::move(options);
  impl_->install();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind_to_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }
bool ApiServer::bind(const std::string& host, int port) { return impl_->http.bind_to_port(host, port); }
bool ApiServer::listen_after_bind() { return impl_->http.listen_after_bind(); }
void ApiServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}
void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

int cmd_serve(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
  if (config.derived_root.empty()) {
    err << "error: Config: derived_root is not set\n";
    return 1;
  }
  auto store = std::make_shared<const StoreSnapshot>(StoreSnapshot::load(config.derived_root));
  if (!store->loaded) err << "warning: " << store->load_error << "; API will answer 503\n";
  ApiServer server(store, ServerOptions{config.cors_origin, config.static_dir});
  if (!server.bind(config.bind, config.port)) {
    err << "error: cannot bind " << config.bind << ":" << config.port << "\n";
    return 1;
  }
  out << "serving " << store->recordings.size() << " recordings in " << store->categories.size()
      << " categories on http://" << config.bind << ":" << config.port << "\n"
      << std::flush;
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace mindmap
