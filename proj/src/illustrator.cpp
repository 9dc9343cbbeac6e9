#include "mindmap/illustrator.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "mindmap/error.hpp"
#include "mindmap/util.hpp"

namespace mindmap {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ImageSource source) {
  return source == ImageSource::Remote ? "remote" : "procedural";
}

std::uint64_t variant_seed(std::string_view topic, std::string_view target_id) {
  std::string key = ascii_lower(topic);
  key.push_back('\x1f');
  key += target_id;
  return fnv1a64(key);
}

std::string category_target(std::string_view name) {
  std::string out = "category_";
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    out.push_back(u < 0x20 || c == '/' || c == '\\' || c == ':' || c == '*' || c == '?' ||
                          c == '"' || c == '<' || c == '>' || c == '|' || u == 0x7f
                      ? '_'
                      : c);
  }
  return out;
}

ImageRequest recording_image_request(std::string_view recording_id, std::string_view topic,
                                     std::uint32_t width, std::uint32_t height) {
  return ImageRequest{std::string(topic), variant_seed(topic, recording_id), width, height,
                      std::string(recording_id)};
}

ImageRequest category_image_request(std::string_view category_name, std::uint32_t width,
                                    std::uint32_t height) {
  return ImageRequest{std::string(category_name),
                      variant_seed(category_name, "category:" + std::string(category_name)),
                      width, height, category_target(category_name)};
}

void validate_request(const ImageRequest& request) {
  if (trim(request.prompt).empty()) throw Error(ErrorKind::DomainError, "empty image prompt");
  if (request.target.empty()) throw Error(ErrorKind::DomainError, "empty image target");
  const auto ok = [](std::uint32_t v) { return v >= 64 && v <= 1024; };
  if (!ok(request.width) || !ok(request.height))
    throw Error(ErrorKind::DomainError, "image size must be within [64, 1024]");
}

// ---------------------------------------------------------------------------
// Procedural renderer

namespace {

struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

Rgb hsv(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double x = c * (1 - std::fabs(std::fmod(h / 60.0, 2.0) - 1));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const auto q = [&](double t) { return static_cast<std::uint8_t>(std::lround((t + m) * 255.0)); };
  return {q(r), q(g), q(b)};
}

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}}, {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'\'', {0x04, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00}}, {'&', {0x0C, 0x12, 0x14, 0x08, 0x15, 0x12, 0x0D}},
    {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}}, {' ', {0, 0, 0, 0, 0, 0, 0}},
};

const Glyph& glyph_for(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& g : kFont)
    if (g.ch == c) return g;
  return kFont[std::size(kFont) - 2];  // '?'
}

constexpr int kAdvance = 6;  // 5 columns + 1 spacing

std::vector<std::string> wrap(std::string_view text, std::size_t max_chars) {
  std::vector<std::string> lines;
  std::string line;
  for (auto word : split_whitespace(text)) {
    if (word.size() > max_chars) word = word.substr(0, max_chars);
    if (!line.empty() && line.size() + 1 + word.size() > max_chars) {
      lines.push_back(std::move(line));
      line.clear();
    }
    if (!line.empty()) line.push_back(' ');
    line += word;
  }
  if (!line.empty()) lines.push_back(std::move(line));
  return lines;
}

void draw_text(RgbImage& img, std::string_view text, Rgb ink) {
  const auto w = static_cast<int>(img.width);
  const auto h = static_cast<int>(img.height);
  const int margin = std::max(4, w / 32);
  int scale = std::clamp((w - 2 * margin) / (kAdvance * 10), 1, 4);
  auto max_chars = static_cast<std::size_t>(std::max(1, (w - 2 * margin) / (kAdvance * scale)));
  auto lines = wrap(text, max_chars);
  while (scale > 1 && lines.size() * 9 * static_cast<std::size_t>(scale) > static_cast<std::size_t>(h / 2)) {
    --scale;
    max_chars = static_cast<std::size_t>(std::max(1, (w - 2 * margin) / (kAdvance * scale)));
    lines = wrap(text, max_chars);
  }
  if (lines.empty()) return;
  const int line_h = 9 * scale;
  const int block_h = static_cast<int>(lines.size()) * line_h;
  const int top = (h - block_h) / 2;
  img.blend_rect(0, top - 2 * scale, w, block_h + 3 * scale, {0, 0, 0}, 0.55);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& line = lines[li];
    const int line_w = static_cast<int>(line.size()) * kAdvance * scale - scale;
    const int x0 = (w - line_w) / 2;
    const int y0 = top + static_cast<int>(li) * line_h;
    for (std::size_t ci = 0; ci < line.size(); ++ci) {
      const auto& g = glyph_for(line[ci]);
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (g.rows[row] & (0x10 >> col))
            img.fill_rect(x0 + static_cast<int>(ci) * kAdvance * scale + col * scale,
                          y0 + row * scale, scale, scale, ink);
    }
  }
}

}  // namespace

RgbImage ProceduralImageProvider::draw(const ImageRequest& request) {
  validate_request(request);
  SplitMix64 rng{request.seed};
  const double hue = static_cast<double>(rng.next() % 3600) / 10.0;
  const double accent_shift = 120.0 + static_cast<double>(rng.next() % 1200) / 10.0;
  const Rgb bg = hsv(hue, 0.45, 0.92);
  const Rgb accent = hsv(hue + accent_shift, 0.65, 0.55);
  const Rgb accent2 = hsv(hue + accent_shift + 40.0, 0.5, 0.75);
  RgbImage img(request.width, request.height, bg);

  // Symmetric 8x8 glyph grid (4 random columns mirrored), like an identicon.
  constexpr int kGrid = 8;
  const auto cell_w = static_cast<std::int64_t>(request.width) / kGrid;
  const auto cell_h = static_cast<std::int64_t>(request.height) / kGrid;
  const std::uint64_t bits = rng.next();
  const std::uint64_t tint = rng.next();
  for (int gy = 0; gy < kGrid; ++gy) {
    for (int gx = 0; gx < kGrid / 2; ++gx) {
      const int bit = gy * (kGrid / 2) + gx;
      if (!((bits >> bit) & 1u)) continue;
      const Rgb c = ((tint >> bit) & 1u) ? accent : accent2;
      img.fill_rect(gx * cell_w, gy * cell_h, cell_w, cell_h, c);
      img.fill_rect((kGrid - 1 - gx) * cell_w, gy * cell_h, cell_w, cell_h, c);
    }
  }

  // A ring whose centre and radius also come from the seed.
  const double cx = static_cast<double>(rng.next() % request.width);
  const double cy = static_cast<double>(rng.next() % request.height);
  const double radius = static_cast<double>(request.width) * (0.15 + (rng.next() % 100) / 400.0);
  const double thickness = std::max(2.0, static_cast<double>(request.width) / 40.0);
  for (std::uint32_t y = 0; y < request.height; ++y) {
    for (std::uint32_t x = 0; x < request.width; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      if (std::fabs(d - radius) < thickness) img.set(x, y, {255, 255, 255});
    }
  }

  draw_text(img, request.prompt, {255, 255, 255});
  return img;
}

std::vector<std::uint8_t> ProceduralImageProvider::render(const ImageRequest& request) {
  return encode_png(draw(request));
}

// ---------------------------------------------------------------------------
// Remote provider

RemoteImageProvider::RemoteImageProvider(RemoteImageConfig config) : config_(std::move(config)) {
  split_url(config_.endpoint);
}

std::vector<std::uint8_t> RemoteImageProvider::render(const ImageRequest& request) {
  validate_request(request);
  const auto url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_follow_location(true);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const json body{{"prompt", request.prompt},
                  {"seed", request.seed},
                  {"width", request.width},
                  {"height", request.height}};
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) throw Error(ErrorKind::ProviderError, "image request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorKind::ProviderError, "image endpoint returned HTTP " + std::to_string(res->status));

  const auto type = res->get_header_value("Content-Type");
  if (type.starts_with("image/") || type == "application/octet-stream")
    return {res->body.begin(), res->body.end()};

  std::string image_url;
  try {
    image_url = json::parse(res->body).at("url").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidImage, "response is neither an image nor {\"url\": ...}");
  }
  const auto target = image_url.starts_with("/") ? UrlParts{url.origin, image_url} : split_url(image_url);
  httplib::Client fetch(target.origin);
  fetch.set_connection_timeout(config_.timeout);
  fetch.set_read_timeout(config_.timeout);
  fetch.set_follow_location(true);
  auto img = fetch.Get(target.path);
  if (!img) throw Error(ErrorKind::ProviderError, "image download failed: " + httplib::to_string(img.error()));
  if (img->status != 200)
    throw Error(ErrorKind::ProviderError, "image download returned HTTP " + std::to_string(img->status));
  return {img->body.begin(), img->body.end()};
}

// ---------------------------------------------------------------------------
// Cache

ImageCache::ImageCache(fs::path images_dir) : dir_(std::move(images_dir)), manifest_(json::object()) {
  const auto path = dir_ / "manifest.json";
  if (fs::is_regular_file(path)) manifest_ = json::parse(read_file(path));
}

std::string ImageCache::request_key(const ImageRequest& request, const ImageProvider& provider) {
  const json key{{"prompt", request.prompt},
                 {"seed", request.seed},
                 {"width", request.width},
                 {"height", request.height},
                 {"provider", provider.name()}};
  return sha256_hex(key.dump());
}

namespace {

ImageAsset asset_from(const std::string& target, const json& entry) {
  ImageAsset a;
  a.target = target;
  a.file = entry.at("file").get<std::string>();
  a.provider = entry.at("provider").get<std::string>() == "remote" ? ImageSource::Remote
                                                                   : ImageSource::Procedural;
  a.seed = entry.at("seed").get<std::uint64_t>();
  a.digest = entry.at("digest").get<std::string>();
  return a;
}

}  // namespace

std::optional<ImageAsset> ImageCache::find(std::string_view target) const {
  std::lock_guard lock(mutex_);
  auto it = manifest_.find(std::string(target));
  if (it == manifest_.end()) return std::nullopt;
  return asset_from(std::string(target), *it);
}

std::optional<ImageAsset> ImageCache::lookup(const ImageRequest& request,
                                             const ImageProvider& provider) const {
  json entry;
  {
    std::lock_guard lock(mutex_);
    auto it = manifest_.find(request.target);
    if (it == manifest_.end()) return std::nullopt;
    entry = *it;
  }
  if (entry.value("key", "") != request_key(request, provider)) return std::nullopt;
  const auto file = dir_ / entry.at("file").get<std::string>();
  if (!fs::is_regular_file(file)) return std::nullopt;
  if (sha256_hex(read_binary(file)) != entry.at("digest").get<std::string>()) return std::nullopt;
  auto asset = asset_from(request.target, entry);
  asset.cache_hit = true;
  return asset;
}

ImageAsset ImageCache::generate(const ImageRequest& request, ImageProvider& provider,
                                const RetryPolicy& retry) {
  validate_request(request);
  if (auto hit = lookup(request, provider)) return *hit;

  const auto sleep = retry.sleep ? retry.sleep
                                 : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::vector<std::uint8_t> bytes;
  auto delay = retry.initial_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      bytes = provider.render(request);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ProviderError || attempt >= retry.attempts) throw;
    }
    sleep(delay);
    delay = std::chrono::milliseconds(
        static_cast<std::chrono::milliseconds::rep>(delay.count() * retry.backoff));
  }
  {
    std::lock_guard lock(mutex_);
    ++renders_;
  }
  if (!inspect_png(bytes)) throw Error(ErrorKind::InvalidImage, "provider returned undecodable bytes");

  ImageAsset asset;
  asset.target = request.target;
  asset.file = request.target + ".png";
  asset.provider = provider.kind();
  asset.seed = request.seed;
  asset.digest = sha256_hex(bytes);
  write_file_atomic(dir_ / asset.file, bytes);

  std::lock_guard lock(mutex_);
  manifest_[request.target] = json{{"file", asset.file},
                                   {"prompt", request.prompt},
                                   {"seed", request.seed},
                                   {"width", request.width},
                                   {"height", request.height},
                                   {"provider", to_string(asset.provider)},
                                   {"provider_name", provider.name()},
                                   {"digest", asset.digest},
                                   {"key", request_key(request, provider)}};
  return asset;
}

void ImageCache::save() const {
  std::string text;
  {
    std::lock_guard lock(mutex_);
    text = manifest_.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
  }
  write_file_atomic(dir_ / "manifest.json", text);
}

std::size_t ImageCache::renders() const {
  std::lock_guard lock(mutex_);
  return renders_;
}

ImageAsset category_image(const Category& category, ImageProvider& provider, ImageCache& cache,
                          const RetryPolicy& retry, std::uint32_t width, std::uint32_t height) {
  return cache.generate(category_image_request(category.name, width, height), provider, retry);
}

}  // namespace mindmap
