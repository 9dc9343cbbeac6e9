#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mindmap/curation.hpp"
#include "mindmap/png.hpp"
#include "mindmap/topics.hpp"

namespace mindmap {

enum class ImageSource { Remote, Procedural };

std::string_view to_string(ImageSource source);

inline constexpr std::uint32_t kDefaultImageSize = 256;
inline constexpr double kDefaultImagePrice = 0.001;

struct ImageRequest {
  std::string prompt;
  std::uint64_t seed = 0;
  std::uint32_t width = kDefaultImageSize;
  std::uint32_t height = kDefaultImageSize;
  /// File stem under images/: a recording id or "category_<name>".
  std::string target;
};

struct ImageAsset {
  std::string target;
  std::string file;  // relative to the images directory
  ImageSource provider = ImageSource::Procedural;
  std::uint64_t seed = 0;
  std::string digest;  // sha256 of the PNG bytes
  bool cache_hit = false;
};

/// FNV-1a 64 over the UTF-8 bytes of lowercase(topic) + '\x1f' + target_id.
std::uint64_t variant_seed(std::string_view topic, std::string_view target_id);

/// "category_" + name with path-hostile characters replaced by '_'.
std::string category_target(std::string_view name);

ImageRequest recording_image_request(std::string_view recording_id, std::string_view topic,
                                     std::uint32_t width = kDefaultImageSize,
                                     std::uint32_t height = kDefaultImageSize);

/// Prompt is the category name; seed = variant_seed(name, "category:" + name).
ImageRequest category_image_request(std::string_view category_name,
                                    std::uint32_t width = kDefaultImageSize,
                                    std::uint32_t height = kDefaultImageSize);

/// Error{DomainError} for an empty prompt/target or sizes outside [64, 1024].
void validate_request(const ImageRequest& request);

class ImageProvider {
 public:
  virtual ~ImageProvider() = default;
  virtual std::string name() const = 0;
  virtual ImageSource kind() const = 0;
  /// PNG bytes; throws Error{ProviderError} on failure.
  virtual std::vector<std::uint8_t> render(const ImageRequest& request) = 0;
};

/// Deterministic offline renderer: background hue and a mirrored glyph grid
/// derived from the seed, with the prompt lettered across the middle.
class ProceduralImageProvider final : public ImageProvider {
 public:
  std::string name() const override { return "procedural-v1"; }
  ImageSource kind() const override { return ImageSource::Procedural; }
  std::vector<std::uint8_t> render(const ImageRequest& request) override;

  static RgbImage draw(const ImageRequest& request);
};

struct RemoteImageConfig {
  std::string endpoint;
  std::string api_key;
  std::chrono::seconds timeout{120};
};

/// POSTs {prompt, seed, width, height} as JSON. Accepts either PNG bytes or
/// a JSON body with a "url" to fetch the image from.
class RemoteImageProvider final : public ImageProvider {
 public:
  explicit RemoteImageProvider(RemoteImageConfig config);
  std::string name() const override { return "remote:" + config_.endpoint; }
  ImageSource kind() const override { return ImageSource::Remote; }
  std::vector<std::uint8_t> render(const ImageRequest& request) override;

 private:
  RemoteImageConfig config_;
};

/// Content cache over `<images_dir>/<target>.png` plus `manifest.json`.
/// Thread-safe; each target must be generated by one caller at a time.
class ImageCache {
 public:
  explicit ImageCache(std::filesystem::path images_dir);

  const std::filesystem::path& directory() const { return dir_; }

  /// Cache key over (prompt, seed, size, provider name).
  static std::string request_key(const ImageRequest& request, const ImageProvider& provider);

  std::optional<ImageAsset> lookup(const ImageRequest& request, const ImageProvider& provider) const;
  std::optional<ImageAsset> find(std::string_view target) const;

  /// Cache hit short-circuits. Otherwise renders with retries on
  /// ProviderError; Error{InvalidImage} when the bytes are not a PNG.
  ImageAsset generate(const ImageRequest& request, ImageProvider& provider,
                      const RetryPolicy& retry = {});

  void save() const;
  std::size_t renders() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  nlohmann::json manifest_;
  std::size_t renders_ = 0;
};

ImageAsset category_image(const Category& category, ImageProvider& provider, ImageCache& cache,
                          const RetryPolicy& retry = {}, std::uint32_t width = kDefaultImageSize,
                          std::uint32_t height = kDefaultImageSize);

}  // namespace mindmap
