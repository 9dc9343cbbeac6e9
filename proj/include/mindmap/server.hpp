#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mindmap/store.hpp"

namespace mindmap {

struct PipelineConfig;

enum class RangeKind { Full, Partial, Unsatisfiable };

/// Outcome of a Range header against a body of `size` bytes. Offsets are
/// inclusive. Headers that are absent, not "bytes=", multi-range or
/// syntactically invalid fall back to the full body.
struct RangePlan {
  RangeKind kind = RangeKind::Full;
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  std::uint64_t size = 0;

  std::uint64_t length() const { return kind == RangeKind::Unsatisfiable || size == 0 ? 0 : last - first + 1; }
  /// "bytes 0-99/1000", or "bytes */1000" when unsatisfiable.
  std::string content_range() const;
};

RangePlan plan_range(std::optional<std::string_view> range_header, std::uint64_t size);

std::string_view audio_content_type(const std::filesystem::path& path);

/// "/api/illustrations/<target>.png?v=<digest prefix>", or nullopt when the
/// snapshot has no such asset.
std::optional<std::string> image_url(const StoreSnapshot& store, std::string_view target);

/// JSON endpoints as plain functions over a snapshot.
struct ApiResult {
  int status = 200;
  nlohmann::json body;
  std::vector<std::string> warnings;  // also sent as X-Mindmap-Warnings
};

ApiResult api_categories(const StoreSnapshot& store);
ApiResult api_mindmap(const StoreSnapshot& store, std::optional<std::string_view> categories);
ApiResult api_recording(const StoreSnapshot& store, std::string_view id);
ApiResult api_search(const StoreSnapshot& store, std::optional<std::string_view> q,
                     std::optional<std::string_view> categories, std::optional<std::string_view> k);

inline constexpr std::size_t kDefaultSearchK = 25;
inline constexpr std::size_t kAudioChunkBytes = 64 * 1024;

struct ServerOptions {
  std::string cors_origin = "*";
  std::filesystem::path static_dir;  // empty: no static hosting
};

/// HTTP front end over one immutable snapshot.
class ApiServer {
 public:
  ApiServer(std::shared_ptr<const StoreSnapshot> store, ServerOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds to a free port and returns it, or -1.
  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int cmd_serve(const PipelineConfig& config, std::ostream& out, std::ostream& err);

}  // namespace mindmap
