#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mindmap {

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place, so readers
/// see either the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data);

std::uint64_t fnv1a64(std::string_view bytes);

std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

std::string ascii_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

std::string url_encode(std::string_view s);

/// "https://host:8080/v1/x?y" -> {"https://host:8080", "/v1/x?y"}.
struct UrlParts {
  std::string origin;
  std::string path;
};
UrlParts split_url(std::string_view url);

/// Runs fn(i) for i in [0, n) on up to `concurrency` threads. The first
/// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t concurrency,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mindmap
