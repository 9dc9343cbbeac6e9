#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mindmap {

using Rgb = std::array<std::uint8_t, 3>;

struct RgbImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  RgbImage() = default;
  RgbImage(std::uint32_t w, std::uint32_t h, Rgb fill);

  void set(std::int64_t x, std::int64_t y, Rgb c);
  Rgb get(std::uint32_t x, std::uint32_t y) const;
  void fill_rect(std::int64_t x0, std::int64_t y0, std::int64_t w, std::int64_t h, Rgb c);
  void blend_rect(std::int64_t x0, std::int64_t y0, std::int64_t w, std::int64_t h, Rgb c, double alpha);
};

/// 8-bit truecolor, non-interlaced, zlib level 9.
std::vector<std::uint8_t> encode_png(const RgbImage& image);

struct PngInfo {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t bit_depth = 0;
  std::uint8_t color_type = 0;
};

/// Walks the chunk stream (signature, CRCs, IHDR first, IEND last) and, for
/// non-interlaced 8-bit images, inflates IDAT and checks the scanline size.
std::optional<PngInfo> inspect_png(std::span<const std::uint8_t> bytes);

}  // namespace mindmap
