#include "mindmap/png.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <string_view>

#include "mindmap/error.hpp"

namespace mindmap {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], std::span<const std::uint8_t> data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const auto start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

RgbImage::RgbImage(std::uint32_t w, std::uint32_t h, Rgb fill) : width(w), height(h) {
  pixels.resize(std::size_t{w} * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) std::copy(fill.begin(), fill.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i));
}

void RgbImage::set(std::int64_t x, std::int64_t y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  auto* p = &pixels[(static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)) * 3];
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

Rgb RgbImage::get(std::uint32_t x, std::uint32_t y) const {
  const auto* p = &pixels[(std::size_t{y} * width + x) * 3];
  return {p[0], p[1], p[2]};
}

void RgbImage::fill_rect(std::int64_t x0, std::int64_t y0, std::int64_t w, std::int64_t h, Rgb c) {
  for (auto y = y0; y < y0 + h; ++y)
    for (auto x = x0; x < x0 + w; ++x) set(x, y, c);
}

void RgbImage::blend_rect(std::int64_t x0, std::int64_t y0, std::int64_t w, std::int64_t h, Rgb c,
                          double alpha) {
  for (auto y = std::max<std::int64_t>(0, y0); y < std::min<std::int64_t>(height, y0 + h); ++y) {
    for (auto x = std::max<std::int64_t>(0, x0); x < std::min<std::int64_t>(width, x0 + w); ++x) {
      auto old = get(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
      Rgb mixed;
      for (int i = 0; i < 3; ++i)
        mixed[i] = static_cast<std::uint8_t>(old[i] * (1.0 - alpha) + c[i] * alpha + 0.5);
      set(x, y, mixed);
    }
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.width == 0 || image.height == 0 ||
      image.pixels.size() != std::size_t{image.width} * image.height * 3)
    throw Error(ErrorKind::InvalidImage, "bad image dimensions");

  std::vector<std::uint8_t> raw;
  const std::size_t stride = std::size_t{image.width} * 3;
  raw.reserve((stride + 1) * image.height);
  for (std::uint32_t y = 0; y < image.height; ++y) {
    raw.push_back(0);  // filter: none
    const auto* row = image.pixels.data() + y * stride;
    raw.insert(raw.end(), row, row + stride);
  }
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw Error(ErrorKind::InvalidImage, "deflate failed");
  packed.resize(packed_len);

  std::vector<std::uint8_t> out(std::begin(kSignature), std::end(kSignature));
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, image.width);
  put_u32(ihdr, image.height);
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

std::optional<PngInfo> inspect_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) return std::nullopt;
  std::size_t pos = 8;
  std::optional<PngInfo> info;
  bool interlaced = false;
  bool seen_end = false;
  std::vector<std::uint8_t> idat;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 12) return std::nullopt;
    const auto len = get_u32(bytes.data() + pos);
    if (bytes.size() - pos - 12 < len) return std::nullopt;
    const auto* type = bytes.data() + pos + 4;
    const auto* data = type + 4;
    const auto crc = crc32(0L, type, static_cast<uInt>(len + 4));
    if (get_u32(data + len) != static_cast<std::uint32_t>(crc)) return std::nullopt;
    const std::string_view tag(reinterpret_cast<const char*>(type), 4);
    if (!info && tag != "IHDR") return std::nullopt;
    if (tag == "IHDR") {
      if (info || len != 13) return std::nullopt;
      info = PngInfo{get_u32(data), get_u32(data + 4), data[8], data[9]};
      interlaced = data[12] != 0;
      if (info->width == 0 || info->height == 0) return std::nullopt;
    } else if (tag == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (tag == "IEND") {
      seen_end = true;
      pos += 12 + len;
      break;
    }
    pos += 12 + len;
  }
  if (!info || !seen_end || idat.empty()) return std::nullopt;

  int channels = 0;
  switch (info->color_type) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    case 3: channels = 1; break;
    case 4: channels = 2; break;
    case 6: channels = 4; break;
    default: return std::nullopt;
  }
  if (info->bit_depth != 8 || interlaced) return info;  // structure checked only

  const std::size_t expected = (std::size_t{info->width} * channels + 1) * info->height;
  std::vector<std::uint8_t> raw(expected + 1);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  const int rc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
  if (rc != Z_OK || raw_len != expected) return std::nullopt;
  return info;
}

}  // namespace mindmap
