#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "trajpred/common.hpp"

namespace trajpred {

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(static_cast<std::uint8_t>(x >> 24));
  v.push_back(static_cast<std::uint8_t>(x >> 16));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
  v.push_back(static_cast<std::uint8_t>(x));
}

inline void png_chunk(std::ofstream& out, const char type[4], const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> head;
  put_be32(head, static_cast<std::uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(head.data()), 4);
  out.write(type, 4);
  if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  std::vector<std::uint8_t> tail;
  put_be32(tail, crc);
  out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace detail

// Minimal 8-bit RGB PNG encoder (zlib-deflated, filter 0 scanlines).
inline void write_png_rgb(const std::filesystem::path& path, int width, int height,
                          const std::vector<std::uint8_t>& rgb) {
  if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3 != rgb.size())
    throw ShapeError("write_png_rgb: buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());

  static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  detail::png_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (static_cast<std::size_t>(width) * 3 + 1));
  for (int r = 0; r < height; ++r) {
    raw.push_back(0);  // filter: none
    const std::size_t off = static_cast<std::size_t>(r) * static_cast<std::size_t>(width) * 3;
    raw.insert(raw.end(), rgb.begin() + static_cast<std::ptrdiff_t>(off),
               rgb.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(width) * 3));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw ConfigError("png deflate failed");
  compressed.resize(bound);
  detail::png_chunk(out, "IDAT", compressed);
  detail::png_chunk(out, "IEND", {});
}

}  // namespace trajpred
