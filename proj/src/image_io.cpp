// SPDX-License-Identifier: Apache-2.0
#include "elastic/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "elastic/error.hpp"

namespace elastic {

ImageFormat parse_image_format(const std::string& text) {
  if (text == "pgm") return ImageFormat::pgm;
  if (text == "png") return ImageFormat::png;
  fail(Errc::invalid_argument, "unknown image format '" + text + "' (expected pgm or png)");
}

std::string extension(ImageFormat format) { return format == ImageFormat::pgm ? ".pgm" : ".png"; }

std::uint8_t to_byte(double v) {
  const double clamped = std::clamp(v, -1.0, 1.0);
  return std::uint8_t(std::floor(127.5 * (clamped + 1.0) + 0.5));
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(std::uint8_t(v >> shift));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& payload) {
  put_u32(out, std::uint32_t(payload.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(0L, out.data() + start, uInt(out.size() - start));
  put_u32(out, std::uint32_t(crc));
}

std::vector<std::uint8_t> encode_pgm(const Grid& g) {
  const std::string head = "P5\n" + std::to_string(g.width()) + " " + std::to_string(g.height()) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (double v : g.values()) out.push_back(to_byte(v));
  return out;
}

std::vector<std::uint8_t> encode_png(const Grid& g) {
  const int channels = g.channels();
  std::vector<std::uint8_t> raw;
  raw.reserve(std::size_t(g.height()) * (std::size_t(g.width()) * channels + 1));
  for (int y = 0; y < g.height(); ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < g.width(); ++x) {
      for (int c = 0; c < channels; ++c) raw.push_back(to_byte(g.at(y, x, c)));
    }
  }
  uLongf packed_len = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), uLong(raw.size()), 9) != Z_OK) {
    fail(Errc::io, "zlib compression failed");
  }
  packed.resize(packed_len);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, std::uint32_t(g.width()));
  put_u32(ihdr, std::uint32_t(g.height()));
  ihdr.push_back(8);                        // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);    // gray or truecolour
  ihdr.insert(ihdr.end(), {0, 0, 0});       // compression, filter, interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

}  // namespace

std::vector<std::uint8_t> render_image(const Grid& g, ImageFormat format) {
  if (g.empty()) fail(Errc::invalid_argument, "cannot render an empty grid");
  if (format == ImageFormat::pgm) {
    if (g.channels() != 1) fail(Errc::invalid_argument, "PGM needs 1 channel, grid has " + std::to_string(g.channels()));
    return encode_pgm(g);
  }
  if (g.channels() != 1 && g.channels() != 3) {
    fail(Errc::invalid_argument, "PNG needs 1 or 3 channels, grid has " + std::to_string(g.channels()));
  }
  return encode_png(g);
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) fail(Errc::io, "failed writing '" + path + "'");
}

void write_file(const std::string& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace elastic
