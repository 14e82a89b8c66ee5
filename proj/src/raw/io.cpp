// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "darkburst/errors.hpp"

namespace darkburst::io {

namespace {

template <typename U>
void put_le(std::ostream& os, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw DataError("truncated burst file");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(U(bytes[i]) << (8 * i));
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string() + ": " + std::strerror(errno));
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string() + ": " + std::strerror(errno));
  return os;
}

// Next whitespace-delimited PNM header token, skipping '#' comments.
std::string pnm_token(std::istream& is) {
  std::string token;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw DataError("truncated PPM header");
  return token;
}

}  // namespace

std::pair<std::uint32_t, std::uint32_t> exposure_fraction(double seconds) {
  if (!(seconds > 0.0)) throw DataError("exposure must be positive");
  // Continued-fraction convergents until the denominator limit.
  constexpr double kMaxDen = 1e6;
  double x = seconds;
  double h0 = 1, h1 = 0, k0 = 0, k1 = 1;  // h/k convergents
  double best_h = std::round(seconds), best_k = 1;
  for (int iter = 0; iter < 40; ++iter) {
    double a = std::floor(x);
    double h2 = a * h0 + h1, k2 = a * k0 + k1;
    if (k2 > kMaxDen || h2 > 4294967295.0) break;
    best_h = h2;
    best_k = k2;
    h1 = h0;
    h0 = h2;
    k1 = k0;
    k0 = k2;
    double frac = x - a;
    if (frac < 1e-12 || std::abs(h2 / k2 - seconds) <= 1e-15 * seconds) break;
    x = 1.0 / frac;
  }
  if (best_h < 1) {
    best_h = 1;
    best_k = std::min(kMaxDen, std::round(1.0 / seconds));
  }
  return {static_cast<std::uint32_t>(best_h), static_cast<std::uint32_t>(best_k)};
}

void write_drb(std::ostream& os, const Burst& burst) {
  if (burst.frames.empty()) throw DataError("burst has no frames");
  if (burst.frames.size() > 65535) throw DataError("too many frames for a burst file");
  const raw::RawFrame& first = burst.frames.front();
  first.validate();
  if (first.width > 65535 || first.height > 65535) throw DataError("frame too large for burst file");
  for (const auto& f : burst.frames) {
    f.validate();
    if (f.width != first.width || f.height != first.height || f.black_level != first.black_level ||
        f.white_level != first.white_level || f.exposure_seconds != first.exposure_seconds)
      throw DataError("burst frames must share dimensions, levels and exposure");
  }
  auto [num, den] = exposure_fraction(first.exposure_seconds);
  os.write("DRB1", 4);
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(first.width));
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(first.height));
  put_le<std::uint16_t>(os, first.black_level);
  put_le<std::uint16_t>(os, first.white_level);
  put_le<std::uint32_t>(os, num);
  put_le<std::uint32_t>(os, den);
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(burst.frames.size()));
  for (const auto& f : burst.frames)
    for (std::uint16_t v : f.values) put_le<std::uint16_t>(os, v);
  if (!os) throw DataError("failed writing burst");
}

void write_drb(const std::filesystem::path& path, const Burst& burst) {
  auto os = open_out(path);
  write_drb(os, burst);
}

Burst read_drb(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DRB1", 4) != 0)
    throw DataError("not a DRB1 burst file");
  const auto width = get_le<std::uint16_t>(is);
  const auto height = get_le<std::uint16_t>(is);
  const auto black = get_le<std::uint16_t>(is);
  const auto white = get_le<std::uint16_t>(is);
  const auto num = get_le<std::uint32_t>(is);
  const auto den = get_le<std::uint32_t>(is);
  const auto count = get_le<std::uint16_t>(is);
  if (den == 0 || num == 0) throw DataError("burst file has a zero exposure term");
  if (count == 0) throw DataError("burst file has no frames");
  Burst burst;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  for (std::size_t f = 0; f < count; ++f) {
    raw::RawFrame frame;
    frame.width = width;
    frame.height = height;
    frame.black_level = black;
    frame.white_level = white;
    frame.exposure_seconds = static_cast<double>(num) / static_cast<double>(den);
    frame.values.resize(n);
    std::vector<unsigned char> bytes(2 * n);
    if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
      throw DataError("truncated burst file: frame " + std::to_string(f) + " of " +
                      std::to_string(count));
    for (std::size_t i = 0; i < n; ++i)
      frame.values[i] = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    frame.validate();
    burst.frames.push_back(std::move(frame));
  }
  return burst;
}

Burst read_drb(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return read_drb(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

raw::RgbImage quantize8(const raw::RgbImage& image) {
  raw::RgbImage out = image;
  for (float& v : out.pixels) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
  return out;
}

void write_ppm(std::ostream& os, const raw::RgbImage& image) {
  os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image.pixels[i], 0.0f, 1.0f) * 255.0f));
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("failed writing PPM");
}

void write_ppm(const std::filesystem::path& path, const raw::RgbImage& image) {
  auto os = open_out(path);
  write_ppm(os, image);
}

raw::RgbImage read_ppm(std::istream& is) {
  if (pnm_token(is) != "P6") throw DataError("not a binary PPM (P6)");
  const std::size_t width = std::stoul(pnm_token(is));
  const std::size_t height = std::stoul(pnm_token(is));
  const unsigned long maxval = std::stoul(pnm_token(is));
  if (maxval != 255) throw DataError("only 8-bit PPM is supported");
  raw::RgbImage image(width, height);
  std::vector<unsigned char> bytes(image.pixels.size());
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw DataError("truncated PPM data");
  for (std::size_t i = 0; i < bytes.size(); ++i) image.pixels[i] = bytes[i] / 255.0f;
  return image;
}

raw::RgbImage read_ppm(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return read_ppm(is);
  } catch (const std::logic_error&) {
    throw DataError(path.string() + ": malformed PPM header");
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_pgm16(const std::filesystem::path& path, const raw::RawFrame& frame) {
  auto os = open_out(path);
  os << "P5\n" << frame.width << ' ' << frame.height << "\n65535\n";
  for (std::uint16_t v : frame.values) {
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    os.write(bytes, 2);
  }
  if (!os) throw DataError("failed writing " + path.string());
}

}  // namespace darkburst::io
