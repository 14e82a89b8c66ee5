// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/sensor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace darkburst::sim {

namespace {

// Portable draws: std::*_distribution output differs between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Color {
  float r, g, b;
};

Color random_color(Rng& rng) {
  return {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
          static_cast<float>(rng.uniform())};
}

void put(raw::RgbImage& img, std::size_t x, std::size_t y, Color c) {
  img.at(x, y, 0) = c.r;
  img.at(x, y, 1) = c.g;
  img.at(x, y, 2) = c.b;
}

// Fine-scale sinusoidal texture in a rectangle, amplitude around a base color.
void texture_patch(raw::RgbImage& img, Rng& rng, std::size_t x0, std::size_t y0, std::size_t x1,
                   std::size_t y1) {
  const Color base = random_color(rng);
  const double fx = rng.uniform(0.6, 1.4), fy = rng.uniform(0.6, 1.4);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) {
      const float t = static_cast<float>(0.25 * std::sin(fx * x + fy * y + phase));
      put(img, x, y,
          {std::clamp(base.r + t, 0.0f, 1.0f), std::clamp(base.g - t, 0.0f, 1.0f),
           std::clamp(base.b + t, 0.0f, 1.0f)});
    }
}

raw::RgbImage gradients_scene(const SceneSpec& spec, Rng& rng) {
  const std::size_t w = spec.width, h = spec.height;
  raw::RgbImage img(w, h);
  const bool flip = rng.uniform() < 0.5;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const float u = w > 1 ? static_cast<float>(x) / static_cast<float>(w - 1) : 0.0f;
      const float v = h > 1 ? static_cast<float>(y) / static_cast<float>(h - 1) : 0.0f;
      put(img, x, y, {u, flip ? 1.0f - v : v, 0.5f * (1.0f - u + v)});
    }
  // Flat block and a textured band stay inside the interior columns, so the
  // first and last columns keep the 0 and 1 extremes of the red ramp.
  if (w >= 8 && h >= 8) {
    const std::size_t bx = w / 4 + static_cast<std::size_t>(rng.integer(0, static_cast<int>(w / 8)));
    const std::size_t by = h / 4 + static_cast<std::size_t>(rng.integer(0, static_cast<int>(h / 8)));
    const Color flat = random_color(rng);
    for (std::size_t y = by; y < by + h / 4; ++y)
      for (std::size_t x = bx; x < bx + w / 4; ++x) put(img, x, y, flat);
    texture_patch(img, rng, w / 4, 3 * h / 4, 3 * w / 4, std::min(h, 3 * h / 4 + h / 8));
  }
  return img;
}

raw::RgbImage shapes_scene(const SceneSpec& spec, Rng& rng) {
  const std::size_t w = spec.width, h = spec.height;
  const Color bg = random_color(rng);
  raw::RgbImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) put(img, x, y, bg);
  const int count = rng.integer(4, 8);
  for (int s = 0; s < count; ++s) {
    const Color c = random_color(rng);
    const double cx = rng.uniform(0.0, static_cast<double>(w));
    const double cy = rng.uniform(0.0, static_cast<double>(h));
    const double rx = rng.uniform(0.08, 0.3) * static_cast<double>(w);
    const double ry = rng.uniform(0.08, 0.3) * static_cast<double>(h);
    const bool ellipse = rng.uniform() < 0.5;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
        const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) put(img, x, y, c);
      }
  }
  if (w >= 8 && h >= 8) {
    const std::size_t px = static_cast<std::size_t>(rng.integer(0, static_cast<int>(w - w / 4)));
    const std::size_t py = static_cast<std::size_t>(rng.integer(0, static_cast<int>(h - h / 4)));
    texture_patch(img, rng, px, py, px + w / 4, py + h / 4);
  }
  return img;
}

raw::RgbImage texture_scene(const SceneSpec& spec, Rng& rng) {
  const std::size_t w = spec.width, h = spec.height;
  raw::RgbImage img(w, h);
  struct Wave {
    double fx, fy, phase, amp;
  };
  Wave waves[3][3];
  for (auto& channel : waves)
    for (auto& wave : channel) {
      const double angle = rng.uniform(0.0, std::numbers::pi);
      const double freq = rng.uniform(0.15, 1.2);
      wave = {freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi),
              rng.uniform(0.3, 1.0)};
    }
  for (std::size_t c = 0; c < 3; ++c) {
    double norm = 0.0;
    for (const auto& wave : waves[c]) norm += wave.amp;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double v = 0.0;
        for (const auto& wave : waves[c])
          v += wave.amp * std::sin(wave.fx * static_cast<double>(x) + wave.fy * static_cast<double>(y) + wave.phase);
        img.at(x, y, c) = static_cast<float>(0.5 + 0.5 * v / norm);
      }
  }
  // Flat checkerboard block: hard edges next to the smooth texture.
  if (w >= 8 && h >= 8) {
    const Color a = random_color(rng), b = random_color(rng);
    const std::size_t x0 = static_cast<std::size_t>(rng.integer(0, static_cast<int>(w / 2)));
    const std::size_t y0 = static_cast<std::size_t>(rng.integer(0, static_cast<int>(h / 2)));
    const std::size_t cell = std::max<std::size_t>(2, w / 16);
    for (std::size_t y = y0; y < y0 + h / 3 && y < h; ++y)
      for (std::size_t x = x0; x < x0 + w / 3 && x < w; ++x)
        put(img, x, y, (((x - x0) / cell + (y - y0) / cell) % 2) ? a : b);
  }
  return img;
}

}  // namespace

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::Gradients: return "gradients";
    case SceneKind::Shapes: return "shapes";
    case SceneKind::Texture: return "texture";
  }
  return "shapes";
}

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "gradients") return SceneKind::Gradients;
  if (name == "shapes") return SceneKind::Shapes;
  if (name == "texture") return SceneKind::Texture;
  throw std::invalid_argument("unknown scene kind '" + name + "'");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

raw::RgbImage synth_scene(const SceneSpec& spec) {
  if (spec.width == 0 || spec.height == 0) throw std::invalid_argument("scene must be non-empty");
  Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(spec.kind)));
  switch (spec.kind) {
    case SceneKind::Gradients: return gradients_scene(spec, rng);
    case SceneKind::Shapes: return shapes_scene(spec, rng);
    case SceneKind::Texture: return texture_scene(spec, rng);
  }
  return shapes_scene(spec, rng);
}

raw::RgbImage translate(const raw::RgbImage& image, int dx, int dy) {
  raw::RgbImage out(image.width, image.height);
  const long w = static_cast<long>(image.width), h = static_cast<long>(image.height);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const long sx = std::clamp(x - dx, 0L, w - 1);
      const long sy = std::clamp(y - dy, 0L, h - 1);
      for (std::size_t c = 0; c < 3; ++c)
        out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c) =
            image.at(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy), c);
    }
  return out;
}

raw::RawFrame mosaic(const raw::RgbImage& image, std::uint16_t black_level,
                     std::uint16_t white_level, double exposure_seconds) {
  if (image.width % 2 != 0 || image.height % 2 != 0)
    throw std::invalid_argument("mosaic needs even image dimensions");
  raw::RawFrame frame;
  frame.width = image.width;
  frame.height = image.height;
  frame.black_level = black_level;
  frame.white_level = white_level;
  frame.exposure_seconds = exposure_seconds;
  frame.values.resize(image.width * image.height);
  const double range = static_cast<double>(white_level) - black_level;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) {
      // RGGB: red on even/even, blue on odd/odd, green elsewhere.
      const std::size_t c = (y % 2 == 0) ? (x % 2 == 0 ? 0 : 1) : (x % 2 == 0 ? 1 : 2);
      const double v = std::clamp(static_cast<double>(image.at(x, y, c)), 0.0, 1.0);
      frame.values[y * image.width + x] = static_cast<std::uint16_t>(std::lround(black_level + v * range));
    }
  return frame;
}

raw::RawFrame darken(const raw::RawFrame& frame, double ratio, const NoiseParams& noise) {
  if (!(ratio >= 1.0)) throw std::invalid_argument("darkening ratio must be >= 1");
  raw::RawFrame out = frame;
  out.exposure_seconds = frame.exposure_seconds / ratio;
  Rng rng(noise.seed);
  const double black = frame.black_level;
  const double range = static_cast<double>(frame.white_level) - black;
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    const double signal = std::max(0.0, (frame.values[i] - black) / range / ratio);
    double v = signal;
    if (noise.shot_gain > 0.0) v += std::sqrt(signal / noise.shot_gain) * rng.normal();
    if (noise.read_sigma > 0.0) v += noise.read_sigma * rng.normal();
    const double dn = std::round(black + v * range);
    out.values[i] = static_cast<std::uint16_t>(std::clamp(dn, 0.0, static_cast<double>(frame.white_level)));
  }
  return out;
}

BurstPair make_burst(const SceneSpec& spec, int m, double ratio, const NoiseParams& noise,
                     std::uint16_t black_level, std::uint16_t white_level) {
  if (m < 1 || m > 16) throw std::invalid_argument("burst size must be in [1, 16]");
  BurstPair pair;
  pair.ground_truth = synth_scene(spec);
  Rng jitter(mix_seed(spec.seed, 0x6a177e12ULL));
  for (int i = 0; i < m; ++i) {
    int dx = 0, dy = 0;
    if (spec.jitter_pixels > 0) {
      dx = jitter.integer(-spec.jitter_pixels, spec.jitter_pixels);
      dy = jitter.integer(-spec.jitter_pixels, spec.jitter_pixels);
    }
    const raw::RgbImage shifted = (dx || dy) ? translate(pair.ground_truth, dx, dy) : pair.ground_truth;
    NoiseParams frame_noise = noise;
    frame_noise.seed = mix_seed(noise.seed, static_cast<std::uint64_t>(i));
    pair.frames.push_back(darken(mosaic(shifted, black_level, white_level), ratio, frame_noise));
  }
  return pair;
}

}  // namespace darkburst::sim
