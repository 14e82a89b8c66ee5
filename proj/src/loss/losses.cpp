// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "darkburst/ops.hpp"

namespace darkburst::loss {

namespace {

constexpr std::uint64_t kExtractorSeed = 0x5eed'c0de'f00dULL;
constexpr std::uint64_t kSamplingSeed = 0x0c0f'fee5ULL;

int level_channels(int level) { return std::min(16 << level, 64); }

// Extractor kernels, generated once in double and cast per precision.
struct ExtractorWeights {
  std::vector<Tensor64> kernels;  // 2 per level
  std::vector<Tensor64> biases;
};

const ExtractorWeights& extractor_weights() {
  static const ExtractorWeights weights = [] {
    ExtractorWeights w;
    std::mt19937_64 engine(kExtractorSeed);
    auto normal = [&engine]() {
      double u1 = 0.0;
      while (u1 <= 0.0) u1 = static_cast<double>(engine() >> 11) * 0x1.0p-53;
      const double u2 = static_cast<double>(engine() >> 11) * 0x1.0p-53;
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };
    std::size_t in = 3;
    for (int level = 0; level < kFeatureLevels; ++level) {
      const auto out = static_cast<std::size_t>(level_channels(level));
      for (int layer = 0; layer < 2; ++layer) {
        const std::size_t fan_in = (layer == 0 ? in : out) * 9;
        std::vector<double> k(out * fan_in);
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (auto& v : k) v = stddev * normal();
        w.kernels.emplace_back(Shape{out, layer == 0 ? in : out, 3, 3}, std::move(k));
        std::vector<double> b(out);
        for (auto& v : b) v = 0.05 * normal();
        w.biases.emplace_back(Shape{out}, std::move(b));
      }
      in = out;
    }
    return w;
  }();
  return weights;
}

template <typename T>
const std::vector<BasicTensor<T>>& extractor_kernels() {
  static const std::vector<BasicTensor<T>> k = [] {
    std::vector<BasicTensor<T>> v;
    for (const auto& t : extractor_weights().kernels) v.push_back(t.template cast<T>());
    return v;
  }();
  return k;
}

template <typename T>
const std::vector<BasicTensor<T>>& extractor_biases() {
  static const std::vector<BasicTensor<T>> b = [] {
    std::vector<BasicTensor<T>> v;
    for (const auto& t : extractor_weights().biases) v.push_back(t.template cast<T>());
    return v;
  }();
  return b;
}

void check_pair(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

// Forward state of the contextual statistic, kept for the backward pass.
struct CxState {
  std::size_t n = 0, c = 0;
  bool rows = true;
  std::vector<double> r_norm, s_norm;
  std::vector<double> cosine;   // n*n, [i*n + j]
  std::vector<double> dist;     // 1 - cosine
  std::vector<double> weight;   // w_ij
  std::vector<double> group_z;  // normalizer per group
  std::vector<double> group_min;
  std::vector<std::size_t> group_argmin;  // member index
  std::vector<std::size_t> column_argmax;  // i maximizing CX_ij for column j
  double value = 0.0;
};

// Group g / member m -> flat index, for row (g = i) or column (g = j) grouping.
inline std::size_t flat(const CxState& st, std::size_t g, std::size_t m) {
  return st.rows ? g * st.n + m : m * st.n + g;
}

template <typename T>
CxState cx_forward(const BasicTensor<T>& r, const BasicTensor<T>& s, const CxParams& params) {
  CxState st;
  st.n = r.dim(0);
  st.c = r.dim(1);
  st.rows = params.normalization == CxNormalization::Row;
  const std::size_t n = st.n, c = st.c;
  st.r_norm.resize(n);
  st.s_norm.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0, b = 0;
    for (std::size_t k = 0; k < c; ++k) {
      a += static_cast<double>(r.data()[i * c + k]) * r.data()[i * c + k];
      b += static_cast<double>(s.data()[i * c + k]) * s.data()[i * c + k];
    }
    st.r_norm[i] = std::sqrt(a);
    st.s_norm[i] = std::sqrt(b);
  }
  st.cosine.assign(n * n, 0.0);
  st.dist.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ri = r.data() + i * c;
    for (std::size_t j = 0; j < n; ++j) {
      double cs = 0.0;
      if (st.r_norm[i] > 0.0 && st.s_norm[j] > 0.0) {
        const T* sj = s.data() + j * c;
        double dot = 0.0;
        for (std::size_t k = 0; k < c; ++k) dot += static_cast<double>(ri[k]) * sj[k];
        cs = dot / (st.r_norm[i] * st.s_norm[j]);
      }
      st.cosine[i * n + j] = cs;
      st.dist[i * n + j] = 1.0 - cs;
    }
  }
  st.weight.resize(n * n);
  st.group_z.resize(n);
  st.group_min.resize(n);
  st.group_argmin.resize(n);
  for (std::size_t g = 0; g < n; ++g) {
    double mn = st.dist[flat(st, g, 0)];
    std::size_t arg = 0;
    for (std::size_t m = 1; m < n; ++m)
      if (st.dist[flat(st, g, m)] < mn) {
        mn = st.dist[flat(st, g, m)];
        arg = m;
      }
    st.group_min[g] = mn;
    st.group_argmin[g] = arg;
    double z = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const std::size_t e = flat(st, g, m);
      const double rel = st.dist[e] / (mn + params.epsilon);
      st.weight[e] = std::exp((1.0 - rel) / params.h);
      z += st.weight[e];
    }
    st.group_z[g] = z;
  }
  // CX_ij = w_ij / z_group(ij); max over i per column j.
  st.column_argmax.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double cx = st.weight[i * n + j] / st.group_z[st.rows ? i : j];
      if (cx > best) {
        best = cx;
        arg = i;
      }
    }
    st.column_argmax[j] = arg;
    total += best;
  }
  st.value = total / static_cast<double>(n);
  return st;
}

}  // namespace

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::L1: return "L1";
    case LossMode::L1Perceptual: return "L1+P";
    case LossMode::L1Contextual: return "L1+CX";
  }
  return "L1";
}

LossMode loss_mode_from_string(const std::string& name) {
  if (name == "L1") return LossMode::L1;
  if (name == "L1+P") return LossMode::L1Perceptual;
  if (name == "L1+CX") return LossMode::L1Contextual;
  throw std::invalid_argument("unknown loss mode '" + name + "' (expected L1, L1+P or L1+CX)");
}

std::vector<std::size_t> sample_positions(std::size_t area, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> all(area);
  std::iota(all.begin(), all.end(), 0);
  if (count == 0 || count >= area) return all;
  // Partial Fisher-Yates with a portable draw.
  std::mt19937_64 engine(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(engine() % (area - i));
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat) {
  check_pair(y.shape(), y_hat.shape(), "l1_loss");
  return mean_abs_diff(y_hat, y);
}

template <typename T>
std::vector<BasicTensor<T>> feature_extract(const BasicTensor<T>& image, std::span<const int> levels) {
  if (image.rank() != 4 || image.dim(1) != 3)
    throw ShapeError("feature_extract expects [N,3,H,W], got " + shape_str(image.shape()));
  int deepest = -1;
  for (int l : levels) {
    if (l < 0 || l >= kFeatureLevels)
      throw std::invalid_argument("feature level " + std::to_string(l) + " outside [0," +
                                  std::to_string(kFeatureLevels - 1) + "]");
    deepest = std::max(deepest, l);
  }
  const auto& kernels = extractor_kernels<T>();
  const auto& biases = extractor_biases<T>();
  std::vector<BasicTensor<T>> maps(static_cast<std::size_t>(deepest + 1));
  BasicTensor<T> x = image;
  for (int level = 0; level <= deepest; ++level) {
    if (level > 0) {
      if (x.dim(2) % 2 || x.dim(3) % 2 || x.dim(2) < 2 || x.dim(3) < 2)
        throw ShapeError("feature_extract: image too small for level " + std::to_string(level));
      x = max_pool2d(x);
    }
    const auto k = static_cast<std::size_t>(2 * level);
    x = leaky_relu(conv2d(x, kernels[k], biases[k], 1, 1));
    x = leaky_relu(conv2d(x, kernels[k + 1], biases[k + 1], 1, 1));
    maps[static_cast<std::size_t>(level)] = x;
  }
  std::vector<BasicTensor<T>> out;
  for (int l : levels) out.push_back(maps[static_cast<std::size_t>(l)]);
  return out;
}

template <typename T>
BasicTensor<T> cx_similarity(const BasicTensor<T>& r, const BasicTensor<T>& s, const CxParams& params) {
  if (r.rank() != 2 || s.rank() != 2 || r.shape() != s.shape())
    throw ShapeError("cx_similarity expects two equal [N,C] feature sets, got " + shape_str(r.shape()) +
                     " and " + shape_str(s.shape()));
  if (!(params.h > 0.0) || !(params.epsilon > 0.0))
    throw std::invalid_argument("contextual bandwidth and epsilon must be positive");
  auto st = std::make_shared<CxState>(cx_forward(r, s, params));
  const double value = st->value;
  return BasicTensor<T>::from_op(
      {1}, {static_cast<T>(value)}, {&r, &s},
      [r, s, st, params](std::span<const T> grad, GradSink<T>& sink) {
        const std::size_t n = st->n, c = st->c;
        const double gout = static_cast<double>(grad[0]) / static_cast<double>(n);
        // d/dCX_ij is gout on each column's winning entry.
        std::vector<double> g_dist(n * n, 0.0);
        for (std::size_t g = 0; g < n; ++g) {
          const double z = st->group_z[g];
          double weighted = 0.0;  // sum_m G_gm * CX_gm
          std::vector<double> gcx(n, 0.0);
          for (std::size_t m = 0; m < n; ++m) {
            const std::size_t e = flat(*st, g, m);
            const std::size_t i = e / n, j = e % n;
            if (st->column_argmax[j] == i) {
              gcx[m] = gout;
              weighted += gout * st->weight[e] / z;
            }
          }
          const double denom = st->group_min[g] + params.epsilon;
          double g_min = 0.0;
          for (std::size_t m = 0; m < n; ++m) {
            const std::size_t e = flat(*st, g, m);
            const double gw = (gcx[m] - weighted) / z;
            const double g_rel = gw * (-st->weight[e] / params.h);
            g_dist[e] += g_rel / denom;
            g_min -= g_rel * st->dist[e] / (denom * denom);
          }
          g_dist[flat(*st, g, st->group_argmin[g])] += g_min;
        }
        // d = 1 - cos; cos_ij = <r_i, s_j> / (|r_i| |s_j|).
        auto gr = sink.slot(r);
        auto gs = sink.slot(s);
        std::vector<double> acc(c);
        if (!gs.empty()) {
          for (std::size_t j = 0; j < n; ++j) {
            const double sn = st->s_norm[j];
            if (sn == 0.0) continue;
            std::fill(acc.begin(), acc.end(), 0.0);
            double self = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              const double rn = st->r_norm[i];
              if (rn == 0.0) continue;
              const double gc = -g_dist[i * n + j];
              if (gc == 0.0) continue;
              const double a = gc / (rn * sn);
              for (std::size_t k = 0; k < c; ++k) acc[k] += a * r.data()[i * c + k];
              self += gc * st->cosine[i * n + j];
            }
            for (std::size_t k = 0; k < c; ++k)
              gs[j * c + k] += static_cast<T>(acc[k] - self * s.data()[j * c + k] / (sn * sn));
          }
        }
        if (!gr.empty()) {
          for (std::size_t i = 0; i < n; ++i) {
            const double rn = st->r_norm[i];
            if (rn == 0.0) continue;
            std::fill(acc.begin(), acc.end(), 0.0);
            double self = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double sn = st->s_norm[j];
              if (sn == 0.0) continue;
              const double gc = -g_dist[i * n + j];
              if (gc == 0.0) continue;
              const double a = gc / (rn * sn);
              for (std::size_t k = 0; k < c; ++k) acc[k] += a * s.data()[j * c + k];
              self += gc * st->cosine[i * n + j];
            }
            for (std::size_t k = 0; k < c; ++k)
              gr[i * c + k] += static_cast<T>(acc[k] - self * r.data()[i * c + k] / (rn * rn));
          }
        }
      });
}

template <typename T>
BasicTensor<T> perceptual_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat,
                               std::span<const int> levels) {
  check_pair(y.shape(), y_hat.shape(), "perceptual_loss");
  if (levels.empty()) throw std::invalid_argument("perceptual_loss: no feature levels");
  std::vector<BasicTensor<T>> fy;
  {
    NoGradGuard guard;
    fy = feature_extract(y.detach(), levels);
  }
  auto fh = feature_extract(y_hat, levels);
  std::vector<BasicTensor<T>> terms;
  for (std::size_t l = 0; l < fy.size(); ++l) terms.push_back(mean_abs_diff(fh[l], fy[l]));
  return add_n(std::span<const BasicTensor<T>>(terms));
}

template <typename T>
BasicTensor<T> contextual_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat,
                               std::span<const int> levels, const CxParams& params,
                               std::size_t max_positions) {
  check_pair(y.shape(), y_hat.shape(), "contextual_loss");
  if (levels.empty()) throw std::invalid_argument("contextual_loss: no feature levels");
  std::vector<BasicTensor<T>> fy;
  {
    NoGradGuard guard;
    fy = feature_extract(y.detach(), levels);
  }
  auto fh = feature_extract(y_hat, levels);
  const std::size_t batch = y.dim(0);
  std::vector<BasicTensor<T>> terms;
  for (std::size_t l = 0; l < fy.size(); ++l) {
    const std::size_t area = fy[l].dim(2) * fy[l].dim(3);
    const auto positions = sample_positions(area, max_positions, kSamplingSeed + static_cast<std::uint64_t>(levels[l]));
    for (std::size_t b = 0; b < batch; ++b) {
      BasicTensor<T> r, s;
      {
        NoGradGuard guard;
        r = gather_positions(batch_item(fy[l], b), positions);
      }
      s = gather_positions(batch_item(fh[l], b), positions);
      auto cx = cx_similarity(r, s, params);
      // -log(cx), as an op so the gradient is -1/cx.
      const T v = cx.item();
      terms.push_back(BasicTensor<T>::from_op(
          {1}, {static_cast<T>(-std::log(static_cast<double>(v)))}, {&cx},
          [cx, v](std::span<const T> g, GradSink<T>& sink) { sink.slot(cx)[0] -= g[0] / v; }));
    }
  }
  auto total = add_n(std::span<const BasicTensor<T>>(terms));
  return scale(total, T(1) / static_cast<T>(batch));
}

template <typename T>
BasicTensor<T> hybrid_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat, const LossConfig& config) {
  auto pixel = l1_loss(y, y_hat);
  if (config.mode == LossMode::L1) return pixel;
  BasicTensor<T> feature = config.mode == LossMode::L1Perceptual
                               ? perceptual_loss(y, y_hat, std::span<const int>(config.levels))
                               : contextual_loss(y, y_hat, std::span<const int>(config.levels), config.cx,
                                                 config.max_positions);
  const BasicTensor<T> parts[2] = {scale(pixel, static_cast<T>(config.pixel_weight)),
                                   scale(feature, static_cast<T>(config.feature_weight))};
  return add_n(std::span<const BasicTensor<T>>(parts));
}

#define DARKBURST_INSTANTIATE_LOSSES(T)                                                              \
  template BasicTensor<T> l1_loss(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template std::vector<BasicTensor<T>> feature_extract(const BasicTensor<T>&, std::span<const int>); \
  template BasicTensor<T> cx_similarity(const BasicTensor<T>&, const BasicTensor<T>&, const CxParams&); \
  template BasicTensor<T> perceptual_loss(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                          std::span<const int>);                                     \
  template BasicTensor<T> contextual_loss(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                          std::span<const int>, const CxParams&, std::size_t);       \
  template BasicTensor<T> hybrid_loss(const BasicTensor<T>&, const BasicTensor<T>&, const LossConfig&);

DARKBURST_INSTANTIATE_LOSSES(float)
DARKBURST_INSTANTIATE_LOSSES(double)

}  // namespace darkburst::loss
