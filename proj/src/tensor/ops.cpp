// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace darkburst {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t rank, const char* op) {
  require(t.defined() && t.rank() == rank,
          std::string(op) + ": expected rank " + std::to_string(rank) + " tensor, got " +
              (t.defined() ? shape_str(t.shape()) : std::string("undefined")));
}

template <typename T>
void require_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  require(a.defined() && b.defined() && a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
}

// Geometry of a strided, zero-padded correlation x[N,C,H,W] * w[F,C,KH,KW].
struct ConvGeom {
  long n, c, h, w, f, kh, kw, oh, ow, stride, pad;
};

// Output columns ox with 0 <= ox*stride + kx - pad < w.
inline std::pair<long, long> col_range(const ConvGeom& g, long kx) {
  long a = g.pad - kx;
  long lo = a <= 0 ? 0 : (a + g.stride - 1) / g.stride;
  long b = g.w - 1 + g.pad - kx;
  if (b < 0) return {0, -1};
  long hi = std::min(g.ow - 1, b / g.stride);
  return {lo, hi};
}

// y += conv(x, w)
template <typename T>
void conv_accumulate(const T* x, const T* w, T* y, const ConvGeom& g) {
  for (long n = 0; n < g.n; ++n) {
    for (long f = 0; f < g.f; ++f) {
      T* yp = y + (n * g.f + f) * g.oh * g.ow;
      for (long c = 0; c < g.c; ++c) {
        const T* xp = x + (n * g.c + c) * g.h * g.w;
        const T* wp = w + (f * g.c + c) * g.kh * g.kw;
        for (long ky = 0; ky < g.kh; ++ky) {
          for (long kx = 0; kx < g.kw; ++kx) {
            const T wv = wp[ky * g.kw + kx];
            auto [lo, hi] = col_range(g, kx);
            for (long oy = 0; oy < g.oh; ++oy) {
              long iy = oy * g.stride + ky - g.pad;
              if (iy < 0 || iy >= g.h) continue;
              const T* xr = xp + iy * g.w + (kx - g.pad);
              T* yr = yp + oy * g.ow;
              if (g.stride == 1) {
                for (long ox = lo; ox <= hi; ++ox) yr[ox] += wv * xr[ox];
              } else {
                for (long ox = lo; ox <= hi; ++ox) yr[ox] += wv * xr[ox * g.stride];
              }
            }
          }
        }
      }
    }
  }
}

// gx += conv^T(gy, w)
template <typename T>
void conv_input_grad(const T* gy, const T* w, T* gx, const ConvGeom& g) {
  for (long n = 0; n < g.n; ++n) {
    for (long c = 0; c < g.c; ++c) {
      T* gxp = gx + (n * g.c + c) * g.h * g.w;
      for (long f = 0; f < g.f; ++f) {
        const T* gyp = gy + (n * g.f + f) * g.oh * g.ow;
        const T* wp = w + (f * g.c + c) * g.kh * g.kw;
        for (long ky = 0; ky < g.kh; ++ky) {
          for (long kx = 0; kx < g.kw; ++kx) {
            const T wv = wp[ky * g.kw + kx];
            auto [lo, hi] = col_range(g, kx);
            for (long oy = 0; oy < g.oh; ++oy) {
              long iy = oy * g.stride + ky - g.pad;
              if (iy < 0 || iy >= g.h) continue;
              T* xr = gxp + iy * g.w + (kx - g.pad);
              const T* yr = gyp + oy * g.ow;
              if (g.stride == 1) {
                for (long ox = lo; ox <= hi; ++ox) xr[ox] += wv * yr[ox];
              } else {
                for (long ox = lo; ox <= hi; ++ox) xr[ox * g.stride] += wv * yr[ox];
              }
            }
          }
        }
      }
    }
  }
}

// gw += sum_n gy (x) x
template <typename T>
void conv_weight_grad(const T* x, const T* gy, T* gw, const ConvGeom& g) {
  for (long f = 0; f < g.f; ++f) {
    for (long c = 0; c < g.c; ++c) {
      T* gwp = gw + (f * g.c + c) * g.kh * g.kw;
      for (long ky = 0; ky < g.kh; ++ky) {
        for (long kx = 0; kx < g.kw; ++kx) {
          auto [lo, hi] = col_range(g, kx);
          T acc = 0;
          for (long n = 0; n < g.n; ++n) {
            const T* xp = x + (n * g.c + c) * g.h * g.w;
            const T* gyp = gy + (n * g.f + f) * g.oh * g.ow;
            for (long oy = 0; oy < g.oh; ++oy) {
              long iy = oy * g.stride + ky - g.pad;
              if (iy < 0 || iy >= g.h) continue;
              const T* xr = xp + iy * g.w + (kx - g.pad);
              const T* yr = gyp + oy * g.ow;
              if (g.stride == 1) {
                for (long ox = lo; ox <= hi; ++ox) acc += yr[ox] * xr[ox];
              } else {
                for (long ox = lo; ox <= hi; ++ox) acc += yr[ox] * xr[ox * g.stride];
              }
            }
          }
          gwp[ky * g.kw + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void bias_grad(std::span<const T> g, std::span<T> gb, long n, long f, long plane) {
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < f; ++j) {
      const T* p = g.data() + (i * f + j) * plane;
      T acc = 0;
      for (long k = 0; k < plane; ++k) acc += p[k];
      gb[j] += acc;
    }
}

template <typename T>
void check_bias(const BasicTensor<T>& bias, std::size_t channels, const char* op) {
  if (!bias.defined()) return;
  require(bias.rank() == 1 && bias.dim(0) == channels,
          std::string(op) + ": bias " + shape_str(bias.shape()) + " does not match " +
              std::to_string(channels) + " output channels");
}

// Half-pixel bilinear taps along one axis.
template <typename T>
struct Taps {
  std::vector<std::size_t> i0, i1;
  std::vector<T> w0, w1;
};

template <typename T>
Taps<T> bilinear_taps(std::size_t in, std::size_t out) {
  Taps<T> t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.w0.resize(out);
  t.w1.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    double base = std::floor(src);
    double frac = src - base;
    long a = static_cast<long>(base);
    long b = a + 1;
    long last = static_cast<long>(in) - 1;
    t.i0[o] = static_cast<std::size_t>(std::clamp(a, 0L, last));
    t.i1[o] = static_cast<std::size_t>(std::clamp(b, 0L, last));
    t.w0[o] = static_cast<T>(1.0 - frac);
    t.w1[o] = static_cast<T>(frac);
  }
  return t;
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias, int stride, int padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  require(stride >= 1 && padding >= 0, "conv2d: stride must be >= 1 and padding >= 0");
  require(input.dim(1) == kernel.dim(1), "conv2d: input has " + std::to_string(input.dim(1)) +
                                             " channels but kernel expects " +
                                             std::to_string(kernel.dim(1)));
  ConvGeom g{};
  g.n = static_cast<long>(input.dim(0));
  g.c = static_cast<long>(input.dim(1));
  g.h = static_cast<long>(input.dim(2));
  g.w = static_cast<long>(input.dim(3));
  g.f = static_cast<long>(kernel.dim(0));
  g.kh = static_cast<long>(kernel.dim(2));
  g.kw = static_cast<long>(kernel.dim(3));
  g.stride = stride;
  g.pad = padding;
  require(g.h + 2 * g.pad >= g.kh && g.w + 2 * g.pad >= g.kw,
          "conv2d: kernel larger than padded input");
  g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  check_bias(bias, kernel.dim(0), "conv2d");

  const long plane = g.oh * g.ow;
  std::vector<T> out(static_cast<std::size_t>(g.n * g.f * plane), T(0));
  if (bias.defined()) {
    auto b = bias.values();
    for (long n = 0; n < g.n; ++n)
      for (long f = 0; f < g.f; ++f)
        std::fill_n(out.begin() + (n * g.f + f) * plane, plane, b[f]);
  }
  conv_accumulate(input.data(), kernel.data(), out.data(), g);

  Shape shape{input.dim(0), kernel.dim(0), static_cast<std::size_t>(g.oh),
              static_cast<std::size_t>(g.ow)};
  return BasicTensor<T>::from_op(
      std::move(shape), std::move(out), {&input, &kernel, &bias},
      [input, kernel, bias, g, plane](std::span<const T> grad, GradSink<T>& sink) {
        if (auto gx = sink.slot(input); !gx.empty())
          conv_input_grad(grad.data(), kernel.data(), gx.data(), g);
        if (auto gw = sink.slot(kernel); !gw.empty())
          conv_weight_grad(input.data(), grad.data(), gw.data(), g);
        if (bias.defined())
          if (auto gb = sink.slot(bias); !gb.empty()) bias_grad(grad, gb, g.n, g.f, plane);
      });
}

template <typename T>
BasicTensor<T> transpose_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                                const BasicTensor<T>& bias, int stride, int padding) {
  require_rank(input, 4, "transpose_conv2d input");
  require_rank(kernel, 4, "transpose_conv2d kernel");
  require(stride >= 1 && padding >= 0, "transpose_conv2d: stride must be >= 1 and padding >= 0");
  require(input.dim(1) == kernel.dim(0), "transpose_conv2d: input has " +
                                             std::to_string(input.dim(1)) +
                                             " channels but kernel expects " +
                                             std::to_string(kernel.dim(0)));
  const long out_h = (static_cast<long>(input.dim(2)) - 1) * stride - 2 * padding +
                     static_cast<long>(kernel.dim(2));
  const long out_w = (static_cast<long>(input.dim(3)) - 1) * stride - 2 * padding +
                     static_cast<long>(kernel.dim(3));
  require(out_h > 0 && out_w > 0, "transpose_conv2d: empty output");
  check_bias(bias, kernel.dim(1), "transpose_conv2d");

  // The forward conv this op is the adjoint of: output-shaped x -> input-shaped y.
  ConvGeom g{};
  g.n = static_cast<long>(input.dim(0));
  g.c = static_cast<long>(kernel.dim(1));
  g.h = out_h;
  g.w = out_w;
  g.f = static_cast<long>(kernel.dim(0));
  g.kh = static_cast<long>(kernel.dim(2));
  g.kw = static_cast<long>(kernel.dim(3));
  g.oh = static_cast<long>(input.dim(2));
  g.ow = static_cast<long>(input.dim(3));
  g.stride = stride;
  g.pad = padding;

  const long plane = out_h * out_w;
  std::vector<T> out(static_cast<std::size_t>(g.n * g.c * plane), T(0));
  if (bias.defined()) {
    auto b = bias.values();
    for (long n = 0; n < g.n; ++n)
      for (long c = 0; c < g.c; ++c)
        std::fill_n(out.begin() + (n * g.c + c) * plane, plane, b[c]);
  }
  conv_input_grad(input.data(), kernel.data(), out.data(), g);

  Shape shape{input.dim(0), kernel.dim(1), static_cast<std::size_t>(out_h),
              static_cast<std::size_t>(out_w)};
  return BasicTensor<T>::from_op(
      std::move(shape), std::move(out), {&input, &kernel, &bias},
      [input, kernel, bias, g, plane](std::span<const T> grad, GradSink<T>& sink) {
        if (auto gx = sink.slot(input); !gx.empty())
          conv_accumulate(grad.data(), kernel.data(), gx.data(), g);
        if (auto gw = sink.slot(kernel); !gw.empty())
          conv_weight_grad(grad.data(), input.data(), gw.data(), g);
        if (bias.defined())
          if (auto gb = sink.slot(bias); !gb.empty()) bias_grad(grad, gb, g.n, g.c, plane);
      });
}

template <typename T>
BasicTensor<T> set_max(std::span<const BasicTensor<T>> frames) {
  return set_max(frames, std::span<const SpatialMask>{});
}

template <typename T>
BasicTensor<T> set_max(std::span<const BasicTensor<T>> frames,
                       std::span<const SpatialMask> valid) {
  require(!frames.empty(), "set_max: empty frame set");
  for (const auto& f : frames) require_same(frames[0], f, "set_max");
  const bool masked = !valid.empty();
  if (frames.size() == 1) return frames[0];

  const Shape& shape = frames[0].shape();
  std::size_t positions = 1, channels = 1, batch = shape[0];
  if (shape.size() >= 2) channels = shape[1];
  for (std::size_t d = 2; d < shape.size(); ++d) positions *= shape[d];
  if (masked) {
    require(valid.size() == frames.size(), "set_max: one mask per frame required");
    for (const auto& m : valid)
      require(m.size() == batch * positions, "set_max: mask size does not match frame layout");
  }

  const std::size_t total = frames[0].size();
  std::vector<T> out(total);
  std::vector<std::uint16_t> winner(total);
  for (std::size_t e = 0; e < total; ++e) {
    const std::size_t p = (e / (channels * positions)) * positions + e % positions;
    bool found = false;
    T best{};
    std::uint16_t arg = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      if (masked && !valid[f][p]) continue;
      T v = frames[f].data()[e];
      if (!found || v > best) {
        best = v;
        arg = static_cast<std::uint16_t>(f);
        found = true;
      }
    }
    if (!found) {
      for (std::size_t f = 0; f < frames.size(); ++f) {
        T v = frames[f].data()[e];
        if (f == 0 || v > best) {
          best = v;
          arg = static_cast<std::uint16_t>(f);
        }
      }
    }
    // + 0 folds -0 into +0 so signed-zero ties cannot expose input order.
    out[e] = best + T(0);
    winner[e] = arg;
  }

  std::vector<BasicTensor<T>> inputs(frames.begin(), frames.end());
  return BasicTensor<T>::from_op(
      shape, std::move(out), frames,
      [inputs, winner = std::move(winner)](std::span<const T> grad, GradSink<T>& sink) {
        std::vector<std::span<T>> slots;
        slots.reserve(inputs.size());
        for (const auto& in : inputs) slots.push_back(sink.slot(in));
        for (std::size_t e = 0; e < grad.size(); ++e) {
          auto& s = slots[winner[e]];
          if (!s.empty()) s[e] += grad[e];
        }
      });
}

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, T slope) {
  std::vector<T> out(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : slope * xv[i];
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {&x},
                                 [x, slope](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   auto xv = x.values();
                                   for (std::size_t i = 0; i < g.size(); ++i)
                                     gx[i] += xv[i] > T(0) ? g[i] : slope * g[i];
                                 });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  std::vector<T> out(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    T v = xv[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  BasicTensor<T> result = BasicTensor<T>::from_op(x.shape(), out, {&x}, nullptr);
  if (!result.tracked()) return result;
  std::vector<T> y = std::move(out);
  result.node()->backward = [x, y = std::move(y)](std::span<const T> g, GradSink<T>& sink) {
    auto gx = sink.slot(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
  };
  return result;
}

template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& x, T lo, T hi) {
  std::vector<T> out(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(xv[i], lo, hi);
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {&x},
                                 [x, lo, hi](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   auto xv = x.values();
                                   for (std::size_t i = 0; i < g.size(); ++i)
                                     if (xv[i] >= lo && xv[i] <= hi) gx[i] += g[i];
                                 });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same(a, b, "add");
  std::vector<T> out(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return BasicTensor<T>::from_op(a.shape(), std::move(out), {&a, &b},
                                 [a, b](std::span<const T> g, GradSink<T>& sink) {
                                   if (auto ga = sink.slot(a); !ga.empty())
                                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                                   if (auto gb = sink.slot(b); !gb.empty())
                                     for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                                 });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same(a, b, "sub");
  std::vector<T> out(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return BasicTensor<T>::from_op(a.shape(), std::move(out), {&a, &b},
                                 [a, b](std::span<const T> g, GradSink<T>& sink) {
                                   if (auto ga = sink.slot(a); !ga.empty())
                                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                                   if (auto gb = sink.slot(b); !gb.empty())
                                     for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                                 });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same(a, b, "mul");
  std::vector<T> out(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return BasicTensor<T>::from_op(a.shape(), std::move(out), {&a, &b},
                                 [a, b](std::span<const T> g, GradSink<T>& sink) {
                                   auto av = a.values(), bv = b.values();
                                   if (auto ga = sink.slot(a); !ga.empty())
                                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                                   if (auto gb = sink.slot(b); !gb.empty())
                                     for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                                 });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor) {
  std::vector<T> out(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {&x},
                                 [x, factor](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
                                 });
}

template <typename T>
BasicTensor<T> add_n(std::span<const BasicTensor<T>> terms) {
  require(!terms.empty(), "add_n: no terms");
  for (const auto& t : terms) require_same(terms[0], t, "add_n");
  std::vector<T> out(terms[0].size(), T(0));
  for (const auto& t : terms) {
    auto v = t.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  std::vector<BasicTensor<T>> inputs(terms.begin(), terms.end());
  return BasicTensor<T>::from_op(terms[0].shape(), std::move(out), terms,
                                 [inputs](std::span<const T> g, GradSink<T>& sink) {
                                   for (const auto& t : inputs)
                                     if (auto gt = sink.slot(t); !gt.empty())
                                       for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
                                 });
}

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>> parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& ref = parts[0].shape();
  require(axis < ref.size(), "concat: axis " + std::to_string(axis) + " out of range for " +
                                 shape_str(ref));
  std::size_t total_axis = 0;
  for (const auto& p : parts) {
    require(p.rank() == ref.size(), "concat: rank mismatch");
    for (std::size_t d = 0; d < ref.size(); ++d)
      if (d != axis)
        require(p.dim(d) == ref[d], "concat: shape mismatch " + shape_str(ref) + " vs " +
                                        shape_str(p.shape()) + " off axis " +
                                        std::to_string(axis));
    total_axis += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
  Shape shape = ref;
  shape[axis] = total_axis;

  std::vector<T> out(shape_numel(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t chunk = p.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(p.data() + o * chunk, chunk, out.begin() + o * total_axis * inner + offset);
    offset += chunk;
  }
  std::vector<BasicTensor<T>> inputs(parts.begin(), parts.end());
  const std::size_t row = total_axis * inner;
  return BasicTensor<T>::from_op(
      std::move(shape), std::move(out), parts,
      [inputs, offsets, outer, inner, row, axis](std::span<const T> g, GradSink<T>& sink) {
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          auto gp = sink.slot(inputs[k]);
          if (gp.empty()) continue;
          const std::size_t chunk = inputs[k].dim(axis) * inner;
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < chunk; ++i) gp[o * chunk + i] += g[o * row + offsets[k] + i];
        }
      });
}

template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& x) {
  require_rank(x, 4, "max_pool2d");
  require(x.dim(2) % 2 == 0 && x.dim(3) % 2 == 0,
          "max_pool2d: spatial extents must be even, got " + shape_str(x.shape()));
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<T> out(planes * oh * ow);
  std::vector<std::uint32_t> src(out.size());
  const T* xv = x.data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        std::size_t base = p * h * w + 2 * y * w + 2 * xx;
        std::size_t taps[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = taps[0];
        for (int k = 1; k < 4; ++k)
          if (xv[taps[k]] > xv[best]) best = taps[k];
        std::size_t o = (p * oh + y) * ow + xx;
        out[o] = xv[best];
        src[o] = static_cast<std::uint32_t>(best);
      }
  return BasicTensor<T>::from_op({x.dim(0), x.dim(1), oh, ow}, std::move(out), {&x},
                                 [x, src = std::move(src)](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (std::size_t i = 0; i < g.size(); ++i) gx[src[i]] += g[i];
                                 });
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  require_rank(x, 4, "global_avg_pool");
  const std::size_t planes = x.dim(0) * x.dim(1), area = x.dim(2) * x.dim(3);
  std::vector<T> out(planes);
  for (std::size_t p = 0; p < planes; ++p) {
    T acc = 0;
    for (std::size_t i = 0; i < area; ++i) acc += x.data()[p * area + i];
    out[p] = acc / static_cast<T>(area);
  }
  return BasicTensor<T>::from_op({x.dim(0), x.dim(1), 1, 1}, std::move(out), {&x},
                                 [x, planes, area](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (std::size_t p = 0; p < planes; ++p) {
                                     T v = g[p] / static_cast<T>(area);
                                     for (std::size_t i = 0; i < area; ++i) gx[p * area + i] += v;
                                   }
                                 });
}

template <typename T>
BasicTensor<T> bilinear_resize(const BasicTensor<T>& x, Resize factor) {
  require_rank(x, 4, "bilinear_resize");
  const std::size_t h = x.dim(2), w = x.dim(3);
  std::size_t oh = 0, ow = 0;
  if (factor == Resize::Half) {
    require(h % 2 == 0 && w % 2 == 0,
            "bilinear_resize: halving needs even extents, got " + shape_str(x.shape()));
    oh = h / 2;
    ow = w / 2;
  } else {
    oh = h * 2;
    ow = w * 2;
  }
  auto ty = bilinear_taps<T>(h, oh);
  auto tx = bilinear_taps<T>(w, ow);
  const std::size_t planes = x.dim(0) * x.dim(1);
  std::vector<T> out(planes * oh * ow);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* xp = x.data() + p * h * w;
    T* yp = out.data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const T* r0 = xp + ty.i0[oy] * w;
      const T* r1 = xp + ty.i1[oy] * w;
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T top = tx.w0[ox] * r0[tx.i0[ox]] + tx.w1[ox] * r0[tx.i1[ox]];
        T bot = tx.w0[ox] * r1[tx.i0[ox]] + tx.w1[ox] * r1[tx.i1[ox]];
        yp[oy * ow + ox] = ty.w0[oy] * top + ty.w1[oy] * bot;
      }
    }
  }
  return BasicTensor<T>::from_op(
      {x.dim(0), x.dim(1), oh, ow}, std::move(out), {&x},
      [x, ty, tx, planes, h, w, oh, ow](std::span<const T> g, GradSink<T>& sink) {
        auto gx = sink.slot(x);
        for (std::size_t p = 0; p < planes; ++p) {
          T* xp = gx.data() + p * h * w;
          const T* gp = g.data() + p * oh * ow;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            T* r0 = xp + ty.i0[oy] * w;
            T* r1 = xp + ty.i1[oy] * w;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              T v = gp[oy * ow + ox];
              T a = ty.w0[oy] * v, b = ty.w1[oy] * v;
              r0[tx.i0[ox]] += tx.w0[ox] * a;
              r0[tx.i1[ox]] += tx.w1[ox] * a;
              r1[tx.i0[ox]] += tx.w0[ox] * b;
              r1[tx.i1[ox]] += tx.w1[ox] * b;
            }
          }
        }
      });
}

template <typename T>
BasicTensor<T> depth_to_space(const BasicTensor<T>& x, std::size_t block) {
  require_rank(x, 4, "depth_to_space");
  require(block >= 1 && x.dim(1) % (block * block) == 0,
          "depth_to_space: channels " + std::to_string(x.dim(1)) + " not divisible by block^2");
  const std::size_t n = x.dim(0), c = x.dim(1) / (block * block), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h * block, ow = w * block;
  // Index map: output element -> input element.
  std::vector<std::uint32_t> src(n * c * oh * ow);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t dy = oy % block, dx = ox % block;
          std::size_t in_c = (dy * block + dx) * c + ch;
          src[((i * c + ch) * oh + oy) * ow + ox] = static_cast<std::uint32_t>(
              ((i * x.dim(1) + in_c) * h + oy / block) * w + ox / block);
        }
  std::vector<T> out(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) out[k] = x.data()[src[k]];
  return BasicTensor<T>::from_op({n, c, oh, ow}, std::move(out), {&x},
                                 [x, src = std::move(src)](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (std::size_t k = 0; k < g.size(); ++k) gx[src[k]] += g[k];
                                 });
}

template <typename T>
BasicTensor<T> scale_channels(const BasicTensor<T>& x, const BasicTensor<T>& gates) {
  require_rank(x, 4, "scale_channels");
  require(gates.defined() && gates.shape() == Shape{x.dim(0), x.dim(1), 1, 1},
          "scale_channels: gates must be [N,C,1,1] for " + shape_str(x.shape()));
  const std::size_t planes = x.dim(0) * x.dim(1), area = x.dim(2) * x.dim(3);
  std::vector<T> out(x.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const T s = gates.data()[p];
    for (std::size_t i = 0; i < area; ++i) out[p * area + i] = x.data()[p * area + i] * s;
  }
  return BasicTensor<T>::from_op(
      x.shape(), std::move(out), {&x, &gates},
      [x, gates, planes, area](std::span<const T> g, GradSink<T>& sink) {
        if (auto gx = sink.slot(x); !gx.empty())
          for (std::size_t p = 0; p < planes; ++p) {
            const T s = gates.data()[p];
            for (std::size_t i = 0; i < area; ++i) gx[p * area + i] += g[p * area + i] * s;
          }
        if (auto gg = sink.slot(gates); !gg.empty())
          for (std::size_t p = 0; p < planes; ++p) {
            T acc = 0;
            for (std::size_t i = 0; i < area; ++i) acc += g[p * area + i] * x.data()[p * area + i];
            gg[p] += acc;
          }
      });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
  T acc = 0;
  for (T v : x.values()) acc += v;
  return BasicTensor<T>::from_op({1}, {acc}, {&x},
                                 [x](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (auto& v : gx) v += g[0];
                                 });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x) {
  T acc = 0;
  for (T v : x.values()) acc += v;
  const T n = static_cast<T>(x.size());
  return BasicTensor<T>::from_op({1}, {acc / n}, {&x},
                                 [x, n](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (auto& v : gx) v += g[0] / n;
                                 });
}

template <typename T>
BasicTensor<T> mean_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same(a, b, "mean_abs_diff");
  double acc = 0;
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) acc += std::abs(static_cast<double>(av[i]) - bv[i]);
  const T n = static_cast<T>(a.size());
  return BasicTensor<T>::from_op(
      {1}, {static_cast<T>(acc / static_cast<double>(a.size()))}, {&a, &b},
      [a, b, n](std::span<const T> g, GradSink<T>& sink) {
        auto av = a.values(), bv = b.values();
        auto ga = sink.slot(a), gb = sink.slot(b);
        const T s = g[0] / n;
        for (std::size_t i = 0; i < av.size(); ++i) {
          T d = av[i] - bv[i];
          T sign = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
          if (!ga.empty()) ga[i] += sign * s;
          if (!gb.empty()) gb[i] -= sign * s;
        }
      });
}

template <typename T>
BasicTensor<T> batch_item(const BasicTensor<T>& x, std::size_t n) {
  require(x.defined() && x.rank() >= 1 && n < x.dim(0), "batch_item: index out of range");
  const std::size_t stride = x.size() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = 1;
  std::vector<T> out(x.data() + n * stride, x.data() + (n + 1) * stride);
  return BasicTensor<T>::from_op(std::move(shape), std::move(out), {&x},
                                 [x, n, stride](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (std::size_t i = 0; i < stride; ++i) gx[n * stride + i] += g[i];
                                 });
}

template <typename T>
BasicTensor<T> gather_positions(const BasicTensor<T>& x, std::span<const std::size_t> positions) {
  require_rank(x, 4, "gather_positions");
  require(x.dim(0) == 1, "gather_positions: expects a single batch item");
  require(!positions.empty(), "gather_positions: no positions");
  const std::size_t c = x.dim(1), area = x.dim(2) * x.dim(3);
  std::vector<T> out(positions.size() * c);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    require(positions[k] < area, "gather_positions: position out of range");
    for (std::size_t ch = 0; ch < c; ++ch) out[k * c + ch] = x.data()[ch * area + positions[k]];
  }
  std::vector<std::size_t> pos(positions.begin(), positions.end());
  return BasicTensor<T>::from_op({positions.size(), c}, std::move(out), {&x},
                                 [x, pos = std::move(pos), c, area](std::span<const T> g,
                                                                    GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (std::size_t k = 0; k < pos.size(); ++k)
                                     for (std::size_t ch = 0; ch < c; ++ch)
                                       gx[ch * area + pos[k]] += g[k * c + ch];
                                 });
}

template <typename T>
BasicTensor<T> apply_mask(const BasicTensor<T>& x, std::span<const T> mask) {
  require(mask.size() == x.size(), "apply_mask: mask size mismatch");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * mask[i];
  std::vector<T> m(mask.begin(), mask.end());
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {&x},
                                 [x, m = std::move(m)](std::span<const T> g, GradSink<T>& sink) {
                                   auto gx = sink.slot(x);
                                   for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * m[i];
                                 });
}

#define DARKBURST_INSTANTIATE_OPS(T)                                                              \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                 const BasicTensor<T>&, int, int);                               \
  template BasicTensor<T> transpose_conv2d(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                           const BasicTensor<T>&, int, int);                     \
  template BasicTensor<T> set_max(std::span<const BasicTensor<T>>);                              \
  template BasicTensor<T> set_max(std::span<const BasicTensor<T>>, std::span<const SpatialMask>); \
  template BasicTensor<T> leaky_relu(const BasicTensor<T>&, T);                                  \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                        \
  template BasicTensor<T> clamp(const BasicTensor<T>&, T, T);                                    \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                       \
  template BasicTensor<T> add_n(std::span<const BasicTensor<T>>);                                \
  template BasicTensor<T> concat(std::span<const BasicTensor<T>>, std::size_t);                  \
  template BasicTensor<T> max_pool2d(const BasicTensor<T>&);                                     \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                                \
  template BasicTensor<T> bilinear_resize(const BasicTensor<T>&, Resize);                        \
  template BasicTensor<T> depth_to_space(const BasicTensor<T>&, std::size_t);                    \
  template BasicTensor<T> scale_channels(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                            \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                           \
  template BasicTensor<T> mean_abs_diff(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template BasicTensor<T> batch_item(const BasicTensor<T>&, std::size_t);                        \
  template BasicTensor<T> gather_positions(const BasicTensor<T>&, std::span<const std::size_t>); \
  template BasicTensor<T> apply_mask(const BasicTensor<T>&, std::span<const T>);

DARKBURST_INSTANTIATE_OPS(float)
DARKBURST_INSTANTIATE_OPS(double)

}  // namespace darkburst
