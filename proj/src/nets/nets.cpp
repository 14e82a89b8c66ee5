// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/nets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace darkburst::nets {

void ArchConfig::validate() const {
  if (base_filters < 1) throw std::invalid_argument("base_filters must be >= 1");
  if (encoder_levels < 2) throw std::invalid_argument("encoder_levels must be >= 2");
  if (encoder_levels > 10) throw std::invalid_argument("encoder_levels must be <= 10");
  if (residual_blocks < 0) throw std::invalid_argument("residual_blocks must be >= 0");
  if (fusion_start < 0) throw std::invalid_argument("fusion_start must be >= 0");
  if (use_se && use_residual) {
    if (se_reduction < 1) throw std::invalid_argument("se_reduction must be >= 1");
    if (filters(encoder_levels - 1) % se_reduction != 0)
      throw std::invalid_argument("bottleneck channels " + std::to_string(filters(encoder_levels - 1)) +
                                  " not divisible by se_reduction " + std::to_string(se_reduction));
  }
}

template <typename T>
void ParamStore<T>::add(std::string name, BasicTensor<T> tensor) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_[name] = tensors_.size();
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(tensor));
}

template <typename T>
const BasicTensor<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return tensors_[it->second];
}

template <typename T>
std::size_t ParamStore<T>::scalar_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i].rfind(prefix, 0) == 0) n += tensors_[i].size();
  return n;
}

template class ParamStore<float>;
template class ParamStore<double>;

namespace {

class Initializer {
 public:
  Initializer(NetParams& store, std::uint64_t seed) : store_(store), engine_(seed) {}

  /// `gain` multiplies the He standard deviation.
  void conv(const std::string& name, std::size_t out, std::size_t in, std::size_t k, double gain = 1.0,
            float bias_value = 0.0f) {
    kernel(name + ".w", {out, in, k, k}, in * k * k, gain);
    bias(name + ".b", out, bias_value);
  }
  // Transposed 2x2 stride-2 kernel: every output pixel sees one tap per input
  // channel. No rectifier follows, so unit gain.
  void up(const std::string& name, std::size_t in, std::size_t out) {
    kernel(name + ".w", {in, out, 2, 2}, in, std::sqrt(0.5));
    bias(name + ".b", out);
  }

 private:
  void kernel(const std::string& name, Shape shape, std::size_t fan_in, double gain = 1.0) {
    const double stddev = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<float> v(shape_numel(shape));
    for (auto& x : v) x = static_cast<float>(stddev * normal());
    store_.add(name, Tensor::parameter(std::move(shape), std::move(v)));
  }
  void bias(const std::string& name, std::size_t n, float value = 0.0f) {
    store_.add(name, Tensor::parameter({n}, std::vector<float>(n, value)));
  }
  double normal() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  NetParams& store_;
  std::mt19937_64 engine_;
};

void init_unet(Initializer& init, const ArchConfig& c, const std::string& net, std::size_t in,
               std::size_t head_out, bool residual, float head_bias) {
  const int levels = c.encoder_levels;
  std::size_t prev = in;
  for (int k = 0; k < levels; ++k) {
    const auto f = static_cast<std::size_t>(c.filters(k));
    const std::string p = net + ".enc" + std::to_string(k);
    init.conv(p + ".conv1", f, prev, 3);
    init.conv(p + ".conv2", f, f, 3);
    prev = f;
  }
  if (residual) {
    const auto f = static_cast<std::size_t>(c.filters(levels - 1));
    // Each branch adds variance to the trunk; shrinking the closing conv by
    // 1/sqrt(blocks) bounds the total growth independent of depth.
    const double branch_gain = 1.0 / std::sqrt(static_cast<double>(std::max(c.residual_blocks, 1)));
    for (int r = 0; r < c.residual_blocks; ++r) {
      const std::string p = net + ".res" + std::to_string(r);
      init.conv(p + ".conv1", f, f, 3);
      init.conv(p + ".conv2", f, f, 3, branch_gain);
      if (c.use_se) {
        const auto squeezed = f / static_cast<std::size_t>(c.se_reduction);
        init.conv(p + ".se.fc1", squeezed, f, 1);
        init.conv(p + ".se.fc2", f, squeezed, 1);
      }
    }
  }
  for (int k = levels - 2; k >= 0; --k) {
    const auto f = static_cast<std::size_t>(c.filters(k));
    const std::string p = net + ".dec" + std::to_string(k);
    init.up(p + ".up", static_cast<std::size_t>(c.filters(k + 1)), f);
    init.conv(p + ".conv1", f, 2 * f, 3);
    init.conv(p + ".conv2", f, f, 3);
  }
  // Zero head weights: the bounded output (sigmoid or clip) starts at a
  // constant and no pixel is saturated at the first step.
  init.conv(net + ".head", head_out, static_cast<std::size_t>(c.filters(0)), 1, 0.0, head_bias);
}

template <typename T>
BasicTensor<T> conv_layer(const ParamStore<T>& p, const std::string& name, const BasicTensor<T>& x,
                          int padding) {
  return conv2d(x, p.get(name + ".w"), p.get(name + ".b"), 1, padding);
}

template <typename T>
BasicTensor<T> conv_pair(const ParamStore<T>& p, const std::string& prefix, const BasicTensor<T>& x) {
  auto h = leaky_relu(conv_layer(p, prefix + ".conv1", x, 1));
  return leaky_relu(conv_layer(p, prefix + ".conv2", h, 1));
}

template <typename T>
BasicTensor<T> residual_block(const ParamStore<T>& p, const std::string& prefix, bool use_se,
                              const BasicTensor<T>& x) {
  auto h = leaky_relu(conv_layer(p, prefix + ".conv1", x, 1));
  h = conv_layer(p, prefix + ".conv2", h, 1);
  if (use_se) h = se_block(p, prefix + ".se", h);
  return add(x, h);
}

// A position survives pooling only if all four children are valid.
std::vector<SpatialMask> pool_masks(const std::vector<SpatialMask>& masks, std::size_t n,
                                    std::size_t h, std::size_t w) {
  std::vector<SpatialMask> out;
  const std::size_t oh = h / 2, ow = w / 2;
  for (const auto& m : masks) {
    SpatialMask pooled(n * oh * ow);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          const std::uint8_t* r0 = m.data() + i * h * w + 2 * y * w + 2 * x;
          const std::uint8_t* r1 = r0 + w;
          pooled[(i * oh + y) * ow + x] = (r0[0] && r0[1] && r1[0] && r1[1]) ? 1 : 0;
        }
    out.push_back(std::move(pooled));
  }
  return out;
}

void check_divisible(const ArchConfig& c, std::size_t h, std::size_t w, const char* net) {
  const auto m = static_cast<std::size_t>(c.spatial_multiple());
  if (h % m != 0 || w % m != 0) {
    const std::size_t ph = (m - h % m) % m, pw = (m - w % m) % m;
    throw ShapeError(std::string(net) + ": input " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not a multiple of " + std::to_string(m) + "; pad by " + std::to_string(ph) +
                     " rows and " + std::to_string(pw) + " columns");
  }
}

template <typename T>
BasicTensor<T> unet(const ParamStore<T>& p, const ArchConfig& c, const std::string& net,
                    std::vector<BasicTensor<T>> streams, std::span<const SpatialMask> valid,
                    bool residual) {
  const int levels = c.encoder_levels;
  std::vector<SpatialMask> masks(valid.begin(), valid.end());
  std::vector<BasicTensor<T>> skips;
  bool fused = streams.size() == 1;
  for (int k = 0; k < levels; ++k) {
    const std::string prefix = net + ".enc" + std::to_string(k);
    if (k > 0) {
      const std::size_t n = streams[0].dim(0), h = streams[0].dim(2), w = streams[0].dim(3);
      for (auto& s : streams) s = max_pool2d(s);
      if (!fused && !masks.empty()) masks = pool_masks(masks, n, h, w);
    }
    for (auto& s : streams) s = conv_pair(p, prefix, s);
    if (!fused && k >= c.fusion_start) {
      streams = {set_max(std::span<const BasicTensor<T>>(streams), masks)};
      fused = true;
    }
    skips.push_back(fused ? streams[0] : set_max(std::span<const BasicTensor<T>>(streams), masks));
  }

  BasicTensor<T> x = skips.back();
  if (residual && c.use_residual)
    for (int r = 0; r < c.residual_blocks; ++r)
      x = residual_block(p, net + ".res" + std::to_string(r), c.use_se, x);

  for (int k = levels - 2; k >= 0; --k) {
    const std::string prefix = net + ".dec" + std::to_string(k);
    auto up = transpose_conv2d(x, p.get(prefix + ".up.w"), p.get(prefix + ".up.b"), 2, 0);
    const BasicTensor<T> parts[2] = {up, skips[static_cast<std::size_t>(k)]};
    x = conv_pair(p, prefix, concat(std::span<const BasicTensor<T>>(parts), 1));
  }
  return conv_layer(p, net + ".head", x, 0);
}

}  // namespace

NetParams init_params(const ArchConfig& config, std::uint64_t seed) {
  config.validate();
  NetParams store;
  Initializer init(store, seed);
  init_unet(init, config, "coarse", 4, 4, false, 0.0f);
  // The fine head is clipped to [0,1]; starting at mid-range keeps every
  // output pixel on the live side of the clip.
  init_unet(init, config, "fine", static_cast<std::size_t>(config.fine_input_channels()), 12, config.use_residual,
            0.5f);
  return store;
}

template <typename T>
BasicTensor<T> se_block(const ParamStore<T>& params, const std::string& prefix,
                        const BasicTensor<T>& x) {
  const auto& w1 = params.get(prefix + ".fc1.w");
  if (x.rank() != 4 || w1.dim(1) != x.dim(1))
    throw ShapeError("se_block: " + shape_str(x.shape()) + " does not match " + prefix);
  auto squeeze = global_avg_pool(x);
  auto hidden = leaky_relu(conv2d(squeeze, w1, params.get(prefix + ".fc1.b"), 1, 0));
  auto gates = sigmoid(conv2d(hidden, params.get(prefix + ".fc2.w"), params.get(prefix + ".fc2.b"), 1, 0));
  return scale_channels(x, gates);
}

template <typename T>
BasicTensor<T> coarse_forward(const ParamStore<T>& params, const ArchConfig& config,
                              const BasicTensor<T>& x_low) {
  if (x_low.rank() != 4 || x_low.dim(1) != 4)
    throw ShapeError("coarse_forward expects [N,4,h,w], got " + shape_str(x_low.shape()));
  check_divisible(config, x_low.dim(2), x_low.dim(3), "coarse_forward");
  return sigmoid(unet(params, config, "coarse", {x_low}, {}, false));
}

template <typename T>
BasicTensor<T> build_fine_input(const BasicTensor<T>& x, const BasicTensor<T>& x_coarse) {
  if (x.rank() != 4 || x_coarse.rank() != 4 || x.dim(1) != 4 || x_coarse.dim(1) != 4 ||
      x.dim(0) != x_coarse.dim(0) || x.dim(2) != 2 * x_coarse.dim(2) || x.dim(3) != 2 * x_coarse.dim(3))
    throw ShapeError("build_fine_input: coarse " + shape_str(x_coarse.shape()) + " is not half of " +
                     shape_str(x.shape()));
  auto up = bilinear_resize(x_coarse, Resize::Double);
  const BasicTensor<T> parts[3] = {x, sub(x, up), up};
  return concat(std::span<const BasicTensor<T>>(parts), 1);
}

template <typename T>
BasicTensor<T> fine_forward(const ParamStore<T>& params, const ArchConfig& config,
                            const BasicTensor<T>& t) {
  const BasicTensor<T> frames[1] = {t};
  return set_forward(params, config, std::span<const BasicTensor<T>>(frames));
}

template <typename T>
BasicTensor<T> set_forward(const ParamStore<T>& params, const ArchConfig& config,
                           std::span<const BasicTensor<T>> frames, std::span<const SpatialMask> valid) {
  if (frames.empty()) throw ShapeError("set_forward: empty frame set");
  const auto channels = static_cast<std::size_t>(config.fine_input_channels());
  for (const auto& f : frames) {
    if (f.rank() != 4 || f.dim(1) != channels)
      throw ShapeError("fine network expects [N," + std::to_string(channels) + ",H,W], got " +
                       shape_str(f.shape()));
    if (f.shape() != frames[0].shape()) throw ShapeError("set_forward: frames differ in shape");
  }
  if (!valid.empty() && valid.size() != frames.size())
    throw ShapeError("set_forward: one validity mask per frame required");
  check_divisible(config, frames[0].dim(2), frames[0].dim(3), "fine_forward");
  auto head = unet(params, config, "fine", {frames.begin(), frames.end()}, valid, true);
  return clamp(depth_to_space(head, 2), T(0), T(1));
}

std::vector<std::string> fine_param_names(const NetParams& params) {
  std::vector<std::string> out;
  for (const auto& n : params.names())
    if (n.rfind("fine.", 0) == 0) out.push_back(n);
  return out;
}

std::vector<std::string> coarse_param_names(const NetParams& params) {
  std::vector<std::string> out;
  for (const auto& n : params.names())
    if (n.rfind("coarse.", 0) == 0) out.push_back(n);
  return out;
}

#define DARKBURST_INSTANTIATE_NETS(T)                                                            \
  template BasicTensor<T> coarse_forward(const ParamStore<T>&, const ArchConfig&,               \
                                         const BasicTensor<T>&);                                 \
  template BasicTensor<T> build_fine_input(const BasicTensor<T>&, const BasicTensor<T>&);        \
  template BasicTensor<T> fine_forward(const ParamStore<T>&, const ArchConfig&,                 \
                                       const BasicTensor<T>&);                                   \
  template BasicTensor<T> set_forward(const ParamStore<T>&, const ArchConfig&,                  \
                                      std::span<const BasicTensor<T>>, std::span<const SpatialMask>); \
  template BasicTensor<T> se_block(const ParamStore<T>&, const std::string&, const BasicTensor<T>&);

DARKBURST_INSTANTIATE_NETS(float)
DARKBURST_INSTANTIATE_NETS(double)

}  // namespace darkburst::nets
