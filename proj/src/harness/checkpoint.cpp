// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/checkpoint.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "darkburst/errors.hpp"

namespace darkburst {

AdamState AdamState::zeros_like(const nets::NetParams& params) {
  AdamState s;
  for (const auto& t : params.tensors()) {
    s.m.emplace_back(t.size(), 0.0f);
    s.v.emplace_back(t.size(), 0.0f);
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<float>>& grads, AdamState& state,
               double lr, const AdamParams& adam, const std::vector<bool>& active) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: parameter, gradient and moment counts differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!active.empty() && !active[i]) continue;
    auto values = params[i].mutable_values();
    if (grads[i].size() != values.size() || state.m[i].size() != values.size() ||
        state.v[i].size() != values.size())
      throw std::invalid_argument("adam_step: size mismatch for tensor " + std::to_string(i));
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grads[i][k];
      const double mk = adam.beta1 * m[k] + (1.0 - adam.beta1) * g;
      const double vk = adam.beta2 * v[k] + (1.0 - adam.beta2) * g * g;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = lr * (mk / c1) / (std::sqrt(vk / c2) + adam.epsilon);
      values[k] = static_cast<float>(values[k] - update);
    }
  }
}

namespace {

constexpr char kMagic[4] = {'D', 'B', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

template <typename U>
void put_le(std::ostream& os, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw DataError("truncated checkpoint");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(U(bytes[i]) << (8 * i));
  return value;
}

void put_floats(std::ostream& os, std::span<const float> values) {
  for (float f : values) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(f));
}

std::vector<float> get_floats(std::istream& is, std::size_t n) {
  std::vector<float> out(n);
  for (auto& f : out) f = std::bit_cast<float>(get_le<std::uint32_t>(is));
  return out;
}

std::string header_text(const Checkpoint& c) {
  std::ostringstream os;
  const auto& a = c.arch;
  os << "stage " << to_string(c.stage) << "\n"
     << "adam_step " << c.adam.step << "\n"
     << "base_filters " << a.base_filters << "\n"
     << "encoder_levels " << a.encoder_levels << "\n"
     << "residual_blocks " << a.residual_blocks << "\n"
     << "use_coarse_to_fine " << a.use_coarse_to_fine << "\n"
     << "use_residual " << a.use_residual << "\n"
     << "use_se " << a.use_se << "\n"
     << "se_reduction " << a.se_reduction << "\n"
     << "fusion_start " << a.fusion_start << "\n";
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    os << "tensor " << c.params.names()[i];
    for (auto d : c.params.tensors()[i].shape()) os << " " << d;
    os << "\n";
  }
  return os.str();
}

}  // namespace

void save_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  const std::string header = header_text(ckpt);
  os.write(kMagic, 4);
  put_le<std::uint16_t>(os, kVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  const auto& tensors = ckpt.params.tensors();
  for (const auto& t : tensors) put_floats(os, t.values());
  const bool has_moments = ckpt.adam.m.size() == tensors.size();
  for (std::size_t i = 0; i < tensors.size(); ++i)
    put_floats(os, has_moments ? std::span<const float>(ckpt.adam.m[i]) : std::vector<float>(tensors[i].size()));
  for (std::size_t i = 0; i < tensors.size(); ++i)
    put_floats(os, has_moments ? std::span<const float>(ckpt.adam.v[i]) : std::vector<float>(tensors[i].size()));
  if (!os) throw DataError("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string() + ": " + std::strerror(errno));
  save_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a checkpoint (bad magic)");
  const auto version = get_le<std::uint16_t>(is);
  if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto length = get_le<std::uint32_t>(is);
  std::string header(length, '\0');
  if (!is.read(header.data(), length)) throw DataError("truncated checkpoint header");

  Checkpoint c;
  std::vector<std::pair<std::string, Shape>> tensors;
  std::istringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto read_int = [&]() {
      long long v;
      if (!(ls >> v)) throw DataError("checkpoint header: bad value for " + key);
      return v;
    };
    if (key == "stage") {
      std::string s;
      ls >> s;
      try {
        c.stage = stage_from_string(s);
      } catch (const ConfigError&) {
        throw DataError("checkpoint header: unknown stage " + s);
      }
    } else if (key == "adam_step") {
      c.adam.step = static_cast<std::uint64_t>(read_int());
    } else if (key == "base_filters") {
      c.arch.base_filters = static_cast<int>(read_int());
    } else if (key == "encoder_levels") {
      c.arch.encoder_levels = static_cast<int>(read_int());
    } else if (key == "residual_blocks") {
      c.arch.residual_blocks = static_cast<int>(read_int());
    } else if (key == "use_coarse_to_fine") {
      c.arch.use_coarse_to_fine = read_int() != 0;
    } else if (key == "use_residual") {
      c.arch.use_residual = read_int() != 0;
    } else if (key == "use_se") {
      c.arch.use_se = read_int() != 0;
    } else if (key == "se_reduction") {
      c.arch.se_reduction = static_cast<int>(read_int());
    } else if (key == "fusion_start") {
      c.arch.fusion_start = static_cast<int>(read_int());
    } else if (key == "tensor") {
      std::string name;
      ls >> name;
      Shape shape;
      std::size_t d;
      while (ls >> d) shape.push_back(d);
      tensors.emplace_back(name, shape);
    } else if (!key.empty()) {
      throw DataError("checkpoint header: unknown field " + key);
    }
  }
  try {
    c.arch.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  // The tensor list must be exactly what the architecture defines.
  const auto expected = nets::init_params(c.arch, 0);
  if (expected.size() != tensors.size()) throw DataError("checkpoint tensor count does not match its architecture");
  for (std::size_t i = 0; i < tensors.size(); ++i)
    if (expected.names()[i] != tensors[i].first || expected.tensors()[i].shape() != tensors[i].second)
      throw DataError("checkpoint tensor " + tensors[i].first + " does not match its architecture");

  for (const auto& [name, shape] : tensors)
    c.params.add(name, Tensor::parameter(shape, get_floats(is, shape_numel(shape))));
  for (const auto& t : c.params.tensors()) c.adam.m.push_back(get_floats(is, t.size()));
  for (const auto& t : c.params.tensors()) c.adam.v.push_back(get_floats(is, t.size()));
  if (is.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after checkpoint payload");
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string() + ": " + std::strerror(errno));
  return load_checkpoint(is);
}

}  // namespace darkburst
