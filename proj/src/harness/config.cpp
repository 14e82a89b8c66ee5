// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "darkburst/errors.hpp"

namespace darkburst {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename N>
N parse_number(const std::string& key, const std::string& value) {
  N out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": cannot parse '" + value + "' as a number");
  return out;
}

double parse_positive(const std::string& key, const std::string& value) {
  const double v = parse_number<double>(key, value);
  if (!(v > 0.0)) throw ConfigError(key + " must be positive, got " + value);
  return v;
}

template <typename N>
N parse_at_least(const std::string& key, const std::string& value, N lo) {
  const N v = parse_number<N>(key, value);
  if (v < lo) throw ConfigError(key + " must be >= " + std::to_string(lo) + ", got " + value);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError(key + ": expected true/false/on/off, got '" + value + "'");
}

using Setter = std::function<void(Config&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // dataset generation
    t["data.count"] = [](Config& c, const auto& k, const auto& v) { c.data.count = parse_at_least<std::size_t>(k, v, 1); };
    t["data.width"] = [](Config& c, const auto& k, const auto& v) { c.data.width = parse_at_least<std::size_t>(k, v, 2); };
    t["data.height"] = [](Config& c, const auto& k, const auto& v) { c.data.height = parse_at_least<std::size_t>(k, v, 2); };
    t["data.ratios"] = [](Config& c, const auto& k, const auto& v) {
      c.data.ratios.clear();
      for (const auto& r : split_list(v)) {
        const double x = parse_number<double>(k, r);
        if (!(x >= 1.0)) throw ConfigError(k + ": ratios must be >= 1, got " + r);
        c.data.ratios.push_back(x);
      }
      if (c.data.ratios.empty()) throw ConfigError(k + ": empty list");
    };
    t["data.frames"] = [](Config& c, const auto& k, const auto& v) {
      c.data.frames = parse_at_least<int>(k, v, 1);
      if (c.data.frames > 16) throw ConfigError(k + " must be <= 16");
    };
    t["data.jitter"] = [](Config& c, const auto& k, const auto& v) { c.data.jitter = parse_at_least<int>(k, v, 0); };
    t["data.kind"] = [](Config& c, const auto& k, const auto& v) {
      if (v != "mixed") {
        try {
          (void)sim::scene_kind_from_string(v);
        } catch (const std::exception& e) {
          throw ConfigError(k + ": " + e.what());
        }
      }
      c.data.kind = v;
    };
    t["data.black_level"] = [](Config& c, const auto& k, const auto& v) {
      c.data.black_level = static_cast<std::uint16_t>(parse_at_least<unsigned>(k, v, 0));
    };
    t["data.white_level"] = [](Config& c, const auto& k, const auto& v) {
      const auto w = parse_at_least<unsigned>(k, v, 1);
      if (w > 65535) throw ConfigError(k + " must fit 16 bits");
      c.data.white_level = static_cast<std::uint16_t>(w);
    };
    t["data.seed"] = [](Config& c, const auto& k, const auto& v) { c.data.seed = parse_number<std::uint64_t>(k, v); };
    t["noise.shot_gain"] = [](Config& c, const auto& k, const auto& v) { c.data.shot_gain = parse_at_least<double>(k, v, 0.0); };
    t["noise.read_sigma"] = [](Config& c, const auto& k, const auto& v) { c.data.read_sigma = parse_at_least<double>(k, v, 0.0); };

    // training
    t["train.stages"] = [](Config& c, const auto& k, const auto& v) {
      c.train.stages.clear();
      for (const auto& s : split_list(v)) {
        try {
          c.train.stages.push_back(stage_from_string(s));
        } catch (const std::exception& e) {
          throw ConfigError(k + ": " + e.what());
        }
      }
      if (c.train.stages.empty()) throw ConfigError(k + ": empty list");
      for (std::size_t i = 1; i < c.train.stages.size(); ++i)
        if (static_cast<int>(c.train.stages[i]) != static_cast<int>(c.train.stages[i - 1]) + 1)
          throw ConfigError(k + ": stages must be consecutive in coarse, fine, set order");
    };
    t["train.coarse_steps"] = [](Config& c, const auto& k, const auto& v) { c.train.coarse_steps = parse_at_least<int>(k, v, 1); };
    t["train.fine_steps"] = [](Config& c, const auto& k, const auto& v) { c.train.fine_steps = parse_at_least<int>(k, v, 1); };
    t["train.set_steps"] = [](Config& c, const auto& k, const auto& v) { c.train.set_steps = parse_at_least<int>(k, v, 1); };
    t["train.lr"] = [](Config& c, const auto& k, const auto& v) { c.train.learning_rate = parse_positive(k, v); };
    t["train.lr_drop"] = [](Config& c, const auto& k, const auto& v) { c.train.lr_drop = parse_positive(k, v); };
    t["train.lr_drop_at"] = [](Config& c, const auto& k, const auto& v) {
      c.train.lr_drop_at = parse_number<double>(k, v);
      if (c.train.lr_drop_at < 0.0 || c.train.lr_drop_at > 1.0) throw ConfigError(k + " must lie in [0,1]");
    };
    t["train.batch_size"] = [](Config& c, const auto& k, const auto& v) { c.train.batch_size = parse_at_least<std::size_t>(k, v, 1); };
    t["train.patch_size"] = [](Config& c, const auto& k, const auto& v) { c.train.patch_size = parse_at_least<std::size_t>(k, v, 2); };
    t["train.burst_min"] = [](Config& c, const auto& k, const auto& v) { c.train.burst_min = parse_at_least<int>(k, v, 1); };
    t["train.burst_max"] = [](Config& c, const auto& k, const auto& v) { c.train.burst_max = parse_at_least<int>(k, v, 1); };
    t["train.freeze_coarse"] = [](Config& c, const auto& k, const auto& v) { c.train.freeze_coarse_fine_stage = parse_bool(k, v); };
    t["train.set_freeze_coarse"] = [](Config& c, const auto& k, const auto& v) { c.train.freeze_coarse_set_stage = parse_bool(k, v); };
    t["train.seed"] = [](Config& c, const auto& k, const auto& v) { c.train.seed = parse_number<std::uint64_t>(k, v); };
    t["train.init_seed"] = [](Config& c, const auto& k, const auto& v) { c.train.init_seed = parse_number<std::uint64_t>(k, v); };
    t["train.dataset"] = [](Config& c, const auto&, const auto& v) { c.train.dataset = v; };
    t["train.init"] = [](Config& c, const auto&, const auto& v) { c.train.init_checkpoint = v; };
    t["train.ratio"] = [](Config& c, const auto& k, const auto& v) { c.train.ratio_filter = parse_at_least<double>(k, v, 0.0); };
    t["train.log_every"] = [](Config& c, const auto& k, const auto& v) { c.train.log_every = parse_at_least<int>(k, v, 0); };
    t["adam.beta1"] = [](Config& c, const auto& k, const auto& v) { c.train.adam.beta1 = parse_at_least<double>(k, v, 0.0); };
    t["adam.beta2"] = [](Config& c, const auto& k, const auto& v) { c.train.adam.beta2 = parse_at_least<double>(k, v, 0.0); };
    t["adam.epsilon"] = [](Config& c, const auto& k, const auto& v) { c.train.adam.epsilon = parse_positive(k, v); };

    // losses
    t["loss.mode"] = [](Config& c, const auto& k, const auto& v) {
      try {
        c.train.loss.mode = loss::loss_mode_from_string(v);
      } catch (const std::exception& e) {
        throw ConfigError(k + ": " + e.what());
      }
    };
    t["loss.weights"] = [](Config& c, const auto& k, const auto& v) {
      const auto parts = split_list(v);
      if (parts.size() != 2) throw ConfigError(k + ": expected 'pixel, feature'");
      c.train.loss.pixel_weight = parse_at_least<double>(k, parts[0], 0.0);
      c.train.loss.feature_weight = parse_at_least<double>(k, parts[1], 0.0);
    };
    t["features.levels"] = [](Config& c, const auto& k, const auto& v) {
      c.train.loss.levels.clear();
      for (const auto& s : split_list(v)) {
        const int l = parse_at_least<int>(k, s, 0);
        if (l >= loss::kFeatureLevels)
          throw ConfigError(k + ": level " + s + " exceeds " + std::to_string(loss::kFeatureLevels - 1));
        c.train.loss.levels.push_back(l);
      }
      if (c.train.loss.levels.empty()) throw ConfigError(k + ": empty list");
    };
    t["features.max_positions"] = [](Config& c, const auto& k, const auto& v) {
      c.train.loss.max_positions = parse_at_least<std::size_t>(k, v, 1);
    };
    t["cx.h"] = [](Config& c, const auto& k, const auto& v) { c.train.loss.cx.h = parse_positive(k, v); };
    t["cx.epsilon"] = [](Config& c, const auto& k, const auto& v) { c.train.loss.cx.epsilon = parse_positive(k, v); };
    t["cx.normalization"] = [](Config& c, const auto& k, const auto& v) {
      if (v == "row")
        c.train.loss.cx.normalization = loss::CxNormalization::Row;
      else if (v == "column")
        c.train.loss.cx.normalization = loss::CxNormalization::Column;
      else
        throw ConfigError(k + ": expected row or column, got '" + v + "'");
    };

    // architecture
    t["arch.preset"] = [](Config&, const auto& k, const auto& v) {
      if (v != "desk" && v != "paper") throw ConfigError(k + ": expected desk or paper, got '" + v + "'");
    };
    t["arch.base_filters"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.base_filters = parse_at_least<int>(k, v, 1); };
    t["arch.encoder_levels"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.encoder_levels = parse_at_least<int>(k, v, 2); };
    t["arch.residual_blocks"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.residual_blocks = parse_at_least<int>(k, v, 0); };
    t["arch.use_coarse_to_fine"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.use_coarse_to_fine = parse_bool(k, v); };
    t["arch.use_residual"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.use_residual = parse_bool(k, v); };
    t["arch.use_se"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.use_se = parse_bool(k, v); };
    t["arch.se_reduction"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.se_reduction = parse_at_least<int>(k, v, 1); };
    t["arch.fusion_start"] = [](Config& c, const auto& k, const auto& v) { c.train.arch.fusion_start = parse_at_least<int>(k, v, 0); };

    // inference
    t["motion.enabled"] = [](Config& c, const auto& k, const auto& v) { c.enhance.motion.enabled = parse_bool(k, v); };
    t["motion.block"] = [](Config& c, const auto& k, const auto& v) { c.enhance.motion.block = parse_at_least<int>(k, v, 1); };
    t["motion.search_radius"] = [](Config& c, const auto& k, const auto& v) { c.enhance.motion.search_radius = parse_at_least<int>(k, v, 0); };
    t["motion.threshold"] = [](Config& c, const auto& k, const auto& v) { c.enhance.motion.threshold = parse_at_least<double>(k, v, 0.0); };
    t["enhance.burst_limit"] = [](Config& c, const auto& k, const auto& v) { c.enhance.burst_limit = parse_at_least<int>(k, v, 0); };
    t["enhance.reference_exposure"] = [](Config& c, const auto& k, const auto& v) { c.enhance.reference_exposure = parse_positive(k, v); };
    return t;
  }();
  return table;
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Coarse: return "coarse";
    case Stage::Fine: return "fine";
    case Stage::Set: return "set";
  }
  return "coarse";
}

Stage stage_from_string(const std::string& name) {
  if (name == "coarse") return Stage::Coarse;
  if (name == "fine") return Stage::Fine;
  if (name == "set") return Stage::Set;
  throw ConfigError("unknown stage '" + name + "' (expected coarse, fine or set)");
}

int TrainConfig::steps_for(Stage stage) const {
  switch (stage) {
    case Stage::Coarse: return coarse_steps;
    case Stage::Fine: return fine_steps;
    case Stage::Set: return set_steps;
  }
  return 0;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value', got '" + line + "'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    if (!out.emplace(key, value).second)
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
  }
  return out;
}

Config parse_config(const std::string& text) {
  const auto pairs = parse_key_values(text);
  const auto& table = setters();
  for (const auto& [key, value] : pairs)
    if (!table.count(key)) throw ConfigError("unknown config key '" + key + "'");
  Config config;
  if (auto it = pairs.find("arch.preset"); it != pairs.end()) {
    table.at("arch.preset")(config, it->first, it->second);
    config.train.arch = it->second == "paper" ? nets::ArchConfig::paper() : nets::ArchConfig::desk();
  }
  for (const auto& [key, value] : pairs)
    if (key != "arch.preset") table.at(key)(config, key, value);
  try {
    config.train.arch.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("arch: ") + e.what());
  }
  if (config.train.burst_min > config.train.burst_max)
    throw ConfigError("train.burst_min exceeds train.burst_max");
  if (config.train.burst_max > 16) throw ConfigError("train.burst_max must be <= 16");
  if (config.data.white_level <= config.data.black_level)
    throw ConfigError("data.white_level must exceed data.black_level");
  if (config.data.width % 2 || config.data.height % 2) throw ConfigError("data.width/height must be even");
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace darkburst
