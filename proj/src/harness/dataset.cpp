// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "darkburst/errors.hpp"
#include "darkburst/io.hpp"
#include "darkburst/sensor_sim.hpp"

namespace darkburst {

namespace {

std::string ratio_label(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ratio);
  return buf;
}

}  // namespace

std::string scene_kind_for(const std::string& configured, std::size_t index) {
  if (configured != "mixed") return configured;
  static const sim::SceneKind kinds[] = {sim::SceneKind::Gradients, sim::SceneKind::Shapes,
                                         sim::SceneKind::Texture};
  return sim::to_string(kinds[index % 3]);
}

Dataset gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  Dataset dataset{out_dir, {}};
  for (std::size_t i = 0; i < config.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04zu", i);
    sim::SceneSpec spec;
    spec.width = config.width;
    spec.height = config.height;
    spec.kind = sim::scene_kind_from_string(scene_kind_for(config.kind, i));
    spec.jitter_pixels = config.jitter;
    spec.seed = sim::mix_seed(config.seed, i);
    const std::filesystem::path gt_name = std::string(name) + "_gt.ppm";
    bool gt_written = false;
    for (std::size_t r = 0; r < config.ratios.size(); ++r) {
      sim::NoiseParams noise{config.shot_gain, config.read_sigma, sim::mix_seed(spec.seed, 1000 + r)};
      auto pair = sim::make_burst(spec, config.frames, config.ratios[r], noise, config.black_level,
                                  config.white_level);
      if (!gt_written) {
        io::write_ppm(out_dir / gt_name, pair.ground_truth);
        gt_written = true;
      }
      const std::filesystem::path burst_name = std::string(name) + "_x" + ratio_label(config.ratios[r]) + ".drb";
      io::write_drb(out_dir / burst_name, io::Burst{std::move(pair.frames)});
      dataset.entries.push_back({name, spec.seed, sim::to_string(spec.kind), config.ratios[r], gt_name, burst_name});
    }
  }
  std::ofstream os(out_dir / kManifestName, std::ios::trunc);
  if (!os) throw DataError("cannot write " + (out_dir / kManifestName).string());
  os << "scene\tseed\tkind\tratio\tground_truth\tburst\n";
  for (const auto& e : dataset.entries)
    os << e.scene << '\t' << e.seed << '\t' << e.kind << '\t' << ratio_label(e.ratio) << '\t'
       << e.ground_truth.string() << '\t' << e.burst.string() << '\n';
  if (!os) throw DataError("manifest write failed in " + out_dir.string());
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  std::ifstream is(path);
  if (!is) throw DataError("no manifest at " + path.string());
  Dataset dataset{dir, {}};
  std::string line;
  std::getline(is, line);  // header
  int number = 1;
  while (std::getline(is, line)) {
    ++number;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string ratio, gt, burst;
    if (!std::getline(ls, e.scene, '\t') || !(ls >> e.seed) || !ls.ignore(1) || !std::getline(ls, e.kind, '\t') ||
        !std::getline(ls, ratio, '\t') || !std::getline(ls, gt, '\t') || !std::getline(ls, burst))
      throw DataError(path.string() + ":" + std::to_string(number) + ": malformed manifest row");
    try {
      e.ratio = std::stod(ratio);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": bad ratio '" + ratio + "'");
    }
    e.ground_truth = gt;
    e.burst = burst;
    for (const auto& p : {e.ground_truth, e.burst})
      if (!std::filesystem::exists(dir / p)) throw DataError("manifest references missing file " + (dir / p).string());
    dataset.entries.push_back(std::move(e));
  }
  if (dataset.entries.empty()) throw DataError("dataset " + dir.string() + " is empty");
  return dataset;
}

std::vector<TrainingSample> load_training_samples(const Dataset& dataset, double ratio_filter) {
  std::vector<TrainingSample> samples;
  for (const auto& e : dataset.entries) {
    if (ratio_filter > 0.0 && e.ratio != ratio_filter) continue;
    const auto burst = io::read_drb(dataset.root / e.burst);
    const auto gt = io::read_ppm(dataset.root / e.ground_truth);
    if (burst.frames.empty()) throw DataError(e.burst.string() + ": no frames");
    const auto& f0 = burst.frames.front();
    if (gt.width != f0.width || gt.height != f0.height)
      throw DataError(e.scene + ": ground truth and burst sizes differ");
    TrainingSample s;
    s.ratio = e.ratio;
    for (const auto& f : burst.frames) s.frames.push_back(raw::network_input(raw::pack_bayer(f, static_cast<float>(e.ratio))));
    s.clean_packed = raw::pack_bayer(sim::mosaic(gt, f0.black_level, f0.white_level), 1.0f).data;
    s.ground_truth = gt.to_tensor();
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("no training pairs in " + dataset.root.string() + " match the ratio filter");
  return samples;
}

}  // namespace darkburst
