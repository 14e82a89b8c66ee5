// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "darkburst/checkpoint.hpp"
#include "darkburst/config.hpp"
#include "darkburst/dataset.hpp"
#include "darkburst/errors.hpp"
#include "darkburst/gradcheck.hpp"
#include "darkburst/io.hpp"
#include "darkburst/nets.hpp"
#include "darkburst/ops.hpp"
#include "darkburst/pipeline.hpp"
#include "darkburst/train.hpp"

namespace {

using namespace darkburst;

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool out_required) {
  app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed override");
  auto* out = app->add_option("--out", c.out, "output path");
  if (out_required) out->required();
}

Config load(const Common& c) { return c.config.empty() ? parse_config("") : load_config(c.config); }

std::filesystem::path stage_path(const std::filesystem::path& out, Stage stage) {
  auto p = out;
  p.replace_extension();
  return p.string() + "." + to_string(stage) + ".dbck";
}

int run_gen_dataset(const Common& c, std::optional<std::size_t> count) {
  auto config = load(c);
  if (c.seed) config.data.seed = *c.seed;
  if (count) config.data.count = *count;
  const auto ds = gen_dataset(config.data, c.out);
  std::printf("wrote %zu scenes, %zu bursts to %s\n", config.data.count, ds.entries.size(), c.out.c_str());
  return kOk;
}

int run_train(const Common& c, const std::string& stage, const std::string& dataset, const std::string& init) {
  auto config = load(c);
  if (c.seed) config.train.seed = *c.seed;
  if (!dataset.empty()) config.train.dataset = dataset;
  if (!init.empty()) config.train.init_checkpoint = init;
  if (!stage.empty() && stage != "all") config.train.stages = {stage_from_string(stage)};
  if (config.train.log_every == 0) config.train.log_every = 50;
  const std::filesystem::path out = c.out;
  const bool multi = config.train.stages.size() > 1;
  const auto result = train(config.train, [&](const Checkpoint& ckpt, const StageLog& log) {
    const auto path = multi ? stage_path(out, log.stage) : out;
    save_checkpoint(path, ckpt);
    std::printf("stage %s: %zu steps, final loss %.6f -> %s\n", to_string(log.stage).c_str(), log.losses.size(),
                log.losses.empty() ? 0.0 : log.losses.back(), path.string().c_str());
  });
  if (multi) save_checkpoint(out, result.checkpoint);
  return kOk;
}

int run_enhance(const Common& c, const std::string& ckpt_path, const std::string& burst_path,
                std::optional<double> ratio, std::optional<int> burst_limit, const std::string& motion,
                std::optional<double> reference) {
  auto config = load(c);
  if (burst_limit) config.enhance.burst_limit = *burst_limit;
  if (!motion.empty()) config.enhance.motion.enabled = motion == "on";
  if (reference) config.enhance.reference_exposure = *reference;
  const auto ckpt = load_checkpoint(ckpt_path);
  const auto burst = io::read_drb(burst_path);
  const float r = resolve_ratio(burst.frames, ratio, config.enhance.reference_exposure);
  const auto result = enhance(ckpt, burst.frames, r, config.enhance);
  io::write_ppm(c.out, result.image);
  const auto& t = result.timings;
  std::fprintf(stderr,
               "frames %zu ratio %g | pack %.2f ms, coarse %.2f ms, motion %.2f ms, fine %.2f ms, total %.2f ms\n",
               result.frames_used, static_cast<double>(r), t.pack_ms, t.coarse_ms, t.motion_ms, t.fine_ms,
               t.total_ms);
  return kOk;
}

int run_evaluate(const Common& c, const std::string& ckpt_path, const std::string& dataset,
                 std::optional<int> burst_limit, const std::string& motion) {
  auto config = load(c);
  if (burst_limit) config.enhance.burst_limit = *burst_limit;
  if (!motion.empty()) config.enhance.motion.enabled = motion == "on";
  const auto report = evaluate(load_checkpoint(ckpt_path), load_dataset(dataset), config.enhance);
  const auto text = report.to_tsv();
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream os(c.out, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + c.out);
    os << text;
    std::printf("All: PSNR %.4f dB, SSIM %.4f over %zu images -> %s\n", report.all.psnr, report.all.ssim,
                report.all.count, c.out.c_str());
  }
  return kOk;
}

// Quick internal consistency checks; nonzero exit when any fails.
int run_selftest(const Common& c) {
  const std::uint64_t seed = c.seed.value_or(1);
  std::mt19937_64 rng(seed);
  auto random = [&](Shape s) {
    std::vector<double> v(shape_numel(s));
    for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    return Tensor64(s, std::move(v));
  };
  int failures = 0;
  auto report = [&](const char* name, bool ok, double value) {
    std::printf("%-28s %s (%.3g)\n", name, ok ? "PASS" : "FAIL", value);
    if (!ok) ++failures;
  };
  {
    const auto kernel = random({2, 2, 3, 3});
    const double err = grad_check(
        [&](const Tensor64& x) { return sum(mul(conv2d(x, kernel, Tensor64(), 1, 1), conv2d(x, kernel, Tensor64(), 1, 1))); },
        random({1, 2, 5, 5}), 1e-5);
    report("conv2d gradient", err <= 1e-4, err);
  }
  {
    const auto arch = nets::ArchConfig::desk();
    const auto params = nets::init_params(arch, seed);
    NoGradGuard guard;
    std::vector<Tensor> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(random({1, 12, 8, 8}).cast<float>());
    const auto a = nets::set_forward(params, arch, std::span<const Tensor>(frames));
    std::swap(frames[0], frames[3]);
    const auto b = nets::set_forward(params, arch, std::span<const Tensor>(frames));
    const bool same = std::equal(a.values().begin(), a.values().end(), b.values().begin());
    report("set permutation invariance", same, same ? 0.0 : 1.0);
  }
  return failures == 0 ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"darkburst: burst low-light raw enhancement"};
  app.require_subcommand(1);

  Common gen_c, train_c, enh_c, eval_c, self_c;
  std::optional<std::size_t> count;
  auto* gen = app.add_subcommand("gen-dataset", "synthesize ground truths and dark bursts");
  add_common(gen, gen_c, true);
  gen->add_option("--count", count, "number of scenes");

  std::string stage, train_dataset, init;
  auto* tr = app.add_subcommand("train", "staged training: coarse, fine, set");
  add_common(tr, train_c, true);
  tr->add_option("--stage", stage, "coarse | fine | set | all")->check(CLI::IsMember({"coarse", "fine", "set", "all"}));
  tr->add_option("--dataset", train_dataset, "dataset directory");
  tr->add_option("--init", init, "checkpoint the first stage starts from");

  std::string ckpt_path, burst_path, motion;
  std::optional<double> ratio, reference;
  std::optional<int> burst_limit;
  auto* enh = app.add_subcommand("enhance", "enhance one .drb burst into a PPM");
  add_common(enh, enh_c, true);
  enh->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  enh->add_option("--input", burst_path, "burst file")->required();
  enh->add_option("--ratio", ratio, "amplification ratio; derived from exposure when absent");
  enh->add_option("--reference-exposure", reference, "reference exposure in seconds for ratio derivation");
  enh->add_option("--burst-limit", burst_limit, "use at most this many frames")->check(CLI::NonNegativeNumber);
  enh->add_option("--motion", motion, "on | off")->check(CLI::IsMember({"on", "off"}));

  std::string eval_ckpt, eval_dataset, eval_motion;
  std::optional<int> eval_limit;
  auto* ev = app.add_subcommand("evaluate", "PSNR/SSIM report over a dataset");
  add_common(ev, eval_c, false);
  ev->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  ev->add_option("--dataset", eval_dataset, "dataset directory")->required();
  ev->add_option("--burst-limit", eval_limit, "use at most this many frames")->check(CLI::NonNegativeNumber);
  ev->add_option("--motion", eval_motion, "on | off")->check(CLI::IsMember({"on", "off"}));

  auto* st = app.add_subcommand("selftest", "run internal consistency checks");
  add_common(st, self_c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (gen->parsed()) return run_gen_dataset(gen_c, count);
    if (tr->parsed()) return run_train(train_c, stage, train_dataset, init);
    if (enh->parsed()) return run_enhance(enh_c, ckpt_path, burst_path, ratio, burst_limit, motion, reference);
    if (ev->parsed()) return run_evaluate(eval_c, eval_ckpt, eval_dataset, eval_limit, eval_motion);
    if (st->parsed()) return run_selftest(self_c);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  }
  return kOk;
}
