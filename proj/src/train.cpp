// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

#include "csrnet/app.hpp"

namespace csrnet {

namespace fs = std::filesystem;

namespace {

// Generator for one stream of the run, e.g. (seed, epoch).
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Fixed patches draw from a stream no epoch index reaches.
constexpr std::uint64_t kFixedStream = ~std::uint64_t{0};

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

TrainingData load_training_data(const RunConfig& cfg, std::ostream& warn) {
  const std::size_t s = cfg.model.scale;
  const fs::path hr_dir = cfg.data.train_dir / "HR";
  const fs::path lr_dir = cfg.data.train_dir / ("LR_x" + std::to_string(s));
  std::error_code ec;
  const bool have_lr = fs::is_directory(lr_dir, ec);
  TrainingData out;
  for (const fs::path& path : list_pngs(hr_dir)) {
    if (cfg.data.max_images != 0 && out.hr.size() == cfg.data.max_images) break;
    const std::string name = path.filename().string();
    ImageBuffer hr = to_rgb(mod_crop(load_png(path), s));
    if (hr.width < cfg.data.patch || hr.height < cfg.data.patch) {
      warn << "warning: skipping " << name << ": smaller than the " << cfg.data.patch
           << " px patch\n";
      continue;
    }
    ImageBuffer lr;
    if (have_lr && fs::exists(lr_dir / name)) {
      lr = to_rgb(load_png(lr_dir / name));
      if (lr.width * s != hr.width || lr.height * s != hr.height) {
        throw ConfigError("LR image " + (lr_dir / name).string() + " is not 1/" +
                          std::to_string(s) + " of its HR partner");
      }
    } else {
      lr = bicubic_resize(hr, hr.width / s, hr.height / s);
    }
    out.names.push_back(name);
    out.hr.push_back(std::move(hr));
    out.lr.push_back(std::move(lr));
  }
  if (out.hr.empty()) throw ConfigError("no usable training images in " + hr_dir.string());
  return out;
}

PatchSampler::PatchSampler(const TrainingData& data, const RunConfig& cfg)
    : data_(data),
      scale_(cfg.model.scale),
      patch_(cfg.data.patch),
      batch_(cfg.data.batch),
      seed_(cfg.data.seed),
      augment_(cfg.data.augment) {
  if (data.hr.empty() || data.hr.size() != data.lr.size()) {
    throw ConfigError("patch sampler needs matching, non-empty HR and LR sets");
  }
  const std::size_t per_epoch =
      cfg.data.fixed_patches > 0 ? cfg.data.fixed_patches : data.hr.size();
  iterations_per_epoch_ = cfg.data.iterations_per_epoch > 0 ? cfg.data.iterations_per_epoch
                                                            : ceil_div(per_epoch, batch_);
  if (cfg.data.fixed_patches > 0) {
    auto rng = stream_rng(seed_, kFixedStream);
    for (std::size_t k = 0; k < cfg.data.fixed_patches; ++k) {
      const std::size_t i = k % data.hr.size();
      fixed_.push_back(sample_patch_pair(data.hr[i], data.lr[i], scale_, patch_, rng));
    }
  }
}

std::vector<PatchPair> PatchSampler::epoch_plan(std::size_t epoch) const {
  const std::size_t total = iterations_per_epoch_ * batch_;
  std::vector<PatchPair> plan;
  plan.reserve(total);
  if (!fixed_.empty()) {
    for (std::size_t k = 0; k < total; ++k) plan.push_back(fixed_[k % fixed_.size()]);
    return plan;
  }
  auto rng = stream_rng(seed_, epoch);
  std::vector<std::size_t> order;
  while (order.size() < total) {
    std::vector<std::size_t> perm(data_.hr.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    order.insert(order.end(), perm.begin(), perm.end());
  }
  order.resize(total);
  for (std::size_t i : order) {
    PatchPair p = sample_patch_pair(data_.hr[i], data_.lr[i], scale_, patch_, rng);
    if (augment_) p = augment(std::move(p), rng);
    plan.push_back(std::move(p));
  }
  return plan;
}

std::pair<Tensor, Tensor> make_batch(const std::vector<PatchPair>& plan, std::size_t begin,
                                     std::size_t count) {
  if (count == 0 || begin + count > plan.size()) throw ConfigError("batch outside the plan");
  std::vector<ImageBuffer> lr, hr;
  lr.reserve(count);
  hr.reserve(count);
  for (std::size_t k = begin; k < begin + count; ++k) {
    lr.push_back(plan[k].lr);
    hr.push_back(plan[k].hr);
  }
  return {images_to_tensor<float>(lr), images_to_tensor<float>(hr)};
}

TrainOutcome train(const RunConfig& cfg, const TrainingData& data, std::ostream& progress) {
  cfg.validate();
  const fs::path out_dir = cfg.log.output_dir;
  fs::create_directories(out_dir);
  {
    std::ofstream dump(out_dir / "config.txt", std::ios::trunc);
    if (!dump) throw IoError("cannot write " + (out_dir / "config.txt").string());
    dump << cfg.dump();
  }

  LayerGraph<float> g = build_variant<float>(cfg.model, cfg.model.variant);
  init_params(g, cfg.data.seed);

  TrainOutcome outcome;
  if (cfg.data.epochs == 0) {
    outcome.checkpoint = out_dir / "initial.csrn";
    save_checkpoint(g, cfg.model, outcome.checkpoint);
    return outcome;
  }

  const PatchSampler sampler(data, cfg);
  const std::size_t ipe = sampler.iterations_per_epoch();
  const bool use_adam = cfg.optimizer.kind == "adam";
  ScheduleState sched = ScheduleState::make(cfg.schedule.t0_epochs, cfg.schedule.t_mult,
                                            cfg.schedule.eta_min, cfg.optimizer.lr);
  AdamState<float> adam(g.params(), cfg.optimizer.adam);

  std::ofstream log(out_dir / "train_log.tsv", std::ios::trunc);
  if (!log) throw IoError("cannot write " + (out_dir / "train_log.tsv").string());
  log << "iteration\tepoch\tlr\tloss\n";

  char line[128];
  for (std::size_t epoch = 0; epoch < cfg.data.epochs; ++epoch) {
    const std::vector<PatchPair> plan = sampler.epoch_plan(epoch);
    double epoch_loss = 0.0;
    double lr = 0.0;
    for (std::size_t it = 0; it < ipe; ++it) {
      lr = use_adam ? cosine_lr(sched) : cfg.optimizer.lr;
      try {
        const auto [x, y] = make_batch(plan, it * cfg.data.batch, cfg.data.batch);
        g.zero_grads();
        const Tensor pred = g.forward(x);
        const MaeResult<float> loss = mae_loss(pred, y);
        if (!std::isfinite(loss.loss)) throw NumericError("training loss is not finite");
        g.backward(loss.grad);
        if (use_adam) {
          adam_step(g.params(), adam, lr);
        } else {
          sgd_step(g.params(), lr);
        }
        outcome.last_loss = loss.loss;
      } catch (const NumericError& e) {
        const fs::path abort_path = out_dir / "abort.csrn";
        save_checkpoint(g, cfg.model, abort_path);
        throw NumericError(std::string(e.what()) + " at iteration " +
                           std::to_string(outcome.iterations + 1) + "; parameters saved to " +
                           abort_path.string());
      }
      ++outcome.iterations;
      epoch_loss += outcome.last_loss;
      if (use_adam) schedule_advance(sched, 1.0 / static_cast<double>(ipe));
      std::snprintf(line, sizeof line, "%zu\t%zu\t%.9e\t%.9e\n", outcome.iterations, epoch + 1,
                    lr, outcome.last_loss);
      log << line;
    }
    log.flush();
    std::snprintf(line, sizeof line, "epoch %zu/%zu  loss %.6f  lr %.3e\n", epoch + 1,
                  cfg.data.epochs, epoch_loss / static_cast<double>(ipe), lr);
    progress << line << std::flush;
    if (cfg.log.checkpoint_interval > 0 && (epoch + 1) % cfg.log.checkpoint_interval == 0 &&
        epoch + 1 < cfg.data.epochs) {
      std::snprintf(line, sizeof line, "epoch_%04zu.csrn", epoch + 1);
      save_checkpoint(g, cfg.model, out_dir / line);
    }
  }
  outcome.checkpoint = out_dir / "final.csrn";
  save_checkpoint(g, cfg.model, outcome.checkpoint);
  return outcome;
}

}  // namespace csrnet
