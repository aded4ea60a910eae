// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csrnet/image.hpp"
#include "csrnet/metrics.hpp"
#include "csrnet/model.hpp"
#include "csrnet/optim.hpp"

namespace csrnet {

/// Everything a training run needs. Text form is one `section.key = value`
/// per line; see RunConfig::keys() for the full list.
struct RunConfig {
  CsrnetConfig model;

  struct Optimizer {
    std::string kind = "adam";  // adam | sgd
    double lr = 1e-4;
    AdamConfig adam;
  } optimizer;

  struct Schedule {
    double t0_epochs = 10.0;
    double t_mult = 2.0;
    double eta_min = 1e-7;
  } schedule;

  struct Data {
    std::filesystem::path train_dir;  // holds HR/ and optionally LR_x{s}/
    std::size_t patch = 48;           // HR patch side
    std::size_t batch = 16;
    std::size_t epochs = 300;
    std::size_t iterations_per_epoch = 0;  // 0: one patch per image per epoch
    std::uint64_t seed = 1;
    bool augment = true;
    std::size_t fixed_patches = 0;  // >0: draw this many patches once and reuse them
    std::size_t max_images = 0;     // 0: all
  } data;

  struct Eval {
    std::optional<std::size_t> shave;  // unset: equal to the scale
    bool quantize = true;
    bool y_only = true;
  } eval;

  struct Log {
    std::filesystem::path output_dir = "run";
    std::size_t checkpoint_interval = 0;  // epochs between checkpoints, 0: none
  } log;

  /// Sets one key from its text form. ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Applies every `key = value` line of `path`; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  /// Effective configuration in the file format; load_file(dump) reproduces it.
  std::string dump() const;
  void validate() const;

  EvalProtocol protocol() const;
  static const std::vector<std::string>& keys();
};

// Training.

struct TrainingData {
  std::vector<std::string> names;
  std::vector<ImageBuffer> hr;  // cropped to a multiple of the scale
  std::vector<ImageBuffer> lr;
};

/// Reads train_dir/HR and train_dir/LR_x{scale}; LR images missing from disk
/// are synthesized with bicubic_resize. Images smaller than the patch are
/// skipped with a warning on `warn`.
TrainingData load_training_data(const RunConfig& cfg, std::ostream& warn);

/// Deterministic patch stream. The patches of epoch `e` depend only on
/// (seed, e): every epoch reseeds its own generator.
class PatchSampler {
 public:
  PatchSampler(const TrainingData& data, const RunConfig& cfg);

  std::size_t iterations_per_epoch() const { return iterations_per_epoch_; }
  /// All patches of one epoch, in batch order.
  std::vector<PatchPair> epoch_plan(std::size_t epoch) const;
  /// The fixed patch set (empty unless data.fixed_patches > 0).
  const std::vector<PatchPair>& fixed() const { return fixed_; }

 private:
  const TrainingData& data_;
  std::size_t scale_;
  std::size_t patch_;
  std::size_t batch_;
  std::uint64_t seed_;
  bool augment_;
  std::size_t iterations_per_epoch_;
  std::vector<PatchPair> fixed_;
};

/// (lr, hr) tensors for patches [begin, begin + count) of `plan`.
std::pair<Tensor, Tensor> make_batch(const std::vector<PatchPair>& plan, std::size_t begin,
                                     std::size_t count);

struct TrainOutcome {
  std::size_t iterations = 0;
  double last_loss = 0.0;
  std::filesystem::path checkpoint;  // final (or initial, for zero epochs)
};

/// The training loop. Writes config.txt, train_log.tsv and checkpoints under
/// log.output_dir. A NumericError mid-run saves abort.csrn and is rethrown.
TrainOutcome train(const RunConfig& cfg, const TrainingData& data, std::ostream& progress);

// Evaluation.

struct EvalRequest {
  std::filesystem::path dataset_dir;  // HR/ and LR_x{scale}/
  std::size_t scale = 2;
  std::optional<std::filesystem::path> checkpoint;
  bool bicubic = false;
  EvalProtocol protocol;
};

struct EvalRow {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  double bicubic_psnr = 0.0;
  double bicubic_ssim = 0.0;
};

struct EvalReport {
  bool has_model = false;
  bool has_bicubic = false;
  std::vector<EvalRow> rows;
  std::vector<std::pair<std::string, std::string>> skipped;  // name, reason
  EvalRow mean;

  /// Tab-separated table with a header line and a final "mean" row.
  std::string tsv() const;
};

/// Scores every HR image that has an LR partner. When LR_x{scale}/ does not
/// exist the LR inputs are synthesized from HR with bicubic_resize.
EvalReport evaluate(const EvalRequest& req);

/// Super-resolves one image with a loaded model. Gray input is replicated to
/// three channels.
RealImage super_resolve(const LayerGraph<float>& g, const ImageBuffer& input);

/// Entry point of the command-line tool. Errors print
/// "error[<kind>]: <message>" on one line to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Exit status used for each error kind.
int exit_code_for(const char* kind);

}  // namespace csrnet
