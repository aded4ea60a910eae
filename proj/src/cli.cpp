// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <ostream>

#include "csrnet/app.hpp"
#include "csrnet/parallel.hpp"

namespace csrnet {

namespace fs = std::filesystem;

int exit_code_for(const char* kind) {
  const std::string k = kind;
  if (k == "config" || k == "io" || k == "schema" || k == "usage") return 2;
  if (k == "numeric") return 3;
  return 1;
}

namespace {

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> scale;
  std::optional<std::string> variant;
  std::optional<int> threads;
  std::string checkpoint;
  std::string dataset;
  std::string baseline;
  std::string input;
  std::string output;
  std::string hr_dir;
  std::string out_dir;
};

void apply_threads(const Options& o) {
  int n = 1;
  if (o.threads) {
    n = *o.threads;
  } else if (const char* env = std::getenv("CSRNET_THREADS"); env != nullptr && *env != '\0') {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("CSRNET_THREADS is not an integer: ") + env);
    }
  }
  if (n < 1) throw ConfigError("thread count must be >= 1");
  set_num_threads(n);
}

RunConfig run_config(const Options& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg.load_file(o.config);
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.data.seed = *o.seed;
  if (o.scale) cfg.model.scale = *o.scale;
  if (o.variant) cfg.model.variant = parse_variant(*o.variant);
  return cfg;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = run_config(o);
  cfg.validate();
  TrainingData data;
  if (cfg.data.epochs > 0) data = load_training_data(cfg, err);
  const TrainOutcome r = train(cfg, data, out);
  out << "checkpoint: " << r.checkpoint.string() << "\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunConfig cfg = run_config(o);
  if (!o.baseline.empty() && o.baseline != "bicubic") {
    throw ConfigError("unknown baseline '" + o.baseline + "' (only bicubic)");
  }
  EvalRequest req;
  req.dataset_dir = o.dataset;
  req.bicubic = o.baseline == "bicubic";
  if (!o.checkpoint.empty()) req.checkpoint = fs::path(o.checkpoint);
  if (o.scale) {
    req.scale = *o.scale;
  } else if (req.checkpoint) {
    req.scale = inspect_checkpoint(*req.checkpoint).config.scale;
  } else {
    req.scale = cfg.model.scale;
  }
  RunConfig scaled = cfg;
  scaled.model.scale = req.scale;
  req.protocol = scaled.protocol();
  const EvalReport report = evaluate(req);
  for (const auto& [name, why] : report.skipped) {
    out << "# skipped\t" << name << "\t" << why << "\n";
  }
  const std::string table = report.tsv();
  out << table;
  const fs::path dest =
      o.output.empty() ? fs::path("eval_x" + std::to_string(req.scale) + ".tsv") : fs::path(o.output);
  std::ofstream f(dest, std::ios::trunc);
  if (!f) throw IoError("cannot write " + dest.string());
  f << table;
  return 0;
}

int cmd_sr(const Options& o, std::ostream& out) {
  const LoadedModel m = load_checkpoint(o.checkpoint, o.scale);
  const ImageBuffer input = load_png(o.input);
  save_png(quantize(super_resolve(m.graph, input)), o.output);
  out << o.output << "\n";
  return 0;
}

int cmd_degrade(const Options& o, std::ostream& out, std::ostream& err) {
  const Manifest m = make_lr_set(o.hr_dir, o.scale.value_or(2), o.out_dir);
  for (const auto& [path, why] : m.errors) err << "warning: " << path.string() << ": " << why << "\n";
  out << m.path.string() << "\n";
  return 0;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  const CheckpointInfo info = inspect_checkpoint(o.checkpoint);
  const CsrnetConfig& c = info.config;
  out << "file\t" << o.checkpoint << "\n"
      << "version\t" << info.version << "\n"
      << "integrity\tok\n"
      << "config\tscale=" << c.scale << " features=" << c.features << " n_pairs=" << c.n_pairs
      << " tap_src=" << c.tap_src << " tap_dst=" << c.tap_dst
      << " variant=" << variant_name(c.variant) << "\n";
  for (const auto& e : info.entries) out << "param\t" << e.name << "\t" << e.shape.str() << "\n";
  out << "total_params\t" << info.total_params << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CSRNet super-resolution: training, evaluation and inference"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--threads", o.threads, "Worker threads (default: CSRNET_THREADS or 1)");
  };
  auto config_opts = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value config file");
    sub->add_option("--set", o.sets, "Override one key (repeatable)")->allow_extra_args(false);
  };
  auto scale_opt = [&o](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--scale", o.scale, "Upscaling factor")
                    ->check(CLI::IsMember({std::size_t{2}, std::size_t{3}, std::size_t{4}}));
    if (required) opt->required();
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  config_opts(train_cmd);
  common(train_cmd);
  scale_opt(train_cmd, false);
  train_cmd->add_option("--seed", o.seed, "Random seed");
  train_cmd->add_option("--variant", o.variant, "full|eeb_only|oeb_no_serial|oeb_no_residual|plain_convs");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint and/or bicubic on a dataset");
  config_opts(eval_cmd);
  common(eval_cmd);
  scale_opt(eval_cmd, false);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  eval_cmd->add_option("--dataset", o.dataset, "Directory with HR/ and LR_x{s}/")->required();
  eval_cmd->add_option("--baseline", o.baseline, "Also score a baseline (bicubic)");
  eval_cmd->add_option("--output", o.output, "TSV destination (default eval_x{s}.tsv)");

  CLI::App* sr_cmd = app.add_subcommand("sr", "Super-resolve one PNG");
  common(sr_cmd);
  scale_opt(sr_cmd, false);
  sr_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  sr_cmd->add_option("--input", o.input, "Input PNG")->required();
  sr_cmd->add_option("--output", o.output, "Output PNG")->required();

  CLI::App* degrade_cmd = app.add_subcommand("degrade", "Synthesize an LR set with bicubic");
  scale_opt(degrade_cmd, true);
  degrade_cmd->add_option("--hr", o.hr_dir, "Directory of HR PNGs")->required();
  degrade_cmd->add_option("--out", o.out_dir, "Output directory")->required();

  CLI::App* inspect_cmd = app.add_subcommand("inspect", "Describe a checkpoint");
  inspect_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << one_line(e.what()) << "\n";
    return exit_code_for("usage");
  }

  try {
    if (*train_cmd || *eval_cmd || *sr_cmd) apply_threads(o);
    if (*train_cmd) return cmd_train(o, out, err);
    if (*eval_cmd) return cmd_eval(o, out);
    if (*sr_cmd) return cmd_sr(o, out);
    if (*degrade_cmd) return cmd_degrade(o, out, err);
    return cmd_inspect(o, out);
  } catch (const Error& e) {
    err << "error[" << e.kind() << "]: " << one_line(e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error[io]: " << one_line(e.what()) << "\n";
    return exit_code_for("io");
  } catch (const std::exception& e) {
    err << "error[internal]: " << one_line(e.what()) << "\n";
    return 1;
  }
}

}  // namespace csrnet
