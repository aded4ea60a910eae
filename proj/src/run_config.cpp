// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csrnet/app.hpp"

namespace csrnet {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "model.features",        "model.n_pairs",          "model.scale",
      "model.tap_src",         "model.tap_dst",          "model.variant",
      "optimizer.kind",        "optimizer.lr",           "optimizer.beta1",
      "optimizer.beta2",       "optimizer.eps",          "schedule.t0_epochs",
      "schedule.t_mult",       "schedule.eta_min",       "data.train_dir",
      "data.patch",            "data.batch",             "data.epochs",
      "data.iterations_per_epoch", "data.seed",          "data.augment",
      "data.fixed_patches",    "data.max_images",        "eval.shave",
      "eval.quantize",         "eval.y_only",            "log.output_dir",
      "log.checkpoint_interval"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "model.features") model.features = parse_size(key, v);
  else if (key == "model.n_pairs") model.n_pairs = parse_size(key, v);
  else if (key == "model.scale") model.scale = parse_size(key, v);
  else if (key == "model.tap_src") model.tap_src = parse_size(key, v);
  else if (key == "model.tap_dst") model.tap_dst = parse_size(key, v);
  else if (key == "model.variant") model.variant = parse_variant(v);
  else if (key == "optimizer.kind") {
    if (v != "adam" && v != "sgd") throw ConfigError("optimizer.kind must be adam or sgd");
    optimizer.kind = v;
  } else if (key == "optimizer.lr") optimizer.lr = parse_double(key, v);
  else if (key == "optimizer.beta1") optimizer.adam.beta1 = parse_double(key, v);
  else if (key == "optimizer.beta2") optimizer.adam.beta2 = parse_double(key, v);
  else if (key == "optimizer.eps") optimizer.adam.eps = parse_double(key, v);
  else if (key == "schedule.t0_epochs") schedule.t0_epochs = parse_double(key, v);
  else if (key == "schedule.t_mult") schedule.t_mult = parse_double(key, v);
  else if (key == "schedule.eta_min") schedule.eta_min = parse_double(key, v);
  else if (key == "data.train_dir") data.train_dir = v;
  else if (key == "data.patch") data.patch = parse_size(key, v);
  else if (key == "data.batch") data.batch = parse_size(key, v);
  else if (key == "data.epochs") data.epochs = parse_size(key, v);
  else if (key == "data.iterations_per_epoch") data.iterations_per_epoch = parse_size(key, v);
  else if (key == "data.seed") data.seed = parse_u64(key, v);
  else if (key == "data.augment") data.augment = parse_bool(key, v);
  else if (key == "data.fixed_patches") data.fixed_patches = parse_size(key, v);
  else if (key == "data.max_images") data.max_images = parse_size(key, v);
  else if (key == "eval.shave") {
    if (v == "auto") eval.shave.reset();
    else eval.shave = parse_size(key, v);
  } else if (key == "eval.quantize") eval.quantize = parse_bool(key, v);
  else if (key == "eval.y_only") eval.y_only = parse_bool(key, v);
  else if (key == "log.output_dir") log.output_dir = v;
  else if (key == "log.checkpoint_interval") log.checkpoint_interval = parse_size(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string RunConfig::dump() const {
  std::ostringstream o;
  o << "model.features = " << model.features << '\n'
    << "model.n_pairs = " << model.n_pairs << '\n'
    << "model.scale = " << model.scale << '\n'
    << "model.tap_src = " << model.tap_src << '\n'
    << "model.tap_dst = " << model.tap_dst << '\n'
    << "model.variant = " << variant_name(model.variant) << '\n'
    << "optimizer.kind = " << optimizer.kind << '\n'
    << "optimizer.lr = " << fmt_double(optimizer.lr) << '\n'
    << "optimizer.beta1 = " << fmt_double(optimizer.adam.beta1) << '\n'
    << "optimizer.beta2 = " << fmt_double(optimizer.adam.beta2) << '\n'
    << "optimizer.eps = " << fmt_double(optimizer.adam.eps) << '\n'
    << "schedule.t0_epochs = " << fmt_double(schedule.t0_epochs) << '\n'
    << "schedule.t_mult = " << fmt_double(schedule.t_mult) << '\n'
    << "schedule.eta_min = " << fmt_double(schedule.eta_min) << '\n'
    << "data.train_dir = " << data.train_dir.string() << '\n'
    << "data.patch = " << data.patch << '\n'
    << "data.batch = " << data.batch << '\n'
    << "data.epochs = " << data.epochs << '\n'
    << "data.iterations_per_epoch = " << data.iterations_per_epoch << '\n'
    << "data.seed = " << data.seed << '\n'
    << "data.augment = " << fmt_bool(data.augment) << '\n'
    << "data.fixed_patches = " << data.fixed_patches << '\n'
    << "data.max_images = " << data.max_images << '\n'
    << "eval.shave = " << (eval.shave ? std::to_string(*eval.shave) : std::string("auto")) << '\n'
    << "eval.quantize = " << fmt_bool(eval.quantize) << '\n'
    << "eval.y_only = " << fmt_bool(eval.y_only) << '\n'
    << "log.output_dir = " << log.output_dir.string() << '\n'
    << "log.checkpoint_interval = " << log.checkpoint_interval << '\n';
  return o.str();
}

void RunConfig::validate() const {
  model.validate();
  if (optimizer.lr <= 0.0) throw ConfigError("optimizer.lr must be positive");
  if (optimizer.adam.beta1 < 0.0 || optimizer.adam.beta1 >= 1.0 || optimizer.adam.beta2 < 0.0 ||
      optimizer.adam.beta2 >= 1.0) {
    throw ConfigError("optimizer betas must lie in [0, 1)");
  }
  if (optimizer.adam.eps <= 0.0) throw ConfigError("optimizer.eps must be positive");
  if (schedule.t0_epochs <= 0.0) throw ConfigError("schedule.t0_epochs must be positive");
  if (schedule.t_mult < 1.0) throw ConfigError("schedule.t_mult must be >= 1");
  if (schedule.eta_min < 0.0 || schedule.eta_min > optimizer.lr) {
    throw ConfigError("schedule.eta_min must lie in [0, optimizer.lr]");
  }
  if (data.patch == 0 || data.patch % model.scale != 0) {
    throw ConfigError("data.patch must be a positive multiple of model.scale");
  }
  if (data.batch == 0) throw ConfigError("data.batch must be positive");
}

EvalProtocol RunConfig::protocol() const {
  return {eval.shave.value_or(model.scale), eval.quantize, eval.y_only};
}

}  // namespace csrnet
