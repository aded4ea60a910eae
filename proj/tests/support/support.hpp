// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "csrnet/graph.hpp"
#include "csrnet/image.hpp"
#include "csrnet/metrics.hpp"
#include "csrnet/model.hpp"
#include "csrnet/tensor.hpp"

namespace csrnet::testing {

/// Uniform [lo, hi) tensor from a seeded generator.
template <typename T>
BasicTensor<T> random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0,
                             double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  BasicTensor<T> t(shape);
  for (T& v : t.data()) v = static_cast<T>(u(rng));
  return t;
}

template <typename T>
std::vector<T> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                             double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<T> v(n);
  for (T& x : v) x = static_cast<T>(u(rng));
  return v;
}

template <typename T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

/// Triple-loop matrix product.
template <typename T>
BasicTensor<T> naive_matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Fills every parameter with N(0, (gain * sqrt(2 / fan_in))^2) weights and
/// N(0, bias_std^2) biases.
template <typename T>
void randomize_params(LayerGraph<T>& g, std::uint64_t seed, double gain = 1.0,
                      double bias_std = 0.1);

/// Seed screening for finite-difference checks: tries seeds start, start+1, ...
/// randomizing parameters and a U(-1,1) input of `input_shape` until the
/// smallest |ReLU pre-activation| is at least `margin`. Leaves the graph
/// parameterized with the accepted seed and returns it with the input.
struct Screened {
  std::uint64_t seed = 0;
  TensorD input;
  double margin = 0.0;
};
std::optional<Screened> screen_seed(LayerGraph<double>& g, const Shape& input_shape,
                                    double margin, std::uint64_t start, std::size_t attempts,
                                    double gain = 1.0, double bias_std = 0.1);

/// Parameter count from per-layer closed forms sum(kh*kw*Cin*Cout + Cout),
/// written independently of the graph builders.
std::size_t closed_form_params(const CsrnetConfig& cfg);

/// Direct sliding-window SSIM: every 11x11 window evaluated from scratch with
/// the 2-D Gaussian exp(-(dx^2+dy^2)/(2*1.5^2)), normalized.
double naive_ssim(const Plane& a, const Plane& b);

/// Directory of bundled test images.
std::filesystem::path data_dir();
/// Fresh empty temporary directory unique to `tag`.
std::filesystem::path temp_dir(const std::string& tag);

/// Runs the command-line entry point in-process.
struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};
CliResult run_cli(const std::vector<std::string>& args);

}  // namespace csrnet::testing
