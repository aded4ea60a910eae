// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <cmath>
#include <sstream>

#include "csrnet/app.hpp"

namespace csrnet::testing {

template <typename T>
BasicTensor<T> naive_matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  BasicTensor<T> c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += static_cast<double>(a.at(i, p)) * static_cast<double>(b.at(p, j));
      }
      c.at(i, j) = static_cast<T>(acc);
    }
  }
  return c;
}

template BasicTensor<float> naive_matmul(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> naive_matmul(const BasicTensor<double>&, const BasicTensor<double>&);

template <typename T>
void randomize_params(LayerGraph<T>& g, std::uint64_t seed, double gain, double bias_std) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Parameter<T>& p : g.params()) {
    const double sd = p.fan_in > 0 ? gain * std::sqrt(2.0 / static_cast<double>(p.fan_in))
                                   : bias_std;
    for (T& v : p.value.data()) v = static_cast<T>(normal(rng) * sd);
  }
}

template void randomize_params(LayerGraph<float>&, std::uint64_t, double, double);
template void randomize_params(LayerGraph<double>&, std::uint64_t, double, double);

std::optional<Screened> screen_seed(LayerGraph<double>& g, const Shape& input_shape,
                                    double margin, std::uint64_t start, std::size_t attempts,
                                    double gain, double bias_std) {
  for (std::uint64_t s = start; s < start + attempts; ++s) {
    randomize_params(g, s, gain, bias_std);
    TensorD x = random_tensor<double>(input_shape, s * 7919 + 17);
    g.forward(x);
    const double m = g.min_relu_margin();
    if (m >= margin) return Screened{s, std::move(x), m};
  }
  return std::nullopt;
}

std::size_t closed_form_params(const CsrnetConfig& cfg) {
  const std::size_t f = cfg.features;
  const std::size_t c = cfg.image_channels;
  auto conv = [](std::size_t kh, std::size_t kw, std::size_t in, std::size_t out) {
    return kh * kw * in * out + out;
  };
  auto asym = [&](std::size_t in, std::size_t out) {
    return conv(1, 3, in, out) + conv(3, 3, in, out) + conv(3, 1, in, out);
  };
  const std::size_t eeb = 2 * conv(3, 3, f, f);
  std::size_t odd = 0;
  switch (cfg.variant) {
    case Variant::full:
    case Variant::oeb_no_residual: odd = 4 * asym(f, f) + asym(2 * f, f); break;
    case Variant::eeb_only: odd = eeb; break;
    case Variant::oeb_no_serial: odd = 4 * asym(f, f) + conv(1, 1, 2 * f, f); break;
    case Variant::plain_convs: odd = 3 * conv(3, 3, f, f); break;
  }
  std::size_t up = 0;
  switch (cfg.scale) {
    case 2: up = conv(3, 3, f, 4 * f); break;
    case 3: up = conv(3, 3, f, 9 * f); break;
    case 4: up = 2 * conv(3, 3, f, 4 * f); break;
    default: break;
  }
  return conv(3, 3, c, f) + cfg.n_pairs * (odd + eeb) + conv(3, 3, f, f) + up +
         conv(3, 3, f, c);
}

double naive_ssim(const Plane& a, const Plane& b) {
  constexpr int k = 11;
  double w[k][k];
  double total = 0.0;
  for (int dy = 0; dy < k; ++dy) {
    for (int dx = 0; dx < k; ++dx) {
      const double ry = dy - 5, rx = dx - 5;
      w[dy][dx] = std::exp(-(rx * rx + ry * ry) / (2.0 * 1.5 * 1.5));
      total += w[dy][dx];
    }
  }
  const double c1 = std::pow(0.01 * 255.0, 2), c2 = std::pow(0.03 * 255.0, 2);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + k <= a.height; ++y) {
    for (std::size_t x = 0; x + k <= a.width; ++x) {
      double ma = 0, mb = 0;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const double ww = w[dy][dx] / total;
          ma += ww * a.at(x + dx, y + dy);
          mb += ww * b.at(x + dx, y + dy);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const double ww = w[dy][dx] / total;
          const double da = a.at(x + dx, y + dy) - ma, db = b.at(x + dx, y + dy) - mb;
          va += ww * da * da;
          vb += ww * db * db;
          cov += ww * da * db;
        }
      }
      sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

std::filesystem::path data_dir() { return CSRNET_TEST_DATA_DIR; }

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("csrnet_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"csrnet"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace csrnet::testing
