// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "csrnet/image.hpp"

namespace csrnet {
namespace {

constexpr double kKeysA = -0.5;

// Sparse weights mapping one output index to a window of input indices.
struct Contributions {
  std::size_t taps = 0;
  std::vector<std::size_t> index;  // out_len * taps, already clamped
  std::vector<double> weight;      // out_len * taps, rows sum to 1
};

Contributions contributions(std::size_t in_len, std::size_t out_len) {
  const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  const bool shrink = scale < 1.0;
  const double kernel_width = shrink ? 4.0 / scale : 4.0;
  Contributions c;
  c.taps = static_cast<std::size_t>(std::ceil(kernel_width)) + 2;
  c.index.resize(out_len * c.taps);
  c.weight.resize(out_len * c.taps);
  for (std::size_t i = 0; i < out_len; ++i) {
    // 1-based output coordinate mapped into 1-based input space.
    const double u = static_cast<double>(i + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const double left = std::floor(u - kernel_width / 2.0);
    double sum = 0.0;
    for (std::size_t p = 0; p < c.taps; ++p) {
      const double j = left + static_cast<double>(p);
      const double d = u - j;
      const double w = shrink ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
      c.weight[i * c.taps + p] = w;
      sum += w;
      const double clamped = std::clamp(j, 1.0, static_cast<double>(in_len));
      c.index[i * c.taps + p] = static_cast<std::size_t>(clamped) - 1;
    }
    for (std::size_t p = 0; p < c.taps; ++p) c.weight[i * c.taps + p] /= sum;
  }
  return c;
}

}  // namespace

double cubic_kernel(double x) {
  const double a = kKeysA;
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0;
  if (ax < 2.0) return a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a;
  return 0.0;
}

RealImage bicubic_resize_real(const RealImage& img, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) throw ConfigError("bicubic_resize: zero target extent");
  if (img.width == 0 || img.height == 0) throw ConfigError("bicubic_resize: empty input");
  const std::size_t ch = img.channels;

  const Contributions cx = contributions(img.width, out_w);
  RealImage horiz(out_w, img.height, ch);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t p = 0; p < cx.taps; ++p) {
          acc += cx.weight[x * cx.taps + p] * img.at(cx.index[x * cx.taps + p], y, c);
        }
        horiz.at(x, y, c) = acc;
      }
    }
  }

  const Contributions cy = contributions(img.height, out_h);
  RealImage out(out_w, out_h, ch);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t p = 0; p < cy.taps; ++p) {
          acc += cy.weight[y * cy.taps + p] * horiz.at(x, cy.index[y * cy.taps + p], c);
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

ImageBuffer bicubic_resize(const ImageBuffer& img, std::size_t out_w, std::size_t out_h) {
  return quantize(bicubic_resize_real(to_real(img), out_w, out_h));
}

}  // namespace csrnet
