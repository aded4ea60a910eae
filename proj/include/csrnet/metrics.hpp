// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "csrnet/image.hpp"
#include "csrnet/tensor.hpp"

namespace csrnet {

template <typename T>
struct MaeResult {
  double loss = 0.0;
  BasicTensor<T> grad;  // d loss / d pred
};

/// mean |pred - ref| over every element; grad = sign(pred - ref) / count
/// with sign(0) = 0.
template <typename T>
MaeResult<T> mae_loss(const BasicTensor<T>& pred, const BasicTensor<T>& ref);

/// How super-resolved images are scored.
struct EvalProtocol {
  std::size_t shave = 0;  // pixels dropped from every side
  bool quantize = true;   // round to 8 bits before scoring
  bool y_only = true;     // score the BT.601 luma plane only

  /// Border equal to the scale factor, quantized, Y only.
  static EvalProtocol for_scale(std::size_t scale) { return {scale, true, true}; }
};

/// Single real-valued plane, row-major.
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
};

/// Studio-swing luma: 16 + (65.481 R + 128.553 G + 24.966 B) / 255, range [16, 235].
/// Gray images are treated as R = G = B.
Plane rgb_to_y(const RealImage& img);
Plane rgb_to_y(const ImageBuffer& img);

/// Planes actually scored under `proto`: quantized, reduced to Y, shaved.
std::vector<Plane> metric_planes(const RealImage& img, const EvalProtocol& proto);

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(255^2 / MSE); kPsnrIdentical when MSE is 0.
double psnr(const RealImage& a, const RealImage& b, const EvalProtocol& proto);
double psnr(const ImageBuffer& a, const ImageBuffer& b, const EvalProtocol& proto);
double psnr_planes(const std::vector<Plane>& a, const std::vector<Plane>& b);

/// Mean single-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1 = (0.01*255)^2,
/// C2 = (0.03*255)^2, averaged over valid window positions (and planes).
double ssim(const RealImage& a, const RealImage& b, const EvalProtocol& proto);
double ssim(const ImageBuffer& a, const ImageBuffer& b, const EvalProtocol& proto);
double ssim_plane(const Plane& a, const Plane& b);

/// Normalized 11-tap Gaussian (sigma 1.5) used by ssim_plane.
const std::vector<double>& ssim_gaussian_1d();

}  // namespace csrnet
