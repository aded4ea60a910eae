// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "csrnet/tensor.hpp"

namespace csrnet {

/// 8-bit image, row-major, channels interleaved (1 = gray, 3 = RGB).
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> data;

  ImageBuffer() = default;
  ImageBuffer(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), data(w * h * c, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
    return data[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return data[(y * width + x) * channels + c];
  }
  bool operator==(const ImageBuffer&) const = default;
};

/// Real-valued image on the 0..255 scale, same layout as ImageBuffer.
struct RealImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  RealImage() = default;
  RealImage(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0)
      : width(w), height(h), channels(c), data(w * h * c, fill) {}

  double& at(std::size_t x, std::size_t y, std::size_t c) {
    return data[(y * width + x) * channels + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return data[(y * width + x) * channels + c];
  }
};

/// Clamp to [0, 255] and round half away from zero.
std::uint8_t quantize_sample(double v);
RealImage to_real(const ImageBuffer& img);
ImageBuffer quantize(const RealImage& img);

/// PNG I/O. 8-bit gray, gray+alpha, RGB, RGBA and palette files load as 1 or
/// 3 channels (alpha dropped). 16-bit files are rejected with IoError.
ImageBuffer load_png(const std::filesystem::path& path);
void save_png(const ImageBuffer& img, const std::filesystem::path& path);

/// Gray input replicated to three channels; RGB returned unchanged.
ImageBuffer to_rgb(const ImageBuffer& img);
ImageBuffer crop(const ImageBuffer& img, std::size_t x, std::size_t y, std::size_t w,
                 std::size_t h);
/// Crops the bottom/right so both extents are multiples of `scale`.
ImageBuffer mod_crop(const ImageBuffer& img, std::size_t scale);
ImageBuffer flip_horizontal(const ImageBuffer& img);
ImageBuffer rotate90_cw(const ImageBuffer& img);

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

/// MATLAB-convention bicubic resampling: Keys a = -0.5, kernel widened by
/// 1/f with weights f*W(f*x) when shrinking by f < 1, weights normalized to
/// sum 1, border pixels replicated. Separable, horizontal pass first, real
/// arithmetic throughout.
RealImage bicubic_resize_real(const RealImage& img, std::size_t out_w, std::size_t out_h);
/// As above, rounded to 8 bits at the end.
ImageBuffer bicubic_resize(const ImageBuffer& img, std::size_t out_w, std::size_t out_h);

/// (N, 3, H, W) tensor in [0, 1] from same-sized images. Gray is replicated.
template <typename T = float>
BasicTensor<T> images_to_tensor(const std::vector<ImageBuffer>& imgs);
/// Item `n` of a (N, C, H, W) tensor in [0, 1], scaled to 0..255 (not rounded).
template <typename T = float>
RealImage tensor_to_real(const BasicTensor<T>& t, std::size_t n = 0);
template <typename T = float>
ImageBuffer tensor_to_image(const BasicTensor<T>& t, std::size_t n = 0);

// Dataset preparation.

struct Manifest {
  std::filesystem::path path;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pairs;  // (hr, lr)
  std::vector<std::pair<std::filesystem::path, std::string>> errors;
};

/// Sorted list of *.png files in `dir`.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

/// For each HR PNG: crop to a multiple of `scale`, bicubic-downscale by
/// `scale`, write the result under `out_dir` with the same filename. Writes
/// `out_dir/manifest.tsv` with one "hr<TAB>lr" line per success and a
/// "# error<TAB>path<TAB>reason" line per unreadable input.
Manifest make_lr_set(const std::filesystem::path& hr_dir, std::size_t scale,
                     const std::filesystem::path& out_dir);

// Training patches.

struct AugmentFlags {
  bool flip = false;
  bool rotate = false;
  bool operator==(const AugmentFlags&) const = default;
};

struct PatchPair {
  ImageBuffer lr;
  ImageBuffer hr;
  std::size_t hr_x = 0;  // top-left of the HR crop
  std::size_t hr_y = 0;
  AugmentFlags flags;
};

/// HR crop of `hr_patch` x `hr_patch` at offsets that are multiples of
/// `scale`, drawn uniformly, and the matching LR crop. ConfigError if the
/// images are too small or their extents are not related by `scale`.
PatchPair sample_patch_pair(const ImageBuffer& hr, const ImageBuffer& lr, std::size_t scale,
                            std::size_t hr_patch, std::mt19937_64& rng);

/// Flip horizontally, then rotate 90 degrees clockwise, as flagged; both
/// patches get the same transform.
PatchPair apply_augment(PatchPair pair, AugmentFlags flags);
/// Draws flip and rotate independently with probability 1/2 each.
PatchPair augment(PatchPair pair, std::mt19937_64& rng);

}  // namespace csrnet
