// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csrnet/tensor.hpp"

namespace csrnet {

/// Stride-1 "same" convolution geometry. Kernel extents are odd and the
/// padding is (k - 1) / 2 on each axis, so output H, W equal input H, W.
struct ConvSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t pad_h = 1;
  std::size_t pad_w = 1;

  static ConvSpec same(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw) {
    return {in, out, kh, kw, (kh - 1) / 2, (kw - 1) / 2};
  }

  Shape weight_shape() const { return {out_channels, in_channels, kernel_h, kernel_w}; }
  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
  std::size_t param_count() const { return patch_size() * out_channels + out_channels; }

  void validate() const;
  bool operator==(const ConvSpec&) const = default;
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> grad_x;
  BasicTensor<T> grad_w;
  std::vector<T> grad_b;
};

/// im2col + GEMM convolution. out[n,o,y,x] = b[o] + sum w[o,i,dy,dx] * xpad[n,i,y+dy,x+dx].
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              std::span<const T> b, const ConvSpec& spec);

/// Direct quadruple-loop convolution. Slow; kept as the reference path.
template <typename T>
BasicTensor<T> conv2d_direct(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             std::span<const T> b, const ConvSpec& spec);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             const BasicTensor<T>& grad_out, const ConvSpec& spec);

/// Accumulating form used by the graph: adds into grad_w / grad_b, and into
/// grad_x when it is non-null. Buffers must already have the right shapes.
template <typename T>
void conv2d_backward_accumulate(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                const BasicTensor<T>& grad_out, const ConvSpec& spec,
                                BasicTensor<T>* grad_x, BasicTensor<T>& grad_w,
                                std::span<T> grad_b);

/// Patch matrix of batch item `n`: (C*KH*KW) x (H*W), rows ordered (c, dy, dx).
template <typename T>
BasicTensor<T> im2col(const BasicTensor<T>& x, const ConvSpec& spec, std::size_t n = 0);

/// Plain matrix product of rank-2 tensors.
template <typename T>
BasicTensor<T> gemm(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// (N, C*r*r, H, W) -> (N, C, H*r, W*r).
template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& x, std::size_t r);

/// Inverse index map of pixel_shuffle; also its backward.
template <typename T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& y, std::size_t r);

}  // namespace csrnet
