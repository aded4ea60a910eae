// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "csrnet/conv.hpp"
#include "csrnet/tensor.hpp"

namespace csrnet {

/// The three parallel kernels of an asymmetric convolution, in the order
/// 1x3, 3x3, 3x1. Paddings (0,1), (1,1), (1,0) keep all three outputs co-shaped.
enum class AsymBranch : std::size_t { k1x3 = 0, k3x3 = 1, k3x1 = 2 };

inline constexpr std::array<std::pair<std::size_t, std::size_t>, 3> kAsymKernels{
    {{1, 3}, {3, 3}, {3, 1}}};

inline ConvSpec asym_branch_spec(std::size_t in, std::size_t out, std::size_t branch) {
  return ConvSpec::same(in, out, kAsymKernels[branch].first, kAsymKernels[branch].second);
}

template <typename T>
struct AsymConvParams {
  std::array<BasicTensor<T>, 3> weight;
  std::array<std::vector<T>, 3> bias;

  /// Zero-initialized parameters for in -> out channels.
  static AsymConvParams zeros(std::size_t in, std::size_t out);

  std::size_t in_channels() const { return weight[0].shape()[1]; }
  std::size_t out_channels() const { return weight[0].shape()[0]; }
};

/// C_1x3(x) + C_3x3(x) + C_3x1(x), each with its own bias. The three outputs
/// are summed in kernel order.
template <typename T>
BasicTensor<T> asym_conv(const BasicTensor<T>& x, const AsymConvParams<T>& p);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// grad * (out > 0). The subgradient at 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& out, const BasicTensor<T>& grad);

/// Channel concatenation, `a` first. N, H, W must agree.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// a += b, shapes must match.
template <typename T>
void add_inplace(BasicTensor<T>& a, const BasicTensor<T>& b);

}  // namespace csrnet
