// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/layers.hpp"

#include <cstring>

namespace csrnet {

template <typename T>
AsymConvParams<T> AsymConvParams<T>::zeros(std::size_t in, std::size_t out) {
  AsymConvParams<T> p;
  for (std::size_t k = 0; k < 3; ++k) {
    p.weight[k] = BasicTensor<T>(asym_branch_spec(in, out, k).weight_shape());
    p.bias[k].assign(out, T(0));
  }
  return p;
}

template <typename T>
BasicTensor<T> asym_conv(const BasicTensor<T>& x, const AsymConvParams<T>& p) {
  const std::size_t in = p.in_channels(), out = p.out_channels();
  if (x.shape().rank() != 4 || x.c() != in) {
    throw ConfigError("asym_conv: input " + x.shape().str() + " expects " + std::to_string(in) +
                      " channels");
  }
  BasicTensor<T> y = conv2d_forward(x, p.weight[0], std::span<const T>(p.bias[0]),
                                    asym_branch_spec(in, out, 0));
  for (std::size_t k = 1; k < 3; ++k) {
    add_inplace(y, conv2d_forward(x, p.weight[k], std::span<const T>(p.bias[k]),
                                  asym_branch_spec(in, out, k)));
  }
  return y;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.data()) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& out, const BasicTensor<T>& grad) {
  if (out.shape() != grad.shape()) throw ConfigError("relu_backward: shape mismatch");
  BasicTensor<T> g(grad.shape());
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] = out[i] > T(0) ? grad[i] : T(0);
  return g;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape().rank() != 4 || b.shape().rank() != 4 || a.n() != b.n() || a.h() != b.h() ||
      a.w() != b.w()) {
    throw ConfigError("concat_channels: " + a.shape().str() + " and " + b.shape().str() +
                      " disagree on N, H, W");
  }
  const std::size_t hw = a.h() * a.w();
  const std::size_t c = a.c() + b.c();
  BasicTensor<T> out({a.n(), c, a.h(), a.w()});
  for (std::size_t n = 0; n < a.n(); ++n) {
    T* dst = out.ptr() + n * c * hw;
    if (a.c() > 0) std::memcpy(dst, a.ptr() + n * a.c() * hw, a.c() * hw * sizeof(T));
    if (b.c() > 0) std::memcpy(dst + a.c() * hw, b.ptr() + n * b.c() * hw, b.c() * hw * sizeof(T));
  }
  return out;
}

template <typename T>
void add_inplace(BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ConfigError("add: shape " + a.shape().str() + " != " + b.shape().str());
  }
  T* pa = a.ptr();
  const T* pb = b.ptr();
  for (std::size_t i = 0; i < a.numel(); ++i) pa[i] += pb[i];
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  BasicTensor<T> out = a;
  add_inplace(out, b);
  return out;
}

#define CSRNET_INSTANTIATE_LAYERS(T)                                                        \
  template struct AsymConvParams<T>;                                                        \
  template BasicTensor<T> asym_conv(const BasicTensor<T>&, const AsymConvParams<T>&);      \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                      \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);      \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);    \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template void add_inplace(BasicTensor<T>&, const BasicTensor<T>&);

CSRNET_INSTANTIATE_LAYERS(float)
CSRNET_INSTANTIATE_LAYERS(double)

#undef CSRNET_INSTANTIATE_LAYERS

}  // namespace csrnet
