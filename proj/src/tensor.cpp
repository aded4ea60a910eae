// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/tensor.hpp"

#include <cstring>

namespace csrnet {

Shape::Shape(std::initializer_list<std::size_t> dims) {
  if (dims.size() > kMaxRank) throw ConfigError("tensor rank above 4");
  for (std::size_t d : dims) dims_[rank_++] = d;
}

std::size_t Shape::numel() const {
  if (rank_ == 0) return 0;
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::string Shape::str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) s += ",";
    s += std::to_string(dims_[i]);
  }
  return s + ")";
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t end) {
  if (x.shape().rank() != 4 || begin > end || end > x.c()) {
    throw ConfigError("channel slice [" + std::to_string(begin) + "," + std::to_string(end) +
                      ") out of range for " + x.shape().str());
  }
  const std::size_t hw = x.h() * x.w();
  const std::size_t k = end - begin;
  BasicTensor<T> out({x.n(), k, x.h(), x.w()});
  for (std::size_t n = 0; n < x.n(); ++n) {
    std::memcpy(out.ptr() + n * k * hw, x.ptr() + (n * x.c() + begin) * hw, k * hw * sizeof(T));
  }
  return out;
}

template BasicTensor<float> slice_channels(const BasicTensor<float>&, std::size_t, std::size_t);
template BasicTensor<double> slice_channels(const BasicTensor<double>&, std::size_t, std::size_t);

}  // namespace csrnet
