// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "csrnet/errors.hpp"

namespace csrnet {

/// Up to four extents. Activations are (N, C, H, W); conv weights are
/// (O, I, KH, KW); biases and matrices use rank 1 and 2.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  std::size_t numel() const;
  std::string str() const;

  bool operator==(const Shape& other) const = default;

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

/// Dense row-major array. Value semantics; copies are deep.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(const Shape& shape, T fill = T(0))
      : shape_(shape), data_(shape.numel(), fill) {}
  BasicTensor(const Shape& shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return shape_.rank() == 0; }

  // (N, C, H, W) accessors for rank-4 tensors.
  std::size_t n() const { return shape_[0]; }
  std::size_t c() const { return shape_[1]; }
  std::size_t h() const { return shape_[2]; }
  std::size_t w() const { return shape_[3]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t a, std::size_t b, std::size_t y, std::size_t x) {
    return data_[((a * shape_[1] + b) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(std::size_t a, std::size_t b, std::size_t y, std::size_t x) const {
    return data_[((a * shape_[1] + b) * shape_[2] + y) * shape_[3] + x];
  }
  T& at(std::size_t r, std::size_t col) { return data_[r * shape_[1] + col]; }
  const T& at(std::size_t r, std::size_t col) const { return data_[r * shape_[1] + col]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool operator==(const BasicTensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Throws NumericError naming `where` if `t` holds NaN or Inf.
template <typename T>
void require_finite(const BasicTensor<T>& t, const std::string& where) {
  if (!t.all_finite()) throw NumericError("non-finite value in " + where);
}

/// Channel slice [begin, end) of a rank-4 tensor.
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t end);

}  // namespace csrnet
