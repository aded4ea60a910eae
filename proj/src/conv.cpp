// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/conv.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstring>

#include "csrnet/parallel.hpp"

namespace csrnet {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// Upper bound on im2col buffer elements per tile.
constexpr std::size_t kTileElems = std::size_t{1} << 20;

std::size_t tile_rows(const ConvSpec& spec, std::size_t h, std::size_t w) {
  const std::size_t per_row = spec.patch_size() * w;
  return std::clamp<std::size_t>(kTileElems / std::max<std::size_t>(per_row, 1), 1, h);
}

bool is_pointwise(const ConvSpec& spec) {
  return spec.kernel_h == 1 && spec.kernel_w == 1 && spec.pad_h == 0 && spec.pad_w == 0;
}

// Fills cols (K x rows*W) with the receptive fields of output rows [y0, y0+rows).
template <typename T>
void im2col_rows(const T* img, std::size_t h, std::size_t w, const ConvSpec& spec,
                 std::size_t y0, std::size_t rows, T* cols) {
  const std::size_t p = rows * w;
  const auto ph = static_cast<std::ptrdiff_t>(spec.pad_h);
  const auto pw = static_cast<std::ptrdiff_t>(spec.pad_w);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < spec.in_channels; ++c) {
    const T* plane = img + c * h * w;
    for (std::size_t dy = 0; dy < spec.kernel_h; ++dy) {
      for (std::size_t dx = 0; dx < spec.kernel_w; ++dx) {
        T* row = cols + ((c * spec.kernel_h + dy) * spec.kernel_w + dx) * p;
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(dx) - pw;
        const std::ptrdiff_t x_begin = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t x_end = std::min<std::ptrdiff_t>(sw, sw - shift);
        for (std::size_t yy = 0; yy < rows; ++yy) {
          T* dst = row + yy * w;
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y0 + yy + dy) - ph;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h) || x_begin >= x_end) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = plane + iy * sw;
          std::fill(dst, dst + x_begin, T(0));
          std::memcpy(dst + x_begin, src + x_begin + shift,
                      static_cast<std::size_t>(x_end - x_begin) * sizeof(T));
          std::fill(dst + x_end, dst + w, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col_rows: scatters cols back into img (accumulating).
template <typename T>
void col2im_rows(const T* cols, std::size_t h, std::size_t w, const ConvSpec& spec,
                 std::size_t y0, std::size_t rows, T* img) {
  const std::size_t p = rows * w;
  const auto ph = static_cast<std::ptrdiff_t>(spec.pad_h);
  const auto pw = static_cast<std::ptrdiff_t>(spec.pad_w);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < spec.in_channels; ++c) {
    T* plane = img + c * h * w;
    for (std::size_t dy = 0; dy < spec.kernel_h; ++dy) {
      for (std::size_t dx = 0; dx < spec.kernel_w; ++dx) {
        const T* row = cols + ((c * spec.kernel_h + dy) * spec.kernel_w + dx) * p;
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(dx) - pw;
        const std::ptrdiff_t x_begin = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t x_end = std::min<std::ptrdiff_t>(sw, sw - shift);
        for (std::size_t yy = 0; yy < rows; ++yy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y0 + yy + dy) - ph;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          const T* src = row + yy * w;
          T* dst = plane + iy * sw;
          for (std::ptrdiff_t x = x_begin; x < x_end; ++x) dst[x + shift] += src[x];
        }
      }
    }
  }
}

template <typename T>
void check_conv_args(const BasicTensor<T>& x, const BasicTensor<T>& w, std::size_t bias_len,
                     const ConvSpec& spec) {
  spec.validate();
  if (x.shape().rank() != 4) throw ConfigError("conv input must be rank 4, got " + x.shape().str());
  if (x.c() != spec.in_channels) {
    throw ConfigError("conv input has " + std::to_string(x.c()) + " channels, expected " +
                      std::to_string(spec.in_channels));
  }
  if (w.shape() != spec.weight_shape()) {
    throw ConfigError("conv weight shape " + w.shape().str() + " does not match " +
                      spec.weight_shape().str());
  }
  if (bias_len != spec.out_channels) {
    throw ConfigError("conv bias length " + std::to_string(bias_len) + " != out channels " +
                      std::to_string(spec.out_channels));
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels == 0 || out_channels == 0) throw ConfigError("conv channel counts must be >= 1");
  if (kernel_h % 2 == 0 || kernel_w % 2 == 0) throw ConfigError("conv kernel extents must be odd");
  if (pad_h != (kernel_h - 1) / 2 || pad_w != (kernel_w - 1) / 2) {
    throw ConfigError("conv padding must be (k-1)/2 for same-size output");
  }
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              std::span<const T> b, const ConvSpec& spec) {
  check_conv_args(x, w, b.size(), spec);
  require_finite(x, "conv input");
  const std::size_t n_items = x.n(), h = x.h(), wd = x.w(), hw = h * wd;
  const std::size_t k = spec.patch_size(), o = spec.out_channels;
  BasicTensor<T> out({n_items, o, h, wd});
  const ConstMapMat<T> wm(w.ptr(), o, k, Eigen::OuterStride<>(k));
  const std::size_t tile = tile_rows(spec, h, wd);
  const bool pointwise = is_pointwise(spec);

  parallel_for(n_items, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<T> cols(pointwise ? 0 : k * tile * wd);
    for (std::size_t n = begin; n < end; ++n) {
      const T* img = x.ptr() + n * spec.in_channels * hw;
      T* dst = out.ptr() + n * o * hw;
      for (std::size_t y0 = 0; y0 < h; y0 += tile) {
        const std::size_t rows = std::min(tile, h - y0);
        const std::size_t p = rows * wd;
        MapMat<T> om(dst + y0 * wd, o, p, Eigen::OuterStride<>(hw));
        if (pointwise) {
          om.noalias() = wm * ConstMapMat<T>(img + y0 * wd, k, p, Eigen::OuterStride<>(hw));
        } else {
          im2col_rows(img, h, wd, spec, y0, rows, cols.data());
          om.noalias() = wm * ConstMapMat<T>(cols.data(), k, p, Eigen::OuterStride<>(p));
        }
      }
      for (std::size_t oc = 0; oc < o; ++oc) {
        T* plane = dst + oc * hw;
        const T bias = b[oc];
        for (std::size_t i = 0; i < hw; ++i) plane[i] += bias;
      }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> conv2d_direct(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             std::span<const T> b, const ConvSpec& spec) {
  check_conv_args(x, w, b.size(), spec);
  require_finite(x, "conv input");
  const auto h = static_cast<std::ptrdiff_t>(x.h());
  const auto wd = static_cast<std::ptrdiff_t>(x.w());
  BasicTensor<T> out({x.n(), spec.out_channels, x.h(), x.w()});
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
      for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t xx = 0; xx < wd; ++xx) {
          T acc = b[oc];
          for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
            for (std::size_t dy = 0; dy < spec.kernel_h; ++dy) {
              const std::ptrdiff_t iy = y + static_cast<std::ptrdiff_t>(dy) -
                                        static_cast<std::ptrdiff_t>(spec.pad_h);
              if (iy < 0 || iy >= h) continue;
              for (std::size_t dx = 0; dx < spec.kernel_w; ++dx) {
                const std::ptrdiff_t ix = xx + static_cast<std::ptrdiff_t>(dx) -
                                          static_cast<std::ptrdiff_t>(spec.pad_w);
                if (ix < 0 || ix >= wd) continue;
                acc += w.at(oc, ic, dy, dx) *
                       x.at(n, ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
            }
          }
          out.at(n, oc, static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
void conv2d_backward_accumulate(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                const BasicTensor<T>& grad_out, const ConvSpec& spec,
                                BasicTensor<T>* grad_x, BasicTensor<T>& grad_w,
                                std::span<T> grad_b) {
  check_conv_args(x, w, grad_b.size(), spec);
  const Shape out_shape{x.n(), spec.out_channels, x.h(), x.w()};
  if (grad_out.shape() != out_shape) {
    throw ConfigError("conv grad_out shape " + grad_out.shape().str() + " != " + out_shape.str());
  }
  if (grad_w.shape() != w.shape()) throw ConfigError("conv grad_w buffer has wrong shape");
  if (grad_x != nullptr && grad_x->shape() != x.shape()) {
    throw ConfigError("conv grad_x buffer has wrong shape");
  }
  const std::size_t n_items = x.n(), h = x.h(), wd = x.w(), hw = h * wd;
  const std::size_t k = spec.patch_size(), o = spec.out_channels, cin = spec.in_channels;
  const ConstMapMat<T> wm(w.ptr(), o, k, Eigen::OuterStride<>(k));
  const std::size_t tile = tile_rows(spec, h, wd);
  const bool pointwise = is_pointwise(spec);

  const std::size_t chunks = parallel_chunks(n_items);
  std::vector<RowMat<T>> part_w(chunks, RowMat<T>::Zero(o, k));
  std::vector<std::vector<T>> part_b(chunks, std::vector<T>(o, T(0)));

  parallel_for(n_items, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::vector<T> cols(pointwise ? 0 : k * tile * wd);
    std::vector<T> gcols(pointwise ? 0 : k * tile * wd);
    RowMat<T>& gw = part_w[chunk];
    std::vector<T>& gb = part_b[chunk];
    for (std::size_t n = begin; n < end; ++n) {
      const T* img = x.ptr() + n * cin * hw;
      const T* gout = grad_out.ptr() + n * o * hw;
      for (std::size_t y0 = 0; y0 < h; y0 += tile) {
        const std::size_t rows = std::min(tile, h - y0);
        const std::size_t p = rows * wd;
        const ConstMapMat<T> gm(gout + y0 * wd, o, p, Eigen::OuterStride<>(hw));
        if (pointwise) {
          const ConstMapMat<T> xm(img + y0 * wd, k, p, Eigen::OuterStride<>(hw));
          gw.noalias() += gm * xm.transpose();
          if (grad_x != nullptr) {
            MapMat<T> gx(grad_x->ptr() + n * cin * hw + y0 * wd, k, p, Eigen::OuterStride<>(hw));
            gx.noalias() += wm.transpose() * gm;
          }
        } else {
          im2col_rows(img, h, wd, spec, y0, rows, cols.data());
          const ConstMapMat<T> cm(cols.data(), k, p, Eigen::OuterStride<>(p));
          gw.noalias() += gm * cm.transpose();
          if (grad_x != nullptr) {
            MapMat<T> gc(gcols.data(), k, p, Eigen::OuterStride<>(p));
            gc.noalias() = wm.transpose() * gm;
            col2im_rows(gcols.data(), h, wd, spec, y0, rows, grad_x->ptr() + n * cin * hw);
          }
        }
      }
      for (std::size_t oc = 0; oc < o; ++oc) {
        const T* plane = gout + oc * hw;
        T acc = T(0);
        for (std::size_t i = 0; i < hw; ++i) acc += plane[i];
        gb[oc] += acc;
      }
    }
  });

  MapMat<T> gw_out(grad_w.ptr(), o, k, Eigen::OuterStride<>(k));
  for (std::size_t c = 0; c < chunks; ++c) {
    gw_out += part_w[c];
    for (std::size_t oc = 0; oc < o; ++oc) grad_b[oc] += part_b[c][oc];
  }
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             const BasicTensor<T>& grad_out, const ConvSpec& spec) {
  ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(w.shape()),
                 std::vector<T>(spec.out_channels, T(0))};
  conv2d_backward_accumulate(x, w, grad_out, spec, &g.grad_x, g.grad_w, std::span<T>(g.grad_b));
  return g;
}

template <typename T>
BasicTensor<T> im2col(const BasicTensor<T>& x, const ConvSpec& spec, std::size_t n) {
  spec.validate();
  if (x.shape().rank() != 4 || x.c() != spec.in_channels || n >= x.n()) {
    throw ConfigError("im2col: input " + x.shape().str() + " does not fit spec");
  }
  BasicTensor<T> cols({spec.patch_size(), x.h() * x.w()});
  im2col_rows(x.ptr() + n * x.c() * x.h() * x.w(), x.h(), x.w(), spec, 0, x.h(), cols.ptr());
  return cols;
}

template <typename T>
BasicTensor<T> gemm(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ConfigError("gemm: cannot multiply " + a.shape().str() + " by " + b.shape().str());
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  BasicTensor<T> c({m, n});
  MapMat<T> cm(c.ptr(), m, n, Eigen::OuterStride<>(n));
  cm.noalias() = ConstMapMat<T>(a.ptr(), m, k, Eigen::OuterStride<>(k)) *
                 ConstMapMat<T>(b.ptr(), k, n, Eigen::OuterStride<>(n));
  return c;
}

template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& x, std::size_t r) {
  if (x.shape().rank() != 4 || r == 0 || x.c() % (r * r) != 0) {
    throw ConfigError("pixel_shuffle: channels of " + x.shape().str() + " not divisible by " +
                      std::to_string(r * r));
  }
  const std::size_t c_out = x.c() / (r * r);
  BasicTensor<T> out({x.n(), c_out, x.h() * r, x.w() * r});
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t c = 0; c < c_out; ++c) {
      for (std::size_t y = 0; y < x.h() * r; ++y) {
        for (std::size_t xx = 0; xx < x.w() * r; ++xx) {
          out.at(n, c, y, xx) = x.at(n, c * r * r + r * (y % r) + (xx % r), y / r, xx / r);
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& y, std::size_t r) {
  if (y.shape().rank() != 4 || r == 0 || y.h() % r != 0 || y.w() % r != 0) {
    throw ConfigError("pixel_unshuffle: spatial extents of " + y.shape().str() +
                      " not divisible by " + std::to_string(r));
  }
  BasicTensor<T> out({y.n(), y.c() * r * r, y.h() / r, y.w() / r});
  for (std::size_t n = 0; n < y.n(); ++n) {
    for (std::size_t c = 0; c < y.c(); ++c) {
      for (std::size_t yy = 0; yy < y.h(); ++yy) {
        for (std::size_t xx = 0; xx < y.w(); ++xx) {
          out.at(n, c * r * r + r * (yy % r) + (xx % r), yy / r, xx / r) = y.at(n, c, yy, xx);
        }
      }
    }
  }
  return out;
}

#define CSRNET_INSTANTIATE_CONV(T)                                                             \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                         std::span<const T>, const ConvSpec&);                 \
  template BasicTensor<T> conv2d_direct(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        std::span<const T>, const ConvSpec&);                  \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        const BasicTensor<T>&, const ConvSpec&);               \
  template void conv2d_backward_accumulate(const BasicTensor<T>&, const BasicTensor<T>&,       \
                                           const BasicTensor<T>&, const ConvSpec&,             \
                                           BasicTensor<T>*, BasicTensor<T>&, std::span<T>);    \
  template BasicTensor<T> im2col(const BasicTensor<T>&, const ConvSpec&, std::size_t);         \
  template BasicTensor<T> gemm(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> pixel_shuffle(const BasicTensor<T>&, std::size_t);                   \
  template BasicTensor<T> pixel_unshuffle(const BasicTensor<T>&, std::size_t);

CSRNET_INSTANTIATE_CONV(float)
CSRNET_INSTANTIATE_CONV(double)

#undef CSRNET_INSTANTIATE_CONV

}  // namespace csrnet
