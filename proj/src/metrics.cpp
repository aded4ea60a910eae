// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/metrics.hpp"

#include <cmath>

namespace csrnet {

template <typename T>
MaeResult<T> mae_loss(const BasicTensor<T>& pred, const BasicTensor<T>& ref) {
  if (pred.shape() != ref.shape()) {
    throw ConfigError("mae_loss: prediction " + pred.shape().str() + " vs reference " +
                      ref.shape().str());
  }
  const std::size_t count = pred.numel();
  if (count == 0) throw ConfigError("mae_loss: empty tensors");
  MaeResult<T> r;
  r.grad = BasicTensor<T>(pred.shape());
  const T step = T(1) / static_cast<T>(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const T d = pred[i] - ref[i];
    sum += std::abs(static_cast<double>(d));
    r.grad[i] = d > T(0) ? step : (d < T(0) ? -step : T(0));
  }
  r.loss = sum / static_cast<double>(count);
  return r;
}

template MaeResult<float> mae_loss(const Tensor&, const Tensor&);
template MaeResult<double> mae_loss(const TensorD&, const TensorD&);

Plane rgb_to_y(const RealImage& img) {
  if (img.channels != 1 && img.channels != 3) throw ConfigError("rgb_to_y expects 1 or 3 channels");
  Plane p{img.width, img.height, std::vector<double>(img.width * img.height)};
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const double* px = img.data.data() + i * img.channels;
    const double r = px[0];
    const double g = img.channels == 3 ? px[1] : px[0];
    const double b = img.channels == 3 ? px[2] : px[0];
    p.data[i] = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
  }
  return p;
}

Plane rgb_to_y(const ImageBuffer& img) { return rgb_to_y(to_real(img)); }

namespace {

Plane shave_plane(const Plane& p, std::size_t shave) {
  if (p.width <= 2 * shave || p.height <= 2 * shave) {
    throw ConfigError("shave of " + std::to_string(shave) + " px leaves nothing of a " +
                      std::to_string(p.width) + "x" + std::to_string(p.height) + " image");
  }
  Plane out{p.width - 2 * shave, p.height - 2 * shave, {}};
  out.data.reserve(out.width * out.height);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) out.data.push_back(p.at(x + shave, y + shave));
  }
  return out;
}

void check_same_size(const RealImage& a, const RealImage& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw ConfigError("metric inputs differ in size: " + std::to_string(a.width) + "x" +
                      std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                      std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                      std::to_string(b.channels));
  }
}

}  // namespace

std::vector<Plane> metric_planes(const RealImage& img, const EvalProtocol& proto) {
  RealImage src = img;
  if (proto.quantize) {
    for (double& v : src.data) v = quantize_sample(v);
  }
  std::vector<Plane> planes;
  if (proto.y_only) {
    planes.push_back(rgb_to_y(src));
  } else {
    for (std::size_t c = 0; c < src.channels; ++c) {
      Plane p{src.width, src.height, std::vector<double>(src.width * src.height)};
      for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = src.data[i * src.channels + c];
      planes.push_back(std::move(p));
    }
  }
  for (Plane& p : planes) p = shave_plane(p, proto.shave);
  return planes;
}

double psnr_planes(const std::vector<Plane>& a, const std::vector<Plane>& b) {
  if (a.size() != b.size()) throw ConfigError("psnr: plane count mismatch");
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].width != b[k].width || a[k].height != b[k].height) {
      throw ConfigError("psnr: plane size mismatch");
    }
    for (std::size_t i = 0; i < a[k].data.size(); ++i) {
      const double d = a[k].data[i] - b[k].data[i];
      sse += d * d;
    }
    count += a[k].data.size();
  }
  if (count == 0) throw ConfigError("psnr: empty images");
  const double mse = sse / static_cast<double>(count);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const RealImage& a, const RealImage& b, const EvalProtocol& proto) {
  check_same_size(a, b);
  return psnr_planes(metric_planes(a, proto), metric_planes(b, proto));
}

double psnr(const ImageBuffer& a, const ImageBuffer& b, const EvalProtocol& proto) {
  return psnr(to_real(a), to_real(b), proto);
}

const std::vector<double>& ssim_gaussian_1d() {
  static const std::vector<double> taps = [] {
    std::vector<double> g(11);
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
      const double d = i - 5;
      g[i] = std::exp(-(d * d) / (2.0 * 1.5 * 1.5));
      sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
  }();
  return taps;
}

namespace {

// "valid" separable Gaussian filtering of a plane.
Plane filter_valid(const Plane& p) {
  const auto& g = ssim_gaussian_1d();
  const std::size_t k = g.size();
  Plane h{p.width - k + 1, p.height, std::vector<double>((p.width - k + 1) * p.height)};
  for (std::size_t y = 0; y < p.height; ++y) {
    for (std::size_t x = 0; x < h.width; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += g[i] * p.at(x + i, y);
      h.data[y * h.width + x] = acc;
    }
  }
  Plane out{h.width, p.height - k + 1, std::vector<double>(h.width * (p.height - k + 1))};
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += g[i] * h.at(x, y + i);
      out.data[y * out.width + x] = acc;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.width, a.height, std::vector<double>(a.data.size())};
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace

double ssim_plane(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height) throw ConfigError("ssim: plane size mismatch");
  if (a.width < 11 || a.height < 11) {
    throw ConfigError("ssim needs at least 11x11 pixels, got " + std::to_string(a.width) + "x" +
                      std::to_string(a.height));
  }
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const Plane mu_a = filter_valid(a);
  const Plane mu_b = filter_valid(b);
  const Plane e_aa = filter_valid(product(a, a));
  const Plane e_bb = filter_valid(product(b, b));
  const Plane e_ab = filter_valid(product(a, b));
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.data.size(); ++i) {
    const double ma = mu_a.data[i], mb = mu_b.data[i];
    const double va = e_aa.data[i] - ma * ma;
    const double vb = e_bb.data[i] - mb * mb;
    const double cov = e_ab.data[i] - ma * mb;
    sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.data.size());
}

double ssim(const RealImage& a, const RealImage& b, const EvalProtocol& proto) {
  check_same_size(a, b);
  const auto pa = metric_planes(a, proto);
  const auto pb = metric_planes(b, proto);
  double sum = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k) sum += ssim_plane(pa[k], pb[k]);
  return sum / static_cast<double>(pa.size());
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, const EvalProtocol& proto) {
  return ssim(to_real(a), to_real(b), proto);
}

}  // namespace csrnet
