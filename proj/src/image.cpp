// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

namespace csrnet {

std::uint8_t quantize_sample(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

RealImage to_real(const ImageBuffer& img) {
  RealImage out(img.width, img.height, img.channels);
  std::copy(img.data.begin(), img.data.end(), out.data.begin());
  return out;
}

ImageBuffer quantize(const RealImage& img) {
  ImageBuffer out(img.width, img.height, img.channels);
  std::transform(img.data.begin(), img.data.end(), out.data.begin(), quantize_sample);
  return out;
}

ImageBuffer load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.string().c_str()) == 0) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
    png_image_free(&image);
    throw IoError("16-bit PNG not supported: " + path.string());
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                       : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  const std::size_t stored = PNG_IMAGE_PIXEL_CHANNELS(image.format);
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("corrupt PNG " + path.string() + ": " + msg);
  }
  const std::size_t keep = color ? 3 : 1;
  ImageBuffer out(image.width, image.height, keep);
  const std::size_t pixels = out.width * out.height;
  for (std::size_t i = 0; i < pixels; ++i) {
    for (std::size_t c = 0; c < keep; ++c) out.data[i * keep + c] = raw[i * stored + c];
  }
  return out;
}

void save_png(const ImageBuffer& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3) {
    throw ConfigError("save_png supports 1 or 3 channels, got " + std::to_string(img.channels));
  }
  if (img.width == 0 || img.height == 0 || img.data.size() != img.width * img.height * img.channels) {
    throw ConfigError("save_png: malformed image buffer");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&image, path.string().c_str(), 0, img.data.data(), 0, nullptr) == 0) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels == 3) return img;
  if (img.channels != 1) throw ConfigError("to_rgb expects 1 or 3 channels");
  ImageBuffer out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
  }
  return out;
}

ImageBuffer crop(const ImageBuffer& img, std::size_t x, std::size_t y, std::size_t w,
                 std::size_t h) {
  if (x + w > img.width || y + h > img.height) {
    throw ConfigError("crop window exceeds " + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + " image");
  }
  ImageBuffer out(w, h, img.channels);
  const std::size_t row = w * img.channels;
  for (std::size_t yy = 0; yy < h; ++yy) {
    const auto src = img.data.begin() +
                     static_cast<std::ptrdiff_t>(((y + yy) * img.width + x) * img.channels);
    std::copy(src, src + static_cast<std::ptrdiff_t>(row),
              out.data.begin() + static_cast<std::ptrdiff_t>(yy * row));
  }
  return out;
}

ImageBuffer mod_crop(const ImageBuffer& img, std::size_t scale) {
  if (scale == 0) throw ConfigError("mod_crop scale must be >= 1");
  const std::size_t w = img.width - img.width % scale;
  const std::size_t h = img.height - img.height % scale;
  if (w == 0 || h == 0) throw ConfigError("image smaller than the scale factor");
  return crop(img, 0, 0, w, h);
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.width, img.height, img.channels);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(img.width - 1 - x, y, c) = img.at(x, y, c);
      }
    }
  }
  return out;
}

ImageBuffer rotate90_cw(const ImageBuffer& img) {
  ImageBuffer out(img.height, img.width, img.channels);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(img.height - 1 - y, x, c) = img.at(x, y, c);
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> images_to_tensor(const std::vector<ImageBuffer>& imgs) {
  if (imgs.empty()) throw ConfigError("images_to_tensor: no images");
  const std::size_t w = imgs.front().width, h = imgs.front().height;
  BasicTensor<T> t({imgs.size(), 3, h, w});
  for (std::size_t n = 0; n < imgs.size(); ++n) {
    const ImageBuffer& img = imgs[n];
    if (img.width != w || img.height != h) throw ConfigError("images_to_tensor: size mismatch");
    if (img.channels != 1 && img.channels != 3) throw ConfigError("images_to_tensor: channels");
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src_c = img.channels == 3 ? c : 0;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          t.at(n, c, y, x) = static_cast<T>(img.at(x, y, src_c)) / T(255);
        }
      }
    }
  }
  return t;
}

template <typename T>
RealImage tensor_to_real(const BasicTensor<T>& t, std::size_t n) {
  if (t.shape().rank() != 4 || n >= t.n()) throw ConfigError("tensor_to_real: bad tensor");
  RealImage out(t.w(), t.h(), t.c());
  for (std::size_t c = 0; c < t.c(); ++c) {
    for (std::size_t y = 0; y < t.h(); ++y) {
      for (std::size_t x = 0; x < t.w(); ++x) {
        out.at(x, y, c) = static_cast<double>(t.at(n, c, y, x)) * 255.0;
      }
    }
  }
  return out;
}

template <typename T>
ImageBuffer tensor_to_image(const BasicTensor<T>& t, std::size_t n) {
  return quantize(tensor_to_real(t, n));
}

template Tensor images_to_tensor<float>(const std::vector<ImageBuffer>&);
template TensorD images_to_tensor<double>(const std::vector<ImageBuffer>&);
template RealImage tensor_to_real<float>(const Tensor&, std::size_t);
template RealImage tensor_to_real<double>(const TensorD&, std::size_t);
template ImageBuffer tensor_to_image<float>(const Tensor&, std::size_t);
template ImageBuffer tensor_to_image<double>(const TensorD&, std::size_t);

}  // namespace csrnet
