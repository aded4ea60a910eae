// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "csrnet/image.hpp"
#include "csrnet/metrics.hpp"
#include "support.hpp"

namespace csrnet {
namespace {

namespace fs = std::filesystem;
using testing::data_dir;
using testing::temp_dir;

ImageBuffer random_image(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  ImageBuffer img(w, h, c);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(u(rng));
  return img;
}

TEST(Png, RoundTripRgbAndGray) {
  const fs::path dir = temp_dir("png_roundtrip");
  for (std::size_t c : {1u, 3u}) {
    const ImageBuffer img = random_image(13, 7, c, c);
    save_png(img, dir / "a.png");
    const ImageBuffer back = load_png(dir / "a.png");
    EXPECT_EQ(back.channels, c);
    EXPECT_EQ(back, img);
  }
  const ImageBuffer one = random_image(1, 1, 3, 9);
  save_png(one, dir / "one.png");
  EXPECT_EQ(load_png(dir / "one.png"), one);
}

TEST(Png, BundledImagesLoad) {
  for (const char* name : {"astronaut.png", "chelsea.png", "coffee.png"}) {
    const ImageBuffer img = load_png(data_dir() / name);
    EXPECT_EQ(img.channels, 3u) << name;
    EXPECT_GT(img.width, 100u);
  }
}

TEST(Png, MissingAndCorruptFilesAreIoErrors) {
  const fs::path dir = temp_dir("png_errors");
  try {
    load_png(dir / "absent.png");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.png"), std::string::npos);
  }
  std::ofstream(dir / "junk.png") << "definitely not a png";
  EXPECT_THROW(load_png(dir / "junk.png"), IoError);
}

// Minimal 1x1 16-bit grayscale PNG (stored deflate block).
TEST(Png, SixteenBitRejected) {
  const unsigned char bytes[] = {
      0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D, 0x49, 0x48,
      0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x10, 0x00, 0x00, 0x00,
      0x00, 0xB7, 0x1F, 0xA3, 0x70, 0x00, 0x00, 0x00, 0x0E, 0x49, 0x44, 0x41, 0x54, 0x78,
      0x01, 0x01, 0x03, 0x00, 0xFC, 0xFF, 0x00, 0x12, 0x34, 0x00, 0x49, 0x00, 0x47, 0xD2,
      0x2D, 0x7F, 0x5A, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4E, 0x44, 0xAE, 0x42, 0x60,
      0x82};
  const fs::path p = temp_dir("png_16bit") / "deep.png";
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes), sizeof bytes);
  EXPECT_THROW(load_png(p), IoError);
}

TEST(Bicubic, KernelValues) {
  EXPECT_EQ(cubic_kernel(0.0), 1.0);
  EXPECT_EQ(cubic_kernel(1.0), 0.0);
  EXPECT_EQ(cubic_kernel(-1.0), 0.0);
  EXPECT_EQ(cubic_kernel(2.0), 0.0);
  EXPECT_EQ(cubic_kernel(2.5), 0.0);
  EXPECT_DOUBLE_EQ(cubic_kernel(0.5), 0.5625);
  EXPECT_DOUBLE_EQ(cubic_kernel(-1.5), -0.0625);
}

TEST(Bicubic, SameSizeIsIdentity) {
  const ImageBuffer img = random_image(17, 11, 3, 2);
  EXPECT_EQ(bicubic_resize(img, 17, 11), img);
}

TEST(Bicubic, ConstantImageStaysConstant) {
  const ImageBuffer flat(20, 14, 3, 77);
  for (auto [w, h] : std::vector<std::pair<std::size_t, std::size_t>>{
           {10, 7}, {40, 28}, {7, 5}, {60, 42}, {1, 1}}) {
    const ImageBuffer out = bicubic_resize(flat, w, h);
    ASSERT_EQ(out.width, w);
    for (auto v : out.data) EXPECT_EQ(v, 77);
  }
  EXPECT_THROW(bicubic_resize(flat, 0, 5), ConfigError);
}

// Downscale by 2: antialiased kernel W(x/2)/2 over 8 taps, weights normalized,
// replicate-padded borders. Evaluated directly for one interior pixel of a ramp.
TEST(Bicubic, DownscaleMatchesDirectKernelSum) {
  RealImage ramp(16, 1, 1);
  for (std::size_t x = 0; x < 16; ++x) ramp.data[x] = double(x * x);
  const RealImage out = bicubic_resize_real(ramp, 8, 1);
  const std::size_t ox = 4;
  const double center = (ox + 0.5) * 2.0 - 0.5;
  double acc = 0.0, wsum = 0.0;
  for (int k = -4; k <= 5; ++k) {
    const long ix = static_cast<long>(std::floor(center)) + k;
    const double w = 0.5 * cubic_kernel((center - double(ix)) / 2.0);
    const long cx = std::clamp(ix, 0L, 15L);
    acc += w * ramp.data[cx];
    wsum += w;
  }
  EXPECT_NEAR(out.data[ox], acc / wsum, 1e-9);
}

TEST(Bicubic, NaturalImageRoundTripAboveSanityBand) {
  const ImageBuffer hr = mod_crop(load_png(data_dir() / "astronaut.png"), 2);
  const ImageBuffer lr = bicubic_resize(hr, hr.width / 2, hr.height / 2);
  const RealImage up = bicubic_resize_real(to_real(lr), hr.width, hr.height);
  const double v = psnr(up, to_real(hr), EvalProtocol::for_scale(2));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 20.0);
}

TEST(Images, ModCropAndToRgb) {
  const ImageBuffer img = random_image(49, 50, 1, 3);
  const ImageBuffer c = mod_crop(img, 4);
  EXPECT_EQ(c.width, 48u);
  EXPECT_EQ(c.height, 48u);
  EXPECT_EQ(c.at(10, 20, 0), img.at(10, 20, 0));
  const ImageBuffer rgb = to_rgb(img);
  EXPECT_EQ(rgb.channels, 3u);
  EXPECT_EQ(rgb.at(5, 6, 2), img.at(5, 6, 0));
}

TEST(Images, TensorConversion) {
  const ImageBuffer img = random_image(5, 4, 3, 4);
  const Tensor t = images_to_tensor<float>({img, img});
  EXPECT_EQ(t.shape(), (Shape{2, 3, 4, 5}));
  EXPECT_FLOAT_EQ(t.at(1, 2, 3, 4), img.at(4, 3, 2) / 255.0f);
  EXPECT_EQ(tensor_to_image(t, 1), img);
  EXPECT_EQ(quantize_sample(-1.0), 0);
  EXPECT_EQ(quantize_sample(0.5), 1);
  EXPECT_EQ(quantize_sample(254.5), 255);
  EXPECT_EQ(quantize_sample(1e9), 255);
}

TEST(LrSet, CropsDownscalesAndRecordsErrors) {
  const fs::path root = temp_dir("lrset");
  fs::create_directories(root / "hr");
  save_png(random_image(48, 48, 3, 5), root / "hr" / "a.png");
  save_png(random_image(49, 49, 3, 6), root / "hr" / "b.png");
  std::ofstream(root / "hr" / "broken.png") << "nope";
  const Manifest m = make_lr_set(root / "hr", 2, root / "lr");
  ASSERT_EQ(m.pairs.size(), 2u);
  ASSERT_EQ(m.errors.size(), 1u);
  EXPECT_EQ(m.errors[0].first.filename(), "broken.png");
  for (const auto& [hr, lr] : m.pairs) {
    const ImageBuffer small = load_png(lr);
    EXPECT_EQ(small.width, 24u);
    EXPECT_EQ(small.height, 24u);
  }
  std::ifstream in(m.path);
  std::string line;
  std::size_t pairs = 0, errors = 0;
  while (std::getline(in, line)) {
    if (line.rfind("# error", 0) == 0) {
      ++errors;
    } else if (!line.empty()) {
      ++pairs;
      EXPECT_NE(line.find('\t'), std::string::npos);
    }
  }
  EXPECT_EQ(pairs, 2u);
  EXPECT_EQ(errors, 1u);
  const ImageBuffer expected = bicubic_resize(mod_crop(random_image(49, 49, 3, 6), 2), 24, 24);
  EXPECT_EQ(load_png(root / "lr" / "b.png"), expected);
}

TEST(Patches, WholeImageIsTheOnlyPair) {
  const ImageBuffer hr = random_image(48, 48, 3, 7);
  const ImageBuffer lr = bicubic_resize(hr, 24, 24);
  std::mt19937_64 rng(1);
  const PatchPair p = sample_patch_pair(hr, lr, 2, 48, rng);
  EXPECT_EQ(p.hr, hr);
  EXPECT_EQ(p.lr, lr);
  EXPECT_EQ(p.hr_x, 0u);
  EXPECT_EQ(p.hr_y, 0u);
}

TEST(Patches, OffsetsAlignedAndPatchesCorrespond) {
  for (std::size_t s : {2u, 3u, 4u}) {
    const ImageBuffer hr = random_image(120, 96, 3, 8 + s);
    const ImageBuffer lr = random_image(120 / s, 96 / s, 3, 20 + s);
    std::mt19937_64 rng(s);
    for (int i = 0; i < 1000; ++i) {
      const PatchPair p = sample_patch_pair(hr, lr, s, 48, rng);
      ASSERT_EQ(p.hr_x % s, 0u);
      ASSERT_EQ(p.hr_y % s, 0u);
      ASSERT_EQ(p.hr.width, 48u);
      ASSERT_EQ(p.lr.width, 48u / s);
      if (i % 100 == 0) {
        EXPECT_EQ(p.hr, crop(hr, p.hr_x, p.hr_y, 48, 48));
        EXPECT_EQ(p.lr, crop(lr, p.hr_x / s, p.hr_y / s, 48 / s, 48 / s));
      }
    }
  }
}

TEST(Patches, SeededSequenceIsDeterministic) {
  const ImageBuffer hr = random_image(100, 80, 3, 30);
  const ImageBuffer lr = random_image(50, 40, 3, 31);
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 50; ++i) {
    const PatchPair pa = augment(sample_patch_pair(hr, lr, 2, 48, a), a);
    const PatchPair pb = augment(sample_patch_pair(hr, lr, 2, 48, b), b);
    EXPECT_EQ(pa.hr_x, pb.hr_x);
    EXPECT_EQ(pa.hr_y, pb.hr_y);
    EXPECT_EQ(pa.flags, pb.flags);
    EXPECT_EQ(pa.hr, pb.hr);
  }
}

TEST(Patches, TooSmallOrMismatchedRejected) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_patch_pair(random_image(40, 40, 3, 1), random_image(20, 20, 3, 2), 2, 48, rng),
               ConfigError);
  EXPECT_THROW(sample_patch_pair(random_image(60, 60, 3, 1), random_image(20, 20, 3, 2), 2, 48, rng),
               ConfigError);
}

TEST(Augment, IdentityAndInvolutions) {
  const ImageBuffer img = random_image(6, 4, 3, 40);
  PatchPair p{random_image(3, 2, 3, 41), img, 0, 0, {}};
  const PatchPair none = apply_augment(p, {false, false});
  EXPECT_EQ(none.hr, img);
  EXPECT_EQ(flip_horizontal(flip_horizontal(img)), img);
  EXPECT_EQ(rotate90_cw(rotate90_cw(rotate90_cw(rotate90_cw(img)))), img);
  const ImageBuffer r = rotate90_cw(img);
  EXPECT_EQ(r.width, 4u);
  EXPECT_EQ(r.height, 6u);
  // Clockwise: the bottom-left source pixel lands at the top-left.
  EXPECT_EQ(r.at(0, 0, 1), img.at(0, 3, 1));
  EXPECT_EQ(flip_horizontal(img).at(0, 1, 2), img.at(5, 1, 2));
}

TEST(Augment, SameTransformOnBothPatches) {
  const ImageBuffer hr = random_image(8, 8, 3, 50);
  const ImageBuffer lr = random_image(4, 4, 3, 51);
  const PatchPair both = apply_augment(PatchPair{lr, hr, 0, 0, {}}, {true, true});
  EXPECT_EQ(both.hr, rotate90_cw(flip_horizontal(hr)));
  EXPECT_EQ(both.lr, rotate90_cw(flip_horizontal(lr)));
  EXPECT_EQ(both.flags, (AugmentFlags{true, true}));
}

TEST(Augment, DrawsAreRoughlyFair) {
  const ImageBuffer hr = random_image(8, 8, 3, 52);
  const ImageBuffer lr = random_image(4, 4, 3, 53);
  std::mt19937_64 rng(9);
  int flips = 0, rots = 0;
  for (int i = 0; i < 2000; ++i) {
    const PatchPair p = augment(PatchPair{lr, hr, 0, 0, {}}, rng);
    flips += p.flags.flip;
    rots += p.flags.rotate;
  }
  EXPECT_NEAR(flips, 1000, 150);
  EXPECT_NEAR(rots, 1000, 150);
}

}  // namespace
}  // namespace csrnet
