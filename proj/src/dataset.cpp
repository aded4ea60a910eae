// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>

#include "csrnet/image.hpp"

namespace csrnet {

namespace fs = std::filesystem;

std::vector<fs::path> list_pngs(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Manifest make_lr_set(const fs::path& hr_dir, std::size_t scale, const fs::path& out_dir) {
  if (scale < 2 || scale > 4) throw ConfigError("scale must be 2, 3 or 4");
  const auto inputs = list_pngs(hr_dir);
  fs::create_directories(out_dir);
  Manifest m;
  m.path = out_dir / "manifest.tsv";
  for (const fs::path& hr_path : inputs) {
    try {
      const ImageBuffer hr = mod_crop(load_png(hr_path), scale);
      const ImageBuffer lr = bicubic_resize(hr, hr.width / scale, hr.height / scale);
      const fs::path lr_path = out_dir / hr_path.filename();
      save_png(lr, lr_path);
      m.pairs.emplace_back(hr_path, lr_path);
    } catch (const Error& e) {
      m.errors.emplace_back(hr_path, e.what());
    }
  }
  std::ofstream out(m.path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + m.path.string());
  for (const auto& [hr, lr] : m.pairs) out << hr.string() << '\t' << lr.string() << '\n';
  for (const auto& [hr, why] : m.errors) out << "# error\t" << hr.string() << '\t' << why << '\n';
  return m;
}

PatchPair sample_patch_pair(const ImageBuffer& hr, const ImageBuffer& lr, std::size_t scale,
                            std::size_t hr_patch, std::mt19937_64& rng) {
  if (scale == 0 || hr_patch == 0 || hr_patch % scale != 0) {
    throw ConfigError("HR patch size " + std::to_string(hr_patch) + " is not a multiple of scale");
  }
  if (hr.width != lr.width * scale || hr.height != lr.height * scale) {
    throw ConfigError("HR extents are not scale x LR extents");
  }
  if (hr.width < hr_patch || hr.height < hr_patch) {
    throw ConfigError("image " + std::to_string(hr.width) + "x" + std::to_string(hr.height) +
                      " smaller than the " + std::to_string(hr_patch) + " px patch");
  }
  const std::size_t lr_patch = hr_patch / scale;
  std::uniform_int_distribution<std::size_t> pick_x(0, lr.width - lr_patch);
  std::uniform_int_distribution<std::size_t> pick_y(0, lr.height - lr_patch);
  const std::size_t lx = pick_x(rng);
  const std::size_t ly = pick_y(rng);
  PatchPair p;
  p.lr = crop(lr, lx, ly, lr_patch, lr_patch);
  p.hr = crop(hr, lx * scale, ly * scale, hr_patch, hr_patch);
  p.hr_x = lx * scale;
  p.hr_y = ly * scale;
  return p;
}

PatchPair apply_augment(PatchPair pair, AugmentFlags flags) {
  if (flags.flip) {
    pair.lr = flip_horizontal(pair.lr);
    pair.hr = flip_horizontal(pair.hr);
  }
  if (flags.rotate) {
    pair.lr = rotate90_cw(pair.lr);
    pair.hr = rotate90_cw(pair.hr);
  }
  pair.flags = flags;
  return pair;
}

PatchPair augment(PatchPair pair, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  AugmentFlags flags;
  flags.flip = coin(rng);
  flags.rotate = coin(rng);
  return apply_augment(std::move(pair), flags);
}

}  // namespace csrnet
