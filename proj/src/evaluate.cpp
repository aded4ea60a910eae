// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <sstream>

#include "csrnet/app.hpp"

namespace csrnet {

namespace fs = std::filesystem;

RealImage super_resolve(const LayerGraph<float>& g, const ImageBuffer& input) {
  const Tensor x = images_to_tensor<float>({to_rgb(input)});
  return tensor_to_real(g.infer(x));
}

EvalReport evaluate(const EvalRequest& req) {
  if (!req.checkpoint && !req.bicubic) {
    throw ConfigError("eval needs a checkpoint, the bicubic baseline, or both");
  }
  if (req.scale < 2 || req.scale > 4) throw ConfigError("scale must be 2, 3 or 4");
  const std::size_t s = req.scale;
  const fs::path hr_dir = req.dataset_dir / "HR";
  const fs::path lr_dir = req.dataset_dir / ("LR_x" + std::to_string(s));
  std::error_code ec;
  const bool synthesize = !fs::is_directory(lr_dir, ec);

  std::optional<LoadedModel> model;
  if (req.checkpoint) model = load_checkpoint(*req.checkpoint, s);

  EvalReport report;
  report.has_model = model.has_value();
  report.has_bicubic = req.bicubic;
  for (const fs::path& hr_path : list_pngs(hr_dir)) {
    const std::string name = hr_path.filename().string();
    try {
      const ImageBuffer hr = to_rgb(mod_crop(load_png(hr_path), s));
      ImageBuffer lr;
      if (synthesize) {
        lr = bicubic_resize(hr, hr.width / s, hr.height / s);
      } else {
        if (!fs::exists(lr_dir / name)) {
          report.skipped.emplace_back(name, "no LR partner in " + lr_dir.string());
          continue;
        }
        lr = to_rgb(load_png(lr_dir / name));
        if (lr.width * s != hr.width || lr.height * s != hr.height) {
          report.skipped.emplace_back(name, "LR extents are not HR / scale");
          continue;
        }
      }
      const RealImage ref = to_real(hr);
      EvalRow row;
      row.name = name;
      if (model) {
        const RealImage sr = super_resolve(model->graph, lr);
        row.psnr = psnr(sr, ref, req.protocol);
        row.ssim = ssim(sr, ref, req.protocol);
      }
      if (req.bicubic) {
        const RealImage up = bicubic_resize_real(to_real(lr), hr.width, hr.height);
        row.bicubic_psnr = psnr(up, ref, req.protocol);
        row.bicubic_ssim = ssim(up, ref, req.protocol);
      }
      report.rows.push_back(std::move(row));
    } catch (const IoError& e) {
      report.skipped.emplace_back(name, e.what());
    } catch (const ConfigError& e) {
      report.skipped.emplace_back(name, e.what());
    }
  }
  if (report.rows.empty()) {
    throw ConfigError("no evaluable image pairs under " + req.dataset_dir.string());
  }
  const double n = static_cast<double>(report.rows.size());
  report.mean.name = "mean";
  for (const EvalRow& r : report.rows) {
    report.mean.psnr += r.psnr / n;
    report.mean.ssim += r.ssim / n;
    report.mean.bicubic_psnr += r.bicubic_psnr / n;
    report.mean.bicubic_ssim += r.bicubic_ssim / n;
  }
  return report;
}

std::string EvalReport::tsv() const {
  std::ostringstream o;
  o << "image";
  if (has_model) o << "\tpsnr\tssim";
  if (has_bicubic) o << "\tbicubic_psnr\tbicubic_ssim";
  o << '\n';
  char buf[64];
  auto emit = [&](const EvalRow& r) {
    o << r.name;
    if (has_model) {
      std::snprintf(buf, sizeof buf, "\t%.4f\t%.6f", r.psnr, r.ssim);
      o << buf;
    }
    if (has_bicubic) {
      std::snprintf(buf, sizeof buf, "\t%.4f\t%.6f", r.bicubic_psnr, r.bicubic_ssim);
      o << buf;
    }
    o << '\n';
  };
  for (const EvalRow& r : rows) emit(r);
  emit(mean);
  return o.str();
}

}  // namespace csrnet
