// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "csrnet/app.hpp"
#include "csrnet/parallel.hpp"
#include "support.hpp"

namespace csrnet {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;
using testing::random_vector;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Finite-difference gradients.
Verdict gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t crossings = 0;
  std::size_t graphs = 0;
  std::string failed;
  auto check = [&](const std::string& name, LayerGraph<double>& g, const Shape& in,
                   std::uint64_t start) {
    ++graphs;
    const auto s = testing::screen_seed(g, in, 1e-3, start, 2000);
    if (!s) {
      failed += " " + name + "(unscreened)";
      return;
    }
    const GradCheckReport r = grad_check(g, s->input, 1e-4, 1e-4);
    worst = std::max(worst, r.worst_rel_error);
    crossings += r.relu_crossings;
    if (!r.passed) failed += " " + name;
  };
  {
    LayerGraph<double> g(2);
    g.set_output(g.conv(g.input(), 3, 3, 3, "c"));
    check("conv", g, {2, 2, 4, 5}, 1);
  }
  {
    LayerGraph<double> g(2);
    g.set_output(g.asym_conv(g.input(), 3, "a"));
    check("asym_conv", g, {1, 2, 5, 4}, 1);
  }
  {
    LayerGraph<double> g(2);
    g.set_output(g.relu(g.input(), "r"));
    check("relu", g, {1, 2, 4, 4}, 1);
  }
  {
    LayerGraph<double> g(2);
    const NodeId a = g.conv(g.input(), 3, 1, 3, "a");
    g.set_output(g.concat(a, g.input(), "cat"));
    check("concat", g, {1, 2, 4, 4}, 1);
  }
  {
    LayerGraph<double> g(2);
    const NodeId a = g.conv(g.input(), 2, 3, 1, "a");
    g.set_output(g.add(a, g.input(), "sum"));
    check("add", g, {1, 2, 4, 4}, 1);
  }
  {
    LayerGraph<double> g(2);
    const NodeId a = g.conv(g.input(), 8, 3, 3, "a");
    g.set_output(g.pixel_shuffle(a, 2, "ps"));
    check("pixel_shuffle", g, {1, 2, 3, 3}, 1);
  }
  {
    LayerGraph<double> g(4);
    g.set_output(add_oeb(g, g.input(), 4, "oeb"));
    check("oeb", g, {1, 4, 5, 5}, 1);
  }
  {
    LayerGraph<double> g(4);
    g.set_output(add_eeb(g, g.input(), 4, "eeb"));
    check("eeb", g, {1, 4, 5, 5}, 1);
  }
  {
    LayerGraph<double> g = build_csrnet<double>(CsrnetConfig::mini(8, 2, 2));
    check("mini_csrnet", g, {1, 3, 8, 8}, 1);
  }
  const double secs = seconds_since(t0);
  const bool ok = failed.empty() && crossings == 0 && secs < 300.0;
  return {ok, fmt("%zu graphs, worst rel err %.3e, relu crossings %zu, %.1f s%s", graphs, worst,
                  crossings, secs, failed.empty() ? "" : (" failed:" + failed).c_str())};
}

// 2. im2col+GEMM against the direct loop.
Verdict conv_oracle() {
  std::mt19937_64 rng(77);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  double worst = 0.0;
  std::size_t cases = 0;
  for (const auto& [kh, kw] : std::vector<std::pair<std::size_t, std::size_t>>{{3, 3}, {1, 3}, {3, 1}}) {
    for (int t = 0; t < 100; ++t, ++cases) {
      const std::size_t n = pick(1, 3), c = pick(1, 16), o = pick(1, 16), h = pick(1, 16),
                        w = pick(1, 16);
      const ConvSpec spec = ConvSpec::same(c, o, kh, kw);
      const auto x = random_tensor<float>({n, c, h, w}, 10000 + cases);
      const auto wt = random_tensor<float>(spec.weight_shape(), 20000 + cases);
      const auto b = random_vector<float>(o, 30000 + cases);
      const Tensor fast = conv2d_forward(x, wt, std::span<const float>(b), spec);
      const Tensor ref = conv2d_direct(x, wt, std::span<const float>(b), spec);
      worst = std::max(worst, testing::max_abs_diff(fast, ref));
    }
  }
  return {worst < 1e-5, fmt("%zu cases, max abs diff %.3e", cases, worst)};
}

// 3. Zero-parameter identities.
Verdict zero_identities() {
  const std::size_t f = 64;
  const auto x = random_tensor<float>({1, f, 9, 7}, 5);
  LayerGraph<float> eeb(f);
  eeb.set_output(add_eeb(eeb, eeb.input(), f, "eeb"));
  LayerGraph<float> oeb(f);
  oeb.set_output(add_oeb(oeb, oeb.input(), f, "oeb"));
  LayerGraph<float> net = build_csrnet<float>(CsrnetConfig{});
  for (auto* g : {&eeb, &oeb, &net}) {
    for (auto& p : g->params()) p.value.fill(0.0f);
  }
  const bool e = eeb.forward(x) == x;
  const bool o = oeb.forward(x) == relu(x);
  const Tensor y = net.infer(random_tensor<float>({1, 3, 9, 7}, 6, 0.0, 1.0));
  bool z = y.shape() == Shape{1, 3, 18, 14};
  for (float v : y.data()) z = z && v == 0.0f;
  return {e && o && z, fmt("EEB==x %s, OEB==relu(x) %s, CSRNet==0 %s", e ? "yes" : "no",
                           o ? "yes" : "no", z ? "yes" : "no")};
}

// 4. Learning-rate schedule.
Verdict schedule() {
  const double eta_min = 1e-7, eta_max = 1e-4;
  ScheduleState s = ScheduleState::make(10.0, 2.0, eta_min, eta_max);
  double worst = 0.0;
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    ScheduleState q = s;
    q.cursor = frac * q.period;
    const double expected =
        eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(frac * std::numbers::pi));
    worst = std::max(worst, std::abs(cosine_lr(q) - expected));
  }
  std::vector<double> restarts;
  bool at_max = true;
  const int per_epoch = 16;
  for (int i = 1; i <= 320 * per_epoch; ++i) {
    const std::uint64_t before = s.restart;
    schedule_advance(s, 1.0 / per_epoch);
    if (s.restart != before) {
      restarts.push_back(double(i) / per_epoch);
      at_max = at_max && cosine_lr(s) == eta_max;
    }
  }
  const std::vector<double> expected{10, 30, 70, 150, 310};
  const bool ok = worst <= 1e-12 && restarts == expected && at_max;
  std::string seen;
  for (double r : restarts) seen += fmt("%s%g", seen.empty() ? "" : ",", r);
  return {ok, fmt("max |lr - closed form| %.2e, restarts at {%s}, lr==eta_max after restart %s",
                  worst, seen.c_str(), at_max ? "yes" : "no")};
}

// 5. Bicubic baseline on Set5.
Verdict bicubic_set5() {
  const auto t0 = std::chrono::steady_clock::now();
  const char* env = std::getenv("CSRNET_SET5_DIR");
  const fs::path root = env != nullptr ? fs::path(env) : testing::data_dir() / "Set5";
  fs::path hr_dir = root / "HR";
  std::error_code ec;
  if (!fs::is_directory(hr_dir, ec)) hr_dir = root;
  std::vector<fs::path> files;
  if (fs::is_directory(hr_dir, ec)) files = list_pngs(hr_dir);
  if (files.size() != 5) {
    return {false, fmt("Set5 HR images not found (looked in %s, found %zu PNGs; set "
                       "CSRNET_SET5_DIR)",
                       hr_dir.string().c_str(), files.size())};
  }
  struct Target {
    std::size_t scale;
    double psnr;
    double ssim;  // < 0: not checked
  };
  const EvalProtocol proto{2, true, true};
  bool ok = true;
  std::string detail;
  for (const Target t : {Target{2, 33.66, 0.9299}, Target{3, 30.39, -1}, Target{4, 28.42, -1}}) {
    double p = 0.0, q = 0.0;
    for (const fs::path& f : files) {
      const ImageBuffer hr = mod_crop(load_png(f), t.scale);
      const ImageBuffer lr = bicubic_resize(hr, hr.width / t.scale, hr.height / t.scale);
      const RealImage up = bicubic_resize_real(to_real(lr), hr.width, hr.height);
      p += psnr(up, to_real(hr), proto) / 5.0;
      q += ssim(up, to_real(hr), proto) / 5.0;
    }
    ok = ok && std::abs(p - t.psnr) <= 0.15 && (t.ssim < 0 || std::abs(q - t.ssim) <= 0.003);
    detail += fmt("x%zu %.2f dB/%.4f (target %.2f) ", t.scale, p, q, t.psnr);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 120.0;
  return {ok, detail + fmt("%.1f s", secs)};
}

// 6. Overfitting sixteen fixed patches.
constexpr std::size_t kOverfitIterations = 2000;
constexpr std::size_t kOverfitEpochs = 20;
constexpr double kOverfitLr = 2e-3;

Verdict overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = testing::temp_dir("acceptance_overfit");
  fs::create_directories(root / "data" / "HR");
  fs::copy_file(testing::data_dir() / "astronaut.png", root / "data" / "HR" / "astronaut.png");

  RunConfig cfg;
  cfg.model = CsrnetConfig::mini(32, 2, 2);
  cfg.optimizer.lr = kOverfitLr;
  cfg.schedule.t0_epochs = static_cast<double>(kOverfitEpochs);
  cfg.data.train_dir = root / "data";
  cfg.data.fixed_patches = 16;
  cfg.data.batch = 16;
  cfg.data.epochs = kOverfitEpochs;
  cfg.data.iterations_per_epoch = kOverfitIterations / kOverfitEpochs;
  cfg.log.output_dir = root / "run";
  std::ostringstream sink;
  const TrainingData data = load_training_data(cfg, sink);
  const TrainOutcome out = train(cfg, data, sink);

  const PatchSampler sampler(data, cfg);
  const std::vector<PatchPair> patches = sampler.fixed();
  const LoadedModel m = load_checkpoint(out.checkpoint);
  const auto [x, y] = make_batch(patches, 0, patches.size());
  const Tensor pred = m.graph.infer(x);
  const double mae = mae_loss(pred, y).loss;

  const EvalProtocol proto = EvalProtocol::for_scale(2);
  double model_psnr = 0.0, bicubic_psnr = 0.0;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const RealImage ref = to_real(patches[i].hr);
    const RealImage up = bicubic_resize_real(to_real(patches[i].lr), ref.width, ref.height);
    model_psnr += psnr(tensor_to_real(pred, i), ref, proto) / double(patches.size());
    bicubic_psnr += psnr(up, ref, proto) / double(patches.size());
  }
  const double secs = seconds_since(t0);
  const bool ok = out.iterations == kOverfitIterations && mae < 0.02 &&
                  model_psnr - bicubic_psnr >= 1.0 && secs < 900.0;
  return {ok, fmt("%zu iterations, MAE %.4f (last batch %.4f), PSNR %.2f vs bicubic %.2f dB "
                  "(gain %+.2f), %.0f s",
                  out.iterations, mae, out.last_loss, model_psnr, bicubic_psnr,
                  model_psnr - bicubic_psnr, secs)};
}

// 7. Two identical training runs.
Verdict determinism() {
  const fs::path root = testing::temp_dir("acceptance_determinism");
  fs::create_directories(root / "data" / "HR");
  const ImageBuffer src = load_png(testing::data_dir() / "coffee.png");
  save_png(crop(src, 120, 80, 64, 64), root / "data" / "HR" / "a.png");
  save_png(crop(src, 300, 200, 56, 60), root / "data" / "HR" / "b.png");
  auto run = [&](const std::string& name) {
    return testing::run_cli({"train", "--threads", "2", "--seed", "11",
                             "--set", "data.train_dir=" + (root / "data").string(),
                             "--set", "log.output_dir=" + (root / name).string(),
                             "--set", "model.features=8", "--set", "model.n_pairs=2",
                             "--set", "model.tap_src=3", "--set", "model.tap_dst=5",
                             "--set", "data.batch=4", "--set", "data.epochs=3",
                             "--set", "data.iterations_per_epoch=4",
                             "--set", "schedule.t0_epochs=1"});
  };
  const auto a = run("a");
  const auto b = run("b");
  if (a.code != 0 || b.code != 0) return {false, "training failed: " + a.err + b.err};
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string log_a = slurp(root / "a" / "train_log.tsv");
  const bool logs = !log_a.empty() && log_a == slurp(root / "b" / "train_log.tsv");
  const bool ckpt = slurp(root / "a" / "final.csrn") == slurp(root / "b" / "final.csrn");
  return {logs && ckpt, fmt("loss logs identical %s, final checkpoints identical %s",
                            logs ? "yes" : "no", ckpt ? "yes" : "no")};
}

// 8. Checkpoint round trip and corruption.
Verdict checkpoint() {
  const fs::path dir = testing::temp_dir("acceptance_checkpoint");
  const CsrnetConfig cfg = CsrnetConfig::mini(16, 2, 3);
  LayerGraph<float> g = build_csrnet<float>(cfg);
  init_params(g, 9);
  const auto x = random_tensor<float>({2, 3, 7, 6}, 10, 0.0, 1.0);
  const Tensor before = g.forward(x);
  save_checkpoint(g, cfg, dir / "m.csrn");
  const bool same = load_checkpoint(dir / "m.csrn").graph.forward(x) == before;

  std::ifstream in(dir / "m.csrn", std::ios::binary);
  std::vector<char> bytes{std::istreambuf_iterator<char>(in), {}};
  std::size_t rejected = 0, tried = 0;
  auto expect_integrity = [&](const std::vector<char>& b) {
    ++tried;
    std::ofstream(dir / "bad.csrn", std::ios::binary | std::ios::trunc)
        .write(b.data(), static_cast<std::streamsize>(b.size()));
    try {
      load_checkpoint(dir / "bad.csrn");
    } catch (const IntegrityError&) {
      ++rejected;
    } catch (...) {
    }
  };
  expect_integrity(std::vector<char>(bytes.begin(), bytes.end() - 1));
  expect_integrity(std::vector<char>(bytes.begin(), bytes.begin() + bytes.size() / 2));
  for (std::size_t pos : {std::size_t{30}, bytes.size() / 3, bytes.size() - 3}) {
    std::vector<char> b = bytes;
    b[pos] ^= 0x01;
    expect_integrity(b);
  }
  return {same && rejected == tried,
          fmt("reload forward bitwise equal %s, corrupt files rejected %zu/%zu",
              same ? "yes" : "no", rejected, tried)};
}

// 9. Parameter counts.
Verdict param_counts() {
  const std::size_t def = count_params(build_csrnet<float>(CsrnetConfig{}));
  bool ok = def == 7283459 && testing::closed_form_params(CsrnetConfig{}) == 7283459;
  std::size_t agreeing = 0, total = 0;
  for (std::size_t s : {2u, 3u, 4u}) {
    for (Variant v : kAllVariants) {
      CsrnetConfig cfg;
      cfg.scale = s;
      cfg.variant = v;
      ++total;
      if (count_params(build_variant<float>(cfg, v)) == testing::closed_form_params(cfg)) ++agreeing;
    }
  }
  ok = ok && agreeing == total;
  return {ok, fmt("default x2 %zu (expected 7283459), variants agreeing with closed form %zu/%zu",
                  def, agreeing, total)};
}

// 10. Metric unit suite.
Verdict metrics() {
  std::vector<Plane> a{{4, 4, std::vector<double>(16, 100.0)}};
  std::vector<Plane> b{{4, 4, std::vector<double>(16, 101.0)}};
  const double p = psnr_planes(a, b);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 255);
  RealImage x(24, 20, 3), y(24, 20, 3);
  for (double& v : x.data) v = u(rng);
  for (double& v : y.data) v = u(rng);
  const EvalProtocol proto = EvalProtocol::for_scale(2);
  const double s = ssim(x, x, proto);
  RealImage white(1, 1, 3, 255.0);
  const double yw = rgb_to_y(white).data[0];
  const bool sym = psnr(x, y, proto) == psnr(y, x, proto) && ssim(x, y, proto) == ssim(y, x, proto);
  const bool ok = std::abs(p - 48.1308) <= 1e-3 && std::abs(s - 1.0) <= 1e-9 &&
                  std::abs(yw - 235.0) <= 1e-6 && sym;
  return {ok, fmt("PSNR(MSE 1) %.4f dB, SSIM(identical) %.12f, Y(white) %.6f, symmetric %s", p, s,
                  yw, sym ? "yes" : "no")};
}

}  // namespace
}  // namespace csrnet

int main() {
  using namespace csrnet;
  const unsigned hw = std::thread::hardware_concurrency();
  set_num_threads(static_cast<int>(hw == 0 ? 1 : hw));
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradients},
      {"convolution oracle equivalence", conv_oracle},
      {"zero-parameter identities", zero_identities},
      {"scheduler exactness", schedule},
      {"bicubic baseline on Set5", bicubic_set5},
      {"overfit smoke test", overfit},
      {"training determinism", determinism},
      {"checkpoint round trip", checkpoint},
      {"parameter count", param_counts},
      {"metric unit suite", metrics},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
