// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/model.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace csrnet {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::eeb_only: return "eeb_only";
    case Variant::oeb_no_serial: return "oeb_no_serial";
    case Variant::oeb_no_residual: return "oeb_no_residual";
    case Variant::plain_convs: return "plain_convs";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

void CsrnetConfig::validate() const {
  if (features == 0) throw ConfigError("features must be >= 1");
  if (n_pairs == 0) throw ConfigError("n_pairs must be >= 1");
  if (scale < 2 || scale > 4) throw ConfigError("scale must be 2, 3 or 4");
  if (image_channels == 0) throw ConfigError("image_channels must be >= 1");
  if (!(tap_src >= 1 && tap_src < tap_dst && tap_dst <= 2 * n_pairs + 1)) {
    throw ConfigError("local residual taps must satisfy 1 <= src < dst <= " +
                      std::to_string(2 * n_pairs + 1) + ", got " + std::to_string(tap_src) +
                      " -> " + std::to_string(tap_dst));
  }
  if (static_cast<std::uint8_t>(variant) > static_cast<std::uint8_t>(Variant::plain_convs)) {
    throw ConfigError("unknown variant tag");
  }
}

CsrnetConfig CsrnetConfig::mini(std::size_t features, std::size_t n_pairs, std::size_t scale) {
  CsrnetConfig cfg;
  cfg.features = features;
  cfg.n_pairs = n_pairs;
  cfg.scale = scale;
  cfg.tap_src = 3;
  cfg.tap_dst = 2 * n_pairs + 1;
  return cfg;
}

namespace {

std::string layer_prefix(const CsrnetConfig& cfg, std::size_t layer) {
  const std::size_t last = cfg.trunk_layers() + 2;
  const int width = last >= 100 ? 3 : 2;
  char buf[16];
  std::snprintf(buf, sizeof buf, "l%0*zu", width, layer);
  return buf;
}

std::string odd_block_kind(Variant v) {
  switch (v) {
    case Variant::eeb_only: return "eeb";
    case Variant::plain_convs: return "plain";
    default: return "oeb";
  }
}

std::string block_prefix(const CsrnetConfig& cfg, std::size_t layer) {
  return layer_prefix(cfg, layer) + "." + (layer % 2 == 0 ? odd_block_kind(cfg.variant) : "eeb");
}

}  // namespace

std::string layer_label(const CsrnetConfig& cfg, std::size_t layer) {
  if (layer == 1 || layer == cfg.trunk_layers() || layer == cfg.trunk_layers() + 2) {
    return layer_prefix(cfg, layer) + ".conv";
  }
  if (layer == cfg.trunk_layers() + 1) return layer_prefix(cfg, layer) + ".up";
  if (layer == 0 || layer > cfg.trunk_layers()) {
    throw ConfigError("no layer " + std::to_string(layer));
  }
  return block_prefix(cfg, layer) + ".out";
}

std::string local_tap_label(const CsrnetConfig& cfg) {
  return layer_prefix(cfg, cfg.tap_dst) + ".tap";
}

std::string global_residual_label(const CsrnetConfig& cfg) {
  return layer_prefix(cfg, cfg.trunk_layers()) + ".global";
}

template <typename T>
NodeId add_oeb(LayerGraph<T>& g, NodeId src, std::size_t features, const std::string& prefix,
               Variant variant) {
  const std::size_t f = features;
  switch (variant) {
    case Variant::eeb_only:
      return add_eeb(g, src, f, prefix);
    case Variant::plain_convs: {
      NodeId cur = src;
      for (int i = 1; i <= 3; ++i) {
        const std::string name = prefix + ".c" + std::to_string(i);
        cur = g.conv(cur, f, 3, 3, name);
        cur = g.relu(cur, i == 3 ? prefix + ".out" : name + ".relu");
      }
      return cur;
    }
    default:
      break;
  }
  const NodeId r0 = g.relu(src, prefix + ".relu_in");
  std::array<NodeId, 2> branch{};
  for (int b = 0; b < 2; ++b) {
    const std::string bp = prefix + ".b" + std::to_string(b + 1);
    NodeId t = g.asym_conv(r0, f, bp + ".a1");
    t = g.relu(t, bp + ".relu");
    branch[b] = g.asym_conv(t, f, bp + ".a2");
  }
  const NodeId cat = g.concat(branch[0], branch[1], prefix + ".cat");
  const NodeId rc = g.relu(cat, prefix + ".relu_cat");
  if (variant == Variant::oeb_no_serial) {
    const NodeId reduce = g.conv(rc, f, 1, 1, prefix + ".reduce");
    return g.relu(reduce, prefix + ".out");
  }
  const NodeId serial = g.asym_conv(rc, f, prefix + ".serial");
  if (variant == Variant::oeb_no_residual) return g.relu(serial, prefix + ".out");
  g.set_init_gain(serial, kResidualInitGain);
  const NodeId rs = g.relu(serial, prefix + ".relu_out");
  return g.add(rs, r0, prefix + ".out");
}

template <typename T>
NodeId add_eeb(LayerGraph<T>& g, NodeId src, std::size_t features, const std::string& prefix) {
  NodeId t = g.conv(src, features, 3, 3, prefix + ".c1");
  t = g.relu(t, prefix + ".relu");
  t = g.conv(t, features, 3, 3, prefix + ".c2");
  g.set_init_gain(t, kResidualInitGain);
  return g.add(t, src, prefix + ".out");
}

template <typename T>
NodeId add_upsampler(LayerGraph<T>& g, NodeId src, std::size_t features, std::size_t scale,
                     const std::string& prefix) {
  std::vector<std::size_t> stages;
  switch (scale) {
    case 2: stages = {2}; break;
    case 3: stages = {3}; break;
    case 4: stages = {2, 2}; break;
    default: throw ConfigError("unsupported upsampling scale " + std::to_string(scale));
  }
  NodeId cur = src;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string sp = prefix + ".s" + std::to_string(i + 1);
    const std::size_t r = stages[i];
    cur = g.conv(cur, features * r * r, 3, 3, sp + ".conv");
    cur = g.pixel_shuffle(cur, r, i + 1 == stages.size() ? prefix : sp + ".shuffle");
  }
  return cur;
}

template <typename T>
LayerGraph<T> build_csrnet(const CsrnetConfig& cfg) {
  cfg.validate();
  const std::size_t f = cfg.features;
  LayerGraph<T> g(cfg.image_channels);
  std::vector<NodeId> layer_out(cfg.trunk_layers() + 1, 0);

  const NodeId head = g.conv(g.input(), f, 3, 3, layer_label(cfg, 1));
  layer_out[1] = head;
  NodeId cur = head;
  for (std::size_t layer = 2; layer <= 2 * cfg.n_pairs + 1; ++layer) {
    const std::string prefix = block_prefix(cfg, layer);
    cur = layer % 2 == 0 ? add_oeb(g, cur, f, prefix, cfg.variant) : add_eeb(g, cur, f, prefix);
    layer_out[layer] = cur;
    if (layer == cfg.tap_dst) cur = g.add(cur, layer_out[cfg.tap_src], local_tap_label(cfg));
  }
  const std::size_t close = cfg.trunk_layers();
  cur = g.conv(cur, f, 3, 3, layer_label(cfg, close));
  cur = g.add(cur, head, global_residual_label(cfg));
  cur = add_upsampler(g, cur, f, cfg.scale, layer_label(cfg, close + 1));
  cur = g.conv(cur, cfg.image_channels, 3, 3, layer_label(cfg, close + 2));
  g.set_output(cur);
  return g;
}

template <typename T>
LayerGraph<T> build_variant(CsrnetConfig cfg, Variant variant) {
  cfg.variant = variant;
  return build_csrnet<T>(cfg);
}

template <typename T>
BasicTensor<T> conv_apply(const BasicTensor<T>& x, const ConvParams<T>& p) {
  const auto& s = p.weight.shape();
  return conv2d_forward(x, p.weight, std::span<const T>(p.bias),
                        ConvSpec::same(s[1], s[0], s[2], s[3]));
}

template <typename T>
BasicTensor<T> oeb_forward(const BasicTensor<T>& x, const OebParams<T>& p) {
  if (x.shape().rank() != 4 || x.c() != p.serial.out_channels()) {
    throw ConfigError("oeb_forward: input " + x.shape().str() + " expects " +
                      std::to_string(p.serial.out_channels()) + " channels");
  }
  const BasicTensor<T> r0 = relu(x);
  std::array<BasicTensor<T>, 2> branch;
  for (std::size_t b = 0; b < 2; ++b) {
    branch[b] = asym_conv(relu(asym_conv(r0, p.branch[b][0])), p.branch[b][1]);
  }
  const BasicTensor<T> c = relu(concat_channels(branch[0], branch[1]));
  return add(relu(asym_conv(c, p.serial)), r0);
}

template <typename T>
BasicTensor<T> eeb_forward(const BasicTensor<T>& x, const EebParams<T>& p) {
  if (x.shape().rank() != 4 || x.c() != p.first.weight.shape()[1]) {
    throw ConfigError("eeb_forward: input " + x.shape().str() + " has wrong channel count");
  }
  return add(conv_apply(relu(conv_apply(x, p.first)), p.second), x);
}

template <typename T>
ConvParams<T> conv_params(const LayerGraph<T>& g, const std::string& name) {
  const auto& b = g.param(name + ".bias").value;
  return {g.param(name + ".weight").value, std::vector<T>(b.data().begin(), b.data().end())};
}

template <typename T>
AsymConvParams<T> asym_params(const LayerGraph<T>& g, const std::string& name) {
  static constexpr const char* kSuffix[3] = {".k1x3", ".k3x3", ".k3x1"};
  AsymConvParams<T> p;
  for (std::size_t k = 0; k < 3; ++k) {
    ConvParams<T> c = conv_params(g, name + kSuffix[k]);
    p.weight[k] = std::move(c.weight);
    p.bias[k] = std::move(c.bias);
  }
  return p;
}

template <typename T>
OebParams<T> oeb_params(const LayerGraph<T>& g, const std::string& prefix) {
  OebParams<T> p;
  for (std::size_t b = 0; b < 2; ++b) {
    const std::string bp = prefix + ".b" + std::to_string(b + 1);
    p.branch[b][0] = asym_params(g, bp + ".a1");
    p.branch[b][1] = asym_params(g, bp + ".a2");
  }
  p.serial = asym_params(g, prefix + ".serial");
  return p;
}

template <typename T>
EebParams<T> eeb_params(const LayerGraph<T>& g, const std::string& prefix) {
  return {conv_params(g, prefix + ".c1"), conv_params(g, prefix + ".c2")};
}

template <typename T>
void init_params(LayerGraph<T>& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Parameter<T>& p : g.params()) {
    if (p.fan_in > 0) {
      const double stddev = p.init_gain * std::sqrt(2.0 / static_cast<double>(p.fan_in));
      for (T& v : p.value.data()) v = static_cast<T>(normal(rng) * stddev);
    } else {
      p.value.fill(T(0));
    }
    p.grad.fill(T(0));
  }
}

template <typename T>
std::size_t count_params(const LayerGraph<T>& g) {
  std::size_t total = 0;
  for (const Parameter<T>& p : g.params()) total += p.value.numel();
  return total;
}

#define CSRNET_INSTANTIATE_MODEL(T)                                                            \
  template LayerGraph<T> build_csrnet<T>(const CsrnetConfig&);                                 \
  template LayerGraph<T> build_variant<T>(CsrnetConfig, Variant);                              \
  template NodeId add_oeb(LayerGraph<T>&, NodeId, std::size_t, const std::string&, Variant);   \
  template NodeId add_eeb(LayerGraph<T>&, NodeId, std::size_t, const std::string&);            \
  template NodeId add_upsampler(LayerGraph<T>&, NodeId, std::size_t, std::size_t,              \
                                const std::string&);                                           \
  template BasicTensor<T> conv_apply(const BasicTensor<T>&, const ConvParams<T>&);             \
  template BasicTensor<T> oeb_forward(const BasicTensor<T>&, const OebParams<T>&);             \
  template BasicTensor<T> eeb_forward(const BasicTensor<T>&, const EebParams<T>&);             \
  template ConvParams<T> conv_params(const LayerGraph<T>&, const std::string&);                \
  template AsymConvParams<T> asym_params(const LayerGraph<T>&, const std::string&);            \
  template OebParams<T> oeb_params(const LayerGraph<T>&, const std::string&);                  \
  template EebParams<T> eeb_params(const LayerGraph<T>&, const std::string&);                  \
  template void init_params(LayerGraph<T>&, std::uint64_t);                                    \
  template std::size_t count_params(const LayerGraph<T>&);

CSRNET_INSTANTIATE_MODEL(float)
CSRNET_INSTANTIATE_MODEL(double)

#undef CSRNET_INSTANTIATE_MODEL

}  // namespace csrnet
