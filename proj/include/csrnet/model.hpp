// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csrnet/graph.hpp"
#include "csrnet/layers.hpp"

namespace csrnet {

/// Block replacement used by the ablation builds.
enum class Variant : std::uint8_t {
  full = 0,             // OEB / EEB pairs as designed
  eeb_only = 1,         // every OEB replaced by an EEB
  oeb_no_serial = 2,    // OEB with a 1x1 reduction instead of the serial A(2F->F), no skip
  oeb_no_residual = 3,  // OEB without the skip from the first ReLU
  plain_convs = 4,      // every OEB replaced by three conv3x3 + ReLU
};

std::string_view variant_name(Variant v);
/// ConfigError for unknown names.
Variant parse_variant(std::string_view name);
inline constexpr std::array<Variant, 5> kAllVariants{Variant::full, Variant::eeb_only,
                                                     Variant::oeb_no_serial,
                                                     Variant::oeb_no_residual,
                                                     Variant::plain_convs};

/// Architecture hyperparameters.
///
/// Layers are numbered from 1: layer 1 is the head conv, layer 2k is the k-th
/// odd block (OEB), layer 2k+1 the k-th even block (EEB), layer 2*n_pairs+2
/// the trunk-closing conv, followed by the upsampler and the output conv.
/// The output of layer `tap_src` is added to the output of layer `tap_dst`;
/// the head output is added to the trunk-closing conv output.
struct CsrnetConfig {
  std::size_t features = 64;
  std::size_t n_pairs = 16;
  std::size_t scale = 2;
  std::size_t tap_src = 9;
  std::size_t tap_dst = 21;
  Variant variant = Variant::full;
  std::size_t image_channels = 3;

  std::size_t trunk_layers() const { return 2 * n_pairs + 2; }
  void validate() const;

  /// Small network for tests and desk-scale runs: local tap joins the first
  /// and last even blocks (layers 3 and 2*n_pairs+1).
  static CsrnetConfig mini(std::size_t features, std::size_t n_pairs = 2, std::size_t scale = 2);

  bool operator==(const CsrnetConfig&) const = default;
};

/// Label of the node holding the output of layer `layer` in a graph built by
/// build_csrnet (before any residual add that lands on it).
std::string layer_label(const CsrnetConfig& cfg, std::size_t layer);
/// Label of the residual add nodes.
std::string local_tap_label(const CsrnetConfig& cfg);
std::string global_residual_label(const CsrnetConfig& cfg);

template <typename T>
LayerGraph<T> build_csrnet(const CsrnetConfig& cfg);

template <typename T>
LayerGraph<T> build_variant(CsrnetConfig cfg, Variant variant);

/// Appends an odd enhancement block (or the variant's replacement) reading
/// from `src`; returns the block output node.
template <typename T>
NodeId add_oeb(LayerGraph<T>& g, NodeId src, std::size_t features, const std::string& prefix,
               Variant variant = Variant::full);

template <typename T>
NodeId add_eeb(LayerGraph<T>& g, NodeId src, std::size_t features, const std::string& prefix);

/// Sub-pixel upsampler: conv3x3 (F -> F*r*r) + pixel shuffle, one stage for
/// x2 and x3, two x2 stages for x4.
template <typename T>
NodeId add_upsampler(LayerGraph<T>& g, NodeId src, std::size_t features, std::size_t scale,
                     const std::string& prefix);

// Functional block forms, composed from the layer ops. The graph builders
// above produce bitwise-identical results for the same parameters.

template <typename T>
struct ConvParams {
  BasicTensor<T> weight;
  std::vector<T> bias;
};

template <typename T>
struct OebParams {
  std::array<std::array<AsymConvParams<T>, 2>, 2> branch;  // [branch][stage]
  AsymConvParams<T> serial;                                // 2F -> F
};

template <typename T>
struct EebParams {
  ConvParams<T> first;
  ConvParams<T> second;
};

template <typename T>
BasicTensor<T> conv_apply(const BasicTensor<T>& x, const ConvParams<T>& p);

/// relu(x) + relu(A_s(relu(cat(A(relu(A(r0))), A(relu(A(r0))))))) with r0 = relu(x).
template <typename T>
BasicTensor<T> oeb_forward(const BasicTensor<T>& x, const OebParams<T>& p);

/// conv(relu(conv(x))) + x.
template <typename T>
BasicTensor<T> eeb_forward(const BasicTensor<T>& x, const EebParams<T>& p);

/// Pull block parameters out of a graph by name prefix.
template <typename T>
ConvParams<T> conv_params(const LayerGraph<T>& g, const std::string& name);
template <typename T>
AsymConvParams<T> asym_params(const LayerGraph<T>& g, const std::string& name);
template <typename T>
OebParams<T> oeb_params(const LayerGraph<T>& g, const std::string& prefix);
template <typename T>
EebParams<T> eeb_params(const LayerGraph<T>& g, const std::string& prefix);

/// Initialization std multiplier for the last weight layer of a residual
/// branch (EEB second conv, OEB serial asymmetric conv). Without it the
/// identity skips compound and activations grow by orders of magnitude per block.
inline constexpr double kResidualInitGain = 0.1;

/// Fan-in scaled normal weights, std = gain * sqrt(2 / fan_in), zero biases.
/// fan_in is kh*kw*Cin for a conv and 15*Cin for each kernel of an asymmetric
/// conv (the fan-in of the whole sum); gain is kResidualInitGain on residual
/// branch outputs and 1 elsewhere. Parameters are drawn in construction
/// order from one mt19937_64(seed).
template <typename T>
void init_params(LayerGraph<T>& g, std::uint64_t seed);

template <typename T>
std::size_t count_params(const LayerGraph<T>& g);

// Checkpoints.

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct LoadedModel {
  CsrnetConfig config;
  LayerGraph<float> graph;
};

/// Summary of a checkpoint file, produced without building a graph.
struct CheckpointInfo {
  std::uint16_t version = 0;
  CsrnetConfig config;
  struct Entry {
    std::string name;
    Shape shape;
  };
  std::vector<Entry> entries;
  std::size_t total_params = 0;
};

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len);

void save_checkpoint(const LayerGraph<float>& g, const CsrnetConfig& cfg,
                     const std::filesystem::path& path);
std::vector<unsigned char> encode_checkpoint(const LayerGraph<float>& g, const CsrnetConfig& cfg);

/// Builds the graph described by the stored config and fills it. When
/// `expected_scale` is given and differs from the stored scale, SchemaError.
LoadedModel load_checkpoint(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_scale = std::nullopt);
/// Fills an existing graph; the stored names and shapes must match it exactly.
CsrnetConfig load_checkpoint_into(LayerGraph<float>& g, const std::filesystem::path& path);
CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

}  // namespace csrnet
