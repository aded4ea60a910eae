// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "csrnet/conv.hpp"
#include "csrnet/tensor.hpp"

namespace csrnet {

enum class NodeKind { Input, Conv, AsymConv, Relu, Concat, Add, PixelShuffle };

const char* node_kind_name(NodeKind kind);

template <typename T>
struct Parameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
  /// Initialization hints read by init_params: weights are drawn with
  /// std = init_gain * sqrt(2 / fan_in). fan_in is 0 for biases.
  std::size_t fan_in = 0;
  double init_gain = 1.0;
};

using NodeId = std::size_t;

/// Static DAG of layers. Nodes are appended in topological order: every
/// builder call may only reference nodes that already exist, so insertion
/// order is the execution order. Channel counts are checked as nodes are
/// added; spatial extents are checked on forward.
///
/// Not thread-safe: forward/backward mutate the activation caches.
template <typename T>
class LayerGraph {
 public:
  explicit LayerGraph(std::size_t input_channels);

  NodeId input() const { return 0; }

  /// Same-size convolution; registers `<name>.weight` and `<name>.bias`.
  NodeId conv(NodeId src, std::size_t out_channels, std::size_t kernel_h, std::size_t kernel_w,
              const std::string& name);
  /// Asymmetric convolution sum; registers `<name>.k1x3.*`, `<name>.k3x3.*`, `<name>.k3x1.*`.
  NodeId asym_conv(NodeId src, std::size_t out_channels, const std::string& name);
  NodeId relu(NodeId src, const std::string& label);
  NodeId concat(NodeId a, NodeId b, const std::string& label);
  NodeId add(NodeId a, NodeId b, const std::string& label);
  NodeId pixel_shuffle(NodeId src, std::size_t factor, const std::string& label);

  /// Multiplies the initialization std of the weights of a Conv or AsymConv node.
  void set_init_gain(NodeId node, double gain);

  void set_output(NodeId node);
  NodeId output() const { return output_; }

  /// Runs every node and caches all activations for backward.
  BasicTensor<T> forward(const BasicTensor<T>& x);
  /// Inference-only pass: intermediate activations are released as soon as
  /// their last consumer has run. Does not touch the caches.
  BasicTensor<T> infer(const BasicTensor<T>& x) const;

  /// Accumulates d(loss)/d(param) into every Parameter::grad. Nodes with
  /// several consumers receive the sum of their contributions.
  void backward(const BasicTensor<T>& grad_output);
  void zero_grads();

  /// Gradient with respect to the graph input from the last backward.
  const BasicTensor<T>& input_grad() const;
  const BasicTensor<T>& activation(NodeId node) const;
  /// Drops cached activations and gradients.
  void clear_cache();

  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }
  Parameter<T>& param(const std::string& name);
  const Parameter<T>& param(const std::string& name) const;
  bool has_param(const std::string& name) const { return param_index_.count(name) != 0; }

  std::size_t num_nodes() const { return nodes_.size(); }
  NodeKind kind(NodeId node) const { return nodes_.at(node).kind; }
  const std::string& label(NodeId node) const { return nodes_.at(node).label; }
  /// First node carrying `label`; ConfigError if none.
  NodeId find_node(const std::string& label) const;
  const std::vector<NodeId>& inputs(NodeId node) const { return nodes_.at(node).inputs; }
  std::size_t channels(NodeId node) const { return nodes_.at(node).channels; }
  /// Spatial magnification of `node` relative to the graph input.
  std::size_t scale(NodeId node) const { return nodes_.at(node).scale; }
  std::size_t input_channels() const { return nodes_.front().channels; }

  /// Smallest |pre-activation| over all ReLU inputs of the last forward.
  double min_relu_margin() const;
  /// One byte per ReLU input element: 1 where the pre-activation is > 0.
  std::vector<std::uint8_t> relu_pattern() const;

  /// Same topology and parameter names with values converted to U.
  template <typename U>
  LayerGraph<U> cast() const;

 private:
  template <typename U>
  friend class LayerGraph;

  struct Node {
    NodeKind kind = NodeKind::Input;
    std::string label;
    std::vector<NodeId> inputs;
    std::size_t channels = 0;
    std::size_t scale = 1;
    std::vector<ConvSpec> specs;        // Conv: 1 entry, AsymConv: 3
    std::vector<std::size_t> weights;   // parameter indices, parallel to specs
    std::vector<std::size_t> biases;
    std::size_t factor = 1;             // PixelShuffle
  };

  NodeId push(Node node);
  void check_node(NodeId id, const char* what) const;
  std::size_t add_param(const std::string& name, const Shape& shape, std::size_t fan_in);
  void add_conv_params(Node& node, const ConvSpec& spec, const std::string& name,
                       std::size_t fan_in);
  BasicTensor<T> eval(const Node& node, const std::vector<BasicTensor<T>>& acts) const;
  BasicTensor<T>& grad_slot(NodeId id);

  std::vector<Node> nodes_;
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> param_index_;
  NodeId output_ = 0;
  bool has_output_ = false;

  std::vector<BasicTensor<T>> acts_;
  std::vector<BasicTensor<T>> grads_;
  BasicTensor<T> input_grad_;
  bool forward_done_ = false;
};

/// Per-parameter result of a finite-difference check.
struct GradCheckEntry {
  std::string name;  // parameter name, or "<input>"
  std::size_t count = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  /// Perturbations that flipped any ReLU on/off. Nonzero means the point
  /// sits too close to a kink for central differences to be meaningful.
  std::size_t relu_crossings = 0;
  double min_relu_margin = 0.0;
};

/// Central-difference check of every parameter and input scalar against
/// backward. The loss is sum(r * output) for a seeded standard-normal r.
/// Relative error is |a - n| / max(|a|, |n|, 1e-12). Requires 64-bit graphs.
template <typename T>
GradCheckReport grad_check(LayerGraph<T>& g, const BasicTensor<T>& x, double h, double tol,
                           std::uint64_t seed = 7);

/// Guard on the number of scalars grad_check will perturb.
inline constexpr std::size_t kGradCheckMaxScalars = 200000;

}  // namespace csrnet
