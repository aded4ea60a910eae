// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <type_traits>

#include "csrnet/layers.hpp"

namespace csrnet {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Input: return "input";
    case NodeKind::Conv: return "conv";
    case NodeKind::AsymConv: return "asym_conv";
    case NodeKind::Relu: return "relu";
    case NodeKind::Concat: return "concat";
    case NodeKind::Add: return "add";
    case NodeKind::PixelShuffle: return "pixel_shuffle";
  }
  return "?";
}

template <typename T>
LayerGraph<T>::LayerGraph(std::size_t input_channels) {
  if (input_channels == 0) throw ConfigError("graph input needs at least one channel");
  Node in;
  in.kind = NodeKind::Input;
  in.label = "input";
  in.channels = input_channels;
  nodes_.push_back(std::move(in));
}

template <typename T>
void LayerGraph<T>::check_node(NodeId id, const char* what) const {
  if (id >= nodes_.size()) {
    throw ConfigError(std::string(what) + ": unknown source node " + std::to_string(id));
  }
}

template <typename T>
NodeId LayerGraph<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  forward_done_ = false;
  return nodes_.size() - 1;
}

template <typename T>
std::size_t LayerGraph<T>::add_param(const std::string& name, const Shape& shape,
                                     std::size_t fan_in) {
  if (param_index_.count(name) != 0) throw ConfigError("duplicate parameter name '" + name + "'");
  params_.push_back({name, BasicTensor<T>(shape), BasicTensor<T>(shape), fan_in, 1.0});
  param_index_.emplace(name, params_.size() - 1);
  return params_.size() - 1;
}

template <typename T>
void LayerGraph<T>::add_conv_params(Node& node, const ConvSpec& spec, const std::string& name,
                                     std::size_t fan_in) {
  spec.validate();
  node.specs.push_back(spec);
  node.weights.push_back(add_param(name + ".weight", spec.weight_shape(), fan_in));
  node.biases.push_back(add_param(name + ".bias", Shape{spec.out_channels}, 0));
}

template <typename T>
NodeId LayerGraph<T>::conv(NodeId src, std::size_t out_channels, std::size_t kernel_h,
                           std::size_t kernel_w, const std::string& name) {
  check_node(src, name.c_str());
  Node node;
  node.kind = NodeKind::Conv;
  node.label = name;
  node.inputs = {src};
  node.channels = out_channels;
  node.scale = nodes_[src].scale;
  const ConvSpec spec = ConvSpec::same(nodes_[src].channels, out_channels, kernel_h, kernel_w);
  add_conv_params(node, spec, name, spec.patch_size());
  return push(std::move(node));
}

template <typename T>
NodeId LayerGraph<T>::asym_conv(NodeId src, std::size_t out_channels, const std::string& name) {
  check_node(src, name.c_str());
  static constexpr const char* kSuffix[3] = {".k1x3", ".k3x3", ".k3x1"};
  Node node;
  node.kind = NodeKind::AsymConv;
  node.label = name;
  node.inputs = {src};
  node.channels = out_channels;
  node.scale = nodes_[src].scale;
  // The three kernels feed one sum, so they share its combined fan-in.
  std::size_t fan_in = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    fan_in += asym_branch_spec(nodes_[src].channels, out_channels, k).patch_size();
  }
  for (std::size_t k = 0; k < 3; ++k) {
    add_conv_params(node, asym_branch_spec(nodes_[src].channels, out_channels, k),
                    name + kSuffix[k], fan_in);
  }
  return push(std::move(node));
}

template <typename T>
void LayerGraph<T>::set_init_gain(NodeId node, double gain) {
  check_node(node, "set_init_gain");
  for (std::size_t w : nodes_[node].weights) params_[w].init_gain = gain;
}

template <typename T>
NodeId LayerGraph<T>::relu(NodeId src, const std::string& label) {
  check_node(src, label.c_str());
  Node node;
  node.kind = NodeKind::Relu;
  node.label = label;
  node.inputs = {src};
  node.channels = nodes_[src].channels;
  node.scale = nodes_[src].scale;
  return push(std::move(node));
}

template <typename T>
NodeId LayerGraph<T>::concat(NodeId a, NodeId b, const std::string& label) {
  check_node(a, label.c_str());
  check_node(b, label.c_str());
  if (nodes_[a].scale != nodes_[b].scale) {
    throw ConfigError(label + ": concatenated inputs have different spatial scale");
  }
  Node node;
  node.kind = NodeKind::Concat;
  node.label = label;
  node.inputs = {a, b};
  node.channels = nodes_[a].channels + nodes_[b].channels;
  node.scale = nodes_[a].scale;
  return push(std::move(node));
}

template <typename T>
NodeId LayerGraph<T>::add(NodeId a, NodeId b, const std::string& label) {
  check_node(a, label.c_str());
  check_node(b, label.c_str());
  if (nodes_[a].channels != nodes_[b].channels || nodes_[a].scale != nodes_[b].scale) {
    throw ConfigError(label + ": residual add of '" + nodes_[a].label + "' (" +
                      std::to_string(nodes_[a].channels) + " ch) and '" + nodes_[b].label +
                      "' (" + std::to_string(nodes_[b].channels) + " ch) is not co-shaped");
  }
  Node node;
  node.kind = NodeKind::Add;
  node.label = label;
  node.inputs = {a, b};
  node.channels = nodes_[a].channels;
  node.scale = nodes_[a].scale;
  return push(std::move(node));
}

template <typename T>
NodeId LayerGraph<T>::pixel_shuffle(NodeId src, std::size_t factor, const std::string& label) {
  check_node(src, label.c_str());
  if (factor == 0 || nodes_[src].channels % (factor * factor) != 0) {
    throw ConfigError(label + ": " + std::to_string(nodes_[src].channels) +
                      " channels not divisible by " + std::to_string(factor * factor));
  }
  Node node;
  node.kind = NodeKind::PixelShuffle;
  node.label = label;
  node.inputs = {src};
  node.channels = nodes_[src].channels / (factor * factor);
  node.scale = nodes_[src].scale * factor;
  node.factor = factor;
  return push(std::move(node));
}

template <typename T>
void LayerGraph<T>::set_output(NodeId node) {
  check_node(node, "set_output");
  output_ = node;
  has_output_ = true;
}

template <typename T>
NodeId LayerGraph<T>::find_node(const std::string& label) const {
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].label == label) return i;
  }
  throw ConfigError("no node labelled '" + label + "'");
}

template <typename T>
Parameter<T>& LayerGraph<T>::param(const std::string& name) {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw ConfigError("no parameter named '" + name + "'");
  return params_[it->second];
}

template <typename T>
const Parameter<T>& LayerGraph<T>::param(const std::string& name) const {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw ConfigError("no parameter named '" + name + "'");
  return params_[it->second];
}

template <typename T>
BasicTensor<T> LayerGraph<T>::eval(const Node& node,
                                   const std::vector<BasicTensor<T>>& acts) const {
  const BasicTensor<T>& a = acts[node.inputs[0]];
  switch (node.kind) {
    case NodeKind::Conv: {
      const auto& b = params_[node.biases[0]].value;
      return conv2d_forward(a, params_[node.weights[0]].value, b.data(), node.specs[0]);
    }
    case NodeKind::AsymConv: {
      // Same summation order as csrnet::asym_conv.
      BasicTensor<T> y = conv2d_forward(a, params_[node.weights[0]].value,
                                        params_[node.biases[0]].value.data(), node.specs[0]);
      for (std::size_t k = 1; k < 3; ++k) {
        add_inplace(y, conv2d_forward(a, params_[node.weights[k]].value,
                                      params_[node.biases[k]].value.data(), node.specs[k]));
      }
      return y;
    }
    case NodeKind::Relu:
      return csrnet::relu(a);
    case NodeKind::Concat:
      return concat_channels(a, acts[node.inputs[1]]);
    case NodeKind::Add:
      return csrnet::add(a, acts[node.inputs[1]]);
    case NodeKind::PixelShuffle:
      return csrnet::pixel_shuffle(a, node.factor);
    case NodeKind::Input:
      break;
  }
  throw StateError("cannot evaluate node '" + node.label + "'");
}

namespace {

template <typename T>
void check_input(const BasicTensor<T>& x, std::size_t channels) {
  if (x.shape().rank() != 4 || x.c() != channels) {
    throw ConfigError("graph input " + x.shape().str() + " does not match declared " +
                      std::to_string(channels) + "-channel NCHW input");
  }
  require_finite(x, "graph input");
}

}  // namespace

template <typename T>
BasicTensor<T> LayerGraph<T>::forward(const BasicTensor<T>& x) {
  if (!has_output_) throw StateError("graph has no output node");
  check_input(x, input_channels());
  forward_done_ = false;
  acts_.assign(nodes_.size(), BasicTensor<T>{});
  acts_[0] = x;
  for (NodeId i = 1; i < nodes_.size(); ++i) {
    try {
      acts_[i] = eval(nodes_[i], acts_);
    } catch (const ConfigError& e) {
      throw ConfigError("node '" + nodes_[i].label + "': " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("node '" + nodes_[i].label + "': " + e.what());
    }
    require_finite(acts_[i], "activation of node '" + nodes_[i].label + "'");
  }
  forward_done_ = true;
  return acts_[output_];
}

template <typename T>
BasicTensor<T> LayerGraph<T>::infer(const BasicTensor<T>& x) const {
  if (!has_output_) throw StateError("graph has no output node");
  check_input(x, input_channels());
  std::vector<std::size_t> remaining(nodes_.size(), 0);
  for (const Node& n : nodes_) {
    for (NodeId src : n.inputs) ++remaining[src];
  }
  std::vector<BasicTensor<T>> acts(nodes_.size());
  acts[0] = x;
  for (NodeId i = 1; i <= output_; ++i) {
    try {
      acts[i] = eval(nodes_[i], acts);
    } catch (const ConfigError& e) {
      throw ConfigError("node '" + nodes_[i].label + "': " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("node '" + nodes_[i].label + "': " + e.what());
    }
    require_finite(acts[i], "activation of node '" + nodes_[i].label + "'");
    for (NodeId src : nodes_[i].inputs) {
      if (--remaining[src] == 0 && src != output_) acts[src] = BasicTensor<T>{};
    }
  }
  return std::move(acts[output_]);
}

template <typename T>
BasicTensor<T>& LayerGraph<T>::grad_slot(NodeId id) {
  if (grads_[id].empty()) grads_[id] = BasicTensor<T>(acts_[id].shape());
  return grads_[id];
}

template <typename T>
void LayerGraph<T>::backward(const BasicTensor<T>& grad_output) {
  if (!forward_done_) throw StateError("backward called before forward");
  if (grad_output.shape() != acts_[output_].shape()) {
    throw ConfigError("grad_output shape " + grad_output.shape().str() + " != output shape " +
                      acts_[output_].shape().str());
  }
  grads_.assign(nodes_.size(), BasicTensor<T>{});
  grads_[output_] = grad_output;
  for (NodeId i = output_; i >= 1; --i) {
    if (grads_[i].empty()) continue;
    const Node& node = nodes_[i];
    const BasicTensor<T> g = std::move(grads_[i]);
    grads_[i] = BasicTensor<T>{};
    const NodeId src = node.inputs[0];
    switch (node.kind) {
      case NodeKind::Conv:
      case NodeKind::AsymConv: {
        BasicTensor<T>& gx = grad_slot(src);
        for (std::size_t k = 0; k < node.specs.size(); ++k) {
          Parameter<T>& w = params_[node.weights[k]];
          Parameter<T>& b = params_[node.biases[k]];
          conv2d_backward_accumulate(acts_[src], w.value, g, node.specs[k], &gx, w.grad,
                                     b.grad.data());
        }
        break;
      }
      case NodeKind::Relu:
        add_inplace(grad_slot(src), relu_backward(acts_[i], g));
        break;
      case NodeKind::Concat: {
        const std::size_t ca = nodes_[src].channels;
        add_inplace(grad_slot(src), slice_channels(g, 0, ca));
        add_inplace(grad_slot(node.inputs[1]), slice_channels(g, ca, g.c()));
        break;
      }
      case NodeKind::Add:
        add_inplace(grad_slot(src), g);
        add_inplace(grad_slot(node.inputs[1]), g);
        break;
      case NodeKind::PixelShuffle:
        add_inplace(grad_slot(src), pixel_unshuffle(g, node.factor));
        break;
      case NodeKind::Input:
        break;
    }
  }
  input_grad_ = grads_[0].empty() ? BasicTensor<T>(acts_[0].shape()) : std::move(grads_[0]);
  grads_.clear();
}

template <typename T>
void LayerGraph<T>::zero_grads() {
  for (Parameter<T>& p : params_) p.grad.fill(T(0));
}

template <typename T>
const BasicTensor<T>& LayerGraph<T>::input_grad() const {
  if (input_grad_.empty()) throw StateError("input gradient requested before backward");
  return input_grad_;
}

template <typename T>
const BasicTensor<T>& LayerGraph<T>::activation(NodeId node) const {
  if (!forward_done_) throw StateError("activation requested before forward");
  return acts_.at(node);
}

template <typename T>
void LayerGraph<T>::clear_cache() {
  acts_.clear();
  grads_.clear();
  input_grad_ = BasicTensor<T>{};
  forward_done_ = false;
}

template <typename T>
double LayerGraph<T>::min_relu_margin() const {
  if (!forward_done_) throw StateError("min_relu_margin requested before forward");
  double margin = std::numeric_limits<double>::infinity();
  for (const Node& n : nodes_) {
    if (n.kind != NodeKind::Relu) continue;
    for (T v : acts_[n.inputs[0]].data()) margin = std::min(margin, std::abs(double(v)));
  }
  return margin;
}

template <typename T>
std::vector<std::uint8_t> LayerGraph<T>::relu_pattern() const {
  if (!forward_done_) throw StateError("relu_pattern requested before forward");
  std::vector<std::uint8_t> bits;
  for (const Node& n : nodes_) {
    if (n.kind != NodeKind::Relu) continue;
    for (T v : acts_[n.inputs[0]].data()) bits.push_back(v > T(0) ? 1 : 0);
  }
  return bits;
}

template <typename T>
template <typename U>
LayerGraph<U> LayerGraph<T>::cast() const {
  LayerGraph<U> out(input_channels());
  out.nodes_.clear();
  for (const Node& n : nodes_) {
    typename LayerGraph<U>::Node m;
    m.kind = n.kind;
    m.label = n.label;
    m.inputs = n.inputs;
    m.channels = n.channels;
    m.scale = n.scale;
    m.specs = n.specs;
    m.weights = n.weights;
    m.biases = n.biases;
    m.factor = n.factor;
    out.nodes_.push_back(std::move(m));
  }
  for (const Parameter<T>& p : params_) {
    out.params_.push_back({p.name, p.value.template cast<U>(), p.grad.template cast<U>(),
                           p.fan_in, p.init_gain});
  }
  out.param_index_ = param_index_;
  out.output_ = output_;
  out.has_output_ = has_output_;
  return out;
}

template <typename T>
GradCheckReport grad_check(LayerGraph<T>& g, const BasicTensor<T>& x, double h, double tol,
                           std::uint64_t seed) {
  if constexpr (!std::is_same_v<T, double>) {
    throw ConfigError("grad_check requires a 64-bit graph");
  } else {
    std::size_t scalars = x.numel();
    for (const auto& p : g.params()) scalars += p.value.numel();
    if (scalars > kGradCheckMaxScalars) {
      throw ConfigError("grad_check: " + std::to_string(scalars) + " scalars exceeds guard of " +
                        std::to_string(kGradCheckMaxScalars));
    }

    TensorD out = g.forward(x);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    TensorD r(out.shape());
    for (double& v : r.data()) v = normal(rng);

    GradCheckReport report;
    report.tolerance = tol;
    report.min_relu_margin = g.min_relu_margin();
    const auto base_pattern = g.relu_pattern();

    g.zero_grads();
    g.backward(r);
    const TensorD analytic_x = g.input_grad();
    std::vector<TensorD> analytic;
    for (const auto& p : g.params()) analytic.push_back(p.grad);

    auto loss_at = [&](const TensorD& input) {
      const TensorD y = g.forward(input);
      if (g.relu_pattern() != base_pattern) ++report.relu_crossings;
      double s = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) s += r[i] * y[i];
      return s;
    };
    auto record = [&](GradCheckEntry& e, double a, double n) {
      const double abs_err = std::abs(a - n);
      const double rel = abs_err / std::max({std::abs(a), std::abs(n), 1e-12});
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
      e.max_rel_error = std::max(e.max_rel_error, rel);
      ++e.count;
    };

    for (std::size_t pi = 0; pi < g.params().size(); ++pi) {
      GradCheckEntry entry;
      entry.name = g.params()[pi].name;
      auto& value = g.params()[pi].value;
      for (std::size_t i = 0; i < value.numel(); ++i) {
        const double saved = value[i];
        value[i] = saved + h;
        const double plus = loss_at(x);
        value[i] = saved - h;
        const double minus = loss_at(x);
        value[i] = saved;
        record(entry, analytic[pi][i], (plus - minus) / (2.0 * h));
      }
      report.entries.push_back(entry);
    }

    GradCheckEntry input_entry;
    input_entry.name = "<input>";
    TensorD xp = x;
    for (std::size_t i = 0; i < xp.numel(); ++i) {
      const double saved = xp[i];
      xp[i] = saved + h;
      const double plus = loss_at(xp);
      xp[i] = saved - h;
      const double minus = loss_at(xp);
      xp[i] = saved;
      record(input_entry, analytic_x[i], (plus - minus) / (2.0 * h));
    }
    report.entries.push_back(input_entry);

    // Leave caches and grads as they were after the analytic pass.
    g.forward(x);
    g.zero_grads();
    g.backward(r);

    for (const auto& e : report.entries) {
      report.worst_rel_error = std::max(report.worst_rel_error, e.max_rel_error);
    }
    report.passed = report.worst_rel_error <= tol;
    return report;
  }
}

template class LayerGraph<float>;
template class LayerGraph<double>;
template LayerGraph<double> LayerGraph<float>::cast<double>() const;
template LayerGraph<float> LayerGraph<double>::cast<float>() const;
template LayerGraph<float> LayerGraph<float>::cast<float>() const;
template LayerGraph<double> LayerGraph<double>::cast<double>() const;
template GradCheckReport grad_check(LayerGraph<float>&, const Tensor&, double, double,
                                    std::uint64_t);
template GradCheckReport grad_check(LayerGraph<double>&, const TensorD&, double, double,
                                    std::uint64_t);

}  // namespace csrnet
