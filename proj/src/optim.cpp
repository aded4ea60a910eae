// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace csrnet {
namespace {

template <typename T>
void require_finite_grads(const std::vector<Parameter<T>>& params) {
  for (const Parameter<T>& p : params) {
    if (!p.grad.all_finite()) throw NumericError("non-finite gradient for '" + p.name + "'");
  }
}

}  // namespace

template <typename T>
AdamState<T>::AdamState(const std::vector<Parameter<T>>& params, AdamConfig cfg) : config(cfg) {
  for (const Parameter<T>& p : params) {
    m.emplace_back(p.value.shape());
    v.emplace_back(p.value.shape());
  }
}

template <typename T>
void adam_step(std::vector<Parameter<T>>& params, AdamState<T>& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ConfigError("Adam state does not match the parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i].value.shape()) {
      throw ConfigError("Adam moment shape mismatch for '" + params[i].name + "'");
    }
  }
  require_finite_grads(params);

  const AdamConfig& c = state.config;
  const std::uint64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i].value.ptr();
    const T* g = params[i].grad.ptr();
    T* m = state.m[i].ptr();
    T* v = state.v[i].ptr();
    for (std::size_t k = 0; k < params[i].value.numel(); ++k) {
      const double gk = g[k];
      const double mk = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
      const double vk = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      p[k] = static_cast<T>(p[k] - lr * (mk / bc1) / (std::sqrt(vk / bc2) + c.eps));
    }
  }
  state.step = t;
}

template <typename T>
void sgd_step(std::vector<Parameter<T>>& params, double lr) {
  require_finite_grads(params);
  for (Parameter<T>& p : params) {
    for (std::size_t k = 0; k < p.value.numel(); ++k) {
      p.value[k] = static_cast<T>(p.value[k] - lr * p.grad[k]);
    }
  }
}

ScheduleState ScheduleState::make(double t0_epochs, double t_mult, double eta_min,
                                  double eta_max) {
  if (!(t0_epochs > 0.0)) throw ConfigError("schedule period T_0 must be > 0");
  if (!(t_mult >= 1.0)) throw ConfigError("schedule t_mult must be >= 1");
  if (!(eta_min <= eta_max)) throw ConfigError("schedule requires eta_min <= eta_max");
  ScheduleState s;
  s.period = t0_epochs;
  s.t_mult = t_mult;
  s.eta_min = eta_min;
  s.eta_max = eta_max;
  return s;
}

double cosine_lr(const ScheduleState& s) {
  if (s.period == 0.0) throw ConfigError("schedule period T_i is zero");
  return s.eta_min +
         0.5 * (s.eta_max - s.eta_min) * (1.0 + std::cos(s.cursor / s.period * std::numbers::pi));
}

void schedule_advance(ScheduleState& s, double delta_epochs) {
  if (!(delta_epochs > 0.0)) throw ConfigError("schedule advance must be positive");
  s.cursor += delta_epochs;
  // Fractional per-iteration steps accumulate rounding error; a cursor within
  // a relative 1e-9 of the period counts as having reached it.
  while (s.cursor >= s.period * (1.0 - 1e-9)) {
    s.cursor = std::max(0.0, s.cursor - s.period);
    s.period *= s.t_mult;
    ++s.restart;
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::vector<Parameter<float>>&, AdamState<float>&, double);
template void adam_step(std::vector<Parameter<double>>&, AdamState<double>&, double);
template void sgd_step(std::vector<Parameter<float>>&, double);
template void sgd_step(std::vector<Parameter<double>>&, double);

}  // namespace csrnet
