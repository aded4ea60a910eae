// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "csrnet/graph.hpp"

namespace csrnet {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter, co-shaped with it.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<BasicTensor<T>> m;
  std::vector<BasicTensor<T>> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const std::vector<Parameter<T>>& params, AdamConfig cfg = {});
};

/// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  t <- t+1;
/// p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// A non-finite gradient anywhere aborts the step before anything changes.
template <typename T>
void adam_step(std::vector<Parameter<T>>& params, AdamState<T>& state, double lr);

/// p <- p - lr * g, with the same non-finite guard.
template <typename T>
void sgd_step(std::vector<Parameter<T>>& params, double lr);

/// Cosine annealing with warm restarts. Periods are measured in epochs and
/// grow geometrically: T_i = T_0 * t_mult^i.
struct ScheduleState {
  std::uint64_t restart = 0;  // i
  double period = 10.0;       // T_i
  double cursor = 0.0;        // T_cur, in [0, T_i)
  double eta_min = 1e-7;
  double eta_max = 1e-4;
  double t_mult = 2.0;

  static ScheduleState make(double t0_epochs, double t_mult, double eta_min, double eta_max);
};

/// eta_min + (eta_max - eta_min) * (1 + cos(pi * T_cur / T_i)) / 2.
double cosine_lr(const ScheduleState& s);

/// Moves T_cur forward; each time it reaches T_i the schedule restarts with
/// the period multiplied by t_mult. Several restarts may happen in one call.
void schedule_advance(ScheduleState& s, double delta_epochs);

}  // namespace csrnet
