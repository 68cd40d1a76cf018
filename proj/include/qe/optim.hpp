#pragma once

#include <cstddef>
#include <cstdint>

#include "qe/layers.hpp"

namespace qe {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments per parameter name, zero-initialised on the first step that sees
// the parameter.
template <typename T>
struct AdamState {
  AdamConfig config;
  ParamStore<T> m;
  ParamStore<T> v;
  std::int64_t step = 0;
};

// One bias-corrected Adam update in place:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * mhat / (sqrt(vhat) + eps)
template <typename T>
void adam_step(ParamStore<T>& params, const ParamStore<T>& grads, AdamState<T>& state, double lr);

// Learning rate halved once 60% and again once 90% of the iterations are done.
struct LrSchedule {
  double base_lr = 1e-4;
  std::int64_t total_iterations = 1;
  double first_milestone = 0.6;
  double second_milestone = 0.9;
  double factor = 0.5;
};

// First iteration at which a milestone fraction applies: ceil(fraction * total).
std::int64_t milestone_iteration(const LrSchedule& schedule, double fraction);

double lr_at(const LrSchedule& schedule, std::int64_t iteration);

}  // namespace qe
