#include "qe/optim.hpp"

#include <cmath>

namespace qe {

template <typename T>
void adam_step(ParamStore<T>& params, const ParamStore<T>& grads, AdamState<T>& state, double lr) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw BindingError("adam_step: gradient for unknown parameter '" + name + "'");
    require_same_shape(it->second.shape(), g.shape(), "adam_step");
  }
  state.step += 1;
  const AdamConfig& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    auto [mit, m_new] = state.m.try_emplace(name, p.shape());
    auto [vit, v_new] = state.v.try_emplace(name, p.shape());
    require_same_shape(mit->second.shape(), p.shape(), "adam_step moment");
    auto pv = p.data();
    auto gv = git->second.data();
    auto mv = mit->second.data();
    auto vv = vit->second.data();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double g = static_cast<double>(gv[i]);
      const double m = c.beta1 * static_cast<double>(mv[i]) + (1.0 - c.beta1) * g;
      const double v = c.beta2 * static_cast<double>(vv[i]) + (1.0 - c.beta2) * g * g;
      mv[i] = static_cast<T>(m);
      vv[i] = static_cast<T>(v);
      const double update = lr * (m / correction1) / (std::sqrt(v / correction2) + c.eps);
      pv[i] = static_cast<T>(static_cast<double>(pv[i]) - update);
    }
  }
}

std::int64_t milestone_iteration(const LrSchedule& schedule, double fraction) {
  return static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(schedule.total_iterations) - 1e-9));
}

double lr_at(const LrSchedule& schedule, std::int64_t iteration) {
  if (schedule.total_iterations <= 0) throw ConfigError("lr schedule: total iterations must be positive");
  if (iteration < 0 || iteration >= schedule.total_iterations) {
    throw UsageError("lr_at: iteration " + std::to_string(iteration) + " outside [0, " +
                     std::to_string(schedule.total_iterations) + ")");
  }
  double lr = schedule.base_lr;
  if (iteration >= milestone_iteration(schedule, schedule.first_milestone)) lr *= schedule.factor;
  if (iteration >= milestone_iteration(schedule, schedule.second_milestone)) lr *= schedule.factor;
  return lr;
}

template void adam_step(ParamStore<float>&, const ParamStore<float>&, AdamState<float>&, double);
template void adam_step(ParamStore<double>&, const ParamStore<double>&, AdamState<double>&, double);

}  // namespace qe
