#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "qe/ops.hpp"
#include "qe/rng.hpp"

namespace qe {

// Named parameter tensors. std::map keeps iteration order deterministic.
template <typename T>
using ParamStore = std::map<std::string, Tensor<T>>;

// Parameters placed on a graph, addressed by the same names.
template <typename T>
class BoundParams {
 public:
  BoundParams() = default;
  BoundParams(Graph<T>& graph, const ParamStore<T>& store, bool requires_grad) {
    for (const auto& [name, tensor] : store) vars_.emplace(name, graph.view(tensor, requires_grad));
  }

  Var<T> operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw BindingError("parameter '" + name + "' is not bound");
    return it->second;
  }

  const std::map<std::string, Var<T>>& vars() const noexcept { return vars_; }

 private:
  std::map<std::string, Var<T>> vars_;
};

// Copies gradients of bound parameters out of a graph after backward; absent
// gradients come back as zeros.
template <typename T>
ParamStore<T> collect_grads(const Graph<T>& graph, const BoundParams<T>& params) {
  ParamStore<T> grads;
  for (const auto& [name, var] : params.vars()) {
    const Tensor<T>* g = graph.grad(var);
    grads.emplace(name, g ? *g : Tensor<T>(var.shape()));
  }
  return grads;
}

template <typename To, typename From>
ParamStore<To> cast_params(const ParamStore<From>& store) {
  ParamStore<To> out;
  for (const auto& [name, t] : store) out.emplace(name, t.template cast<To>());
  return out;
}

// Uniform in +-sqrt(6 / fan_in), the He/Kaiming bound for ReLU networks.
template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);

// Conv with "same" padding for an odd square kernel read from the weight.
template <typename T>
Var<T> conv_same(const BoundParams<T>& p, const std::string& prefix, Var<T> x);

// Squeeze-and-excitation gate: x * sigmoid(W2 relu(W1 gap(x) + b1) + b2).
// W1: (C/rho, C, 1, 1), W2: (C, C/rho, 1, 1).
template <typename T>
Var<T> channel_attention(Var<T> x, Var<T> w1, Var<T> b1, Var<T> w2, Var<T> b2);

// Reduced width of the attention bottleneck; rejects widths rho does not divide.
std::size_t attention_width(std::size_t channels, std::size_t reduction);

}  // namespace qe
