#include "qe/layers.hpp"

#include <cmath>

namespace qe {

std::size_t attention_width(std::size_t channels, std::size_t reduction) {
  if (reduction == 0 || channels % reduction != 0) {
    throw ConfigError("channel attention: " + std::to_string(channels) + " channels not divisible by reduction " +
                      std::to_string(reduction));
  }
  return channels / reduction;
}

template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Var<T> conv_same(const BoundParams<T>& p, const std::string& prefix, Var<T> x) {
  Var<T> w = p[prefix + ".weight"];
  const std::size_t k = w.shape().at(2);
  return conv2d(x, w, std::optional<Var<T>>(p[prefix + ".bias"]), 1, k / 2);
}

template <typename T>
Var<T> channel_attention(Var<T> x, Var<T> w1, Var<T> b1, Var<T> w2, Var<T> b2) {
  require_rank(x.shape(), 4, "channel_attention");
  const std::size_t c = x.shape()[1];
  if (w1.shape().size() != 4 || w1.shape()[1] != c || w2.shape().size() != 4 || w2.shape()[0] != c ||
      w2.shape()[1] != w1.shape()[0]) {
    throw DimensionError("channel_attention: weights " + shape_str(w1.shape()) + ", " + shape_str(w2.shape()) +
                         " incompatible with input " + shape_str(x.shape()));
  }
  Var<T> squeezed = global_avg_pool(x);
  Var<T> hidden = relu(conv2d(squeezed, w1, std::optional<Var<T>>(b1)));
  Var<T> gate = sigmoid(conv2d(hidden, w2, std::optional<Var<T>>(b2)));
  return mul_channels(x, gate);
}

template Tensor<float> kaiming_uniform(Shape, std::size_t, Rng&);
template Tensor<double> kaiming_uniform(Shape, std::size_t, Rng&);
template Var<float> conv_same(const BoundParams<float>&, const std::string&, Var<float>);
template Var<double> conv_same(const BoundParams<double>&, const std::string&, Var<double>);
template Var<float> channel_attention(Var<float>, Var<float>, Var<float>, Var<float>, Var<float>);
template Var<double> channel_attention(Var<double>, Var<double>, Var<double>, Var<double>, Var<double>);

}  // namespace qe
