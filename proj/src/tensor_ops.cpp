#include <algorithm>
#include <cmath>

#include "qe/ops.hpp"

namespace qe {
namespace {

template <typename T>
Graph<T>& same_graph(Var<T> a, Var<T> b) {
  if (a.graph == nullptr || a.graph != b.graph) throw UsageError("operands belong to different graphs");
  return *a.graph;
}

template <typename T>
void accumulate(Graph<T>& g, std::size_t id, const Tensor<T>& delta) {
  if (!g.requires_grad(id)) return;
  auto dst = g.grad_buffer(id).data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
T sign_of(T v) {
  return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0});
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(a, b);
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph<T>& gr, const Tensor<T>& go) {
    accumulate(gr, ia, go);
    accumulate(gr, ib, go);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(a, b);
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph<T>& gr, const Tensor<T>& go) {
    accumulate(gr, ia, go);
    if (!gr.requires_grad(ib)) return;
    auto d = gr.grad_buffer(ib).data();
    auto s = go.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= s[i];
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v *= factor;
  const std::size_t ix = x.id;
  return x.graph->record(std::move(out), {ix}, [ix, factor](Graph<T>& gr, const Tensor<T>& go) {
    auto d = gr.grad_buffer(ix).data();
    auto s = go.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
  });
}

template <typename T>
Var<T> scale_by(Var<T> x, Var<T> alpha) {
  Graph<T>& g = same_graph(x, alpha);
  if (alpha.value().size() != 1) throw DimensionError("scale_by: alpha must hold one value, got " + shape_str(alpha.shape()));
  const T a = alpha.value()[0];
  Tensor<T> out = x.value();
  for (T& v : out.data()) v *= a;
  const std::size_t ix = x.id, ia = alpha.id;
  return g.record(std::move(out), {ix, ia}, [ix, ia](Graph<T>& gr, const Tensor<T>& go) {
    const T av = gr.value(ia)[0];
    auto s = go.data();
    if (gr.requires_grad(ix)) {
      auto d = gr.grad_buffer(ix).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += av * s[i];
    }
    if (gr.requires_grad(ia)) {
      auto xv = gr.value(ix).data();
      T acc{0};
      for (std::size_t i = 0; i < s.size(); ++i) acc += xv[i] * s[i];
      gr.grad_buffer(ia)[0] += acc;
    }
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  const std::size_t ix = x.id;
  return x.graph->record(std::move(out), {ix}, [ix](Graph<T>& gr, const Tensor<T>& go) {
    auto in = gr.value(ix).data();
    auto d = gr.grad_buffer(ix).data();
    auto s = go.data();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (in[i] > T{0}) d[i] += s[i];
  });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = T{1} / (T{1} + std::exp(-v));
  const std::size_t ix = x.id;
  Tensor<T> saved = x.requires_grad() ? out : Tensor<T>();
  return x.graph->record(std::move(out), {ix}, [ix, saved = std::move(saved)](Graph<T>& gr, const Tensor<T>& go) {
    auto d = gr.grad_buffer(ix).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += go[i] * saved[i] * (T{1} - saved[i]);
  });
}

template <typename T>
Var<T> mul_channels(Var<T> x, Var<T> gate) {
  Graph<T>& g = same_graph(x, gate);
  require_rank(x.shape(), 4, "mul_channels");
  const Shape& xs = x.shape();
  const std::size_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
  if (gate.shape() != Shape{n, c, 1, 1}) {
    throw DimensionError("mul_channels: gate shape " + shape_str(gate.shape()) + " incompatible with " + shape_str(xs));
  }
  Tensor<T> out = x.value();
  auto o = out.data();
  auto gv = gate.value().data();
  for (std::size_t p = 0; p < n * c; ++p)
    for (std::size_t i = 0; i < hw; ++i) o[p * hw + i] *= gv[p];
  const std::size_t ix = x.id, ig = gate.id;
  return g.record(std::move(out), {ix, ig}, [ix, ig, n, c, hw](Graph<T>& gr, const Tensor<T>& go) {
    auto s = go.data();
    if (gr.requires_grad(ix)) {
      auto gv2 = gr.value(ig).data();
      auto d = gr.grad_buffer(ix).data();
      for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t i = 0; i < hw; ++i) d[p * hw + i] += s[p * hw + i] * gv2[p];
    }
    if (gr.requires_grad(ig)) {
      auto xv = gr.value(ix).data();
      auto d = gr.grad_buffer(ig).data();
      for (std::size_t p = 0; p < n * c; ++p) {
        T acc{0};
        for (std::size_t i = 0; i < hw; ++i) acc += s[p * hw + i] * xv[p * hw + i];
        d[p] += acc;
      }
    }
  });
}

template <typename T>
Var<T> global_avg_pool(Var<T> x) {
  require_rank(x.shape(), 4, "global_avg_pool");
  const Shape& xs = x.shape();
  const std::size_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
  if (hw == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  Tensor<T> out(Shape{n, c, 1, 1});
  auto xv = x.value().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    T acc{0};
    for (std::size_t i = 0; i < hw; ++i) acc += xv[p * hw + i];
    out[p] = acc / static_cast<T>(hw);
  }
  const std::size_t ix = x.id;
  return x.graph->record(std::move(out), {ix}, [ix, n, c, hw](Graph<T>& gr, const Tensor<T>& go) {
    auto d = gr.grad_buffer(ix).data();
    const T inv = T{1} / static_cast<T>(hw);
    for (std::size_t p = 0; p < n * c; ++p)
      for (std::size_t i = 0; i < hw; ++i) d[p * hw + i] += go[p] * inv;
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw UsageError("concat_channels: no inputs");
  Graph<T>& g = *parts.front().graph;
  const Shape& first = parts.front().shape();
  require_rank(first, 4, "concat_channels");
  std::size_t total_c = 0;
  std::vector<std::size_t> ids;
  for (const Var<T>& p : parts) {
    if (p.graph != &g) throw UsageError("concat_channels: operands belong to different graphs");
    const Shape& s = p.shape();
    require_rank(s, 4, "concat_channels");
    if (s[0] != first[0] || s[2] != first[2] || s[3] != first[3]) {
      throw DimensionError("concat_channels: incompatible shapes " + shape_str(first) + " and " + shape_str(s));
    }
    total_c += s[1];
    ids.push_back(p.id);
  }
  const std::size_t n = first[0], hw = first[2] * first[3];
  Tensor<T> out(Shape{n, total_c, first[2], first[3]});
  std::size_t offset = 0;
  std::vector<std::size_t> channels;
  for (const Var<T>& p : parts) {
    const std::size_t c = p.shape()[1];
    auto src = p.value().data();
    for (std::size_t b = 0; b < n; ++b)
      std::copy_n(src.begin() + b * c * hw, c * hw, out.data().begin() + (b * total_c + offset) * hw);
    channels.push_back(c);
    offset += c;
  }
  return g.record(std::move(out), ids, [ids, channels, n, hw, total_c](Graph<T>& gr, const Tensor<T>& go) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const std::size_t c = channels[k];
      if (gr.requires_grad(ids[k])) {
        auto d = gr.grad_buffer(ids[k]).data();
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t i = 0; i < c * hw; ++i) d[b * c * hw + i] += go[(b * total_c + off) * hw + i];
      }
      off += c;
    }
  });
}

template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t first, std::size_t count) {
  require_rank(x.shape(), 4, "slice_channels");
  const Shape& xs = x.shape();
  if (count == 0 || first + count > xs[1]) {
    throw DimensionError("slice_channels: range [" + std::to_string(first) + "," + std::to_string(first + count) +
                         ") outside " + shape_str(xs));
  }
  const std::size_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
  Tensor<T> out(Shape{n, count, xs[2], xs[3]});
  auto src = x.value().data();
  for (std::size_t b = 0; b < n; ++b)
    std::copy_n(src.begin() + (b * c + first) * hw, count * hw, out.data().begin() + b * count * hw);
  const std::size_t ix = x.id;
  return x.graph->record(std::move(out), {ix}, [ix, n, c, hw, first, count](Graph<T>& gr, const Tensor<T>& go) {
    auto d = gr.grad_buffer(ix).data();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < count * hw; ++i) d[(b * c + first) * hw + i] += go[b * count * hw + i];
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T acc{0};
  for (T v : x.value().data()) acc += v;
  const std::size_t ix = x.id;
  return x.graph->record(Tensor<T>(Shape{1}, acc), {ix}, [ix](Graph<T>& gr, const Tensor<T>& go) {
    for (T& d : gr.grad_buffer(ix).data()) d += go[0];
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t count = x.value().size();
  if (count == 0) throw DimensionError("mean: empty tensor");
  T acc{0};
  for (T v : x.value().data()) acc += v;
  const std::size_t ix = x.id;
  return x.graph->record(Tensor<T>(Shape{1}, acc / static_cast<T>(count)), {ix},
                         [ix, count](Graph<T>& gr, const Tensor<T>& go) {
                           const T g = go[0] / static_cast<T>(count);
                           for (T& d : gr.grad_buffer(ix).data()) d += g;
                         });
}

template <typename T>
Var<T> l1_loss(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(a, b);
  require_same_shape(a.shape(), b.shape(), "l1_loss");
  const std::size_t count = a.value().size();
  if (count == 0) throw DimensionError("l1_loss: empty tensor");
  auto av = a.value().data();
  auto bv = b.value().data();
  T acc{0};
  for (std::size_t i = 0; i < count; ++i) acc += std::abs(av[i] - bv[i]);
  const std::size_t ia = a.id, ib = b.id;
  return g.record(Tensor<T>(Shape{1}, acc / static_cast<T>(count)), {ia, ib},
                  [ia, ib, count](Graph<T>& gr, const Tensor<T>& go) {
                    const T scale_v = go[0] / static_cast<T>(count);
                    auto x = gr.value(ia).data();
                    auto y = gr.value(ib).data();
                    if (gr.requires_grad(ia)) {
                      auto d = gr.grad_buffer(ia).data();
                      for (std::size_t i = 0; i < count; ++i) d[i] += scale_v * sign_of(x[i] - y[i]);
                    }
                    if (gr.requires_grad(ib)) {
                      auto d = gr.grad_buffer(ib).data();
                      for (std::size_t i = 0; i < count; ++i) d[i] -= scale_v * sign_of(x[i] - y[i]);
                    }
                  });
}

template <typename T>
Var<T> l2_loss(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(a, b);
  require_same_shape(a.shape(), b.shape(), "l2_loss");
  const std::size_t count = a.value().size();
  if (count == 0) throw DimensionError("l2_loss: empty tensor");
  auto av = a.value().data();
  auto bv = b.value().data();
  T acc{0};
  for (std::size_t i = 0; i < count; ++i) {
    const T d = av[i] - bv[i];
    acc += d * d;
  }
  const std::size_t ia = a.id, ib = b.id;
  return g.record(Tensor<T>(Shape{1}, acc / static_cast<T>(count)), {ia, ib},
                  [ia, ib, count](Graph<T>& gr, const Tensor<T>& go) {
                    const T scale_v = T{2} * go[0] / static_cast<T>(count);
                    auto x = gr.value(ia).data();
                    auto y = gr.value(ib).data();
                    if (gr.requires_grad(ia)) {
                      auto d = gr.grad_buffer(ia).data();
                      for (std::size_t i = 0; i < count; ++i) d[i] += scale_v * (x[i] - y[i]);
                    }
                    if (gr.requires_grad(ib)) {
                      auto d = gr.grad_buffer(ib).data();
                      for (std::size_t i = 0; i < count; ++i) d[i] -= scale_v * (x[i] - y[i]);
                    }
                  });
}

#define QE_INSTANTIATE(T)                                                           \
  template Var<T> add(Var<T>, Var<T>);                                              \
  template Var<T> sub(Var<T>, Var<T>);                                              \
  template Var<T> scale(Var<T>, T);                                                 \
  template Var<T> scale_by(Var<T>, Var<T>);                                         \
  template Var<T> relu(Var<T>);                                                     \
  template Var<T> sigmoid(Var<T>);                                                  \
  template Var<T> mul_channels(Var<T>, Var<T>);                                     \
  template Var<T> global_avg_pool(Var<T>);                                          \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                      \
  template Var<T> slice_channels(Var<T>, std::size_t, std::size_t);                 \
  template Var<T> sum(Var<T>);                                                      \
  template Var<T> mean(Var<T>);                                                     \
  template Var<T> l1_loss(Var<T>, Var<T>);                                          \
  template Var<T> l2_loss(Var<T>, Var<T>);

QE_INSTANTIATE(float)
QE_INSTANTIATE(double)
#undef QE_INSTANTIATE

}  // namespace qe
