#include "qe/ensemble.hpp"

#include <algorithm>
#include <future>
#include <vector>

namespace qe {

std::array<Augmentation, 8> all_augmentations() {
  std::array<Augmentation, 8> out{};
  for (int k = 0; k < 8; ++k) out[k] = Augmentation{k % 4, k >= 4};
  return out;
}

// With F a flip and R a rotation, F R F = R^-1, so every flipped element is
// its own inverse.
Augmentation inverse(Augmentation a) {
  if (a.flip) return a;
  return Augmentation{(4 - a.quarter_turns) % 4, false};
}

Augmentation compose(Augmentation a, Augmentation b) {
  // a after b: R^ra F^fa R^rb F^fb. Moving F^fa past R^rb negates rb.
  const int rb = a.flip ? (4 - b.quarter_turns) % 4 : b.quarter_turns;
  return Augmentation{(a.quarter_turns + rb) % 4, a.flip != b.flip};
}

template <typename T>
Tensor<T> apply_augmentation(const Tensor<T>& x, Augmentation a) {
  if (x.rank() < 2) throw DimensionError("augmentation needs a tensor with two spatial axes, got " + shape_str(x.shape()));
  const Shape& s = x.shape();
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  const std::size_t planes = x.size() / std::max<std::size_t>(h * w, 1);
  const int turns = ((a.quarter_turns % 4) + 4) % 4;
  Shape out_shape = s;
  const bool swap = turns % 2 == 1;
  if (swap) std::swap(out_shape[s.size() - 2], out_shape[s.size() - 1]);
  const std::size_t ow = out_shape[s.size() - 1];
  Tensor<T> out(out_shape);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.raw() + p * h * w;
    T* dst = out.raw() + p * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) {
        // Flip first, then rotate counter-clockwise `turns` times.
        std::size_t cy = y, cx = a.flip ? w - 1 - xx : xx;
        std::size_t ch = h, cw = w;
        for (int t = 0; t < turns; ++t) {
          const std::size_t ny = cw - 1 - cx, nx = cy;
          cy = ny;
          cx = nx;
          std::swap(ch, cw);
        }
        dst[cy * ow + cx] = src[y * w + xx];
      }
  }
  return out;
}

template <typename T>
Tensor<T> self_ensemble(const EnhanceFn<T>& model, const Tensor<T>& stack, bool parallel) {
  const auto augs = all_augmentations();
  std::array<Tensor<T>, 8> branches;
  auto run = [&](std::size_t k) {
    return apply_augmentation(model(apply_augmentation(stack, augs[k])), inverse(augs[k]));
  };
  if (parallel) {
    std::array<std::future<Tensor<T>>, 8> jobs;
    for (std::size_t k = 0; k < 8; ++k) jobs[k] = std::async(std::launch::async, run, k);
    for (std::size_t k = 0; k < 8; ++k) branches[k] = jobs[k].get();
  } else {
    for (std::size_t k = 0; k < 8; ++k) branches[k] = run(k);
  }
  for (std::size_t k = 1; k < 8; ++k) require_same_shape(branches[0].shape(), branches[k].shape(), "self_ensemble");
  Tensor<T> out(branches[0].shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T s01 = branches[0][i] + branches[1][i], s23 = branches[2][i] + branches[3][i];
    const T s45 = branches[4][i] + branches[5][i], s67 = branches[6][i] + branches[7][i];
    out[i] = ((s01 + s23) + (s45 + s67)) / T{8};
  }
  return out;
}

namespace {

struct FuseGeometry {
  std::size_t n, c, hw;
};

FuseGeometry fuse_geometry(const Shape& y1, const Shape& y2, const Shape& mask) {
  require_rank(y1, 4, "gated_fuse");
  require_same_shape(y1, y2, "gated_fuse");
  if (mask != Shape{y1[0], 1, y1[2], y1[3]}) {
    throw DimensionError("gated_fuse: mask shape " + shape_str(mask) + " incompatible with " + shape_str(y1));
  }
  return {y1[0], y1[1], y1[2] * y1[3]};
}

template <typename T>
Tensor<T> fuse_values(const Tensor<T>& y1, const Tensor<T>& y2, const Tensor<T>& mask, const FuseGeometry& g) {
  Tensor<T> out(y1.shape());
  for (std::size_t b = 0; b < g.n; ++b)
    for (std::size_t c = 0; c < g.c; ++c)
      for (std::size_t i = 0; i < g.hw; ++i) {
        const std::size_t k = (b * g.c + c) * g.hw + i;
        const T m = mask[b * g.hw + i];
        const T v = m * y1[k] + (T{1} - m) * y2[k];
        out[k] = std::clamp(v, std::min(y1[k], y2[k]), std::max(y1[k], y2[k]));
      }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> gated_fuse(const Tensor<T>& y1, const Tensor<T>& y2, const Tensor<T>& mask) {
  return fuse_values(y1, y2, mask, fuse_geometry(y1.shape(), y2.shape(), mask.shape()));
}

template <typename T>
Var<T> gated_fuse(Var<T> y1, Var<T> y2, Var<T> mask) {
  if (y1.graph == nullptr || y1.graph != y2.graph || y1.graph != mask.graph) {
    throw UsageError("gated_fuse: operands belong to different graphs");
  }
  const FuseGeometry g = fuse_geometry(y1.shape(), y2.shape(), mask.shape());
  Tensor<T> out = fuse_values(y1.value(), y2.value(), mask.value(), g);
  const std::size_t i1 = y1.id, i2 = y2.id, im = mask.id;
  return y1.graph->record(std::move(out), {i1, i2, im}, [g, i1, i2, im](Graph<T>& gr, const Tensor<T>& go) {
    const Tensor<T>& m = gr.value(im);
    const Tensor<T>& a = gr.value(i1);
    const Tensor<T>& b = gr.value(i2);
    T* d1 = gr.requires_grad(i1) ? gr.grad_buffer(i1).raw() : nullptr;
    T* d2 = gr.requires_grad(i2) ? gr.grad_buffer(i2).raw() : nullptr;
    T* dm = gr.requires_grad(im) ? gr.grad_buffer(im).raw() : nullptr;
    for (std::size_t n = 0; n < g.n; ++n)
      for (std::size_t c = 0; c < g.c; ++c)
        for (std::size_t i = 0; i < g.hw; ++i) {
          const std::size_t k = (n * g.c + c) * g.hw + i;
          const std::size_t mk = n * g.hw + i;
          if (d1) d1[k] += go[k] * m[mk];
          if (d2) d2[k] += go[k] * (T{1} - m[mk]);
          if (dm) dm[mk] += go[k] * (a[k] - b[k]);
        }
  });
}

template Tensor<float> apply_augmentation(const Tensor<float>&, Augmentation);
template Tensor<double> apply_augmentation(const Tensor<double>&, Augmentation);
template Tensor<float> self_ensemble(const EnhanceFn<float>&, const Tensor<float>&, bool);
template Tensor<double> self_ensemble(const EnhanceFn<double>&, const Tensor<double>&, bool);
template Tensor<float> gated_fuse(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> gated_fuse(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);
template Var<float> gated_fuse(Var<float>, Var<float>, Var<float>);
template Var<double> gated_fuse(Var<double>, Var<double>, Var<double>);

}  // namespace qe
