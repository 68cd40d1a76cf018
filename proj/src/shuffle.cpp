#include "qe/ops.hpp"

namespace qe {
namespace {

// Applies the depth-to-space index map in either direction. `to_space`
// copies (N, C*s*s, H, W) -> (N, C, H*s, W*s); otherwise the reverse.
template <typename T>
void rearrange(const T* src, T* dst, std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::size_t s,
               bool to_space, bool accumulate) {
  const std::size_t ss = s * s;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) {
          const std::size_t depth = ch * ss + i * s + j;
          for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
              const std::size_t d_idx = ((b * c * ss + depth) * h + y) * w + x;
              const std::size_t s_idx = ((b * c + ch) * h * s + (y * s + i)) * w * s + (x * s + j);
              const std::size_t from = to_space ? d_idx : s_idx;
              const std::size_t to = to_space ? s_idx : d_idx;
              if (accumulate)
                dst[to] += src[from];
              else
                dst[to] = src[from];
            }
        }
}

void check_factor(std::size_t s, const char* what) {
  if (s == 0) throw ConfigError(std::string(what) + ": factor must be positive");
}

}  // namespace

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::size_t s) {
  check_factor(s, "pixel_shuffle");
  require_rank(x.shape(), 4, "pixel_shuffle");
  const Shape& xs = x.shape();
  if (xs[1] % (s * s) != 0) {
    throw DimensionError("pixel_shuffle: channels " + std::to_string(xs[1]) + " not divisible by " +
                         std::to_string(s * s));
  }
  const std::size_t c = xs[1] / (s * s);
  Tensor<T> out(Shape{xs[0], c, xs[2] * s, xs[3] * s});
  rearrange(x.raw(), out.raw(), xs[0], c, xs[2], xs[3], s, true, false);
  return out;
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::size_t s) {
  check_factor(s, "pixel_unshuffle");
  require_rank(x.shape(), 4, "pixel_unshuffle");
  const Shape& xs = x.shape();
  if (xs[2] % s != 0 || xs[3] % s != 0) {
    throw DimensionError("pixel_unshuffle: spatial extent " + shape_str(xs) + " not divisible by " + std::to_string(s));
  }
  const std::size_t h = xs[2] / s, w = xs[3] / s;
  Tensor<T> out(Shape{xs[0], xs[1] * s * s, h, w});
  rearrange(x.raw(), out.raw(), xs[0], xs[1], h, w, s, false, false);
  return out;
}

template <typename T>
Var<T> pixel_shuffle(Var<T> x, std::size_t s) {
  Tensor<T> out = pixel_shuffle(x.value(), s);
  const Shape& xs = x.shape();
  const std::size_t n = xs[0], c = xs[1] / (s * s), h = xs[2], w = xs[3], ix = x.id;
  return x.graph->record(std::move(out), {ix}, [=](Graph<T>& gr, const Tensor<T>& go) {
    rearrange(go.raw(), gr.grad_buffer(ix).raw(), n, c, h, w, s, false, true);
  });
}

template <typename T>
Var<T> pixel_unshuffle(Var<T> x, std::size_t s) {
  Tensor<T> out = pixel_unshuffle(x.value(), s);
  const Shape& xs = x.shape();
  const std::size_t n = xs[0], c = xs[1], h = xs[2] / s, w = xs[3] / s, ix = x.id;
  return x.graph->record(std::move(out), {ix}, [=](Graph<T>& gr, const Tensor<T>& go) {
    rearrange(go.raw(), gr.grad_buffer(ix).raw(), n, c, h, w, s, true, true);
  });
}

template Tensor<float> pixel_shuffle(const Tensor<float>&, std::size_t);
template Tensor<double> pixel_shuffle(const Tensor<double>&, std::size_t);
template Tensor<float> pixel_unshuffle(const Tensor<float>&, std::size_t);
template Tensor<double> pixel_unshuffle(const Tensor<double>&, std::size_t);
template Var<float> pixel_shuffle(Var<float>, std::size_t);
template Var<double> pixel_shuffle(Var<double>, std::size_t);
template Var<float> pixel_unshuffle(Var<float>, std::size_t);
template Var<double> pixel_unshuffle(Var<double>, std::size_t);

}  // namespace qe
