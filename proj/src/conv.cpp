#include <Eigen/Core>

#include "qe/ops.hpp"

namespace qe {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  std::size_t n, cin, h, w;
  std::size_t cout, kh, kw;
  std::size_t stride, pad;
  std::size_t ho, wo;

  std::size_t patch() const { return cin * kh * kw; }
  std::size_t pixels() const { return ho * wo; }
};

std::size_t output_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad, const char* axis) {
  const std::size_t padded = in + 2 * pad;
  if (padded < k) {
    throw ConfigError(std::string("conv2d: kernel larger than padded ") + axis + " extent");
  }
  if ((padded - k) % stride != 0) {
    throw ConfigError(std::string("conv2d: non-integral output ") + axis + " for extent " + std::to_string(in) +
                      ", kernel " + std::to_string(k) + ", stride " + std::to_string(stride) + ", padding " +
                      std::to_string(pad));
  }
  return (padded - k) / stride + 1;
}

// cols: (cin*kh*kw) x (ho*wo), row-major.
template <typename T>
void im2col(const T* img, const ConvGeometry& g, T* cols) {
  const std::size_t hw_out = g.pixels();
  for (std::size_t c = 0; c < g.cin; ++c) {
    const T* plane = img + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        T* row = cols + ((c * g.kh + ky) * g.kw + kx) * hw_out;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill_n(dst, g.wo, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* img) {
  const std::size_t hw_out = g.pixels();
  for (std::size_t c = 0; c < g.cin; ++c) {
    T* plane = img + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const T* row = cols + ((c * g.kh + ky) * g.kw + kx) * hw_out;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          const T* src = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias, std::size_t stride, std::size_t padding) {
  if (x.graph == nullptr || x.graph != weight.graph || (bias && bias->graph != x.graph)) {
    throw UsageError("conv2d: operands belong to different graphs");
  }
  Graph<T>& graph = *x.graph;
  require_rank(x.shape(), 4, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[1] != xs[1]) {
    throw DimensionError("conv2d: weight " + shape_str(ws) + " expects " + std::to_string(ws[1]) +
                         " input channels, input is " + shape_str(xs));
  }
  if (bias && bias->shape() != Shape{ws[0]}) {
    throw DimensionError("conv2d: bias shape " + shape_str(bias->shape()) + " does not match " +
                         std::to_string(ws[0]) + " output channels");
  }
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], stride, padding, 0, 0};
  g.ho = output_extent(g.h, g.kh, stride, padding, "height");
  g.wo = output_extent(g.w, g.kw, stride, padding, "width");

  Tensor<T> out(Shape{g.n, g.cout, g.ho, g.wo});
  std::vector<T> cols(g.patch() * g.pixels());
  Eigen::Map<const RowMat<T>> wm(weight.value().raw(), g.cout, g.patch());
  for (std::size_t b = 0; b < g.n; ++b) {
    im2col(x.value().raw() + b * g.cin * g.h * g.w, g, cols.data());
    Eigen::Map<const RowMat<T>> cm(cols.data(), g.patch(), g.pixels());
    Eigen::Map<RowMat<T>> om(out.raw() + b * g.cout * g.pixels(), g.cout, g.pixels());
    om.noalias() = wm * cm;
    if (bias) {
      const T* bv = bias->value().raw();
      for (std::size_t c = 0; c < g.cout; ++c) om.row(c).array() += bv[c];
    }
  }

  std::vector<std::size_t> inputs{x.id, weight.id};
  const std::optional<std::size_t> ib = bias ? std::optional<std::size_t>(bias->id) : std::nullopt;
  if (ib) inputs.push_back(*ib);
  const std::size_t ix = x.id, iw = weight.id;
  return graph.record(std::move(out), inputs, [g, ix, iw, ib](Graph<T>& gr, const Tensor<T>& go) {
    const bool need_x = gr.requires_grad(ix);
    const bool need_w = gr.requires_grad(iw);
    const bool need_b = ib && gr.requires_grad(*ib);
    std::vector<T> cols(g.patch() * g.pixels());
    Eigen::Map<const RowMat<T>> wm(gr.value(iw).raw(), g.cout, g.patch());
    for (std::size_t b = 0; b < g.n; ++b) {
      Eigen::Map<const RowMat<T>> gom(go.raw() + b * g.cout * g.pixels(), g.cout, g.pixels());
      if (need_w) {
        im2col(gr.value(ix).raw() + b * g.cin * g.h * g.w, g, cols.data());
        Eigen::Map<const RowMat<T>> cm(cols.data(), g.patch(), g.pixels());
        Eigen::Map<RowMat<T>> gw(gr.grad_buffer(iw).raw(), g.cout, g.patch());
        gw.noalias() += gom * cm.transpose();
      }
      if (need_b) {
        T* gb = gr.grad_buffer(*ib).raw();
        for (std::size_t c = 0; c < g.cout; ++c) gb[c] += gom.row(c).sum();
      }
      if (need_x) {
        Eigen::Map<RowMat<T>> cm(cols.data(), g.patch(), g.pixels());
        cm.noalias() = wm.transpose() * gom;
        col2im_add(cols.data(), g, gr.grad_buffer(ix).raw() + b * g.cin * g.h * g.w);
      }
    }
  });
}

template Var<float> conv2d(Var<float>, Var<float>, std::optional<Var<float>>, std::size_t, std::size_t);
template Var<double> conv2d(Var<double>, Var<double>, std::optional<Var<double>>, std::size_t, std::size_t);

}  // namespace qe
