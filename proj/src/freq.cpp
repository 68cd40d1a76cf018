#include "qe/freq.hpp"

#include <cmath>
#include <numbers>

namespace qe {
namespace {

using cd = std::complex<double>;

// exp(sign * 2 pi i * k / n), exact at multiples of a quarter turn so that
// purely real bins of real signals come out with an exactly zero imaginary part.
cd unit_root(std::size_t k, std::size_t n, int sign) {
  k %= n;
  if ((4 * k) % n == 0) {
    switch ((4 * k) / n) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, static_cast<double>(sign)};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -static_cast<double>(sign)};
    }
  }
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {std::cos(angle), static_cast<double>(sign) * std::sin(angle)};
}

std::size_t smallest_factor(std::size_t n) {
  if (n % 2 == 0) return 2;
  for (std::size_t p = 3; p * p <= n; p += 2)
    if (n % p == 0) return p;
  return n;
}

// Decimation in time. roots[e] = W_N^e for the top-level length N; a
// sub-transform of length n uses W_n^e = W_N^(e * N / n).
void fft_recursive(const cd* in, std::size_t stride, cd* out, std::size_t n, const std::vector<cd>& roots,
                   std::size_t root_step, std::vector<cd>& scratch) {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t p = smallest_factor(n);
  const std::size_t m = n / p;
  for (std::size_t r = 0; r < p; ++r) fft_recursive(in + r * stride, stride * p, out + r * m, m, roots, root_step * p, scratch);
  const std::size_t top = roots.size();
  scratch.assign(out, out + n);
  for (std::size_t q = 0; q < p; ++q) {
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t bin = k + q * m;
      cd acc = scratch[k];
      for (std::size_t r = 1; r < p; ++r) acc += roots[(r * bin * root_step) % top] * scratch[r * m + k];
      out[bin] = acc;
    }
  }
}

void transform_planes(std::vector<cd>& planes, std::size_t h, std::size_t w, int sign) {
  const std::size_t count = planes.size() / (h * w);
  std::vector<cd> line;
  for (std::size_t p = 0; p < count; ++p) {
    cd* base = planes.data() + p * h * w;
    line.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(base + y * w, w, line.begin());
      fft1d(line, sign);
      std::copy_n(line.begin(), w, base + y * w);
    }
    line.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) line[y] = base[y * w + x];
      fft1d(line, sign);
      for (std::size_t y = 0; y < h; ++y) base[y * w + x] = line[y];
    }
  }
}

void require_image(const Shape& shape, const char* what) {
  if (shape.size() < 2 || shape[shape.size() - 1] == 0 || shape[shape.size() - 2] == 0) {
    throw DimensionError(std::string(what) + ": expected a tensor with non-empty (H, W) trailing axes, got " +
                         shape_str(shape));
  }
}

double penalty(double d, PenaltyNorm norm) { return norm == PenaltyNorm::L1 ? std::abs(d) : d * d; }

double penalty_slope(double d, PenaltyNorm norm) {
  if (norm == PenaltyNorm::L2) return 2.0 * d;
  return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
}

}  // namespace

void fft1d(std::vector<cd>& data, int sign) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  std::vector<cd> roots(n);
  for (std::size_t e = 0; e < n; ++e) roots[e] = unit_root(e, n, sign);
  std::vector<cd> out(n), scratch;
  fft_recursive(data.data(), 1, out.data(), n, roots, 1, scratch);
  data.swap(out);
}

template <typename T>
ComplexField dft2(const Tensor<T>& frame) {
  require_image(frame.shape(), "dft2");
  const Shape& s = frame.shape();
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  std::vector<cd> planes(frame.size());
  for (std::size_t i = 0; i < planes.size(); ++i) planes[i] = cd(static_cast<double>(frame[i]), 0.0);
  transform_planes(planes, h, w, -1);
  ComplexField f{s, std::vector<double>(planes.size()), std::vector<double>(planes.size())};
  for (std::size_t i = 0; i < planes.size(); ++i) {
    f.re[i] = planes[i].real();
    f.im[i] = planes[i].imag();
  }
  return f;
}

ComplexField idft2(const ComplexField& field) {
  require_image(field.shape, "idft2");
  std::vector<cd> planes(field.re.size());
  for (std::size_t i = 0; i < planes.size(); ++i) planes[i] = cd(field.re[i], field.im[i]);
  transform_planes(planes, field.height(), field.width(), +1);
  ComplexField f{field.shape, std::vector<double>(planes.size()), std::vector<double>(planes.size())};
  for (std::size_t i = 0; i < planes.size(); ++i) {
    f.re[i] = planes[i].real();
    f.im[i] = planes[i].imag();
  }
  return f;
}

AmplitudePhase amplitude_phase(const ComplexField& field, double eps_amp) {
  AmplitudePhase ap{Tensor<double>(field.shape), Tensor<double>(field.shape)};
  for (std::size_t i = 0; i < field.re.size(); ++i) {
    const double a = std::hypot(field.re[i], field.im[i]);
    ap.amplitude[i] = a;
    // Adding +0.0 turns a negative zero into +0.0 so that real negative bins
    // map to +pi rather than -pi.
    ap.phase[i] = a < eps_amp ? 0.0 : std::atan2(field.im[i] + 0.0, field.re[i]);
  }
  return ap;
}

void FftLossConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("fft loss: lambda must be non-negative");
  if (!(eps_amp > 0.0)) throw ConfigError("fft loss: eps_amp must be positive");
}

template <typename T>
FftLossResult<T> fft_loss_with_grad(const Tensor<T>& pred, const Tensor<T>& target, const FftLossConfig& cfg) {
  cfg.validate();
  require_same_shape(pred.shape(), target.shape(), "fft_loss");
  const ComplexField fp = dft2(pred);
  const ComplexField ft = dft2(target);
  const AmplitudePhase ap = amplitude_phase(fp, cfg.eps_amp);
  const AmplitudePhase at = amplitude_phase(ft, cfg.eps_amp);
  const std::size_t count = fp.re.size();
  const double inv = 1.0 / static_cast<double>(count);

  double amp_term = 0.0, phase_term = 0.0;
  ComplexField g{fp.shape, std::vector<double>(count), std::vector<double>(count)};
  for (std::size_t i = 0; i < count; ++i) {
    const double da = ap.amplitude[i] - at.amplitude[i];
    const double dp = ap.phase[i] - at.phase[i];
    amp_term += penalty(da, cfg.norm);
    phase_term += penalty(dp, cfg.norm);
    const double a = ap.amplitude[i];
    if (a < cfg.eps_amp) continue;
    const double ga = penalty_slope(da, cfg.norm) * inv;
    const double gp = cfg.lambda * penalty_slope(dp, cfg.norm) * inv;
    const double re = fp.re[i], im = fp.im[i];
    g.re[i] = ga * re / a - gp * im / (a * a);
    g.im[i] = ga * im / a + gp * re / (a * a);
  }
  // d Re/dx = cos, d Im/dx = -sin, so dL/dx = Re(sum G exp(+j theta)).
  const ComplexField back = idft2(g);
  FftLossResult<T> result;
  result.loss = (amp_term + cfg.lambda * phase_term) * inv;
  result.grad = Tensor<T>(pred.shape());
  for (std::size_t i = 0; i < count; ++i) result.grad[i] = static_cast<T>(back.re[i]);
  return result;
}

template <typename T>
Var<T> fft_loss(Var<T> pred, const Tensor<T>& target, const FftLossConfig& cfg) {
  FftLossResult<T> r = fft_loss_with_grad(pred.value(), target, cfg);
  const std::size_t ip = pred.id;
  return pred.graph->record(Tensor<T>(Shape{1}, static_cast<T>(r.loss)), {ip},
                            [ip, grad = std::move(r.grad)](Graph<T>& gr, const Tensor<T>& go) {
                              auto d = gr.grad_buffer(ip).data();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] += go[0] * grad[i];
                            });
}

template <typename T>
double band_energy_error(const Tensor<T>& pred, const Tensor<T>& target, double cutoff_fraction) {
  if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0)) {
    throw UsageError("band_energy_error: cutoff must lie in (0, 1), got " + std::to_string(cutoff_fraction));
  }
  require_same_shape(pred.shape(), target.shape(), "band_energy_error");
  const ComplexField fp = dft2(pred);
  const ComplexField ft = dft2(target);
  const std::size_t h = fp.height(), w = fp.width(), planes = fp.planes();
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t u = 0; u < h; ++u) {
    const double fu = static_cast<double>(std::min(u, h - u)) / static_cast<double>(h);
    for (std::size_t v = 0; v < w; ++v) {
      const double fv = static_cast<double>(std::min(v, w - v)) / static_cast<double>(w);
      const double radial = std::sqrt(fu * fu + fv * fv) / std::sqrt(0.5);
      if (radial <= cutoff_fraction) continue;
      for (std::size_t p = 0; p < planes; ++p) {
        const std::size_t i = (p * h + u) * w + v;
        const double d = std::hypot(fp.re[i], fp.im[i]) - std::hypot(ft.re[i], ft.im[i]);
        acc += d * d;
        ++used;
      }
    }
  }
  return used == 0 ? 0.0 : acc / static_cast<double>(used);
}

template ComplexField dft2(const Tensor<float>&);
template ComplexField dft2(const Tensor<double>&);
template FftLossResult<float> fft_loss_with_grad(const Tensor<float>&, const Tensor<float>&, const FftLossConfig&);
template FftLossResult<double> fft_loss_with_grad(const Tensor<double>&, const Tensor<double>&, const FftLossConfig&);
template Var<float> fft_loss(Var<float>, const Tensor<float>&, const FftLossConfig&);
template Var<double> fft_loss(Var<double>, const Tensor<double>&, const FftLossConfig&);
template double band_energy_error(const Tensor<float>&, const Tensor<float>&, double);
template double band_energy_error(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace qe
