#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qe/autograd.hpp"

namespace qe {

// Per-plane 2-D spectra of a tensor whose last two axes are (H, W). Leading
// axes are carried through unchanged. Storage is double precision regardless
// of the input tensor's scalar type.
struct ComplexField {
  Shape shape;
  std::vector<double> re;
  std::vector<double> im;

  std::size_t height() const { return shape[shape.size() - 2]; }
  std::size_t width() const { return shape[shape.size() - 1]; }
  std::size_t planes() const { return re.size() / (height() * width()); }
};

// In-place 1-D DFT of arbitrary length (mixed-radix, recursive). sign = -1
// is the forward transform, +1 the unnormalized inverse.
void fft1d(std::vector<std::complex<double>>& data, int sign);

// Unnormalized forward transform X(u,v) = sum_xy x(x,y) exp(-j2pi(ux/H + vy/W)).
template <typename T>
ComplexField dft2(const Tensor<T>& frame);

// Unnormalized inverse (conjugate-sign) transform: the adjoint of dft2.
ComplexField idft2(const ComplexField& field);

struct AmplitudePhase {
  Tensor<double> amplitude;
  Tensor<double> phase;
};

// Four-quadrant phase in (-pi, pi]; bins with amplitude below eps_amp get phase 0.
AmplitudePhase amplitude_phase(const ComplexField& field, double eps_amp = 1e-8);

enum class PenaltyNorm { L1, L2 };

struct FftLossConfig {
  double lambda = 1.0;
  PenaltyNorm norm = PenaltyNorm::L1;
  double eps_amp = 1e-8;

  void validate() const;
};

template <typename T>
struct FftLossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d pred, same shape as pred
};

// mean_bins pen(A(pred) - A(target)) + lambda * mean_bins pen(P(pred) - P(target))
// with pen = |.| (L1) or (.)^2 (L2). Phase differences are taken raw.
template <typename T>
FftLossResult<T> fft_loss_with_grad(const Tensor<T>& pred, const Tensor<T>& target, const FftLossConfig& cfg);

// Graph node for the same loss; the gradient flows to pred only.
template <typename T>
Var<T> fft_loss(Var<T> pred, const Tensor<T>& target, const FftLossConfig& cfg);

// Mean squared amplitude difference over bins whose normalized radial
// frequency exceeds cutoff. Radial frequency is sqrt(fu^2 + fv^2) / sqrt(1/2)
// with fu = min(u, H-u)/H, so it spans [0, 1]. cutoff must lie in (0, 1).
template <typename T>
double band_energy_error(const Tensor<T>& pred, const Tensor<T>& target, double cutoff_fraction);

}  // namespace qe
