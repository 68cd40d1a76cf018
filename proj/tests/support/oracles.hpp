#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is written as plain loops without the library's
// kernels so that agreement is meaningful.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qe/autograd.hpp"
#include "qe/layers.hpp"
#include "qe/metrics.hpp"
#include "qe/network.hpp"
#include "qe/rfp.hpp"

namespace oracle {

using qe::Shape;
using qe::Tensor;
using Params = qe::ParamStore<double>;

// ---- gradients -----------------------------------------------------------

using LossBuilder = std::function<qe::Var<double>(qe::Graph<double>&, const std::vector<qe::Var<double>>&)>;

struct GradcheckResult {
  double max_rel_error = 0.0;  // worst input, norm-wise
  std::size_t worst_input = 0;
};

// Central differences with the given step on up to max_coords randomly chosen
// coordinates of each input. Relative error per input is
// ||analytic - numeric|| / max(||analytic||, ||numeric||) over those coordinates.
GradcheckResult gradcheck(const LossBuilder& build, const std::vector<Tensor<double>>& inputs,
                          std::size_t max_coords = 48, double step = 1e-5, std::uint64_t seed = 11);

// Gradcheck of a model loss w.r.t. every parameter tensor and the listed inputs.
GradcheckResult gradcheck_params(const std::function<qe::Var<double>(qe::Graph<double>&, const qe::BoundParams<double>&)>& build,
                                 const Params& params, std::size_t max_coords = 12, double step = 1e-5,
                                 std::uint64_t seed = 13);

Tensor<double> random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

// ---- layers ---------------------------------------------------------------

Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>* bias, std::size_t stride,
                      std::size_t padding);
Tensor<double> channel_attention(const Tensor<double>& x, const Tensor<double>& w1, const Tensor<double>& b1,
                                 const Tensor<double>& w2, const Tensor<double>& b2);
Tensor<double> ada_block(const Params& p, const std::string& prefix, const Tensor<double>& x);
Tensor<double> iqe(const Params& p, const Tensor<double>& feature, const qe::ModelConfig& cfg);
Tensor<double> stff(const Params& p, const Tensor<double>& stack);
Tensor<double> depth_to_space(const Tensor<double>& x, std::size_t s);

// Closed-form parameter count of the full model.
std::size_t model_parameter_count(const qe::ModelConfig& cfg);

// ---- spectra --------------------------------------------------------------

struct Spectrum {
  std::vector<double> re, im;  // per plane, row-major (u, v)
};
Spectrum direct_dft(const Tensor<double>& x);

// Straight-line transcription of the frequency loss value.
double fft_loss_value(const Tensor<double>& pred, const Tensor<double>& target, double lambda, bool l2, double eps);

// ---- reference proposal ---------------------------------------------------

struct RefOracle {
  std::vector<std::size_t> preceding, following;
};
RefOracle propose(const std::vector<int>& qp, const std::vector<qe::FrameType>& types, std::size_t t, int radius,
                  qe::TrackMode mode);

// ---- metrics ----------------------------------------------------------------

double ssim_direct(const qe::Plane& a, const qe::Plane& b);

// Bjontegaard delta rate via normal equations and composite Simpson integration.
double bd_rate_reference(const std::vector<qe::RdPoint>& anchor, const std::vector<qe::RdPoint>& test);

}  // namespace oracle
