#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qe/tensor.hpp"

namespace qe {

// Luminance plane on the 8-bit scale [0, 255].
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;
};

// Converts a (1, H, W) or (H, W) frame holding values in [0, 1].
template <typename T>
Plane to_plane(const Tensor<T>& frame);

inline constexpr double kPsnrCap = 100.0;

// 10 log10(255^2 / MSE); identical planes give kPsnrCap.
double psnr(const Plane& a, const Plane& b);

// Mean SSIM over all positions of an 11x11 Gaussian window (sigma 1.5) that
// fit inside the plane; K1 = 0.01, K2 = 0.03, dynamic range 255.
double ssim(const Plane& a, const Plane& b);

struct CurveStats {
  double pvd = 0.0;  // mean (peak - next valley)
  double sd = 0.0;   // population standard deviation
};

// Runs of equal values collapse to their first index; peaks and valleys are
// strict interior extrema of the collapsed curve. Each peak pairs with the
// first valley after it; peaks without one are skipped.
CurveStats curve_stats(std::span<const double> curve);

struct RdPoint {
  double bitrate = 0.0;
  double psnr = 0.0;
};

struct BdRate {
  double log_rate_delta = 0.0;  // mean log10(R_test / R_anchor) over the overlap
  double bd_rate = 0.0;         // percent; negative means the test saves bitrate
  double reduction() const { return -bd_rate; }
};

// Bjontegaard delta bitrate from cubic fits of log10(rate) against PSNR.
BdRate bd_br(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test);

// Rows "bitrate,psnr"; blank lines, '#' comments and a non-numeric header are skipped.
std::vector<RdPoint> parse_rd_csv(const std::string& text);

struct SequenceReport {
  std::string name;
  double delta_psnr = 0.0;
  double delta_ssim = 0.0;
  std::vector<double> psnr_compressed, psnr_enhanced;
  std::vector<double> ssim_compressed, ssim_enhanced;
  CurveStats compressed_stats, enhanced_stats;
};

struct EvalReport {
  std::vector<SequenceReport> sequences;
  double delta_psnr = 0.0;  // aggregates: arithmetic means over sequences
  double delta_ssim = 0.0;
  double pvd_compressed = 0.0, sd_compressed = 0.0;
  double pvd_enhanced = 0.0, sd_enhanced = 0.0;
  std::string config_hash;
  std::string weights_hash;
};

// Per-frame PSNR/SSIM of compressed and enhanced against truth and the mean
// per-frame improvement.
SequenceReport delta_metrics(const std::string& name, const std::vector<Plane>& compressed,
                             const std::vector<Plane>& enhanced, const std::vector<Plane>& truth);

EvalReport aggregate_report(std::vector<SequenceReport> sequences);

std::string report_to_text(const EvalReport& report);
EvalReport report_from_text(const std::string& text);

}  // namespace qe
