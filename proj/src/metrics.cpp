#include "qe/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

namespace qe {

template <typename T>
Plane to_plane(const Tensor<T>& frame) {
  const Shape& s = frame.shape();
  if (!(s.size() == 2 || (s.size() == 3 && s[0] == 1))) {
    throw DimensionError("to_plane: expected (H, W) or (1, H, W), got " + shape_str(s));
  }
  Plane p{s[s.size() - 2], s[s.size() - 1], std::vector<double>(frame.size())};
  for (std::size_t i = 0; i < frame.size(); ++i) p.data[i] = static_cast<double>(frame[i]) * 255.0;
  return p;
}

template Plane to_plane(const Tensor<float>&);
template Plane to_plane(const Tensor<double>&);

namespace {

void require_same(const Plane& a, const Plane& b, const char* what) {
  if (a.height != b.height || a.width != b.width || a.data.size() != b.data.size() ||
      a.data.size() != a.height * a.width) {
    throw DimensionError(std::string(what) + ": plane shapes differ (" + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
  }
}

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;

std::vector<double> gaussian_taps() {
  std::vector<double> taps(2 * kSsimRadius + 1);
  double total = 0.0;
  for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
    taps[i + kSsimRadius] = std::exp(-(i * i) / (2.0 * kSsimSigma * kSsimSigma));
    total += taps[i + kSsimRadius];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable "valid" Gaussian filtering: output is (h-10) x (w-10).
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t k = taps.size(), ow = w - k + 1, oh = h - k + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += taps[t] * img[y * w + x + t];
      rows[y * ow + x] = acc;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += taps[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

double mean_of(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

// Coefficients c0..c3 of log10(rate) ~ sum c_k psnr^k.
Eigen::Vector4d fit_cubic(const std::vector<RdPoint>& curve) {
  Eigen::MatrixXd a(curve.size(), 4);
  Eigen::VectorXd b(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double p = curve[i].psnr;
    a(i, 0) = 1.0;
    a(i, 1) = p;
    a(i, 2) = p * p;
    a(i, 3) = p * p * p;
    b(i) = std::log10(curve[i].bitrate);
  }
  return a.colPivHouseholderQr().solve(b);
}

double integrate_cubic(const Eigen::Vector4d& c, double lo, double hi) {
  auto antiderivative = [&c](double x) {
    return c(0) * x + c(1) * x * x / 2.0 + c(2) * x * x * x / 3.0 + c(3) * x * x * x * x / 4.0;
  };
  return antiderivative(hi) - antiderivative(lo);
}

void check_curve(const std::vector<RdPoint>& curve, const char* which) {
  if (curve.size() < 4) {
    throw UsageError(std::string("bd_br: ") + which + " curve needs at least 4 points, got " + std::to_string(curve.size()));
  }
  for (const RdPoint& p : curve) {
    if (!(p.bitrate > 0.0) || !std::isfinite(p.psnr)) {
      throw UsageError(std::string("bd_br: ") + which + " curve has a non-positive bitrate or non-finite PSNR");
    }
  }
}

}  // namespace

double psnr(const Plane& a, const Plane& b) {
  require_same(a, b, "psnr");
  if (a.data.empty()) throw DimensionError("psnr: empty plane");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.data.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const Plane& a, const Plane& b) {
  require_same(a, b, "ssim");
  const std::size_t k = 2 * kSsimRadius + 1;
  if (a.height < k || a.width < k) {
    throw UsageError("ssim: planes must be at least 11x11, got " + std::to_string(a.height) + "x" + std::to_string(a.width));
  }
  const std::vector<double> taps = gaussian_taps();
  const std::size_t h = a.height, w = a.width, n = h * w;
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = a.data[i] * a.data[i];
    yy[i] = b.data[i] * b.data[i];
    xy[i] = a.data[i] * b.data[i];
  }
  const auto mu_x = filter_valid(a.data, h, w, taps);
  const auto mu_y = filter_valid(b.data, h, w, taps);
  const auto e_xx = filter_valid(xx, h, w, taps);
  const auto e_yy = filter_valid(yy, h, w, taps);
  const auto e_xy = filter_valid(xy, h, w, taps);
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mxy = mu_x[i] * mu_y[i];
    const double mxx = mu_x[i] * mu_x[i];
    const double myy = mu_y[i] * mu_y[i];
    const double vx = e_xx[i] - mxx;
    const double vy = e_yy[i] - myy;
    const double cov = e_xy[i] - mxy;
    acc += ((2.0 * mxy + c1) * (2.0 * cov + c2)) / ((mxx + myy + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(mu_x.size());
}

CurveStats curve_stats(std::span<const double> curve) {
  CurveStats stats;
  if (curve.empty()) return stats;
  const double mu = mean_of(curve);
  double var = 0.0;
  for (double v : curve) var += (v - mu) * (v - mu);
  stats.sd = std::sqrt(var / static_cast<double>(curve.size()));

  std::vector<double> collapsed;
  for (double v : curve)
    if (collapsed.empty() || collapsed.back() != v) collapsed.push_back(v);
  std::vector<bool> peak(collapsed.size(), false), valley(collapsed.size(), false);
  for (std::size_t i = 1; i + 1 < collapsed.size(); ++i) {
    peak[i] = collapsed[i] > collapsed[i - 1] && collapsed[i] > collapsed[i + 1];
    valley[i] = collapsed[i] < collapsed[i - 1] && collapsed[i] < collapsed[i + 1];
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < collapsed.size(); ++i) {
    if (!peak[i]) continue;
    for (std::size_t j = i + 1; j < collapsed.size(); ++j) {
      if (valley[j]) {
        total += collapsed[i] - collapsed[j];
        ++pairs;
        break;
      }
    }
  }
  stats.pvd = pairs ? total / static_cast<double>(pairs) : 0.0;
  return stats;
}

BdRate bd_br(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test) {
  check_curve(anchor, "anchor");
  check_curve(test, "test");
  auto range = [](const std::vector<RdPoint>& c) {
    auto [lo, hi] = std::minmax_element(c.begin(), c.end(), [](const RdPoint& a, const RdPoint& b) { return a.psnr < b.psnr; });
    return std::pair{lo->psnr, hi->psnr};
  };
  const auto [alo, ahi] = range(anchor);
  const auto [tlo, thi] = range(test);
  const double lo = std::max(alo, tlo), hi = std::min(ahi, thi);
  if (!(hi > lo)) throw ComputationError("bd_br: PSNR ranges of the two curves do not overlap");
  const Eigen::Vector4d ca = fit_cubic(anchor);
  const Eigen::Vector4d ct = fit_cubic(test);
  BdRate r;
  r.log_rate_delta = (integrate_cubic(ct, lo, hi) - integrate_cubic(ca, lo, hi)) / (hi - lo);
  r.bd_rate = (std::pow(10.0, r.log_rate_delta) - 1.0) * 100.0;
  return r;
}

std::vector<RdPoint> parse_rd_csv(const std::string& text) {
  std::vector<RdPoint> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }), line.end());
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("rd csv line " + std::to_string(line_no) + ": expected 'bitrate,psnr'");
    const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    std::size_t used_a = 0, used_b = 0;
    double rate = 0.0, quality = 0.0;
    try {
      rate = std::stod(a, &used_a);
      quality = std::stod(b, &used_b);
    } catch (const std::exception&) {
      if (out.empty() && line_no == 1) continue;  // header row
      throw DataError("rd csv line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (used_a != a.size() || used_b != b.size()) {
      throw DataError("rd csv line " + std::to_string(line_no) + ": malformed number");
    }
    out.push_back({rate, quality});
  }
  return out;
}

SequenceReport delta_metrics(const std::string& name, const std::vector<Plane>& compressed,
                             const std::vector<Plane>& enhanced, const std::vector<Plane>& truth) {
  if (compressed.size() != truth.size() || enhanced.size() != truth.size()) {
    throw UsageError("delta_metrics: sequence lengths differ (" + std::to_string(compressed.size()) + ", " +
                     std::to_string(enhanced.size()) + ", " + std::to_string(truth.size()) + ")");
  }
  if (truth.empty()) throw UsageError("delta_metrics: empty sequence");
  SequenceReport r;
  r.name = name;
  double dp = 0.0, ds = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    r.psnr_compressed.push_back(psnr(compressed[i], truth[i]));
    r.psnr_enhanced.push_back(psnr(enhanced[i], truth[i]));
    r.ssim_compressed.push_back(ssim(compressed[i], truth[i]));
    r.ssim_enhanced.push_back(ssim(enhanced[i], truth[i]));
    dp += r.psnr_enhanced.back() - r.psnr_compressed.back();
    ds += r.ssim_enhanced.back() - r.ssim_compressed.back();
  }
  r.delta_psnr = dp / static_cast<double>(truth.size());
  r.delta_ssim = ds / static_cast<double>(truth.size());
  r.compressed_stats = curve_stats(r.psnr_compressed);
  r.enhanced_stats = curve_stats(r.psnr_enhanced);
  return r;
}

EvalReport aggregate_report(std::vector<SequenceReport> sequences) {
  EvalReport report;
  report.sequences = std::move(sequences);
  const double n = static_cast<double>(report.sequences.size());
  if (report.sequences.empty()) return report;
  for (const SequenceReport& s : report.sequences) {
    report.delta_psnr += s.delta_psnr;
    report.delta_ssim += s.delta_ssim;
    report.pvd_compressed += s.compressed_stats.pvd;
    report.sd_compressed += s.compressed_stats.sd;
    report.pvd_enhanced += s.enhanced_stats.pvd;
    report.sd_enhanced += s.enhanced_stats.sd;
  }
  report.delta_psnr /= n;
  report.delta_ssim /= n;
  report.pvd_compressed /= n;
  report.sd_compressed /= n;
  report.pvd_enhanced /= n;
  report.sd_enhanced /= n;
  return report;
}

std::string report_to_text(const EvalReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["format"] = "qe-eval-report";
  j["version"] = 1;
  j["provenance"] = {{"config_hash", report.config_hash}, {"weights_hash", report.weights_hash}};
  ordered_json seqs = ordered_json::array();
  for (const SequenceReport& s : report.sequences) {
    seqs.push_back({{"name", s.name},
                    {"frames", s.psnr_compressed.size()},
                    {"delta_psnr", s.delta_psnr},
                    {"delta_ssim", s.delta_ssim},
                    {"pvd_compressed", s.compressed_stats.pvd},
                    {"sd_compressed", s.compressed_stats.sd},
                    {"pvd_enhanced", s.enhanced_stats.pvd},
                    {"sd_enhanced", s.enhanced_stats.sd},
                    {"psnr_compressed", s.psnr_compressed},
                    {"psnr_enhanced", s.psnr_enhanced},
                    {"ssim_compressed", s.ssim_compressed},
                    {"ssim_enhanced", s.ssim_enhanced}});
  }
  j["sequences"] = seqs;
  j["aggregate"] = {{"sequences", report.sequences.size()},
                    {"delta_psnr", report.delta_psnr},
                    {"delta_ssim", report.delta_ssim},
                    {"pvd_compressed", report.pvd_compressed},
                    {"sd_compressed", report.sd_compressed},
                    {"pvd_enhanced", report.pvd_enhanced},
                    {"sd_enhanced", report.sd_enhanced}};
  return j.dump(2) + "\n";
}

EvalReport report_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("format") != "qe-eval-report") throw FormatError("not an evaluation report");
    std::vector<SequenceReport> seqs;
    for (const auto& s : j.at("sequences")) {
      SequenceReport r;
      r.name = s.at("name").get<std::string>();
      r.delta_psnr = s.at("delta_psnr").get<double>();
      r.delta_ssim = s.at("delta_ssim").get<double>();
      r.compressed_stats = {s.at("pvd_compressed").get<double>(), s.at("sd_compressed").get<double>()};
      r.enhanced_stats = {s.at("pvd_enhanced").get<double>(), s.at("sd_enhanced").get<double>()};
      r.psnr_compressed = s.at("psnr_compressed").get<std::vector<double>>();
      r.psnr_enhanced = s.at("psnr_enhanced").get<std::vector<double>>();
      r.ssim_compressed = s.at("ssim_compressed").get<std::vector<double>>();
      r.ssim_enhanced = s.at("ssim_enhanced").get<std::vector<double>>();
      seqs.push_back(std::move(r));
    }
    EvalReport report = aggregate_report(std::move(seqs));
    report.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    report.weights_hash = j.at("provenance").at("weights_hash").get<std::string>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

}  // namespace qe
