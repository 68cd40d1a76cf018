#include <doctest.h>

#include <cmath>

#include "qe/metrics.hpp"
#include "qe/rng.hpp"
#include "support/oracles.hpp"

using namespace qe;

namespace {

Plane constant(std::size_t h, std::size_t w, double v) { return Plane{h, w, std::vector<double>(h * w, v)}; }

Plane random_plane(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  Plane p{h, w, std::vector<double>(h * w)};
  for (double& v : p.data) v = std::round(rng.uniform(0.0, 255.0));
  return p;
}

Plane offset(Plane p, double d) {
  for (double& v : p.data) v += d;
  return p;
}

const std::vector<RdPoint> kAnchor = {{1200.0, 38.2}, {680.0, 36.4}, {390.0, 34.5}, {230.0, 32.6}, {140.0, 30.9}};
const std::vector<RdPoint> kTest = {{1100.0, 38.5}, {610.0, 36.7}, {350.0, 34.8}, {205.0, 32.8}, {128.0, 31.0}};

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr closed forms, cap and monotonicity") {
  const Plane a = random_plane(8, 9, 1);
  CHECK(psnr(a, a) == 100.0);
  CHECK(psnr(constant(4, 4, 10), constant(4, 4, 11)) == doctest::Approx(48.1308036).epsilon(1e-9));
  CHECK(psnr(constant(4, 4, 10), constant(4, 4, 26)) == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / 256.0)).epsilon(1e-12));
  CHECK(psnr(constant(4, 4, 10), constant(4, 4, 26)) == doctest::Approx(24.0484039556).epsilon(1e-10));
  double prev = 1e9;
  for (double e = 1; e <= 64; e *= 2) {
    const double p = psnr(constant(3, 3, 100), constant(3, 3, 100 + e));
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(psnr(constant(4, 4, 0), constant(4, 5, 0)), DimensionError);
}

TEST_CASE("ssim self-similarity, symmetry, range and scalar oracle") {
  const Plane a = random_plane(32, 32, 2), b = random_plane(32, 32, 3);
  CHECK(ssim(a, a) == 1.0);
  CHECK(ssim(a, b) == ssim(b, a));
  CHECK(std::abs(ssim(a, b)) <= 1.0);
  CHECK(ssim(a, b) == doctest::Approx(oracle::ssim_direct(a, b)).epsilon(1e-6));
  Plane noisy = a;
  Rng rng(4);
  for (double& v : noisy.data) v += rng.uniform(-8, 8);
  CHECK(ssim(a, noisy) == doctest::Approx(oracle::ssim_direct(a, noisy)).epsilon(1e-6));
  CHECK(ssim(a, noisy) < 1.0);
  CHECK(ssim(a, noisy) > ssim(a, b));
  CHECK_THROWS_AS(ssim(constant(10, 20, 1), constant(10, 20, 1)), UsageError);
  CHECK_THROWS_AS(ssim(constant(11, 11, 1), constant(12, 11, 1)), DimensionError);
}

TEST_CASE("curve statistics") {
  const std::vector<double> flat(6, 31.0);
  CHECK(curve_stats(flat).pvd == 0.0);
  CHECK(curve_stats(flat).sd == 0.0);
  const std::vector<double> c = {30, 32, 29, 33, 31};
  CHECK(curve_stats(c).sd == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(curve_stats(c).pvd == 3.0);
  CHECK(curve_stats(std::vector<double>{1, 2, 3, 4}).pvd == 0.0);
  // Plateaus collapse: peak 35 (twice), valley 30 (three times), peak 34, valley 31.
  const std::vector<double> plateau = {32, 35, 35, 30, 30, 30, 34, 31, 33};
  CHECK(curve_stats(plateau).pvd == doctest::Approx(4.0));
  std::vector<double> shifted = c;
  for (double& v : shifted) v += 7.25;
  CHECK(curve_stats(shifted).sd == doctest::Approx(curve_stats(c).sd).epsilon(1e-12));
  CHECK(curve_stats(std::vector<double>{42.0}).sd == 0.0);

  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + rng.index(20));
    for (double& v : r) v = std::round(rng.uniform(28, 40));
    CHECK(curve_stats(r).pvd >= 0.0);
  }
}

TEST_CASE("bd-br identity, dominance, swap and reference agreement") {
  CHECK(bd_br(kAnchor, kAnchor).bd_rate == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(bd_br(kAnchor, kAnchor).bd_rate) < 1e-9);
  std::vector<RdPoint> better = kAnchor;
  for (auto& p : better) p.psnr += 0.5;
  CHECK(bd_br(kAnchor, better).reduction() > 0.0);
  CHECK(bd_br(better, kAnchor).reduction() < 0.0);

  std::vector<RdPoint> cheaper = kAnchor;
  for (auto& p : cheaper) p.bitrate *= 0.8;
  // Same PSNR points: the delta is exact and the log deltas are antisymmetric.
  CHECK(bd_br(kAnchor, cheaper).bd_rate == doctest::Approx(-20.0).epsilon(1e-9));
  CHECK(bd_br(kAnchor, cheaper).log_rate_delta == doctest::Approx(-bd_br(cheaper, kAnchor).log_rate_delta).epsilon(1e-9));

  CHECK(std::abs(bd_br(kAnchor, kTest).bd_rate - oracle::bd_rate_reference(kAnchor, kTest)) < 0.01);
  CHECK_THROWS_AS(bd_br({kAnchor.begin(), kAnchor.begin() + 3}, kTest), UsageError);
  std::vector<RdPoint> far = kAnchor;
  for (auto& p : far) p.psnr += 20.0;
  CHECK_THROWS_AS(bd_br(kAnchor, far), ComputationError);
}

TEST_CASE("rd csv parsing") {
  const auto pts = parse_rd_csv("bitrate,psnr\n# comment\n100, 30.5\n\n200,32\n");
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].bitrate == 200.0);
  CHECK(pts[0].psnr == 30.5);
  CHECK_THROWS_AS(parse_rd_csv("100;30\n"), DataError);
  CHECK_THROWS_AS(parse_rd_csv("100,30\nabc,1\n"), DataError);
}

TEST_CASE("delta metrics compose the per-frame metrics") {
  std::vector<Plane> truth, comp, enh;
  for (int i = 0; i < 3; ++i) {
    truth.push_back(random_plane(16, 16, 10 + i));
    comp.push_back(offset(truth.back(), 3.0 + i));
    enh.push_back(offset(truth.back(), 1.0));
  }
  const auto same = delta_metrics("s", comp, comp, truth);
  CHECK(same.delta_psnr == 0.0);
  CHECK(same.delta_ssim == 0.0);

  const auto perfect = delta_metrics("s", comp, truth, truth);
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) expect += (100.0 - psnr(comp[i], truth[i])) / 3.0;
  CHECK(perfect.delta_psnr == doctest::Approx(expect).epsilon(1e-12));

  const auto r = delta_metrics("s", comp, enh, truth);
  double dp = 0.0, ds = 0.0;
  for (int i = 0; i < 3; ++i) {
    dp += psnr(enh[i], truth[i]) - psnr(comp[i], truth[i]);
    ds += ssim(enh[i], truth[i]) - ssim(comp[i], truth[i]);
    CHECK(r.psnr_compressed[i] == psnr(comp[i], truth[i]));
  }
  CHECK(r.delta_psnr == doctest::Approx(dp / 3.0).epsilon(1e-12));
  CHECK(r.delta_ssim == doctest::Approx(ds / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(delta_metrics("s", {comp[0]}, enh, truth), UsageError);
}

TEST_CASE("report aggregates are means and survive serialization") {
  std::vector<Plane> truth, comp;
  for (int i = 0; i < 2; ++i) {
    truth.push_back(random_plane(12, 12, 20 + i));
    comp.push_back(offset(truth.back(), 2.0));
  }
  auto a = delta_metrics("a", comp, truth, truth);
  auto b = delta_metrics("b", comp, comp, truth);
  EvalReport rep = aggregate_report({a, b});
  CHECK(rep.delta_psnr == doctest::Approx((a.delta_psnr + b.delta_psnr) / 2));
  CHECK(rep.sd_compressed == doctest::Approx((a.compressed_stats.sd + b.compressed_stats.sd) / 2));
  rep.config_hash = "abc";
  rep.weights_hash = "def";
  const EvalReport back = report_from_text(report_to_text(rep));
  CHECK(back.sequences.size() == 2);
  CHECK(back.delta_psnr == rep.delta_psnr);
  CHECK(back.sequences[0].psnr_enhanced == rep.sequences[0].psnr_enhanced);
  CHECK(back.weights_hash == "def");
  CHECK_THROWS_AS(report_from_text("{}"), FormatError);
}

}  // TEST_SUITE
