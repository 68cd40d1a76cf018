#include "qe/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qe/rng.hpp"

namespace qe {

void DegradeConfig::validate() const {
  if (block == 0) throw ConfigError("degrade: block size must be positive");
  if (quality_cycle.empty()) throw ConfigError("degrade: quality_cycle must not be empty");
  for (double s : quality_cycle) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("degrade: quantization steps must be finite and >= 0");
  }
  if (!(blur_sigma >= 0.0) || !(noise_sigma >= 0.0)) throw ConfigError("degrade: sigmas must be >= 0");
  if (!(qp_per_step >= 0.0)) throw ConfigError("degrade: qp_per_step must be >= 0");
}

void SyntheticConfig::validate() const {
  if (sequences == 0 || frames == 0 || width == 0 || height == 0) {
    throw ConfigError("synthetic: sequences, frames, width and height must be positive");
  }
}

namespace {

using Image = std::vector<double>;  // row-major, 8-bit scale

Image to_image(const Tensor<float>& frame) {
  Image img(frame.size());
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(frame[i]) * 255.0;
  return img;
}

Tensor<float> to_frame(const Image& img, std::size_t h, std::size_t w) {
  Tensor<float> out(Shape{1, h, w});
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp(std::round(img[i]), 0.0, 255.0);
    out[i] = static_cast<float>(v) / 255.0f;
  }
  return out;
}

std::size_t reflect(long i, long n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return static_cast<std::size_t>(i);
}

Image gaussian_blur(const Image& img, std::size_t h, std::size_t w, double sigma) {
  const long r = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * r + 1);
  double total = 0.0;
  for (long i = -r; i <= r; ++i) total += taps[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& t : taps) t /= total;
  Image tmp(img.size()), out(img.size());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long k = -r; k <= r; ++k) acc += taps[k + r] * img[y * w + reflect(static_cast<long>(x) + k, w)];
      tmp[y * w + x] = acc;
    }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long k = -r; k <= r; ++k) acc += taps[k + r] * tmp[reflect(static_cast<long>(y) + k, h) * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

// Orthonormal DCT-II basis, basis[k * n + i].
std::vector<double> dct_basis(std::size_t n) {
  std::vector<double> b(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      b[k * n + i] = scale * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
  }
  return b;
}

// Blocks at the right and bottom edges are truncated to fit.
void quantize_blocks(Image& img, std::size_t h, std::size_t w, std::size_t block, double step) {
  for (std::size_t by = 0; by < h; by += block)
    for (std::size_t bx = 0; bx < w; bx += block) {
      const std::size_t bh = std::min(block, h - by), bw = std::min(block, w - bx);
      const auto rows = dct_basis(bh), cols = dct_basis(bw);
      std::vector<double> tmp(bh * bw, 0.0), coef(bh * bw, 0.0);
      for (std::size_t y = 0; y < bh; ++y)
        for (std::size_t v = 0; v < bw; ++v) {
          double acc = 0.0;
          for (std::size_t x = 0; x < bw; ++x) acc += cols[v * bw + x] * img[(by + y) * w + bx + x];
          tmp[y * bw + v] = acc;
        }
      for (std::size_t u = 0; u < bh; ++u)
        for (std::size_t v = 0; v < bw; ++v) {
          double acc = 0.0;
          for (std::size_t y = 0; y < bh; ++y) acc += rows[u * bh + y] * tmp[y * bw + v];
          coef[u * bw + v] = std::round(acc / step) * step;
        }
      for (std::size_t y = 0; y < bh; ++y)
        for (std::size_t v = 0; v < bw; ++v) {
          double acc = 0.0;
          for (std::size_t u = 0; u < bh; ++u) acc += rows[u * bh + y] * coef[u * bw + v];
          tmp[y * bw + v] = acc;
        }
      for (std::size_t y = 0; y < bh; ++y)
        for (std::size_t x = 0; x < bw; ++x) {
          double acc = 0.0;
          for (std::size_t v = 0; v < bw; ++v) acc += cols[v * bw + x] * tmp[y * bw + v];
          img[(by + y) * w + bx + x] = acc;
        }
    }
}

}  // namespace

FrameSequence synth_clean(const SyntheticConfig& cfg, std::size_t sequence_index) {
  cfg.validate();
  Rng rng(cfg.seed * 0x9E3779B97F4A7C15ULL + sequence_index);
  struct Wave {
    double fx, fy, phase, amp, vx, vy;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 6; ++i) {
    const double freq = rng.uniform(0.02, 0.35);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    waves.push_back({freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi),
                     rng.uniform(10.0, 30.0), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
  }
  struct Box {
    double x, y, w, h, level, vx, vy;
  };
  std::vector<Box> boxes;
  for (int i = 0; i < 4; ++i) {
    boxes.push_back({rng.uniform(0.0, static_cast<double>(cfg.width)), rng.uniform(0.0, static_cast<double>(cfg.height)),
                     rng.uniform(4.0, cfg.width / 2.0), rng.uniform(4.0, cfg.height / 2.0), rng.uniform(-40.0, 40.0),
                     rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
  }

  FrameSequence seq;
  seq.name = "seq" + std::to_string(sequence_index);
  seq.width = cfg.width;
  seq.height = cfg.height;
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    Image img(cfg.width * cfg.height, 128.0);
    const double tt = static_cast<double>(t);
    for (std::size_t y = 0; y < cfg.height; ++y)
      for (std::size_t x = 0; x < cfg.width; ++x) {
        double v = 128.0;
        for (const Wave& wv : waves) {
          const double px = x - wv.vx * tt, py = y - wv.vy * tt;
          v += wv.amp * std::sin(2.0 * std::numbers::pi * (wv.fx * px + wv.fy * py) + wv.phase);
        }
        for (const Box& b : boxes) {
          const double bx = b.x + b.vx * tt, by = b.y + b.vy * tt;
          if (x >= bx && x < bx + b.w && y >= by && y < by + b.h) v += b.level;
        }
        img[y * cfg.width + x] = v;
      }
    seq.frames.push_back(to_frame(img, cfg.height, cfg.width));
    seq.metadata.push_back({t, 0, FrameType::I});
  }
  return seq;
}

FrameSequence synth_degrade(const FrameSequence& clean, const DegradeConfig& cfg) {
  cfg.validate();
  double cycle_mean = 0.0;
  for (double s : cfg.quality_cycle) cycle_mean += s;
  cycle_mean /= static_cast<double>(cfg.quality_cycle.size());

  Rng rng(cfg.seed);
  FrameSequence out;
  out.name = clean.name;
  out.width = clean.width;
  out.height = clean.height;
  const std::size_t h = clean.height, w = clean.width;
  for (std::size_t t = 0; t < clean.size(); ++t) {
    require_same_shape(clean.frames[t].shape(), Shape{1, h, w}, "synth_degrade");
    const std::size_t phase = t % cfg.quality_cycle.size();
    const double step = cfg.quality_cycle[phase];
    Image img = to_image(clean.frames[t]);
    if (cfg.blur_sigma > 0.0) img = gaussian_blur(img, h, w, cfg.blur_sigma);
    if (step > 0.0) quantize_blocks(img, h, w, cfg.block, step);
    if (cfg.noise_sigma > 0.0) {
      for (double& v : img) v += cfg.noise_sigma * rng.normal();
    }
    out.frames.push_back(to_frame(img, h, w));
    FrameMetadata meta;
    meta.index = t;
    meta.qp = static_cast<int>(std::lround(cfg.qp_per_step * step));
    meta.frame_type = phase == 0 ? FrameType::I : (step < cycle_mean ? FrameType::P : FrameType::B);
    out.metadata.push_back(meta);
  }
  return out;
}

}  // namespace qe
