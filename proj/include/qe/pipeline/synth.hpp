#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qe/pipeline/sequence.hpp"

namespace qe {

// Compression stand-in: Gaussian blur, blockwise orthonormal DCT quantization
// with a per-frame step taken cyclically from quality_cycle, then Gaussian
// noise. Steps are on the 8-bit scale; a step of 0 skips quantization.
struct DegradeConfig {
  std::size_t block = 8;
  std::vector<double> quality_cycle{6.0, 22.0, 14.0, 22.0};
  double blur_sigma = 0.6;
  double noise_sigma = 1.0;  // 8-bit levels
  double qp_per_step = 1.5;  // pseudo-QP = round(qp_per_step * step)
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticConfig {
  std::size_t sequences = 2;
  std::size_t frames = 8;
  std::size_t width = 64;
  std::size_t height = 64;
  std::uint64_t seed = 7;

  void validate() const;
};

// Smoothly moving textured content quantized to 8-bit levels. Metadata is
// filled with qp 0 and I frames.
FrameSequence synth_clean(const SyntheticConfig& cfg, std::size_t sequence_index);

// Deterministic given cfg.seed. Metadata: qp from the step, frame type I at
// the start of each cycle, P where the step is below the cycle mean, B otherwise.
FrameSequence synth_degrade(const FrameSequence& clean, const DegradeConfig& cfg);

}  // namespace qe
