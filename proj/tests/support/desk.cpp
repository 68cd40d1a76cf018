#include "support/desk.hpp"

#include "qe/freq.hpp"
#include "qe/metrics.hpp"
#include "qe/pipeline/synth.hpp"

namespace desk {

using namespace qe;

std::vector<TrainingPair> synthetic_pairs(std::size_t sequences, std::size_t size, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.sequences = sequences;
  sc.frames = 8;
  sc.width = size;
  sc.height = size;
  sc.seed = seed;
  DegradeConfig dc;
  dc.seed = seed + 1;
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < sequences; ++i) {
    FrameSequence clean = synth_clean(sc, i);
    FrameSequence degraded = synth_degrade(clean, dc);
    pairs.push_back({std::move(degraded), std::move(clean)});
  }
  return pairs;
}

TrainConfig mini_config(std::uint64_t seed, bool frequency) {
  TrainConfig cfg;
  cfg.radius = 1;
  cfg.iqe.blocks = 4;
  cfg.iqe.width = 16;
  cfg.iterations = 300;
  cfg.patch_size = 32;
  cfg.seed = seed;
  cfg.loss.spatial = frequency ? SpatialLoss::L1 : SpatialLoss::L2;
  cfg.loss.fft = frequency;
  return cfg;
}

double band_error(const WeightStore& weights, const std::vector<TrainingPair>& held_out) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& pair : held_out) {
    const FrameSequence enhanced = enhance_sequence(weights, pair.compressed);
    for (std::size_t t = 0; t < enhanced.frames.size(); ++t, ++n)
      total += band_energy_error(enhanced.frames[t], pair.truth.frames[t], 0.5);
  }
  return total / static_cast<double>(n);
}

double delta_psnr(const WeightStore& weights, const std::vector<TrainingPair>& held_out, const EnhanceOptions& options) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& pair : held_out) {
    const FrameSequence enhanced = enhance_sequence(weights, pair.compressed, options);
    for (std::size_t t = 0; t < enhanced.frames.size(); ++t, ++n) {
      const Plane truth = to_plane(pair.truth.frames[t]);
      total += psnr(to_plane(enhanced.frames[t]), truth) - psnr(to_plane(pair.compressed.frames[t]), truth);
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace desk
