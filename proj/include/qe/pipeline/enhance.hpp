#pragma once

#include <optional>

#include "qe/ensemble.hpp"
#include "qe/pipeline/sequence.hpp"
#include "qe/weights.hpp"

namespace qe {

struct EnhanceOptions {
  bool self_ensemble = false;
  bool parallel = false;  // evaluate ensemble branches concurrently
  bool rfp = true;        // false: adjacent references
  TrackMode track = TrackMode::FixedQp;
  // Gated fusion with a second model; both must be set together.
  std::optional<WeightStore> fuse_with;
  std::optional<WeightStore> mask;
};

// One model as a function of a (1, 2R+1, H, W) stack. Frames whose sides are
// not multiples of the downsample factor are edge-padded and cropped back.
EnhanceFn<float> make_model_fn(const WeightStore& weights);

// Per frame: reference stack -> model (optionally self-ensembled) -> optional
// fusion with the second model -> clamp to [0, 1]. Metadata is carried over.
FrameSequence enhance_sequence(const WeightStore& weights, const FrameSequence& seq, const EnhanceOptions& options = {});

}  // namespace qe
