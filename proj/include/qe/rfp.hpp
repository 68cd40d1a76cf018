#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qe/tensor.hpp"

namespace qe {

enum class FrameType { I, P, B };

struct FrameMetadata {
  std::size_t index = 0;
  int qp = 0;
  FrameType frame_type = FrameType::P;
};

// FixedQp: candidates are frames whose QP is strictly below both neighbours.
// FixedBitrate: candidates are the I and P frames.
enum class TrackMode { FixedQp, FixedBitrate };

struct ReferenceSet {
  std::size_t target = 0;
  std::vector<std::size_t> preceding;  // ascending
  std::vector<std::size_t> following;  // ascending

  // preceding, target, following.
  std::vector<std::size_t> ordered() const;
};

char frame_type_char(FrameType t);
FrameType parse_frame_type(const std::string& s);
TrackMode parse_track_mode(const std::string& s);
std::string track_mode_name(TrackMode m);

// Sorted candidate indices. Endpoints are never FixedQp candidates.
std::vector<std::size_t> detect_candidates(const std::vector<FrameMetadata>& metadata, TrackMode mode);

// Selects R frames on each side of t. The first reference is the adjacent
// frame (t itself when no neighbour exists on that side); each further one is
// the nearest candidate strictly beyond the last selected; once candidates run
// out the last selected frame is repeated.
ReferenceSet propose_references(const std::vector<FrameMetadata>& metadata, std::size_t t, int radius, TrackMode mode);

// Same selection given a precomputed sorted candidate list.
ReferenceSet propose_references(std::size_t frame_count, const std::vector<std::size_t>& candidates, std::size_t t,
                                int radius);

// The plain multi-frame baseline: t-R..t-1 and t+1..t+R, clamped to [0, T-1].
ReferenceSet adjacent_references(std::size_t frame_count, std::size_t t, int radius);

// Gathers frames in temporal order (preceding, target, following).
template <typename T>
std::vector<Tensor<T>> reference_window(const ReferenceSet& refs, const std::vector<Tensor<T>>& frames) {
  std::vector<Tensor<T>> out;
  for (std::size_t i : refs.ordered()) {
    if (i >= frames.size()) {
      throw DataError("reference index " + std::to_string(i) + " outside sequence of " + std::to_string(frames.size()) +
                      " frames");
    }
    out.push_back(frames[i]);
  }
  return out;
}

}  // namespace qe
