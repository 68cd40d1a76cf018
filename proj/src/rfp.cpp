#include "qe/rfp.hpp"

#include <algorithm>

namespace qe {

std::vector<std::size_t> ReferenceSet::ordered() const {
  std::vector<std::size_t> out(preceding);
  out.push_back(target);
  out.insert(out.end(), following.begin(), following.end());
  return out;
}

char frame_type_char(FrameType t) {
  switch (t) {
    case FrameType::I: return 'I';
    case FrameType::P: return 'P';
    default: return 'B';
  }
}

FrameType parse_frame_type(const std::string& s) {
  if (s == "I") return FrameType::I;
  if (s == "P") return FrameType::P;
  if (s == "B") return FrameType::B;
  throw DataError("unknown frame type '" + s + "' (expected I, P or B)");
}

TrackMode parse_track_mode(const std::string& s) {
  if (s == "fixed-qp") return TrackMode::FixedQp;
  if (s == "fixed-bitrate") return TrackMode::FixedBitrate;
  throw UsageError("unknown track mode '" + s + "' (expected fixed-qp or fixed-bitrate)");
}

std::string track_mode_name(TrackMode m) { return m == TrackMode::FixedQp ? "fixed-qp" : "fixed-bitrate"; }

namespace {

void check_metadata(const std::vector<FrameMetadata>& metadata) {
  if (metadata.empty()) throw UsageError("reference proposal: empty sequence");
  for (std::size_t i = 0; i < metadata.size(); ++i) {
    if (metadata[i].index != i) {
      throw UsageError("reference proposal: frame indices must be contiguous from 0 (entry " + std::to_string(i) +
                       " has index " + std::to_string(metadata[i].index) + ")");
    }
  }
}

void check_query(std::size_t frame_count, std::size_t t, int radius) {
  if (radius <= 0) throw UsageError("reference proposal: radius must be positive, got " + std::to_string(radius));
  if (t >= frame_count) {
    throw UsageError("reference proposal: target " + std::to_string(t) + " outside sequence of " +
                     std::to_string(frame_count) + " frames");
  }
}

}  // namespace

std::vector<std::size_t> detect_candidates(const std::vector<FrameMetadata>& metadata, TrackMode mode) {
  check_metadata(metadata);
  std::vector<std::size_t> out;
  const std::size_t n = metadata.size();
  if (mode == TrackMode::FixedQp) {
    for (std::size_t i = 1; i + 1 < n; ++i)
      if (metadata[i].qp < metadata[i - 1].qp && metadata[i].qp < metadata[i + 1].qp) out.push_back(i);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (metadata[i].frame_type != FrameType::B) out.push_back(i);
  }
  return out;
}

ReferenceSet propose_references(std::size_t frame_count, const std::vector<std::size_t>& candidates, std::size_t t,
                                int radius) {
  check_query(frame_count, t, radius);
  const auto r = static_cast<std::size_t>(radius);
  ReferenceSet refs;
  refs.target = t;

  // Preceding side, collected nearest-first.
  std::size_t last = t == 0 ? t : t - 1;
  refs.preceding.push_back(last);
  while (refs.preceding.size() < r) {
    auto it = std::lower_bound(candidates.begin(), candidates.end(), last);
    if (it != candidates.begin()) last = *std::prev(it);
    refs.preceding.push_back(last);
  }
  std::reverse(refs.preceding.begin(), refs.preceding.end());

  last = t + 1 >= frame_count ? t : t + 1;
  refs.following.push_back(last);
  while (refs.following.size() < r) {
    auto it = std::upper_bound(candidates.begin(), candidates.end(), last);
    if (it != candidates.end()) last = *it;
    refs.following.push_back(last);
  }
  return refs;
}

ReferenceSet propose_references(const std::vector<FrameMetadata>& metadata, std::size_t t, int radius, TrackMode mode) {
  check_metadata(metadata);
  check_query(metadata.size(), t, radius);
  return propose_references(metadata.size(), detect_candidates(metadata, mode), t, radius);
}

ReferenceSet adjacent_references(std::size_t frame_count, std::size_t t, int radius) {
  check_query(frame_count, t, radius);
  ReferenceSet refs;
  refs.target = t;
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const auto last = static_cast<std::ptrdiff_t>(frame_count) - 1;
  const auto tt = static_cast<std::ptrdiff_t>(t);
  for (std::ptrdiff_t k = r; k >= 1; --k) refs.preceding.push_back(static_cast<std::size_t>(std::max<std::ptrdiff_t>(tt - k, 0)));
  for (std::ptrdiff_t k = 1; k <= r; ++k) refs.following.push_back(static_cast<std::size_t>(std::min(tt + k, last)));
  return refs;
}

}  // namespace qe
