#pragma once

#include <filesystem>
#include <vector>

#include "qe/metrics.hpp"
#include "qe/pipeline/sequence.hpp"

namespace qe {

struct SequenceTriple {
  FrameSequence compressed;
  FrameSequence enhanced;
  FrameSequence truth;
};

std::vector<Plane> to_planes(const FrameSequence& seq);

// Per-sequence metrics computed concurrently; report order follows input order.
EvalReport evaluate(const std::vector<SequenceTriple>& triples);

// Scores every sequence under the enhanced root against the compressed and
// truth sequences of the same directory name. Provenance is taken from the
// enhanced manifests when present.
EvalReport evaluate_dirs(const std::filesystem::path& compressed, const std::filesystem::path& enhanced,
                         const std::filesystem::path& truth);

// Standalone SVG of the compressed and enhanced per-frame PSNR curves.
std::string render_curve_svg(const SequenceReport& seq);

// Writes <out>/<name>_psnr.svg per sequence and returns the paths.
std::vector<std::filesystem::path> plot_curves(const EvalReport& report, const std::filesystem::path& out);

}  // namespace qe
