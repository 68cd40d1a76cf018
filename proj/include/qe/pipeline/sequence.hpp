#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qe/rfp.hpp"
#include "qe/tensor.hpp"

namespace qe {

// A luminance sequence in memory: frames of shape (1, H, W) with values in
// [0, 1] plus the per-frame codec metadata used by reference proposal.
struct FrameSequence {
  std::string name;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Tensor<float>> frames;
  std::vector<FrameMetadata> metadata;
  std::map<std::string, std::string> provenance;

  std::size_t size() const { return frames.size(); }
};

// Manifest schema (JSON, file name manifest.json):
//   {"format": "gray8", "width": W, "height": H,
//    "frames": [{"index": 0, "file": "frame_0000.y", "qp": 32, "frame_type": "I"}, ...],
//    "provenance": {"key": "value", ...}}        (optional)
// Frame files are raw 8-bit luminance, row-major, exactly W*H bytes. Paths are
// relative to the manifest's directory.
inline constexpr const char* kManifestName = "manifest.json";

// Accepts the manifest file or its directory. The sequence name is the
// directory's name.
FrameSequence load_sequence(const std::filesystem::path& manifest);

// Writes dir/manifest.json and dir/frame_NNNN.y. The directory is staged
// under a temporary name and renamed into place; an existing directory is
// replaced. Values are rounded to the nearest 8-bit level.
void write_sequence(const FrameSequence& seq, const std::filesystem::path& dir);

// Sequence directories below root: root itself if it holds a manifest,
// otherwise every immediate subdirectory that does, sorted by name.
std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& root);

std::uint8_t to_byte(float v);

}  // namespace qe
