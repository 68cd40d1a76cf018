#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qe/layers.hpp"

namespace qe {

// Serialized parameters. On disk (all integers little-endian u32):
//   "QEW1" | version=1 | tensor count |
//   per tensor: name length | UTF-8 name | ndim | ndim extents | f32 LE values (row-major)
using WeightStore = ParamStore<float>;

inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::vector<std::uint8_t> serialize_weights(const WeightStore& store);
// Throws FormatError on bad magic, unsupported version, truncation or trailing bytes.
WeightStore parse_weights(const std::vector<std::uint8_t>& bytes);

// Writes through a temporary file and renames it into place.
void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);

// Whole-file helpers shared by every writer in the project.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

// 64-bit FNV-1a, hex encoded; used for provenance fields.
std::string content_hash(const std::vector<std::uint8_t>& bytes);
std::string content_hash(const std::string& text);

}  // namespace qe
