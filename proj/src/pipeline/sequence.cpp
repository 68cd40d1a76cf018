#include "qe/pipeline/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>

#include "qe/weights.hpp"

namespace qe {

namespace fs = std::filesystem;

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

namespace {

fs::path manifest_path(const fs::path& p) {
  return fs::is_directory(p) ? p / kManifestName : p;
}

template <typename J>
J require_field(const nlohmann::json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) throw DataError(where.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<J>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(where.string() + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

FrameSequence load_sequence(const fs::path& manifest) {
  const fs::path path = manifest_path(manifest);
  if (!fs::exists(path)) throw DataError("manifest not found: " + path.string());
  const auto bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  if (!j.is_object()) throw DataError(path.string() + ": manifest must be an object");
  const auto format = require_field<std::string>(j, "format", path);
  if (format != "gray8") throw DataError(path.string() + ": unsupported pixel format '" + format + "'");

  FrameSequence seq;
  seq.name = path.parent_path().filename().string();
  const auto width = require_field<long long>(j, "width", path);
  const auto height = require_field<long long>(j, "height", path);
  if (width <= 0 || height <= 0) throw DataError(path.string() + ": width and height must be positive");
  seq.width = static_cast<std::size_t>(width);
  seq.height = static_cast<std::size_t>(height);

  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty()) {
    throw DataError(path.string() + ": 'frames' must be a non-empty array");
  }
  const auto& entries = j["frames"];
  std::vector<const nlohmann::json*> by_index(entries.size(), nullptr);
  for (const auto& e : entries) {
    const auto index = require_field<long long>(e, "index", path);
    if (index < 0 || static_cast<std::size_t>(index) >= entries.size()) {
      throw DataError(path.string() + ": frame indices must be contiguous from 0; got " + std::to_string(index));
    }
    if (by_index[index]) throw DataError(path.string() + ": duplicate frame index " + std::to_string(index));
    by_index[index] = &e;
  }

  const std::size_t expected = seq.width * seq.height;
  for (std::size_t i = 0; i < by_index.size(); ++i) {
    const auto& e = *by_index[i];
    const fs::path file = path.parent_path() / require_field<std::string>(e, "file", path);
    FrameMetadata meta;
    meta.index = i;
    meta.qp = require_field<int>(e, "qp", path);
    try {
      meta.frame_type = parse_frame_type(require_field<std::string>(e, "frame_type", path));
    } catch (const UsageError& err) {
      throw DataError(path.string() + ": " + err.what());
    }
    if (!fs::exists(file)) throw DataError("frame file missing: " + file.string());
    const auto pixels = read_file_bytes(file);
    if (pixels.size() != expected) {
      throw DataError("frame file " + file.string() + " has " + std::to_string(pixels.size()) + " bytes, expected " +
                      std::to_string(expected) + " (" + std::to_string(seq.width) + "x" + std::to_string(seq.height) +
                      ")");
    }
    Tensor<float> frame(Shape{1, seq.height, seq.width});
    for (std::size_t k = 0; k < expected; ++k) frame[k] = static_cast<float>(pixels[k]) / 255.0f;
    seq.frames.push_back(std::move(frame));
    seq.metadata.push_back(meta);
  }

  if (j.contains("provenance")) {
    if (!j["provenance"].is_object()) throw DataError(path.string() + ": 'provenance' must be an object");
    for (const auto& [k, v] : j["provenance"].items()) {
      seq.provenance[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return seq;
}

void write_sequence(const FrameSequence& seq, const fs::path& dir) {
  if (seq.frames.empty()) throw UsageError("write_sequence: empty sequence");
  if (seq.metadata.size() != seq.frames.size()) throw UsageError("write_sequence: metadata length differs from frames");
  for (const auto& f : seq.frames) require_same_shape(f.shape(), Shape{1, seq.height, seq.width}, "write_sequence");

  const fs::path target = fs::absolute(dir).lexically_normal();
  const fs::path parent = target.parent_path();
  fs::create_directories(parent);
  std::random_device rd;
  const fs::path staging = parent / ("." + target.filename().string() + ".tmp" + std::to_string(rd()));
  fs::create_directories(staging);
  try {
    nlohmann::ordered_json j;
    j["format"] = "gray8";
    j["width"] = seq.width;
    j["height"] = seq.height;
    j["frames"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04zu.y", i);
      std::vector<std::uint8_t> pixels(seq.frames[i].size());
      for (std::size_t k = 0; k < pixels.size(); ++k) pixels[k] = to_byte(seq.frames[i][k]);
      std::ofstream out(staging / name, std::ios::binary);
      out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
      if (!out) throw DataError("failed to write " + (staging / name).string());
      j["frames"].push_back({{"index", i},
                             {"file", name},
                             {"qp", seq.metadata[i].qp},
                             {"frame_type", std::string(1, frame_type_char(seq.metadata[i].frame_type))}});
    }
    if (!seq.provenance.empty()) j["provenance"] = seq.provenance;
    std::ofstream out(staging / kManifestName);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("failed to write manifest in " + staging.string());
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }

  if (fs::exists(target)) {
    const fs::path old = parent / ("." + target.filename().string() + ".old" + std::to_string(rd()));
    fs::rename(target, old);
    fs::rename(staging, target);
    fs::remove_all(old);
  } else {
    fs::rename(staging, target);
  }
}

std::vector<fs::path> list_sequences(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
  if (fs::exists(root / kManifestName)) return {root};
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / kManifestName)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no sequences (manifest.json) found under " + root.string());
  return out;
}

}  // namespace qe
