#include "qe/pipeline/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace qe {

using nlohmann::json;

namespace {

json parse_object(const std::string& text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(what + ": unknown key '" + key + "'");
  }
}

template <typename V>
void read(const json& j, const char* key, V& out, const std::string& what) {
  if (!j.contains(key)) return;
  try {
    if constexpr (std::is_unsigned_v<V>) {
      const auto v = j.at(key).get<long long>();
      if (v < 0) throw ConfigError(what + ": '" + key + "' must be non-negative");
      out = static_cast<V>(v);
    } else {
      out = j.at(key).get<V>();
    }
  } catch (const json::exception&) {
    throw ConfigError(what + ": '" + key + "' has the wrong type");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (radius == 0) throw ConfigError("train: radius must be positive");
  if (iterations <= 0) throw ConfigError("train: iterations must be positive");
  if (batch_size == 0 || patch_size == 0) throw ConfigError("train: batch_size and patch_size must be positive");
  if (!(base_lr > 0.0)) throw ConfigError("train: base_lr must be positive");
  iqe.validate();
  if (patch_size % iqe.downsample != 0) {
    throw ConfigError("train: patch_size " + std::to_string(patch_size) + " is not divisible by the downsample factor " +
                      std::to_string(iqe.downsample));
  }
  if (!(loss.lambda >= 0.0) || !(loss.w_fft >= 0.0)) throw ConfigError("train: loss weights must be >= 0");
}

ModelConfig TrainConfig::model() const { return ModelConfig{radius, 1, iqe}; }

TrainConfig parse_train_config(const std::string& text, const std::filesystem::path& base_dir) {
  const std::string what = "train config";
  const json j = parse_object(text, "train config");
  reject_unknown(j, {"dataset", "radius", "track", "rfp", "preset", "iqe", "loss", "base_lr", "iterations", "batch_size",
                     "patch_size", "seed"},
                 what);
  TrainConfig cfg;
  std::string dataset;
  read(j, "dataset", dataset, what);
  if (dataset.empty()) throw ConfigError("train config: 'dataset' is required");
  cfg.dataset = dataset;
  if (cfg.dataset.is_relative() && !base_dir.empty()) cfg.dataset = base_dir / cfg.dataset;
  read(j, "radius", cfg.radius, what);
  if (j.contains("track")) {
    std::string track;
    read(j, "track", track, what);
    try {
      cfg.track = parse_track_mode(track);
    } catch (const UsageError& e) {
      throw ConfigError(std::string("train config: ") + e.what());
    }
  }
  read(j, "rfp", cfg.rfp, what);
  if (j.contains("preset") && j.contains("iqe")) throw ConfigError("train config: give either 'preset' or 'iqe', not both");
  if (j.contains("preset")) {
    std::string preset;
    read(j, "preset", preset, what);
    if (preset == "shallow") cfg.iqe = IqeConfig::shallow();
    else if (preset == "deep") cfg.iqe = IqeConfig::deep();
    else throw ConfigError("train config: unknown preset '" + preset + "'");
  }
  if (j.contains("iqe")) {
    const json& q = j["iqe"];
    if (!q.is_object()) throw ConfigError("train config: 'iqe' must be an object");
    const std::string w = "train config iqe";
    reject_unknown(q, {"blocks", "width", "expansion", "downsample", "reduction", "skip_scale"}, w);
    read(q, "blocks", cfg.iqe.blocks, w);
    read(q, "width", cfg.iqe.width, w);
    read(q, "expansion", cfg.iqe.expansion, w);
    read(q, "downsample", cfg.iqe.downsample, w);
    read(q, "reduction", cfg.iqe.reduction, w);
    read(q, "skip_scale", cfg.iqe.skip_scale, w);
  }
  if (j.contains("loss")) {
    const json& l = j["loss"];
    if (!l.is_object()) throw ConfigError("train config: 'loss' must be an object");
    const std::string w = "train config loss";
    reject_unknown(l, {"spatial", "fft", "fft_norm", "lambda", "w_fft"}, w);
    if (l.contains("spatial")) {
      std::string spatial;
      read(l, "spatial", spatial, w);
      if (spatial == "l1") cfg.loss.spatial = SpatialLoss::L1;
      else if (spatial == "l2") cfg.loss.spatial = SpatialLoss::L2;
      else throw ConfigError("train config: spatial loss must be 'l1' or 'l2'");
    }
    read(l, "fft", cfg.loss.fft, w);
    if (l.contains("fft_norm")) {
      std::string norm;
      read(l, "fft_norm", norm, w);
      if (norm == "l1") cfg.loss.fft_norm = PenaltyNorm::L1;
      else if (norm == "l2") cfg.loss.fft_norm = PenaltyNorm::L2;
      else throw ConfigError("train config: fft_norm must be 'l1' or 'l2'");
    }
    read(l, "lambda", cfg.loss.lambda, w);
    read(l, "w_fft", cfg.loss.w_fft, w);
  }
  read(j, "base_lr", cfg.base_lr, what);
  read(j, "iterations", cfg.iterations, what);
  read(j, "batch_size", cfg.batch_size, what);
  read(j, "patch_size", cfg.patch_size, what);
  read(j, "seed", cfg.seed, what);
  cfg.validate();
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return parse_train_config(read_text_file(path), path.parent_path());
}

std::string train_config_to_text(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["dataset"] = cfg.dataset.string();
  j["radius"] = cfg.radius;
  j["track"] = track_mode_name(cfg.track);
  j["rfp"] = cfg.rfp;
  j["iqe"] = {{"blocks", cfg.iqe.blocks},         {"width", cfg.iqe.width},         {"expansion", cfg.iqe.expansion},
              {"downsample", cfg.iqe.downsample}, {"reduction", cfg.iqe.reduction}, {"skip_scale", cfg.iqe.skip_scale}};
  j["loss"] = {{"spatial", cfg.loss.spatial == SpatialLoss::L1 ? "l1" : "l2"},
               {"fft", cfg.loss.fft},
               {"fft_norm", cfg.loss.fft_norm == PenaltyNorm::L1 ? "l1" : "l2"},
               {"lambda", cfg.loss.lambda},
               {"w_fft", cfg.loss.w_fft}};
  j["base_lr"] = cfg.base_lr;
  j["iterations"] = cfg.iterations;
  j["batch_size"] = cfg.batch_size;
  j["patch_size"] = cfg.patch_size;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

DegradeConfig parse_degrade_config(const std::string& text) {
  const std::string what = "degrade config";
  const json j = parse_object(text, "degrade config");
  reject_unknown(j, {"block", "quality_cycle", "blur_sigma", "noise_sigma", "qp_per_step", "seed"}, what);
  DegradeConfig cfg;
  read(j, "block", cfg.block, what);
  read(j, "quality_cycle", cfg.quality_cycle, what);
  read(j, "blur_sigma", cfg.blur_sigma, what);
  read(j, "noise_sigma", cfg.noise_sigma, what);
  read(j, "qp_per_step", cfg.qp_per_step, what);
  read(j, "seed", cfg.seed, what);
  cfg.validate();
  return cfg;
}

SyntheticConfig parse_synthetic_config(const std::string& text) {
  const std::string what = "synthetic config";
  const json j = parse_object(text, "synthetic config");
  reject_unknown(j, {"sequences", "frames", "width", "height", "seed"}, what);
  SyntheticConfig cfg;
  read(j, "sequences", cfg.sequences, what);
  read(j, "frames", cfg.frames, what);
  read(j, "width", cfg.width, what);
  read(j, "height", cfg.height, what);
  read(j, "seed", cfg.seed, what);
  cfg.validate();
  return cfg;
}

}  // namespace qe
