#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "qe/freq.hpp"
#include "qe/network.hpp"
#include "qe/pipeline/synth.hpp"
#include "qe/rfp.hpp"

namespace qe {

enum class SpatialLoss { L1, L2 };

struct LossSpec {
  SpatialLoss spatial = SpatialLoss::L1;
  bool fft = true;
  PenaltyNorm fft_norm = PenaltyNorm::L1;
  double lambda = 1.0;  // phase weight inside the frequency loss
  double w_fft = 1.0;   // weight of the frequency loss against the spatial one
};

struct TrainConfig {
  std::filesystem::path dataset;  // holds compressed/ and truth/
  std::size_t radius = 2;
  TrackMode track = TrackMode::FixedQp;
  bool rfp = true;  // false: plain adjacent references
  IqeConfig iqe = IqeConfig::shallow();
  LossSpec loss;
  double base_lr = 1e-4;
  std::int64_t iterations = 5000;
  std::size_t batch_size = 8;
  std::size_t patch_size = 48;
  std::uint64_t seed = 0;

  void validate() const;
  ModelConfig model() const;
};

// JSON object with the TrainConfig field names. "preset": "shallow" | "deep"
// or an "iqe" object selects the backbone; "loss" holds spatial ("l1"|"l2"),
// fft, lambda and w_fft. A relative dataset path is resolved against base_dir.
// Unknown keys raise ConfigError.
TrainConfig parse_train_config(const std::string& text, const std::filesystem::path& base_dir = {});
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_to_text(const TrainConfig& cfg);

DegradeConfig parse_degrade_config(const std::string& text);
SyntheticConfig parse_synthetic_config(const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace qe
