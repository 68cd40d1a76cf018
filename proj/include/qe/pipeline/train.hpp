#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "qe/pipeline/config.hpp"
#include "qe/pipeline/sequence.hpp"
#include "qe/weights.hpp"

namespace qe {

struct TrainingPair {
  FrameSequence compressed;
  FrameSequence truth;
};

// root/compressed/<name> paired with root/truth/<name>; both sides must list
// the same sequence names with matching lengths and sizes.
std::vector<TrainingPair> load_dataset(const std::filesystem::path& root);

// RFP references, or the adjacent-frame baseline when rfp is false.
ReferenceSet select_references(const FrameSequence& seq, std::size_t t, std::size_t radius, bool rfp, TrackMode track);

// Crops the reference window at (y, x) into a (1, 2R+1, ph, pw) stack.
Tensor<float> gather_stack(const FrameSequence& seq, const ReferenceSet& refs, std::size_t y, std::size_t x,
                           std::size_t ph, std::size_t pw);

struct TrainSample {
  std::size_t sequence = 0;
  std::size_t target = 0;
  std::size_t y = 0;
  std::size_t x = 0;
  std::vector<std::size_t> references;  // temporal order, includes the target
};

// Instrumentation called on every iteration.
struct TrainHooks {
  std::function<void(std::int64_t iteration, const std::vector<TrainSample>& batch)> on_batch;
  std::function<void(std::int64_t iteration, double loss, double lr)> on_loss;
};

struct TrainResult {
  ModelConfig model;
  WeightStore weights;
  std::vector<double> losses;  // one entry per iteration
};

// Adam with the milestone schedule; loss = spatial + w_fft * frequency loss.
// A non-finite loss raises NumericError.
TrainResult train(const TrainConfig& cfg, const std::vector<TrainingPair>& data, const TrainHooks& hooks = {});
TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {});

// Fusion mask training: both enhancement models are frozen and only the mask
// network learns, under an L1 loss on the fused output.
TrainResult train_mask(const TrainConfig& cfg, const std::vector<TrainingPair>& data, const WeightStore& first,
                       const WeightStore& second, const TrainHooks& hooks = {});

// Mean of the first or last `window` entries.
double head_mean(const std::vector<double>& values, std::size_t window);
double tail_mean(const std::vector<double>& values, std::size_t window);

}  // namespace qe
