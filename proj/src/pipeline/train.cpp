#include "qe/pipeline/train.hpp"

#include <cmath>
#include <numeric>

#include "qe/ensemble.hpp"
#include "qe/freq.hpp"
#include "qe/optim.hpp"

namespace qe {

namespace fs = std::filesystem;

std::vector<TrainingPair> load_dataset(const fs::path& root) {
  const fs::path comp = root / "compressed", truth = root / "truth";
  if (!fs::is_directory(comp) || !fs::is_directory(truth)) {
    throw DataError("dataset " + root.string() + " must contain compressed/ and truth/ directories");
  }
  const auto comp_dirs = list_sequences(comp);
  std::vector<TrainingPair> out;
  for (const fs::path& dir : comp_dirs) {
    const fs::path rel = dir == comp ? fs::path() : dir.filename();
    const fs::path truth_dir = rel.empty() ? truth : truth / rel;
    if (!fs::exists(truth_dir / kManifestName)) throw DataError("no ground truth for " + dir.string());
    TrainingPair pair{load_sequence(dir), load_sequence(truth_dir)};
    if (pair.compressed.size() != pair.truth.size() || pair.compressed.width != pair.truth.width ||
        pair.compressed.height != pair.truth.height) {
      throw DataError("compressed and truth sequences differ in length or size for " + dir.string());
    }
    out.push_back(std::move(pair));
  }
  return out;
}

ReferenceSet select_references(const FrameSequence& seq, std::size_t t, std::size_t radius, bool rfp, TrackMode track) {
  const int r = static_cast<int>(radius);
  return rfp ? propose_references(seq.metadata, t, r, track) : adjacent_references(seq.size(), t, r);
}

Tensor<float> gather_stack(const FrameSequence& seq, const ReferenceSet& refs, std::size_t y, std::size_t x,
                           std::size_t ph, std::size_t pw) {
  if (y + ph > seq.height || x + pw > seq.width) throw DimensionError("gather_stack: crop exceeds the frame");
  const auto order = refs.ordered();
  Tensor<float> out(Shape{1, order.size(), ph, pw});
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k] >= seq.size()) throw DataError("gather_stack: reference index out of range");
    const Tensor<float>& f = seq.frames[order[k]];
    for (std::size_t i = 0; i < ph; ++i)
      for (std::size_t j = 0; j < pw; ++j) out.at(0, k, i, j) = f[(y + i) * seq.width + x + j];
  }
  return out;
}

namespace {

struct Batch {
  Tensor<float> stack;   // (B, 2R+1, P, P)
  Tensor<float> target;  // (B, 1, P, P) ground truth
  std::vector<TrainSample> samples;
};

Batch sample_batch(const TrainConfig& cfg, const std::vector<TrainingPair>& data, Rng& rng) {
  const std::size_t b = cfg.batch_size, p = cfg.patch_size, f = 2 * cfg.radius + 1;
  Batch batch{Tensor<float>(Shape{b, f, p, p}), Tensor<float>(Shape{b, 1, p, p}), {}};
  for (std::size_t n = 0; n < b; ++n) {
    TrainSample s;
    s.sequence = rng.index(data.size());
    const TrainingPair& pair = data[s.sequence];
    s.target = rng.index(pair.compressed.size());
    s.y = rng.index(pair.compressed.height - p + 1);
    s.x = rng.index(pair.compressed.width - p + 1);
    const ReferenceSet refs = select_references(pair.compressed, s.target, cfg.radius, cfg.rfp, cfg.track);
    s.references = refs.ordered();
    const Tensor<float> stack = gather_stack(pair.compressed, refs, s.y, s.x, p, p);
    std::copy(stack.data().begin(), stack.data().end(), batch.stack.raw() + n * f * p * p);
    const Tensor<float>& truth = pair.truth.frames[s.target];
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) batch.target.at(n, 0, i, j) = truth[(s.y + i) * pair.truth.width + s.x + j];
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

void check_data(const TrainConfig& cfg, const std::vector<TrainingPair>& data) {
  if (data.empty()) throw DataError("training dataset has no sequences");
  for (const TrainingPair& pair : data) {
    if (pair.compressed.height < cfg.patch_size || pair.compressed.width < cfg.patch_size) {
      throw DataError("sequence '" + pair.compressed.name + "' is smaller than the patch size " +
                      std::to_string(cfg.patch_size));
    }
  }
}

Var<float> spatial_loss(SpatialLoss kind, Var<float> pred, Var<float> target) {
  return kind == SpatialLoss::L1 ? l1_loss(pred, target) : l2_loss(pred, target);
}

void check_finite(double loss, std::int64_t it) {
  if (!std::isfinite(loss)) {
    throw NumericError("training diverged: loss is " + std::to_string(loss) + " at iteration " + std::to_string(it));
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<TrainingPair>& data, const TrainHooks& hooks) {
  cfg.validate();
  check_data(cfg, data);
  TrainResult result;
  result.model = cfg.model();
  const auto specs = model_param_specs(result.model);
  result.weights = init_params<float>(specs, cfg.seed);

  Rng rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  AdamState<float> adam;
  const LrSchedule schedule{cfg.base_lr, cfg.iterations};
  FftLossConfig fft_cfg;
  fft_cfg.lambda = cfg.loss.lambda;
  fft_cfg.norm = cfg.loss.fft_norm;
  fft_cfg.validate();

  for (std::int64_t it = 0; it < cfg.iterations; ++it) {
    Batch batch = sample_batch(cfg, data, rng);
    if (hooks.on_batch) hooks.on_batch(it, batch.samples);

    Graph<float> g;
    BoundParams<float> p(g, result.weights, true);
    const Var<float> x = g.view(batch.stack);
    const Var<float> y = g.view(batch.target);
    const Var<float> out = enhance_forward(p, x, result.model);
    Var<float> loss = spatial_loss(cfg.loss.spatial, out, y);
    if (cfg.loss.fft && cfg.loss.w_fft > 0.0) {
      loss = add(loss, scale(fft_loss(out, batch.target, fft_cfg), static_cast<float>(cfg.loss.w_fft)));
    }
    const double value = loss.value()[0];
    check_finite(value, it);
    g.backward(loss);
    const double lr = lr_at(schedule, it);
    adam_step(result.weights, collect_grads(g, p), adam, lr);
    result.losses.push_back(value);
    if (hooks.on_loss) hooks.on_loss(it, value, lr);
  }
  return result;
}

TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks) {
  return train(cfg, load_dataset(cfg.dataset), hooks);
}

TrainResult train_mask(const TrainConfig& cfg, const std::vector<TrainingPair>& data, const WeightStore& first,
                       const WeightStore& second, const TrainHooks& hooks) {
  cfg.validate();
  check_data(cfg, data);
  const ModelConfig m1 = infer_model_config(first), m2 = infer_model_config(second);
  check_binding(first, model_param_specs(m1));
  check_binding(second, model_param_specs(m2));
  if (m1.radius != cfg.radius || m2.radius != cfg.radius) {
    throw ConfigError("train_mask: both models must use the configured radius " + std::to_string(cfg.radius));
  }
  const MaskNetConfig mask_cfg{1, 32};
  TrainResult result;
  result.model = m1;
  result.weights = init_params<float>(mask_param_specs(mask_cfg), cfg.seed);

  Rng rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  AdamState<float> adam;
  const LrSchedule schedule{cfg.base_lr, cfg.iterations};
  for (std::int64_t it = 0; it < cfg.iterations; ++it) {
    Batch batch = sample_batch(cfg, data, rng);
    if (hooks.on_batch) hooks.on_batch(it, batch.samples);

    auto frozen = [&batch](const WeightStore& w, const ModelConfig& m) {
      Graph<float> fg;
      BoundParams<float> fp(fg, w, false);
      return enhance_forward(fp, fg.view(batch.stack), m).value();
    };
    const Tensor<float> y1 = frozen(first, m1), y2 = frozen(second, m2);

    Graph<float> g;
    BoundParams<float> p(g, result.weights, true);
    const Var<float> stack = g.view(batch.stack);
    const Var<float> v1 = g.view(y1), v2 = g.view(y2);
    const Var<float> mask = mask_net_forward(p, stack_target(stack, m1), v1, v2);
    const Var<float> loss = l1_loss(gated_fuse(v1, v2, mask), g.view(batch.target));
    const double value = loss.value()[0];
    check_finite(value, it);
    g.backward(loss);
    const double lr = lr_at(schedule, it);
    adam_step(result.weights, collect_grads(g, p), adam, lr);
    result.losses.push_back(value);
    if (hooks.on_loss) hooks.on_loss(it, value, lr);
  }
  return result;
}

double head_mean(const std::vector<double>& values, std::size_t window) {
  const std::size_t n = std::min(window, values.size());
  if (n == 0) return 0.0;
  return std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
}

double tail_mean(const std::vector<double>& values, std::size_t window) {
  const std::size_t n = std::min(window, values.size());
  if (n == 0) return 0.0;
  return std::accumulate(values.end() - static_cast<std::ptrdiff_t>(n), values.end(), 0.0) / static_cast<double>(n);
}

}  // namespace qe
