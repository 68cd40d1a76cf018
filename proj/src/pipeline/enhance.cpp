#include "qe/pipeline/enhance.hpp"

#include <algorithm>
#include <memory>

#include "qe/network.hpp"
#include "qe/pipeline/train.hpp"

namespace qe {

namespace {

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

Tensor<float> pad_edges(const Tensor<float>& x, std::size_t ph, std::size_t pw) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<float> out(Shape{n, c, ph, pw});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < c; ++b)
      for (std::size_t i = 0; i < ph; ++i)
        for (std::size_t j = 0; j < pw; ++j) out.at(a, b, i, j) = x.at(a, b, std::min(i, h - 1), std::min(j, w - 1));
  return out;
}

Tensor<float> crop(const Tensor<float>& x, std::size_t h, std::size_t w) {
  const std::size_t n = x.dim(0), c = x.dim(1);
  Tensor<float> out(Shape{n, c, h, w});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < c; ++b)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at(a, b, i, j) = x.at(a, b, i, j);
  return out;
}

Tensor<float> frame_of(const Tensor<float>& batch_frame) {
  return batch_frame.reshaped(Shape{1, batch_frame.dim(2), batch_frame.dim(3)});
}

}  // namespace

EnhanceFn<float> make_model_fn(const WeightStore& weights) {
  auto store = std::make_shared<const WeightStore>(weights);
  const ModelConfig cfg = infer_model_config(*store);
  check_binding(*store, model_param_specs(cfg));
  return [store, cfg](const Tensor<float>& stack) {
    require_rank(stack.shape(), 4, "model input");
    const std::size_t h = stack.dim(2), w = stack.dim(3), s = cfg.iqe.downsample;
    const std::size_t ph = round_up(h, s), pw = round_up(w, s);
    const bool padded = ph != h || pw != w;
    Graph<float> g;
    BoundParams<float> p(g, *store, false);
    const Var<float> x = padded ? g.leaf(pad_edges(stack, ph, pw)) : g.view(stack);
    const Tensor<float> out = enhance_forward(p, x, cfg).value();
    return padded ? crop(out, h, w) : out;
  };
}

FrameSequence enhance_sequence(const WeightStore& weights, const FrameSequence& seq, const EnhanceOptions& options) {
  if (options.fuse_with.has_value() != options.mask.has_value()) {
    throw UsageError("fusion needs both the second model and the mask network weights");
  }
  const ModelConfig cfg = infer_model_config(weights);
  const EnhanceFn<float> first = make_model_fn(weights);
  EnhanceFn<float> second;
  std::shared_ptr<const WeightStore> mask_store;
  ModelConfig second_cfg;
  if (options.fuse_with) {
    second_cfg = infer_model_config(*options.fuse_with);
    if (second_cfg.radius != cfg.radius) throw BindingError("fused models must share the reference radius");
    second = make_model_fn(*options.fuse_with);
    mask_store = std::make_shared<const WeightStore>(*options.mask);
    check_binding(*mask_store, mask_param_specs(infer_mask_config(*mask_store)));
  }
  auto run = [&options](const EnhanceFn<float>& model, const Tensor<float>& stack) {
    return options.self_ensemble ? self_ensemble(model, stack, options.parallel) : model(stack);
  };

  FrameSequence out;
  out.name = seq.name;
  out.width = seq.width;
  out.height = seq.height;
  out.metadata = seq.metadata;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const ReferenceSet refs = select_references(seq, t, cfg.radius, options.rfp, options.track);
    const Tensor<float> stack = gather_stack(seq, refs, 0, 0, seq.height, seq.width);
    Tensor<float> y = run(first, stack);
    if (second) {
      const Tensor<float> y2 = run(second, stack);
      Graph<float> g;
      BoundParams<float> p(g, *mask_store, false);
      const Var<float> target = stack_target(g.view(stack), cfg);
      const Tensor<float> m = mask_net_forward(p, target, g.view(y), g.view(y2)).value();
      y = gated_fuse(y, y2, m);
    }
    for (float& v : y.data()) v = std::clamp(v, 0.0f, 1.0f);
    out.frames.push_back(frame_of(y));
  }
  return out;
}

}  // namespace qe
