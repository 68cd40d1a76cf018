#include "qe/network.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace qe {

void IqeConfig::validate() const {
  if (blocks == 0) throw ConfigError("iqe: at least one block required");
  if (width == 0 || expansion == 0) throw ConfigError("iqe: width and expansion must be positive");
  if (downsample == 0) throw ConfigError("iqe: downsample factor must be positive");
  attention_width(width, reduction);
}

IqeConfig IqeConfig::shallow() { return IqeConfig{30, 32, 4, 2, 4, 0.2}; }
IqeConfig IqeConfig::deep() { return IqeConfig{96, 64, 4, 2, 4, 0.2}; }

void ModelConfig::validate() const {
  if (radius == 0) throw ConfigError("model: radius must be positive");
  if (channels == 0) throw ConfigError("model: channels must be positive");
  iqe.validate();
}

void MaskNetConfig::validate() const {
  if (channels == 0 || hidden == 0) throw ConfigError("mask net: channels and hidden width must be positive");
}

std::string block_prefix(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iqe.block.%03zu", index);
  return buf;
}

namespace {

void add_conv(std::vector<ParamSpec>& specs, const std::string& name, std::size_t out, std::size_t in, std::size_t k) {
  specs.push_back({name + ".weight", Shape{out, in, k, k}, InitKind::Kaiming, in * k * k});
  specs.push_back({name + ".bias", Shape{out}, InitKind::Zero, in * k * k});
}

}  // namespace

std::vector<ParamSpec> model_param_specs(const ModelConfig& cfg) {
  cfg.validate();
  const IqeConfig& q = cfg.iqe;
  const std::size_t w = q.width, s2 = q.downsample * q.downsample;
  const std::size_t squeezed = attention_width(w, q.reduction);
  std::vector<ParamSpec> specs;
  add_conv(specs, "stff.conv1", cfg.features(), cfg.stack_channels(), 3);
  add_conv(specs, "stff.conv2", cfg.features(), cfg.features(), 3);
  add_conv(specs, "iqe.head", w, cfg.features(), 3);
  add_conv(specs, "iqe.down", w, w * s2, 3);
  for (std::size_t b = 0; b < q.blocks; ++b) {
    const std::string p = block_prefix(b);
    add_conv(specs, p + ".expand", q.wide(), w, 3);
    add_conv(specs, p + ".reduce", w, q.wide(), 3);
    add_conv(specs, p + ".ca.squeeze", squeezed, w, 1);
    add_conv(specs, p + ".ca.excite", w, squeezed, 1);
    specs.push_back({p + ".alpha", Shape{1}, InitKind::One, 1});
    specs.push_back({p + ".beta", Shape{1}, InitKind::ResidualScale, 1});
  }
  add_conv(specs, "iqe.body_tail", w, w, 3);
  add_conv(specs, "iqe.up", w * s2, w, 3);
  add_conv(specs, "iqe.tail", cfg.channels, w, 3);
  return specs;
}

std::vector<ParamSpec> mask_param_specs(const MaskNetConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> specs;
  add_conv(specs, "mask.conv1", cfg.hidden, 3 * cfg.channels, 3);
  add_conv(specs, "mask.conv2", cfg.hidden, cfg.hidden, 3);
  add_conv(specs, "mask.conv3", 1, cfg.hidden, 3);
  return specs;
}

std::size_t count_parameters(const std::vector<ParamSpec>& specs) {
  std::size_t total = 0;
  for (const ParamSpec& s : specs) total += shape_numel(s.shape);
  return total;
}

template <typename T>
ParamStore<T> init_params(const std::vector<ParamSpec>& specs, std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> store;
  for (const ParamSpec& s : specs) {
    Tensor<T> t;
    switch (s.init) {
      case InitKind::Kaiming: t = kaiming_uniform<T>(s.shape, s.fan_in, rng); break;
      case InitKind::Zero: t = Tensor<T>(s.shape); break;
      case InitKind::One: t = Tensor<T>(s.shape, T{1}); break;
      case InitKind::ResidualScale: t = Tensor<T>(s.shape, static_cast<T>(0.2)); break;
    }
    if (!store.emplace(s.name, std::move(t)).second) throw ConfigError("duplicate parameter name '" + s.name + "'");
  }
  return store;
}

template <typename T>
void check_binding(const ParamStore<T>& store, const std::vector<ParamSpec>& specs) {
  std::vector<std::string> missing, mismatched, extra;
  std::set<std::string> expected;
  for (const ParamSpec& s : specs) {
    expected.insert(s.name);
    auto it = store.find(s.name);
    if (it == store.end())
      missing.push_back(s.name);
    else if (it->second.shape() != s.shape)
      mismatched.push_back(s.name + " " + shape_str(it->second.shape()) + " != " + shape_str(s.shape));
  }
  for (const auto& [name, t] : store)
    if (!expected.count(name)) extra.push_back(name);
  if (missing.empty() && mismatched.empty() && extra.empty()) return;
  std::ostringstream os;
  os << "weights do not bind to the architecture";
  auto list = [&os](const char* label, const std::vector<std::string>& names) {
    if (names.empty()) return;
    os << "; " << label << ":";
    for (const auto& n : names) os << ' ' << n;
  };
  list("missing", missing);
  list("unexpected", extra);
  list("shape mismatch", mismatched);
  throw BindingError(os.str());
}

namespace {

const Tensor<float>& require_tensor(const ParamStore<float>& store, const std::string& name) {
  auto it = store.find(name);
  if (it == store.end()) throw BindingError("cannot infer architecture: tensor '" + name + "' missing");
  if (it->second.rank() != 4 && it->second.rank() != 1) {
    throw BindingError("cannot infer architecture: tensor '" + name + "' has shape " + shape_str(it->second.shape()));
  }
  return it->second;
}

}  // namespace

ModelConfig infer_model_config(const ParamStore<float>& store) {
  const Tensor<float>& conv1 = require_tensor(store, "stff.conv1.weight");
  const Tensor<float>& tail = require_tensor(store, "iqe.tail.weight");
  const Tensor<float>& down = require_tensor(store, "iqe.down.weight");
  ModelConfig cfg;
  cfg.channels = tail.dim(0);
  cfg.iqe.width = tail.dim(1);
  const std::size_t stacked = conv1.dim(1);
  if (cfg.channels == 0 || stacked % cfg.channels != 0 || (stacked / cfg.channels) % 2 == 0) {
    throw BindingError("cannot infer architecture: stack of " + std::to_string(stacked) + " channels for " +
                       std::to_string(cfg.channels) + "-channel frames");
  }
  cfg.radius = (stacked / cfg.channels - 1) / 2;
  std::size_t s = 1;
  while (s * s * cfg.iqe.width < down.dim(1)) ++s;
  cfg.iqe.downsample = s;
  std::size_t blocks = 0;
  while (store.count(block_prefix(blocks) + ".alpha")) ++blocks;
  cfg.iqe.blocks = blocks;
  if (blocks > 0) {
    cfg.iqe.expansion = require_tensor(store, block_prefix(0) + ".expand.weight").dim(0) / cfg.iqe.width;
    const std::size_t squeezed = require_tensor(store, block_prefix(0) + ".ca.squeeze.weight").dim(0);
    cfg.iqe.reduction = squeezed ? cfg.iqe.width / squeezed : 0;
  }
  try {
    check_binding(store, model_param_specs(cfg));
  } catch (const ConfigError& e) {
    throw BindingError(std::string("cannot infer architecture: ") + e.what());
  }
  return cfg;
}

MaskNetConfig infer_mask_config(const ParamStore<float>& store) {
  const Tensor<float>& conv1 = require_tensor(store, "mask.conv1.weight");
  MaskNetConfig cfg;
  cfg.hidden = conv1.dim(0);
  if (conv1.dim(1) % 3 != 0) throw BindingError("cannot infer mask net: first layer input is not 3 frames");
  cfg.channels = conv1.dim(1) / 3;
  check_binding(store, mask_param_specs(cfg));
  return cfg;
}

template <typename T>
Var<T> stff_fuse(const BoundParams<T>& p, Var<T> stack, const ModelConfig& cfg) {
  require_rank(stack.shape(), 4, "stff_fuse");
  if (stack.shape()[1] != cfg.stack_channels()) {
    throw DimensionError("stff_fuse: expected " + std::to_string(cfg.stack_channels()) + " stacked channels, got " +
                         shape_str(stack.shape()));
  }
  Var<T> h = relu(conv_same(p, "stff.conv1", stack));
  return relu(conv_same(p, "stff.conv2", h));
}

template <typename T>
Var<T> ada_block_forward(const BoundParams<T>& p, const std::string& prefix, Var<T> x) {
  const std::size_t width = p[prefix + ".reduce.weight"].shape()[0];
  if (x.shape().size() != 4 || x.shape()[1] != width) {
    throw DimensionError("ada block " + prefix + ": expected " + std::to_string(width) + " channels, got " +
                         shape_str(x.shape()));
  }
  Var<T> body = conv_same(p, prefix + ".reduce", relu(conv_same(p, prefix + ".expand", x)));
  body = channel_attention(body, p[prefix + ".ca.squeeze.weight"], p[prefix + ".ca.squeeze.bias"],
                           p[prefix + ".ca.excite.weight"], p[prefix + ".ca.excite.bias"]);
  return add(scale_by(x, p[prefix + ".alpha"]), scale_by(body, p[prefix + ".beta"]));
}

template <typename T>
Var<T> iqe_forward(const BoundParams<T>& p, Var<T> feature, const ModelConfig& cfg) {
  const IqeConfig& q = cfg.iqe;
  require_rank(feature.shape(), 4, "iqe_forward");
  const Shape& fs = feature.shape();
  if (fs[2] % q.downsample != 0 || fs[3] % q.downsample != 0) {
    throw ConfigError("iqe: spatial size " + std::to_string(fs[2]) + "x" + std::to_string(fs[3]) +
                      " not divisible by downsample factor " + std::to_string(q.downsample));
  }
  Var<T> head = conv_same(p, "iqe.head", feature);
  Var<T> down = conv_same(p, "iqe.down", pixel_unshuffle(head, q.downsample));
  Var<T> body = down;
  for (std::size_t b = 0; b < q.blocks; ++b) body = ada_block_forward(p, block_prefix(b), body);
  body = conv_same(p, "iqe.body_tail", body);
  Var<T> mid = add(down, scale(body, static_cast<T>(q.skip_scale)));
  Var<T> up = pixel_shuffle(conv_same(p, "iqe.up", mid), q.downsample);
  return conv_same(p, "iqe.tail", add(head, up));
}

template <typename T>
Var<T> stack_target(Var<T> stack, const ModelConfig& cfg) {
  return slice_channels(stack, cfg.radius * cfg.channels, cfg.channels);
}

template <typename T>
Var<T> enhance_forward(const BoundParams<T>& p, Var<T> stack, const ModelConfig& cfg) {
  Var<T> residual = iqe_forward(p, stff_fuse(p, stack, cfg), cfg);
  return add(stack_target(stack, cfg), residual);
}

template <typename T>
Var<T> mask_net_forward(const BoundParams<T>& p, Var<T> target, Var<T> y1, Var<T> y2) {
  require_same_shape(target.shape(), y1.shape(), "mask_net_forward");
  require_same_shape(target.shape(), y2.shape(), "mask_net_forward");
  Var<T> x = concat_channels<T>({target, y1, y2});
  x = relu(conv_same(p, "mask.conv1", x));
  x = relu(conv_same(p, "mask.conv2", x));
  return sigmoid(conv_same(p, "mask.conv3", x));
}

#define QE_INSTANTIATE(T)                                                                  \
  template ParamStore<T> init_params(const std::vector<ParamSpec>&, std::uint64_t);        \
  template void check_binding(const ParamStore<T>&, const std::vector<ParamSpec>&);        \
  template Var<T> stff_fuse(const BoundParams<T>&, Var<T>, const ModelConfig&);            \
  template Var<T> ada_block_forward(const BoundParams<T>&, const std::string&, Var<T>);    \
  template Var<T> iqe_forward(const BoundParams<T>&, Var<T>, const ModelConfig&);          \
  template Var<T> stack_target(Var<T>, const ModelConfig&);                                \
  template Var<T> enhance_forward(const BoundParams<T>&, Var<T>, const ModelConfig&);      \
  template Var<T> mask_net_forward(const BoundParams<T>&, Var<T>, Var<T>, Var<T>);

QE_INSTANTIATE(float)
QE_INSTANTIATE(double)
#undef QE_INSTANTIATE

}  // namespace qe
