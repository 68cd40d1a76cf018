#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qe/layers.hpp"

namespace qe {

// Improved quality-enhancement backbone. Topology:
//   head conv -> h
//   pixel_unshuffle(s) -> conv -> d
//   d + skip_scale * conv(blocks(d)) -> conv -> pixel_shuffle(s) -> u
//   tail conv(h + u) -> residual
// All convolutions are 3x3 except the 1x1 attention transforms.
struct IqeConfig {
  std::size_t blocks = 30;
  std::size_t width = 32;      // block input/output channels
  std::size_t expansion = 4;   // wide activation ratio r
  std::size_t downsample = 2;  // pixel (un)shuffle factor s
  std::size_t reduction = 4;   // channel attention ratio
  double skip_scale = 0.2;

  std::size_t wide() const { return width * expansion; }
  void validate() const;

  static IqeConfig shallow();  // 30 blocks, {32, 128, 32}
  static IqeConfig deep();     // 96 blocks, {64, 256, 64}
};

struct ModelConfig {
  std::size_t radius = 2;    // references per side
  std::size_t channels = 1;  // frame channels C
  IqeConfig iqe;

  std::size_t frames() const { return 2 * radius + 1; }
  std::size_t stack_channels() const { return frames() * channels; }
  std::size_t features() const { return iqe.width; }
  void validate() const;
};

struct MaskNetConfig {
  std::size_t channels = 1;
  std::size_t hidden = 32;
  void validate() const;
};

enum class InitKind { Kaiming, Zero, One, ResidualScale };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind init = InitKind::Kaiming;
  std::size_t fan_in = 1;
};

std::vector<ParamSpec> model_param_specs(const ModelConfig& cfg);
std::vector<ParamSpec> mask_param_specs(const MaskNetConfig& cfg);
std::size_t count_parameters(const std::vector<ParamSpec>& specs);

// Block parameter prefix, zero padded so that name order equals block order.
std::string block_prefix(std::size_t index);

template <typename T>
ParamStore<T> init_params(const std::vector<ParamSpec>& specs, std::uint64_t seed);

// Throws BindingError naming every missing, unexpected or mis-shaped tensor.
template <typename T>
void check_binding(const ParamStore<T>& store, const std::vector<ParamSpec>& specs);

// Recovers the architecture from tensor names and shapes.
ModelConfig infer_model_config(const ParamStore<float>& store);
MaskNetConfig infer_mask_config(const ParamStore<float>& store);

// Concatenated frames (N, (2R+1)C, H, W) -> fused features (N, width, H, W).
template <typename T>
Var<T> stff_fuse(const BoundParams<T>& p, Var<T> stack, const ModelConfig& cfg);

// alpha * x + beta * attention(reduce(relu(expand(x))))
template <typename T>
Var<T> ada_block_forward(const BoundParams<T>& p, const std::string& prefix, Var<T> x);

// Fused features -> residual with cfg.channels channels.
template <typename T>
Var<T> iqe_forward(const BoundParams<T>& p, Var<T> feature, const ModelConfig& cfg);

// Target frame (middle of the stack) plus the predicted residual.
template <typename T>
Var<T> enhance_forward(const BoundParams<T>& p, Var<T> stack, const ModelConfig& cfg);

// Target channels of a frame stack.
template <typename T>
Var<T> stack_target(Var<T> stack, const ModelConfig& cfg);

// Mask in [0, 1] of shape (N, 1, H, W) from concat(x_t, y1, y2).
template <typename T>
Var<T> mask_net_forward(const BoundParams<T>& p, Var<T> target, Var<T> y1, Var<T> y2);

}  // namespace qe
