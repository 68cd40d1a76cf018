#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qe/autograd.hpp"

namespace qe {

// Differentiable primitives. Every function records one node on the graph
// owning its inputs; all inputs must belong to the same graph.

template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> x, T factor);
// alpha is a learnable scalar of shape (1).
template <typename T> Var<T> scale_by(Var<T> x, Var<T> alpha);
template <typename T> Var<T> relu(Var<T> x);
template <typename T> Var<T> sigmoid(Var<T> x);

// x: (N,C,H,W), gate: (N,C,1,1). out[n,c,:,:] = x[n,c,:,:] * gate[n,c].
template <typename T> Var<T> mul_channels(Var<T> x, Var<T> gate);
// (N,C,H,W) -> (N,C,1,1)
template <typename T> Var<T> global_avg_pool(Var<T> x);
// Concatenates rank-4 tensors along the channel axis.
template <typename T> Var<T> concat_channels(const std::vector<Var<T>>& parts);
// Channels [first, first+count) of a rank-4 tensor.
template <typename T> Var<T> slice_channels(Var<T> x, std::size_t first, std::size_t count);

template <typename T> Var<T> sum(Var<T> x);
template <typename T> Var<T> mean(Var<T> x);
// mean |a-b|; the subgradient at a tie is 0.
template <typename T> Var<T> l1_loss(Var<T> a, Var<T> b);
// mean (a-b)^2
template <typename T> Var<T> l2_loss(Var<T> a, Var<T> b);

// Cross-correlation. x: (N,Cin,H,W), weight: (Cout,Cin,kh,kw), bias: (Cout).
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias, std::size_t stride = 1,
              std::size_t padding = 0);

// Depth-to-space with row-major sub-pixel order:
//   out[n, c, h*s + i, w*s + j] = in[n, c*s*s + i*s + j, h, w]
template <typename T> Tensor<T> pixel_shuffle(const Tensor<T>& x, std::size_t s);
// Exact inverse of pixel_shuffle.
template <typename T> Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::size_t s);
template <typename T> Var<T> pixel_shuffle(Var<T> x, std::size_t s);
template <typename T> Var<T> pixel_unshuffle(Var<T> x, std::size_t s);

}  // namespace qe
