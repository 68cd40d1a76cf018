#pragma once

#include <array>
#include <functional>

#include "qe/autograd.hpp"

namespace qe {

// Element of the dihedral group of the square acting on the two trailing
// axes: an optional horizontal flip followed by `quarter_turns`
// counter-clockwise rotations by 90 degrees.
struct Augmentation {
  int quarter_turns = 0;  // 0..3
  bool flip = false;

  friend bool operator==(const Augmentation&, const Augmentation&) = default;
};

// Identity first, then the rotations, then the flipped variants.
std::array<Augmentation, 8> all_augmentations();
Augmentation inverse(Augmentation a);
// compose(a, b) applies b first, then a.
Augmentation compose(Augmentation a, Augmentation b);

// Applies the transform to the last two axes. Rank >= 2. Odd quarter turns
// swap the two extents.
template <typename T>
Tensor<T> apply_augmentation(const Tensor<T>& x, Augmentation a);

template <typename T>
using EnhanceFn = std::function<Tensor<T>(const Tensor<T>& stack)>;

// Mean over the eight transforms of inverse(model(transform(stack))). Every
// frame of the stack receives the same spatial transform. Branch outputs are
// summed pairwise in fixed order, so the result does not depend on the order
// in which branches run; `parallel` evaluates them concurrently.
template <typename T>
Tensor<T> self_ensemble(const EnhanceFn<T>& model, const Tensor<T>& stack, bool parallel = false);

// Convex combination M*y1 + (1-M)*y2 with M of shape (N,1,H,W) broadcast over
// channels. Results are clamped to [min(y1,y2), max(y1,y2)] to absorb rounding.
template <typename T>
Tensor<T> gated_fuse(const Tensor<T>& y1, const Tensor<T>& y2, const Tensor<T>& mask);
template <typename T>
Var<T> gated_fuse(Var<T> y1, Var<T> y2, Var<T> mask);

}  // namespace qe
