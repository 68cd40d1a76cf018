#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "qe/tensor.hpp"

namespace qe {

template <typename T>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return graph->value(id); }
  const Shape& shape() const { return graph->value(id).shape(); }
  bool requires_grad() const { return graph->requires_grad(id); }
};

// Tape of recorded operations. Nodes are appended in construction order, so
// every input precedes its consumer and reverse order is a valid topological
// order for backpropagation.
template <typename T>
class Graph {
 public:
  // Called during backward with the gradient flowing into the node's output.
  using BackwardFn = std::function<void(Graph&, const Tensor<T>& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf owning its value.
  Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    Node node;
    node.owned = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  // Leaf reading an external tensor without copying it. The referenced
  // tensor must outlive the graph and stay unmodified while it is in use.
  Var<T> view(const Tensor<T>& value, bool requires_grad = false) {
    Node node;
    node.external = &value;
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  // Appends an operation result. The backward function is only retained when
  // at least one input needs a gradient.
  Var<T> record(Tensor<T> value, const std::vector<std::size_t>& inputs, BackwardFn backward) {
    Node node;
    node.owned = std::move(value);
    for (std::size_t id : inputs) node.requires_grad = node.requires_grad || nodes_.at(id).requires_grad;
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : *n.owned;
  }

  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient buffer of a node, allocated as zeros on first access.
  Tensor<T>& grad_buffer(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.grad) n.grad = Tensor<T>(value(id).shape());
    return *n.grad;
  }

  // Gradient after backward, or nullptr when nothing flowed into the node.
  const Tensor<T>* grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.grad ? &*n.grad : nullptr;
  }
  const Tensor<T>* grad(Var<T> v) const { return grad(v.id); }

  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse-mode sweep from a scalar node. Gradients accumulate, so a node
  // consumed by several operations receives the sum of their contributions.
  void backward(Var<T> loss) {
    if (loss.graph != this) throw UsageError("backward: loss belongs to a different graph");
    if (value(loss.id).size() != 1) {
      throw UsageError("backward: loss must be scalar, got shape " + shape_str(value(loss.id).shape()));
    }
    for (Node& n : nodes_) n.grad.reset();
    grad_buffer(loss.id)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || !n.grad) continue;
      // The callback writes into its inputs' buffers, never into this node's.
      n.backward(*this, *n.grad);
    }
  }

 private:
  struct Node {
    std::optional<Tensor<T>> owned;
    const Tensor<T>* external = nullptr;
    std::optional<Tensor<T>> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

}  // namespace qe
