#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "fw/tensor.hpp"

namespace fw {

// One value in a computation graph. Backward closures read `grad` and
// accumulate into the gradients of `inputs` that require it.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool has_grad() const { return !grad.empty(); }
  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;

  static Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  static Var leaf(Tensor<T> value, bool requires_grad) {
    Var v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->value = std::move(value);
    v.node_->requires_grad = requires_grad;
    return v;
  }

  // Result of an operation. The backward closure is dropped when no input
  // requires a gradient, so frozen sub-graphs cost nothing on the way back.
  static Var make(Tensor<T> value, std::vector<Var> inputs,
                  std::function<void(Node<T>&)> backward) {
    Var v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->value = std::move(value);
    for (auto& in : inputs) {
      v.node_->requires_grad = v.node_->requires_grad || in.requires_grad();
    }
    if (v.node_->requires_grad) {
      v.node_->inputs.reserve(inputs.size());
      for (auto& in : inputs) v.node_->inputs.push_back(in.node_);
      v.node_->backward = std::move(backward);
    }
    return v;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  Node<T>* node() const { return node_.get(); }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Reverse-mode sweep from a single-element output (seeded with 1).
template <typename T>
void backward(const Var<T>& output);

}  // namespace fw
