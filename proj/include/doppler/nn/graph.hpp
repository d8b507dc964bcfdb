#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "doppler/nn/tensor.hpp"

namespace doppler::nn {

// Reverse-mode tape. Every op produces a node holding its value; nodes that
// take part in a gradient computation also hold the parent links and a
// closure that pushes the node's grad into its parents' grads.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first touch, same shape as value
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
  bool requires_grad = false;

  Tensor<T>& grad_storage() {
    if (grad.size() == 0) grad = Tensor<T>::zeros(value.n(), value.c(), value.h(), value.w());
    return grad;
  }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& value() { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  void zero_grad() {
    if (node_ && node_->grad.size() > 0) std::fill(node_->grad.data.begin(), node_->grad.data.end(), T(0));
  }

  std::shared_ptr<Node<T>> node_;
};

// Gradient recording is on by default; inference scopes switch it off so
// ops skip building the tape.
inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool saved;
  NoGradGuard() : saved(grad_enabled_flag()) { grad_enabled_flag() = false; }
  ~NoGradGuard() { grad_enabled_flag() = saved; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Runs reverse-mode accumulation from a scalar root. Each reachable node's
// grad receives d(root)/d(node).
template <typename T>
void backward(const Var<T>& root) {
  if (!root.defined() || root.value().size() != 1)
    throw NumericError("backward: root must be a defined scalar");

  // depth-first topological order (children after parents)
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node_.get(), 0);
  seen.insert(root.node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node_->grad_storage().data[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backprop && node->grad.size() > 0) node->backprop(*node);
  }
}

}  // namespace doppler::nn
