// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace darkburst {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
class GradSink;

/// A recorded operation. Leaves (parameters) have no backward function.
template <typename T>
struct Node {
  using BackwardFn = std::function<void(std::span<const T>, GradSink<T>&)>;

  std::size_t size = 0;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;

  bool is_leaf() const { return !backward; }
};

/// Thread-local switch that suppresses graph construction (inference).
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool enabled);
};

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major array. Copies share storage; use clone() for a deep copy.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> values);

  /// A tracked leaf; gradients are reported for it by backward().
  static BasicTensor parameter(Shape shape, std::vector<T> values);

  /// Result of an op. Tracked iff grad mode is on and any input is tracked.
  static BasicTensor from_op(Shape shape, std::vector<T> values,
                             std::initializer_list<const BasicTensor*> inputs,
                             typename Node<T>::BackwardFn backward);
  static BasicTensor from_op(Shape shape, std::vector<T> values,
                             std::span<const BasicTensor> inputs,
                             typename Node<T>::BackwardFn backward);

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_ ? data_->size() : 0; }

  std::span<const T> values() const;
  /// Writes are visible through every copy sharing this storage.
  std::span<T> mutable_values();
  const T* data() const { return data_->data(); }
  T item() const;

  bool tracked() const { return static_cast<bool>(node_); }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

  BasicTensor detach() const;
  BasicTensor clone() const;
  BasicTensor reshape(Shape shape) const;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>((*data_)[i]);
    return BasicTensor<U>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<T>> data_;
  std::shared_ptr<Node<T>> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Gradient buffers keyed by node, filled during a backward pass.
template <typename T>
class GradSink {
 public:
  /// Accumulation buffer for `t`; empty when `t` is untracked.
  std::span<T> slot(const BasicTensor<T>& t);
  std::span<T> slot(const Node<T>* node);

  std::vector<T>* find(const Node<T>* node);
  void erase(const Node<T>* node) { grads_.erase(node); }
  std::unordered_map<const Node<T>*, std::vector<T>> release() { return std::move(grads_); }

 private:
  std::unordered_map<const Node<T>*, std::vector<T>> grads_;
};

template <typename T>
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::unordered_map<const Node<T>*, std::vector<T>> grads)
      : grads_(std::move(grads)) {}

  bool contains(const BasicTensor<T>& param) const;
  /// Zeros when `param` is unreachable from the loss.
  BasicTensor<T> of(const BasicTensor<T>& param) const;
  std::span<const T> view(const BasicTensor<T>& param) const;

 private:
  std::unordered_map<const Node<T>*, std::vector<T>> grads_;
};

/// Nodes reachable from a root, ordered so every node follows its inputs.
template <typename T>
class Tape {
 public:
  explicit Tape(const BasicTensor<T>& root);

  const std::vector<const Node<T>*>& nodes() const { return order_; }
  std::size_t position(const Node<T>* node) const;

  /// Reverse sweep seeded with d(root)/d(root) = 1; root must be scalar.
  Gradients<T> backward() const;

 private:
  BasicTensor<T> root_;
  std::vector<const Node<T>*> order_;
  std::unordered_map<const Node<T>*, std::size_t> index_;
};

template <typename T>
Gradients<T> backward(const BasicTensor<T>& loss) {
  return Tape<T>(loss).backward();
}

}  // namespace darkburst
