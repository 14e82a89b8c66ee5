// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace darkburst {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
thread_local bool grad_enabled = true;

void check_shape(const Shape& shape, std::size_t count) {
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  if (shape_numel(shape) != count)
    throw ShapeError("shape " + shape_str(shape) + " does not hold " + std::to_string(count) +
                     " values");
}
}  // namespace

bool GradMode::enabled() { return grad_enabled; }
void GradMode::set_enabled(bool enabled) { grad_enabled = enabled; }

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<T>>(shape_numel(shape_), fill)) {
  check_shape(shape_, data_->size());
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<T>>(std::move(values))) {
  check_shape(shape_, data_->size());
}

template <typename T>
BasicTensor<T> BasicTensor<T>::parameter(Shape shape, std::vector<T> values) {
  BasicTensor t(std::move(shape), std::move(values));
  t.node_ = std::make_shared<Node<T>>();
  t.node_->size = t.size();
  return t;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_op(Shape shape, std::vector<T> values,
                                       std::initializer_list<const BasicTensor*> inputs,
                                       typename Node<T>::BackwardFn backward) {
  BasicTensor t(std::move(shape), std::move(values));
  if (!GradMode::enabled()) return t;
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const BasicTensor* in : inputs)
    if (in && in->tracked()) parents.push_back(in->node_);
  if (parents.empty()) return t;
  t.node_ = std::make_shared<Node<T>>();
  t.node_->size = t.size();
  t.node_->parents = std::move(parents);
  t.node_->backward = std::move(backward);
  return t;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_op(Shape shape, std::vector<T> values,
                                       std::span<const BasicTensor> inputs,
                                       typename Node<T>::BackwardFn backward) {
  BasicTensor t(std::move(shape), std::move(values));
  if (!GradMode::enabled()) return t;
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const BasicTensor& in : inputs)
    if (in.tracked()) parents.push_back(in.node_);
  if (parents.empty()) return t;
  t.node_ = std::make_shared<Node<T>>();
  t.node_->size = t.size();
  t.node_->parents = std::move(parents);
  t.node_->backward = std::move(backward);
  return t;
}

template <typename T>
std::span<const T> BasicTensor<T>::values() const {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_values() {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

template <typename T>
T BasicTensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape_));
  return (*data_)[0];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  BasicTensor t;
  t.shape_ = shape_;
  t.data_ = data_;
  return t;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
  return BasicTensor(shape_, std::vector<T>(data_->begin(), data_->end()));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshape(Shape shape) const {
  if (shape_numel(shape) != size())
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  const BasicTensor& self = *this;
  return from_op(std::move(shape), std::vector<T>(data_->begin(), data_->end()), {&self},
                 [self](std::span<const T> g, GradSink<T>& sink) {
                   auto gx = sink.slot(self);
                   for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                 });
}

template <typename T>
std::span<T> GradSink<T>::slot(const BasicTensor<T>& t) {
  if (!t.tracked()) return {};
  return slot(t.node().get());
}

template <typename T>
std::span<T> GradSink<T>::slot(const Node<T>* node) {
  auto [it, inserted] = grads_.try_emplace(node);
  if (inserted) it->second.assign(node->size, T(0));
  return {it->second.data(), it->second.size()};
}

template <typename T>
std::vector<T>* GradSink<T>::find(const Node<T>* node) {
  auto it = grads_.find(node);
  return it == grads_.end() ? nullptr : &it->second;
}

template <typename T>
bool Gradients<T>::contains(const BasicTensor<T>& param) const {
  return param.tracked() && grads_.count(param.node().get()) > 0;
}

template <typename T>
BasicTensor<T> Gradients<T>::of(const BasicTensor<T>& param) const {
  if (contains(param)) return BasicTensor<T>(param.shape(), grads_.at(param.node().get()));
  return BasicTensor<T>(param.shape(), T(0));
}

template <typename T>
std::span<const T> Gradients<T>::view(const BasicTensor<T>& param) const {
  if (!contains(param)) return {};
  const auto& g = grads_.at(param.node().get());
  return {g.data(), g.size()};
}

template <typename T>
Tape<T>::Tape(const BasicTensor<T>& root) : root_(root) {
  if (!root.tracked()) return;
  // Iterative post-order DFS.
  std::unordered_map<const Node<T>*, bool> visited;
  std::vector<std::pair<const Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited[root.node().get()] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const Node<T>* parent = node->parents[next++].get();
      if (!visited[parent]) {
        visited[parent] = true;
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    index_[node] = order_.size();
    order_.push_back(node);
    stack.pop_back();
  }
}

template <typename T>
std::size_t Tape<T>::position(const Node<T>* node) const {
  auto it = index_.find(node);
  if (it == index_.end()) throw std::out_of_range("node not on tape");
  return it->second;
}

template <typename T>
Gradients<T> Tape<T>::backward() const {
  if (root_.size() != 1)
    throw ShapeError("backward requires a scalar loss, got " + shape_str(root_.shape()));
  if (order_.empty()) return {};
  GradSink<T> sink;
  sink.slot(order_.back())[0] = T(1);
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const Node<T>* node = *it;
    if (node->is_leaf()) continue;
    std::vector<T>* g = sink.find(node);
    if (!g) continue;
    std::vector<T> grad = std::move(*g);
    sink.erase(node);
    node->backward(std::span<const T>(grad), sink);
  }
  return Gradients<T>(sink.release());
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template class GradSink<float>;
template class GradSink<double>;
template class Gradients<float>;
template class Gradients<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace darkburst
