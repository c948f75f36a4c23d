// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_CORE_TENSOR_HPP_
#define QKD_CORE_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qkd {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Storage and autograd bookkeeping behind a Tensor handle.
//
// A node is a leaf when it has no backward function. Leaves flagged with
// requires_grad accumulate into `grad` across backward passes; interior nodes
// get a fresh zeroed `grad` at the start of every pass.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> inputs;
  // Adds d(root)/d(input) into inputs[i]->grad given this->grad.
  std::function<void(TensorNode&)> backward;

  bool is_leaf() const { return !backward; }
  bool tracked() const { return requires_grad || !is_leaf(); }
};

// Dense row-major n-d array with reverse-mode autodiff.
//
// Tensor is a cheap shared handle: copies alias the same node, like an
// autograd variable. Results of ops are never mutated after construction;
// only leaves expose mutable data.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using Node = TensorNode<T>;

  Tensor() = default;
  // Zero-filled leaf.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);
  static Tensor full(Shape shape, T value);

  // Builds an op result. History is only recorded when grad mode is on and
  // at least one input is tracked.
  static Tensor make_result(Shape shape, std::vector<T> values, const char* op,
                            std::vector<Tensor> inputs,
                            std::function<void(Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  // Only valid on leaves; interior values are immutable.
  std::span<T> mutable_data();
  T item() const;
  T at(std::size_t flat_index) const { return node_->data.at(flat_index); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);
  bool tracked() const { return node_->tracked(); }
  bool is_leaf() const { return node_->is_leaf(); }
  const char* op() const { return node_->op; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad();
  void zero_grad();

  // New leaf holding a copy of the values, cut from any history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  // Seeds d(self)/d(self) = 1 and propagates. Requires a single element.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// Topologically ordered view of the graph that produced a root tensor.
// Every node appears after all of its inputs; backward() visits each once.
template <typename T>
class Tape {
 public:
  explicit Tape(const Tensor<T>& root);

  const std::vector<TensorNode<T>*>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }

  // Propagates `seed` (shape of root) back to every tracked leaf.
  void backward(std::span<const T> seed);
  void backward();

 private:
  std::shared_ptr<TensorNode<T>> root_;
  std::vector<TensorNode<T>*> order_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace qkd

#endif  // QKD_CORE_TENSOR_HPP_
