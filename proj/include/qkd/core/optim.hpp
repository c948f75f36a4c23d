// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_CORE_OPTIM_HPP_
#define QKD_CORE_OPTIM_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "qkd/core/tensor.hpp"

namespace qkd {

struct SgdOptions {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

// One SGD-with-momentum update on raw buffers:
//   v <- momentum * v + (g + weight_decay * w);  w <- w - lr * v
template <typename T>
void sgd_update(std::span<T> weights, std::span<const T> grads, std::span<T> velocity,
                const SgdOptions& options);

// Stateful optimizer over a fixed list of leaf tensors. Parameters without a
// gradient buffer are skipped for that step.
template <typename T>
class Sgd {
 public:
  Sgd(std::vector<Tensor<T>> params, SgdOptions options);

  void step();
  void zero_grad();
  void set_lr(double lr) { options_.lr = lr; }
  const SgdOptions& options() const { return options_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> velocity_;
  SgdOptions options_;
};

extern template class Sgd<float>;
extern template class Sgd<double>;

}  // namespace qkd

#endif  // QKD_CORE_OPTIM_HPP_
