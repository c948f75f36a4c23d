// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_CORE_OPS_HPP_
#define QKD_CORE_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "qkd/core/tensor.hpp"

namespace qkd {

// Probabilities are clamped to this floor before taking logs.
inline constexpr double kLogFloor = 1e-12;

// [m,k] x [k,n] -> [m,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise binary ops. `b` must either match `a` exactly or match its
// trailing dimensions (row broadcast, e.g. [m,n] + [n]). Nothing else is
// broadcast.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
// Same-shape only.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

// Multiplies by a scalar tensor (numel 1), differentiable in both.
template <typename T>
Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& factor);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Cross-correlation of x[N,C,H,W] with k[F,C,Kh,Kw] -> [N,F,H',W'] with
// H' = (H + 2 pad - Kh) / stride + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, Conv2dGeometry geometry = {});

// [N,C,H,W] -> [N,C], mean over spatial positions.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
};

// Per-channel normalization over axis 1 of x[N,C] or x[N,C,H,W].
// Training mode normalizes with batch statistics and folds them into the
// running buffers (exponential average with `momentum`); eval mode uses the
// running buffers. gamma/beta/running_* are all shape [C].
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var,
                     const BatchNormOptions& options);

// Softmax over the last axis of z/tau, computed with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits, T tau = T(1));

// Mean over rows of -sum_c target * log(max(model, kLogFloor)). Both inputs
// must hold valid distributions along the last axis.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& target, const Tensor<T>& model);

template <typename T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t num_classes);

// Row-wise argmax of a [rows, C] tensor.
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& x);

}  // namespace qkd

#endif  // QKD_CORE_OPS_HPP_
