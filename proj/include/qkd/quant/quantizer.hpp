// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_QUANT_QUANTIZER_HPP_
#define QKD_QUANT_QUANTIZER_HPP_

#include <span>
#include <string>
#include <string_view>

#include "qkd/core/tensor.hpp"

namespace qkd {

enum class DeltaPolicy {
  kStdDev,     // delta = c_b * stddev(w)
  kL2Optimal,  // delta = argmin ||w - Q(w)||^2
};

std::string_view to_string(DeltaPolicy policy);
DeltaPolicy parse_delta_policy(std::string_view name);

// Symmetric weight quantizer settings.
//
// For bits > 1 the level set is {-L, ..., 0, ..., L} * delta with
// L = (M - 1) / 2 and M = 2^bits - 1 levels. For bits == 1 it is {-delta, +delta}.
struct QuantizerSpec {
  int bits = 2;
  DeltaPolicy delta_policy = DeltaPolicy::kL2Optimal;
  // One delta per layer tensor (the only supported granularity today).
  bool per_layer = true;
  // Keep the first and last weight layers in full precision.
  bool exempt_first_last = false;

  int levels() const;     // M; 2 for the binary case
  int max_level() const;  // L; 1 for the binary case
  void validate() const;
};

// delta * sign(w) with sign(0) = +1.
template <typename T>
void binarize(std::span<const T> w, T delta, std::span<T> out);
template <typename T>
Tensor<T> binarize(const Tensor<T>& w, T delta);

// sign(w) * delta * min(floor(|w| / delta + 0.5), L). bits <= 1 routes to binarize.
template <typename T>
void quantize_b(std::span<const T> w, const QuantizerSpec& spec, T delta, std::span<T> out);
template <typename T>
Tensor<T> quantize_b(const Tensor<T>& w, const QuantizerSpec& spec, T delta);

// Sum of squared quantization errors at the given step size.
template <typename T>
double quantization_residual(std::span<const T> w, const QuantizerSpec& spec, double delta);

// Per-bit coefficient table: c1 = 1.0, c2 = 0.7, c3 = 0.4, and
// delta = 6 * stddev / (M - 1) for bits >= 4. Population stddev.
template <typename T>
T compute_delta_stddev(std::span<const T> w, int bits);

// Search bracket used by compute_delta_l2: [max|w| / (10 L), 2 max|w|].
template <typename T>
std::pair<double, double> delta_search_bracket(std::span<const T> w, const QuantizerSpec& spec);

// Minimizer of the L2 quantization error over the search bracket. A geometric
// scan seeds golden-section refinement (relative tolerance 1e-4); the result
// is then polished with alternating level-assignment / least-squares steps
// and checked against a local 100-point grid.
template <typename T>
T compute_delta_l2(std::span<const T> w, const QuantizerSpec& spec);

// Dispatches on spec.delta_policy.
template <typename T>
T compute_delta(std::span<const T> w, const QuantizerSpec& spec);

// Straight-through estimator: the gradient w.r.t. the quantized weights is
// passed unchanged to the full-precision weights.
template <typename T>
Tensor<T> ste_backward(const Tensor<T>& grad_wq, const Shape& shadow_shape);

// Full-precision master weights plus their quantized image. `quantized` is
// the tensor the network reads; `full` is the one the optimizer updates.
template <typename T>
class ShadowPair {
 public:
  ShadowPair(Tensor<T> full, Tensor<T> quantized);

  // Recomputes delta from the current full-precision weights.
  void refresh_delta(const QuantizerSpec& spec);
  void set_delta(T delta) { delta_ = delta; }
  T delta() const { return delta_; }

  // quantized <- Q(full) with the current delta.
  void requantize(const QuantizerSpec& spec);

  // full.grad <- ste_backward(quantized.grad); clears quantized.grad.
  void apply_ste();

  Tensor<T>& full() { return full_; }
  Tensor<T>& quantized() { return quantized_; }
  const Tensor<T>& full() const { return full_; }
  const Tensor<T>& quantized() const { return quantized_; }

 private:
  Tensor<T> full_;
  Tensor<T> quantized_;
  T delta_ = T(0);
};

extern template class ShadowPair<float>;
extern template class ShadowPair<double>;

}  // namespace qkd

#endif  // QKD_QUANT_QUANTIZER_HPP_
