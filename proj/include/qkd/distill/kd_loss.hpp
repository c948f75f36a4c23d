// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_DISTILL_KD_LOSS_HPP_
#define QKD_DISTILL_KD_LOSS_HPP_

#include <cstdint>
#include <span>
#include <string>

#include "json.hpp"
#include "qkd/core/tensor.hpp"

namespace qkd {

// lambda0 * max(0, 1 - step / horizon).
double gslr_lambda(std::int64_t step, double lambda0, std::int64_t horizon);

// Weight of the soft term as a function of the optimizer step.
struct LambdaPolicy {
  enum class Kind { kConstant, kGslr };
  Kind kind = Kind::kConstant;
  double lambda = 0.5;  // the constant value, or lambda0 for gslr
  // gslr only; 0 means "total training steps", filled in by the trainer.
  std::int64_t horizon_steps = 0;

  static LambdaPolicy constant(double lambda);
  static LambdaPolicy gslr(double lambda0, std::int64_t horizon_steps = 0);

  double at(std::int64_t step) const;
  // "0.5" for constants, "gslr" for the schedule; used in reports.
  std::string label() const;
  void validate() const;

  nlohmann::json to_json() const;
  // Accepts a bare number, "gslr", or {"policy": "constant"|"gslr", "lambda0"|"lambda": x, "horizon_steps": n}.
  static LambdaPolicy from_json(const nlohmann::json& j);
  bool operator==(const LambdaPolicy&) const = default;
};

struct DistillConfig {
  double tau = 1.0;
  LambdaPolicy lambda;
  bool tau_squared_scaling = false;

  void validate() const;
  nlohmann::json to_json() const;
  static DistillConfig from_json(const nlohmann::json& j);
  bool operator==(const DistillConfig&) const = default;
};

template <typename T>
struct KdTerms {
  Tensor<T> loss;
  Tensor<T> hard;  // CE(onehot(y), softmax(z_s))
  Tensor<T> soft;  // CE(softmax(z_t / tau), softmax(z_s / tau)), times tau^2 if scaled
};

// (1 - lambda) * hard + lambda * soft, averaged over the batch. The teacher
// logits are detached; no gradient reaches them.
template <typename T>
KdTerms<T> kd_loss_terms(const Tensor<T>& student_logits, const Tensor<T>& teacher_logits,
                         std::span<const int> labels, double tau, double lambda,
                         bool tau_squared_scaling = false);

template <typename T>
Tensor<T> kd_loss(const Tensor<T>& student_logits, const Tensor<T>& teacher_logits,
                  std::span<const int> labels, double tau, double lambda, bool tau_squared_scaling = false) {
  return kd_loss_terms(student_logits, teacher_logits, labels, tau, lambda, tau_squared_scaling).loss;
}

}  // namespace qkd

#endif  // QKD_DISTILL_KD_LOSS_HPP_
