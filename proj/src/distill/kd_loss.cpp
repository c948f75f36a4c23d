// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/distill/kd_loss.hpp"

#include <cmath>
#include <sstream>

#include "qkd/core/error.hpp"
#include "qkd/core/ops.hpp"

namespace qkd {

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive, got " + std::to_string(tau));
}

}  // namespace

double gslr_lambda(std::int64_t step, double lambda0, std::int64_t horizon) {
  if (horizon <= 0) throw DomainError("gslr horizon must be positive");
  if (step < 0) throw DomainError("gslr step must be non-negative");
  check_lambda(lambda0);
  const double frac = static_cast<double>(step) / static_cast<double>(horizon);
  return lambda0 * std::max(0.0, 1.0 - frac);
}

LambdaPolicy LambdaPolicy::constant(double lambda) {
  LambdaPolicy p;
  p.kind = Kind::kConstant;
  p.lambda = lambda;
  p.validate();
  return p;
}

LambdaPolicy LambdaPolicy::gslr(double lambda0, std::int64_t horizon_steps) {
  LambdaPolicy p;
  p.kind = Kind::kGslr;
  p.lambda = lambda0;
  p.horizon_steps = horizon_steps;
  p.validate();
  return p;
}

double LambdaPolicy::at(std::int64_t step) const {
  if (kind == Kind::kConstant) return lambda;
  if (horizon_steps <= 0) throw ConfigError("gslr policy has no horizon; set horizon_steps or let the trainer fill it");
  return gslr_lambda(step, lambda, horizon_steps);
}

std::string LambdaPolicy::label() const {
  if (kind == Kind::kGslr) return "gslr";
  std::ostringstream os;
  os << lambda;
  return os.str();
}

void LambdaPolicy::validate() const {
  check_lambda(lambda);
  if (horizon_steps < 0) throw DomainError("gslr horizon must be positive");
}

nlohmann::json LambdaPolicy::to_json() const {
  if (kind == Kind::kConstant) return {{"policy", "constant"}, {"lambda", lambda}};
  return {{"policy", "gslr"}, {"lambda0", lambda}, {"horizon_steps", horizon_steps}};
}

LambdaPolicy LambdaPolicy::from_json(const nlohmann::json& j) {
  if (j.is_number()) return constant(j.get<double>());
  if (j.is_string()) {
    if (j.get<std::string>() == "gslr") {
      throw ConfigError("lambda policy \"gslr\" needs an explicit lambda0: {\"policy\": \"gslr\", \"lambda0\": 0.5}");
    }
    throw ConfigError("unknown lambda policy " + j.dump());
  }
  if (!j.is_object()) throw ConfigError("lambda must be a number or an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "policy" && key != "lambda" && key != "lambda0" && key != "horizon_steps") {
      throw ConfigError("unknown key in lambda policy: " + key);
    }
  }
  const std::string policy = j.value("policy", "constant");
  if (policy == "constant") {
    if (!j.contains("lambda")) throw ConfigError("constant lambda policy needs \"lambda\"");
    return constant(j.at("lambda").get<double>());
  }
  if (policy == "gslr") {
    if (!j.contains("lambda0")) throw ConfigError("gslr lambda policy needs \"lambda0\"");
    return gslr(j.at("lambda0").get<double>(), j.value("horizon_steps", std::int64_t{0}));
  }
  throw ConfigError("unknown lambda policy " + policy);
}

void DistillConfig::validate() const {
  check_tau(tau);
  lambda.validate();
}

nlohmann::json DistillConfig::to_json() const {
  return {{"tau", tau}, {"lambda", lambda.to_json()}, {"tau_squared_scaling", tau_squared_scaling}};
}

DistillConfig DistillConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("distill config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "tau" && key != "lambda" && key != "tau_squared_scaling") {
      throw ConfigError("unknown key in distill config: " + key);
    }
  }
  DistillConfig c;
  c.tau = j.value("tau", 1.0);
  if (j.contains("lambda")) c.lambda = LambdaPolicy::from_json(j.at("lambda"));
  c.tau_squared_scaling = j.value("tau_squared_scaling", false);
  c.validate();
  return c;
}

template <typename T>
KdTerms<T> kd_loss_terms(const Tensor<T>& zs, const Tensor<T>& zt, std::span<const int> labels, double tau,
                         double lambda, bool tau_squared_scaling) {
  check_lambda(lambda);
  check_tau(tau);
  if (zs.rank() != 2 || zt.shape() != zs.shape()) {
    throw DimensionError("kd_loss: student and teacher logits must both be [N, C] with equal shape");
  }
  if (labels.size() != zs.dim(0)) throw DimensionError("kd_loss: one label per row required");
  const std::size_t classes = zs.dim(1);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw DomainError("kd_loss: label out of range");
  }
  KdTerms<T> out;
  out.hard = cross_entropy(one_hot<T>(labels, classes), softmax(zs, T(1)));
  const T t = static_cast<T>(tau);
  out.soft = cross_entropy(softmax(zt.detach(), t), softmax(zs, t));
  if (tau_squared_scaling) out.soft = scale(out.soft, t * t);
  out.loss = add(scale(out.hard, static_cast<T>(1.0 - lambda)), scale(out.soft, static_cast<T>(lambda)));
  return out;
}

template KdTerms<float> kd_loss_terms(const Tensor<float>&, const Tensor<float>&, std::span<const int>, double,
                                      double, bool);
template KdTerms<double> kd_loss_terms(const Tensor<double>&, const Tensor<double>&, std::span<const int>,
                                       double, double, bool);

}  // namespace qkd
