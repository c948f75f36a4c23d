// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/core/optim.hpp"

#include "qkd/core/error.hpp"

namespace qkd {

template <typename T>
void sgd_update(std::span<T> weights, std::span<const T> grads, std::span<T> velocity,
                const SgdOptions& options) {
  if (weights.size() != grads.size() || weights.size() != velocity.size()) {
    throw DimensionError("sgd_update: weights/grads/velocity sizes differ (" +
                         std::to_string(weights.size()) + ", " + std::to_string(grads.size()) +
                         ", " + std::to_string(velocity.size()) + ")");
  }
  const T lr = static_cast<T>(options.lr);
  const T mom = static_cast<T>(options.momentum);
  const T wd = static_cast<T>(options.weight_decay);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = mom * velocity[i] + (grads[i] + wd * weights[i]);
    weights[i] -= lr * velocity[i];
  }
}

template <typename T>
Sgd<T>::Sgd(std::vector<Tensor<T>> params, SgdOptions options)
    : params_(std::move(params)), options_(options) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.numel(), T(0));
}

template <typename T>
void Sgd<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) continue;
    sgd_update<T>(params_[i].mutable_data(), params_[i].grad(), velocity_[i], options_);
  }
}

template <typename T>
void Sgd<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template void sgd_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                const SgdOptions&);
template void sgd_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                 const SgdOptions&);
template class Sgd<float>;
template class Sgd<double>;

}  // namespace qkd
