// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/distill/teacher.hpp"

#include <algorithm>

#include "qkd/core/error.hpp"

namespace qkd {

TeacherMode TeacherMode::quantized_bits(int bits, DeltaPolicy policy) {
  TeacherMode m;
  m.quantized = true;
  m.quantizer.bits = bits;
  m.quantizer.delta_policy = policy;
  m.quantizer.validate();
  return m;
}

std::string TeacherMode::label() const {
  return quantized ? "q" + std::to_string(quantizer.bits) : "float";
}

nlohmann::json TeacherMode::to_json() const {
  if (!quantized) return {{"mode", "float"}};
  return {{"mode", "quantized"}, {"bits", quantizer.bits}, {"delta_policy", std::string(to_string(quantizer.delta_policy))}};
}

template <typename T>
void quantize_model_weights(Model<T>& model, const QuantizerSpec& spec) {
  spec.validate();
  const int last = model.weight_layer_count() - 1;
  for (auto& p : model.parameters()) {
    if (p.kind != ParamKind::kWeight) continue;
    if (spec.exempt_first_last && (p.weight_layer == 0 || p.weight_layer == last)) continue;
    const auto w = p.value.data();
    const T delta = compute_delta(w, spec);
    std::vector<T> q(w.size());
    quantize_b(w, spec, delta, std::span<T>(q));
    auto dst = p.value.mutable_data();
    std::copy(q.begin(), q.end(), dst.begin());
  }
}

template <typename T>
TeacherModel<T>::TeacherModel(Model<T> model, TeacherMode mode) : model_(std::move(model)), mode_(mode) {
  if (mode_.quantized) quantize_model_weights(model_, mode_.quantizer);
  for (auto& p : model_.parameters()) p.value.set_requires_grad(false);
}

template <typename T>
TeacherModel<T> TeacherModel<T>::from_checkpoint(const Checkpoint& checkpoint, TeacherMode mode) {
  return TeacherModel(model_from_checkpoint<T>(checkpoint), mode);
}

template <typename T>
Tensor<T> TeacherModel<T>::forward(const Tensor<T>& inputs) const {
  const auto& is = model_.spec().input_shape;
  if (inputs.rank() != 4 || inputs.dim(1) != is[0] || inputs.dim(2) != is[1] || inputs.dim(3) != is[2]) {
    throw ConfigError("teacher expects inputs of shape [N, " + std::to_string(is[0]) + ", " +
                      std::to_string(is[1]) + ", " + std::to_string(is[2]) + "]");
  }
  NoGradGuard no_grad;
  return model_.forward(inputs, false);
}

template class TeacherModel<float>;
template class TeacherModel<double>;
template void quantize_model_weights(Model<float>&, const QuantizerSpec&);
template void quantize_model_weights(Model<double>&, const QuantizerSpec&);

}  // namespace qkd
