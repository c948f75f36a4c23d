// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_DISTILL_TEACHER_HPP_
#define QKD_DISTILL_TEACHER_HPP_

#include <string>

#include "json.hpp"
#include "qkd/models/checkpoint.hpp"
#include "qkd/models/model.hpp"
#include "qkd/quant/quantizer.hpp"

namespace qkd {

// How a frozen teacher is evaluated: full precision, or with its weights
// passed through the b-bit quantizer once at load time.
struct TeacherMode {
  bool quantized = false;
  QuantizerSpec quantizer;

  static TeacherMode full_precision() { return {}; }
  static TeacherMode quantized_bits(int bits, DeltaPolicy policy = DeltaPolicy::kL2Optimal);

  // "float" or "q<bits>".
  std::string label() const;
  nlohmann::json to_json() const;
  bool operator==(const TeacherMode&) const = default;
};

// A teacher frozen for distillation: evaluation mode, no gradients recorded.
template <typename T>
class TeacherModel {
 public:
  TeacherModel(Model<T> model, TeacherMode mode);
  static TeacherModel from_checkpoint(const Checkpoint& checkpoint, TeacherMode mode);

  // Throws ConfigError if the input sample shape does not match the model.
  Tensor<T> forward(const Tensor<T>& inputs) const;

  const Model<T>& model() const { return model_; }
  const TeacherMode& mode() const { return mode_; }

 private:
  mutable Model<T> model_;
  TeacherMode mode_;
};

template <typename T>
Tensor<T> teacher_forward(const Checkpoint& checkpoint, const Tensor<T>& inputs, const TeacherMode& mode) {
  return TeacherModel<T>::from_checkpoint(checkpoint, mode).forward(inputs);
}

// Replaces every weight tensor of `model` by its quantized value, one delta
// per layer. Honors exempt_first_last.
template <typename T>
void quantize_model_weights(Model<T>& model, const QuantizerSpec& spec);

extern template class TeacherModel<float>;
extern template class TeacherModel<double>;

}  // namespace qkd

#endif  // QKD_DISTILL_TEACHER_HPP_
