// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_MODELS_MODEL_HPP_
#define QKD_MODELS_MODEL_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qkd/core/tensor.hpp"
#include "qkd/models/model_spec.hpp"

namespace qkd {

enum class ParamKind : std::uint8_t {
  kWeight = 0,  // conv / linear weights; the only quantized kind
  kBias = 1,
  kNormScale = 2,
  kNormShift = 3,
  kRunningMean = 4,  // buffers: saved, not trained
  kRunningVar = 5,
};

std::string_view to_string(ParamKind kind);
constexpr bool is_trainable(ParamKind kind) { return static_cast<int>(kind) <= 3; }

template <typename T>
struct Parameter {
  std::string name;
  ParamKind kind;
  Tensor<T> value;
  // Position among the weight layers, front to back (-1 when not a weight).
  int weight_layer = -1;
};

struct Checkpoint;

// A built network: spec plus named parameter tensors in a fixed order.
template <typename T>
class Model {
 public:
  // He-uniform weights, zero biases, unit/zero norm affine, deterministic in seed.
  static Model build(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }

  // x: [N, C, H, W] matching spec().input_shape. Returns [N, num_classes].
  // Training mode uses batch statistics and updates the running buffers.
  Tensor<T> forward(const Tensor<T>& x, bool training);

  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  Parameter<T>& parameter(std::string_view name);

  std::vector<Tensor<T>> trainable_tensors() const;
  std::size_t trainable_count() const;
  int weight_layer_count() const { return weight_layers_; }

  // Deep copy; the clone shares no storage with this model.
  Model clone() const;

  // Copies tensor values from a checkpoint. Rejects a different spec.
  void load_state(const Checkpoint& checkpoint);

 private:
  Model() = default;
  Parameter<T>& add_param(std::string name, ParamKind kind, Shape shape);

  ModelSpec spec_;
  std::vector<Parameter<T>> params_;
  int weight_layers_ = 0;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace qkd

#endif  // QKD_MODELS_MODEL_HPP_
