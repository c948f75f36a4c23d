// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/models/model.hpp"

#include <cmath>

#include "qkd/core/error.hpp"
#include "qkd/core/ops.hpp"
#include "qkd/core/rng.hpp"
#include "qkd/models/checkpoint.hpp"

namespace qkd {

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::kWeight:
      return "weight";
    case ParamKind::kBias:
      return "bias";
    case ParamKind::kNormScale:
      return "norm_scale";
    case ParamKind::kNormShift:
      return "norm_shift";
    case ParamKind::kRunningMean:
      return "running_mean";
    case ParamKind::kRunningVar:
      return "running_var";
  }
  return "?";
}

template <typename T>
Parameter<T>& Model<T>::add_param(std::string name, ParamKind kind, Shape shape) {
  params_.push_back(
      Parameter<T>{std::move(name), kind, Tensor<T>::zeros(std::move(shape), is_trainable(kind))});
  return params_.back();
}

namespace {

template <typename T>
void he_uniform(Tensor<T>& t, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (T& v : t.mutable_data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

template <typename T>
Model<T> Model<T>::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  m.spec_.depth = spec.resolved_depth();
  Rng rng(seed);
  const auto widths = spec.widths();
  const std::size_t classes = static_cast<std::size_t>(spec.num_classes);
  const int depth = spec.resolved_depth();
  std::size_t in;
  if (spec.family == Family::kMlp) {
    in = spec.input_shape[0] * spec.input_shape[1] * spec.input_shape[2];
    for (int i = 0; i < depth; ++i) {
      const std::string p = "fc" + std::to_string(i);
      auto& w = m.add_param(p + ".weight", ParamKind::kWeight, {in, widths[i]});
      w.weight_layer = i;
      he_uniform(w.value, in, rng);
      m.add_param(p + ".bias", ParamKind::kBias, {widths[i]});
      in = widths[i];
    }
  } else {
    in = spec.input_shape[0];
    for (int i = 0; i < depth; ++i) {
      const std::string p = "block" + std::to_string(i);
      const std::size_t c = widths[i];
      auto& w = m.add_param(p + ".conv.weight", ParamKind::kWeight, {c, in, 3, 3});
      w.weight_layer = i;
      he_uniform(w.value, in * 9, rng);
      auto& gamma = m.add_param(p + ".bn.weight", ParamKind::kNormScale, {c});
      for (T& v : gamma.value.mutable_data()) v = T(1);
      m.add_param(p + ".bn.bias", ParamKind::kNormShift, {c});
      m.add_param(p + ".bn.running_mean", ParamKind::kRunningMean, {c});
      auto& var = m.add_param(p + ".bn.running_var", ParamKind::kRunningVar, {c});
      for (T& v : var.value.mutable_data()) v = T(1);
      if (spec.residual) {
        auto& proj = m.add_param(p + ".proj.weight", ParamKind::kWeight, {c, in, 1, 1});
        proj.weight_layer = i;
        he_uniform(proj.value, in, rng);
      }
      in = c;
    }
  }
  auto& head = m.add_param("head.weight", ParamKind::kWeight, {in, classes});
  head.weight_layer = depth;
  he_uniform(head.value, in, rng);
  m.add_param("head.bias", ParamKind::kBias, {classes});
  m.weight_layers_ = depth + 1;
  return m;
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& x, bool training) {
  const auto& is = spec_.input_shape;
  if (x.rank() != 4 || x.dim(1) != is[0] || x.dim(2) != is[1] || x.dim(3) != is[2]) {
    throw DimensionError("model: input " + shape_str(x.shape()) + " does not match spec input [N," +
                         std::to_string(is[0]) + "," + std::to_string(is[1]) + "," +
                         std::to_string(is[2]) + "]");
  }
  const std::size_t n = x.dim(0);
  const int depth = spec_.resolved_depth();
  std::size_t k = 0;
  auto next = [&]() -> Parameter<T>& { return params_[k++]; };
  Tensor<T> h;
  if (spec_.family == Family::kMlp) {
    h = reshape(x, {n, is[0] * is[1] * is[2]});
    for (int i = 0; i < depth; ++i) {
      auto& w = next().value;
      auto& b = next().value;
      Tensor<T> pre = add(matmul(h, w), b);
      if (spec_.residual && i > 0 && pre.shape() == h.shape()) pre = add(pre, h);
      h = relu(pre);
    }
  } else {
    h = x;
    for (int i = 0; i < depth; ++i) {
      const std::size_t stride = spec_.block_stride(i);
      auto& w = next().value;
      auto& gamma = next().value;
      auto& beta = next().value;
      auto& rm = next().value;
      auto& rv = next().value;
      Tensor<T> y = batch_norm(conv2d(h, w, {stride, 1}), gamma, beta, rm, rv,
                               {.training = training, .momentum = 0.1});
      if (spec_.residual) {
        auto& proj = next().value;
        y = add(y, conv2d(h, proj, {stride, 0}));
      }
      h = relu(y);
    }
    h = global_avg_pool(h);
  }
  auto& hw = next().value;
  auto& hb = next().value;
  return add(matmul(h, hw), hb);
}

template <typename T>
Parameter<T>& Model<T>::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ConfigError("model: no parameter named '" + std::string(name) + "'");
}

template <typename T>
std::vector<Tensor<T>> Model<T>::trainable_tensors() const {
  std::vector<Tensor<T>> out;
  for (const auto& p : params_) {
    if (is_trainable(p.kind)) out.push_back(p.value);
  }
  return out;
}

template <typename T>
std::size_t Model<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (is_trainable(p.kind)) n += p.value.numel();
  }
  return n;
}

template <typename T>
Model<T> Model<T>::clone() const {
  Model m;
  m.spec_ = spec_;
  m.weight_layers_ = weight_layers_;
  for (const auto& p : params_) {
    Tensor<T> copy(p.value.shape(), std::vector<T>(p.value.data().begin(), p.value.data().end()),
                   p.value.requires_grad());
    m.params_.push_back(Parameter<T>{p.name, p.kind, std::move(copy), p.weight_layer});
  }
  return m;
}

template <typename T>
void Model<T>::load_state(const Checkpoint& checkpoint) {
  if (checkpoint.spec_hash() != spec_.hash()) {
    throw ConfigError("checkpoint spec " + checkpoint.spec.canonical() +
                      " does not match model spec " + spec_.canonical());
  }
  if (checkpoint.tensors.size() != params_.size()) {
    throw ConfigError("checkpoint has " + std::to_string(checkpoint.tensors.size()) +
                      " tensors, model expects " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = checkpoint.tensors[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.shape != dst.value.shape() || src.kind != dst.kind) {
      throw ConfigError("checkpoint tensor '" + src.name + "' " + shape_str(src.shape) +
                        " does not match model tensor '" + dst.name + "' " +
                        shape_str(dst.value.shape()));
    }
    auto data = dst.value.mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) data[j] = static_cast<T>(src.values[j]);
  }
}

template class Model<float>;
template class Model<double>;

}  // namespace qkd
