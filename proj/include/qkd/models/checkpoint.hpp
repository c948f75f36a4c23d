// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_MODELS_CHECKPOINT_HPP_
#define QKD_MODELS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkd/models/model.hpp"
#include "qkd/models/model_spec.hpp"

namespace qkd {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static CheckpointMeta from_json(const nlohmann::json& j);
};

struct CheckpointTensor {
  std::string name;
  ParamKind kind;
  Shape shape;
  std::vector<float> values;
};

// In-memory form of a checkpoint file. Layout (all little-endian):
//
//   magic "QKDCKPT\0" | u32 version | u64 spec hash
//   u32 len + spec JSON | u32 len + metadata JSON
//   u32 tensor count, then per tensor:
//     u16 len + name | u8 kind | u8 rank | u32 dims[rank] | u64 offset | u64 count
//   f32 payload (offsets/counts in elements) | u32 CRC-32 of everything before
struct Checkpoint {
  static constexpr char kMagic[8] = {'Q', 'K', 'D', 'C', 'K', 'P', 'T', '\0'};
  static constexpr std::uint32_t kVersion = 1;

  ModelSpec spec;
  CheckpointMeta meta;
  std::vector<CheckpointTensor> tensors;

  std::uint64_t spec_hash() const { return spec.hash(); }
  std::size_t trainable_count() const;
};

template <typename T>
Checkpoint make_checkpoint(const Model<T>& model, CheckpointMeta meta);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
// Throws IntegrityError on checksum or framing failure.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Builds the model the checkpoint describes and loads its tensors.
template <typename T>
Model<T> model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace qkd

#endif  // QKD_MODELS_CHECKPOINT_HPP_
