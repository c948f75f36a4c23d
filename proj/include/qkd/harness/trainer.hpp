// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_HARNESS_TRAINER_HPP_
#define QKD_HARNESS_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkd/harness/config.hpp"
#include "qkd/models/checkpoint.hpp"
#include "qkd/models/model.hpp"
#include "qkd/quant/quantizer.hpp"

namespace qkd {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // running, on the augmented training batches
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  double lambda = 0.0;  // soft-term weight at the last step of the epoch
  double lr = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct SoftLabelSnapshot {
  double tau = 1.0;
  double mean_entropy = 0.0;
  double mean_peak = 0.0;
  bool operator==(const SoftLabelSnapshot&) const = default;
};

// Outcome of one (config, seed) cell.
struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | failed
  std::string error;
  // Grouping labels: kind (hd | kd | teacher), width, student_width, tau, lambda, bits.
  nlohmann::json labels = nlohmann::json::object();
  std::vector<EpochRecord> epochs;
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double wall_time_s = 0.0;
  std::optional<SoftLabelSnapshot> soft_labels;  // teacher on the train split

  bool ok() const { return status == "ok"; }
  // Equality of everything except wall time.
  bool same_results(const RunRecord& other) const;
  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// Handed to TrainHooks::on_eval right before each evaluation pass.
struct EvalProbe {
  const Model<float>& model;
  std::span<const ShadowPair<float>> shadows;
  const QuantizerSpec* quantizer;  // null in full-precision runs
  int epoch;
};

struct TrainHooks {
  std::function<void(std::int64_t step, double loss)> on_step;
  std::function<void(const EvalProbe&)> on_eval;
};

struct TrainResult {
  Model<float> model;  // quantized weights in quantized runs
  RunRecord record;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(Model<float>& model, const Dataset& data, std::size_t batch_size = 250);

// The full loop: optional quantization with shadow weights, optional teacher.
// `artifact_root` anchors relative checkpoint templates. A non-finite loss
// ends the run early with status "failed"; configuration problems throw.
TrainResult train_run(const RunConfig& config, std::uint64_t seed, const DatasetPair& data,
                      const std::filesystem::path& artifact_root, const TrainHooks& hooks = {});

// Hard-label full-precision training; metadata carries train/test accuracy.
Checkpoint train_teacher(const RunConfig& config, std::uint64_t seed, const DatasetPair& data,
                         RunRecord* record = nullptr);

// Quantization-aware fine-tuning of a pretrained student, with distillation
// when the config names a teacher.
RunRecord train_student_kd(const RunConfig& config, std::uint64_t seed, const DatasetPair& data,
                           const std::filesystem::path& artifact_root, const TrainHooks& hooks = {});

// Teacher logits for a whole split, evaluation mode, in dataset order.
std::vector<float> teacher_logits(const TeacherModel<float>& teacher, const Dataset& data,
                                  std::size_t batch_size = 250);

// Resolves and loads the teacher a config describes (training the assistant
// first when one is configured).
TeacherModel<float> load_teacher(const RunConfig& config, std::uint64_t seed, const DatasetPair& data,
                                 const std::filesystem::path& artifact_root);

}  // namespace qkd

#endif  // QKD_HARNESS_TRAINER_HPP_
