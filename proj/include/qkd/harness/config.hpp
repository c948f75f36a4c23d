// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_HARNESS_CONFIG_HPP_
#define QKD_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkd/data/dataset.hpp"
#include "qkd/distill/kd_loss.hpp"
#include "qkd/distill/teacher.hpp"
#include "qkd/models/model_spec.hpp"
#include "qkd/quant/quantizer.hpp"

namespace qkd {

// Where the images come from. Relative paths resolve against the dataset root.
struct DatasetConfig {
  std::string kind = "idx";  // idx | cifar10 | synthetic
  std::string root;
  std::string train_images = "train-images-idx3-ubyte.gz";
  std::string train_labels = "train-labels-idx1-ubyte.gz";
  std::string test_images = "t10k-images-idx3-ubyte.gz";
  std::string test_labels = "t10k-labels-idx1-ubyte.gz";
  std::size_t train_limit = 0;  // 0 keeps everything
  std::size_t test_limit = 0;
  bool normalize = true;
  std::optional<bool> augment;  // unset: on for cifar10 only
  SynthOptions synthetic;

  bool augmentation_enabled() const { return augment.value_or(kind == "cifar10"); }
  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
};

struct OptimizerConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::string schedule = "cosine";  // cosine | constant, evaluated per step
  std::size_t batch_size = 64;
  int epochs = 20;

  double lr_at(std::int64_t step, std::int64_t total_steps) const;
  nlohmann::json to_json() const;
  static OptimizerConfig from_json(const nlohmann::json& j, int default_epochs);
};

// A frozen full-precision network distilled from the configured teacher and
// then used as the student's teacher.
struct AssistantConfig {
  std::string checkpoint;  // pretrained assistant (its spec comes from here)
  DistillConfig distill;
  OptimizerConfig optimizer;

  nlohmann::json to_json() const;
  static AssistantConfig from_json(const nlohmann::json& j);
};

struct TeacherConfig {
  // Path template; "{seed}" and "{width}" are substituted per run.
  std::string checkpoint;
  double width = 1.0;  // report label and template value
  TeacherMode mode;
  std::shared_ptr<AssistantConfig> assistant;

  nlohmann::json to_json() const;
  static TeacherConfig from_json(const nlohmann::json& j);
};

struct RunConfig {
  DatasetConfig dataset;
  ModelSpec student;
  std::optional<QuantizerSpec> quantizer;  // unset trains in full precision
  DistillConfig distill;
  std::optional<TeacherConfig> teacher;    // unset trains on hard labels only
  std::string student_init;                // checkpoint template; empty starts from the seed
  OptimizerConfig optimizer;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  // True when the soft term can never contribute: no teacher, or constant 0.
  bool is_hard_label_only() const;
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  // Sorted-key JSON of everything that affects results except the seed.
  // Hard-label-only cells drop the teacher and distill sections.
  std::string canonical() const;
  std::string cell_hash() const;
};

nlohmann::json quantizer_to_json(const QuantizerSpec& spec);
QuantizerSpec quantizer_from_json(const nlohmann::json& j);

// Rejects any key of `j` that is not listed.
void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> keys,
                        std::string_view where);

// "{seed}" -> seed, "{width}" -> width formatted with %g.
std::string expand_template(std::string_view pattern, std::uint64_t seed, double width);
std::string format_number(double v);

// "1,2,5" or ranges like "1-5"; duplicates are rejected.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
// Comma-separated numbers, e.g. "1,1.5,2".
std::vector<double> parse_number_list(std::string_view text);

// Dataset root: explicit flag, then QKD_DATASET_ROOT, then the working directory.
std::filesystem::path resolve_dataset_root(const std::string& flag_value);
// Loads both splits, applies limits and train-split normalization.
DatasetPair load_dataset(const DatasetConfig& config, const std::filesystem::path& root);

}  // namespace qkd

#endif  // QKD_HARNESS_CONFIG_HPP_
