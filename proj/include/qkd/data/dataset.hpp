// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_DATA_DATASET_HPP_
#define QKD_DATA_DATASET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "qkd/core/rng.hpp"
#include "qkd/core/tensor.hpp"

namespace qkd {

enum class Split { kTrain, kTest };
std::string_view to_string(Split split);

// Images as one contiguous [N, C, H, W] float buffer plus integer labels.
struct Dataset {
  std::vector<float> images;
  std::array<std::size_t, 3> sample_shape = {1, 1, 1};  // C, H, W
  std::vector<int> labels;
  Split split = Split::kTrain;
  int num_classes = 10;

  std::size_t size() const { return labels.size(); }
  std::size_t sample_size() const { return sample_shape[0] * sample_shape[1] * sample_shape[2]; }
  // Checks labels in [0, C) and that the image buffer matches N.
  void validate() const;
  // First `count` examples (all if count is 0 or larger than the set).
  Dataset head(std::size_t count) const;

  template <typename T>
  Tensor<T> images_tensor(std::span<const std::size_t> indices) const;
  std::vector<int> labels_at(std::span<const std::size_t> indices) const;
};

// IDX (MNIST) files. Gzip-compressed files are detected by content and
// decompressed transparently. Pixel bytes are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split = Split::kTrain, int num_classes = 10);
// Writes uncompressed IDX; values are mapped back to bytes with round(v * 255).
void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

// One CIFAR-10 binary batch: a positive multiple of 3073-byte records.
Dataset load_cifar10_batch(const std::filesystem::path& path, Split split);
// A standard CIFAR-10 binary directory: data_batch_1..5.bin for train,
// test_batch.bin for test, each exactly 10000 records.
Dataset load_cifar10_bin(const std::filesystem::path& dir, Split split);

struct SynthOptions {
  int classes = 10;
  std::size_t n_per_class_train = 100;
  std::size_t n_per_class_test = 50;
  std::size_t dim = 16;
  double separation = 3.0;
  std::uint64_t seed = 1;
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

// Isotropic unit-variance Gaussian blobs with means separation * e_c,
// stored as [N, 1, 1, dim].
DatasetPair synth_clusters(const SynthOptions& options);
// Bayes-optimal accuracy for synth_clusters: integral of phi(u) Phi(u + s)^(C-1).
double synth_bayes_accuracy(int classes, double separation);

// Per-channel standardization fitted on a train split only.
class Normalizer {
 public:
  static Normalizer fit(const Dataset& train);
  void apply(Dataset& dataset) const;
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }

 private:
  std::vector<double> mean_, stddev_;
};

// Deterministic epoch order: a permutation seeded by (seed, epoch), cut into
// batches; the final partial batch is kept.
std::vector<std::vector<std::size_t>> make_batches(std::size_t size, std::size_t batch_size,
                                                   std::uint64_t seed, std::uint64_t epoch,
                                                   bool shuffle = true);

// Random horizontal flip and 4-pixel pad-and-crop, in place, on [N, C, H, W].
template <typename T>
void augment_flip_crop(Tensor<T>& batch, Rng& rng, std::size_t pad = 4);

}  // namespace qkd

#endif  // QKD_DATA_DATASET_HPP_
