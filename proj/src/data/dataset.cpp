// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/data/dataset.hpp"

#include <cmath>
#include <numeric>

#include "qkd/core/error.hpp"

namespace qkd {

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

void Dataset::validate() const {
  if (images.size() != labels.size() * sample_size()) {
    throw ConfigError("dataset: " + std::to_string(images.size()) + " image values for " +
                      std::to_string(labels.size()) + " labels of size " + std::to_string(sample_size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw ConfigError("dataset: label " + std::to_string(labels[i]) + " at index " +
                        std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

Dataset Dataset::head(std::size_t count) const {
  if (count == 0 || count >= size()) return *this;
  Dataset d;
  d.sample_shape = sample_shape;
  d.split = split;
  d.num_classes = num_classes;
  d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  d.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(count * sample_size()));
  return d;
}

template <typename T>
Tensor<T> Dataset::images_tensor(std::span<const std::size_t> indices) const {
  const std::size_t s = sample_size();
  std::vector<T> out(indices.size() * s);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw DimensionError("dataset: index out of range");
    const float* src = images.data() + indices[i] * s;
    for (std::size_t j = 0; j < s; ++j) out[i * s + j] = static_cast<T>(src[j]);
  }
  return Tensor<T>({indices.size(), sample_shape[0], sample_shape[1], sample_shape[2]}, std::move(out));
}

std::vector<int> Dataset::labels_at(std::span<const std::size_t> indices) const {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels.at(indices[i]);
  return out;
}

Normalizer Normalizer::fit(const Dataset& train) {
  if (train.split != Split::kTrain) {
    throw ConfigError("normalizer: statistics must come from the train split");
  }
  if (train.size() == 0) throw ConfigError("normalizer: empty train split");
  Normalizer n;
  const std::size_t c = train.sample_shape[0];
  const std::size_t plane = train.sample_shape[1] * train.sample_shape[2];
  n.mean_.assign(c, 0.0);
  n.stddev_.assign(c, 0.0);
  const double count = static_cast<double>(train.size() * plane);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const float* p = train.images.data() + (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) n.mean_[ch] += p[j];
    }
  }
  for (double& m : n.mean_) m /= count;
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const float* p = train.images.data() + (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) n.stddev_[ch] += (p[j] - n.mean_[ch]) * (p[j] - n.mean_[ch]);
    }
  }
  for (double& s : n.stddev_) {
    s = std::sqrt(s / count);
    if (!(s > 0.0)) s = 1.0;
  }
  return n;
}

void Normalizer::apply(Dataset& d) const {
  const std::size_t c = d.sample_shape[0];
  if (c != mean_.size()) throw DimensionError("normalizer: channel count mismatch");
  const std::size_t plane = d.sample_shape[1] * d.sample_shape[2];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      float* p = d.images.data() + (i * c + ch) * plane;
      const double m = mean_[ch], inv = 1.0 / stddev_[ch];
      for (std::size_t j = 0; j < plane; ++j) p[j] = static_cast<float>((p[j] - m) * inv);
    }
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t size, std::size_t batch_size,
                                                   std::uint64_t seed, std::uint64_t epoch,
                                                   bool shuffle) {
  if (batch_size == 0) throw ConfigError("batches: batch_size must be >= 1");
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(mix_seed(seed, epoch));
    for (std::size_t i = size; i > 1; --i) {
      const std::size_t j = rng.below(i);
      std::swap(order[i - 1], order[j]);
    }
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < size; start += batch_size) {
    const std::size_t end = std::min(size, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

template <typename T>
void augment_flip_crop(Tensor<T>& batch, Rng& rng, std::size_t pad) {
  if (batch.rank() != 4) throw DimensionError("augment: expects [N,C,H,W]");
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  auto data = batch.mutable_data();
  std::vector<T> src(c * h * w);
  for (std::size_t i = 0; i < n; ++i) {
    T* img = data.data() + i * c * h * w;
    std::copy(img, img + src.size(), src.begin());
    const bool flip = rng.below(2) == 1;
    const long dy = static_cast<long>(rng.below(2 * pad + 1)) - static_cast<long>(pad);
    const long dx = static_cast<long>(rng.below(2 * pad + 1)) - static_cast<long>(pad);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const long sy = static_cast<long>(y) + dy;
          long sx = static_cast<long>(x) + dx;
          if (flip) sx = static_cast<long>(w) - 1 - sx;
          const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<long>(h) && sx < static_cast<long>(w);
          img[(ch * h + y) * w + x] = inside ? src[(ch * h + sy) * w + sx] : T(0);
        }
      }
    }
  }
}

template Tensor<float> Dataset::images_tensor<float>(std::span<const std::size_t>) const;
template Tensor<double> Dataset::images_tensor<double>(std::span<const std::size_t>) const;
template void augment_flip_crop<float>(Tensor<float>&, Rng&, std::size_t);
template void augment_flip_crop<double>(Tensor<double>&, Rng&, std::size_t);

}  // namespace qkd
