// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "qkd/core/error.hpp"
#include "qkd/data/dataset.hpp"

namespace qkd {

namespace {

Dataset draw(const SynthOptions& o, std::size_t per_class, Split split, Rng& rng) {
  Dataset d;
  d.split = split;
  d.num_classes = o.classes;
  d.sample_shape = {1, 1, o.dim};
  d.labels.reserve(per_class * static_cast<std::size_t>(o.classes));
  d.images.reserve(per_class * static_cast<std::size_t>(o.classes) * o.dim);
  // Interleave classes so any prefix stays balanced.
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int c = 0; c < o.classes; ++c) {
      d.labels.push_back(c);
      for (std::size_t j = 0; j < o.dim; ++j) {
        const double mu = j == static_cast<std::size_t>(c) ? o.separation : 0.0;
        d.images.push_back(static_cast<float>(mu + rng.normal()));
      }
    }
  }
  return d;
}

}  // namespace

DatasetPair synth_clusters(const SynthOptions& o) {
  if (o.classes < 2) throw ConfigError("synth_clusters: need at least 2 classes");
  if (!(o.separation >= 0.0) || !std::isfinite(o.separation)) {
    throw ConfigError("synth_clusters: separation must be finite and non-negative");
  }
  if (o.dim < static_cast<std::size_t>(o.classes)) {
    throw ConfigError("synth_clusters: dim must be >= classes (one mean axis per class)");
  }
  if (o.n_per_class_train == 0 || o.n_per_class_test == 0) {
    throw ConfigError("synth_clusters: per-class counts must be positive");
  }
  Rng train_rng(mix_seed(o.seed, 1));
  Rng test_rng(mix_seed(o.seed, 2));
  return {draw(o, o.n_per_class_train, Split::kTrain, train_rng),
          draw(o, o.n_per_class_test, Split::kTest, test_rng)};
}

double synth_bayes_accuracy(int classes, double separation) {
  // Trapezoid rule on [-10, 10]; the integrand is smooth and decays like phi.
  const int steps = 20000;
  const double lo = -10.0, hi = 10.0, h = (hi - lo) / steps;
  double acc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double u = lo + i * h;
    const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = 0.5 * std::erfc(-(u + separation) / std::numbers::sqrt2);
    const double f = phi * std::pow(cdf, classes - 1);
    acc += (i == 0 || i == steps) ? 0.5 * f : f;
  }
  return acc * h;
}

}  // namespace qkd
