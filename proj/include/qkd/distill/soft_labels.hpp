// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_DISTILL_SOFT_LABELS_HPP_
#define QKD_DISTILL_SOFT_LABELS_HPP_

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "qkd/core/tensor.hpp"

namespace qkd {

struct SoftLabelStats {
  double tau = 1.0;
  std::size_t num_classes = 0;
  std::vector<double> entropy;  // nats, per example
  std::vector<double> peak;     // max class probability, per example
  double mean_entropy = 0.0;
  double mean_peak = 0.0;

  // Tempered distributions of the examples whose label is histogram_label.
  int histogram_label = -1;
  std::vector<std::size_t> histogram_examples;
  std::vector<double> histogram;  // histogram_examples.size() x num_classes
};

// Entropy and peak of softmax(logits / tau) per row, computed in double via
// log-sum-exp. `labels` may be empty when no histogram is wanted.
template <typename T>
SoftLabelStats soft_label_stats(const Tensor<T>& logits, double tau, std::span<const int> labels = {},
                                int histogram_label = -1);

// example_id,class_id,probability
void write_histogram_csv(const SoftLabelStats& stats, std::ostream& out);
// tau,mean_entropy,mean_peak
void write_summary_csv(std::span<const SoftLabelStats> stats, std::ostream& out);

}  // namespace qkd

#endif  // QKD_DISTILL_SOFT_LABELS_HPP_
