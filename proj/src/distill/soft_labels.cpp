// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/distill/soft_labels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qkd/core/error.hpp"

namespace qkd {

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

template <typename T>
SoftLabelStats soft_label_stats(const Tensor<T>& logits, double tau, std::span<const int> labels,
                                int histogram_label) {
  if (!(tau > 0.0)) throw DomainError("soft_label_stats: tau must be positive");
  if (logits.rank() != 2) throw DimensionError("soft_label_stats: logits must be [N, C]");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (histogram_label >= 0 && labels.size() != n) {
    throw DimensionError("soft_label_stats: histogram export needs one label per row");
  }
  SoftLabelStats s;
  s.tau = tau;
  s.num_classes = c;
  s.histogram_label = histogram_label;
  s.entropy.resize(n);
  s.peak.resize(n);
  const auto z = logits.data();
  std::vector<double> scaled(c), p(c);
  for (std::size_t i = 0; i < n; ++i) {
    double m = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) m = std::max(m, (scaled[k] = static_cast<double>(z[i * c + k]) / tau));
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) sum += (p[k] = std::exp(scaled[k] - m));
    const double log_sum = std::log(sum);
    double h = 0.0, peak = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      p[k] /= sum;
      h -= p[k] * (scaled[k] - m - log_sum);
      peak = std::max(peak, p[k]);
    }
    s.entropy[i] = std::max(0.0, h);
    s.peak[i] = peak;
    s.mean_entropy += s.entropy[i];
    s.mean_peak += peak;
    if (histogram_label >= 0 && labels[i] == histogram_label) {
      s.histogram_examples.push_back(i);
      s.histogram.insert(s.histogram.end(), p.begin(), p.end());
    }
  }
  if (n > 0) {
    s.mean_entropy /= static_cast<double>(n);
    s.mean_peak /= static_cast<double>(n);
  }
  return s;
}

void write_histogram_csv(const SoftLabelStats& stats, std::ostream& out) {
  out << "example_id,class_id,probability\n";
  for (std::size_t r = 0; r < stats.histogram_examples.size(); ++r) {
    for (std::size_t k = 0; k < stats.num_classes; ++k) {
      out << stats.histogram_examples[r] << ',' << k << ',' << fixed(stats.histogram[r * stats.num_classes + k])
          << '\n';
    }
  }
}

void write_summary_csv(std::span<const SoftLabelStats> stats, std::ostream& out) {
  out << "tau,mean_entropy,mean_peak\n";
  for (const auto& s : stats) out << fixed(s.tau) << ',' << fixed(s.mean_entropy) << ',' << fixed(s.mean_peak) << '\n';
}

template SoftLabelStats soft_label_stats(const Tensor<float>&, double, std::span<const int>, int);
template SoftLabelStats soft_label_stats(const Tensor<double>&, double, std::span<const int>, int);

}  // namespace qkd
