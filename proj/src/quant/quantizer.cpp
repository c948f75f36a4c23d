// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/quant/quantizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "qkd/core/error.hpp"

namespace qkd {

std::string_view to_string(DeltaPolicy policy) {
  switch (policy) {
    case DeltaPolicy::kStdDev:
      return "stddev";
    case DeltaPolicy::kL2Optimal:
      return "l2";
  }
  return "?";
}

DeltaPolicy parse_delta_policy(std::string_view name) {
  if (name == "stddev") return DeltaPolicy::kStdDev;
  if (name == "l2") return DeltaPolicy::kL2Optimal;
  throw ConfigError("unknown delta policy '" + std::string(name) + "' (expected stddev or l2)");
}

int QuantizerSpec::levels() const { return bits <= 1 ? 2 : (1 << bits) - 1; }

int QuantizerSpec::max_level() const { return bits <= 1 ? 1 : ((1 << bits) - 2) / 2; }

void QuantizerSpec::validate() const {
  if (bits < 1 || bits > 16) throw ConfigError("quantizer: bits must be in [1, 16]");
}

namespace {

void check_delta(double delta, const char* op) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw DomainError(std::string(op) + ": step size must be positive and finite");
  }
}

// Quantized magnitude index for one weight; computed in double so float and
// double tensors round identically. The division only estimates the index:
// the fused multiply-adds give the exact sign of magnitude - (k +- 0.5) delta,
// so the nearest level and the tie rule hold in exact arithmetic.
inline double level_index(double magnitude, double delta, double max_level) {
  double k = std::floor(magnitude / delta + 0.5);
  if (k > 0.0 && std::fma(-(k - 0.5), delta, magnitude) < 0.0) {
    k -= 1.0;
  } else if (std::fma(-(k + 0.5), delta, magnitude) >= 0.0) {
    k += 1.0;
  }
  return std::min(k, max_level);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double max_abs = 0.0;
};

template <typename T>
Moments moments(std::span<const T> w) {
  if (w.empty()) throw DegenerateInputError("delta: empty weight vector");
  Moments m;
  for (T v : w) {
    m.mean += v;
    m.max_abs = std::max(m.max_abs, std::abs(static_cast<double>(v)));
  }
  m.mean /= static_cast<double>(w.size());
  for (T v : w) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= static_cast<double>(w.size());
  if (!(m.variance > 0.0)) throw DegenerateInputError("delta: weight vector has zero variance");
  return m;
}

}  // namespace

template <typename T>
void binarize(std::span<const T> w, T delta, std::span<T> out) {
  check_delta(delta, "binarize");
  if (w.size() != out.size()) throw DimensionError("binarize: output size mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] < T(0) ? -delta : delta;
}

template <typename T>
Tensor<T> binarize(const Tensor<T>& w, T delta) {
  Tensor<T> out(w.shape());
  binarize<T>(w.data(), delta, out.mutable_data());
  return out;
}

template <typename T>
void quantize_b(std::span<const T> w, const QuantizerSpec& spec, T delta, std::span<T> out) {
  if (spec.bits <= 1) {
    binarize<T>(w, delta, out);
    return;
  }
  check_delta(delta, "quantize_b");
  if (w.size() != out.size()) throw DimensionError("quantize_b: output size mismatch");
  const double d = delta;
  const double lmax = spec.max_level();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double v = w[i];
    const double k = level_index(std::abs(v), d, lmax);
    const double q = k * d;
    out[i] = static_cast<T>(v < 0.0 ? -q : q);
  }
}

template <typename T>
Tensor<T> quantize_b(const Tensor<T>& w, const QuantizerSpec& spec, T delta) {
  Tensor<T> out(w.shape());
  quantize_b<T>(w.data(), spec, delta, out.mutable_data());
  return out;
}

template <typename T>
double quantization_residual(std::span<const T> w, const QuantizerSpec& spec, double delta) {
  double r = 0.0;
  if (spec.bits <= 1) {
    for (T v : w) {
      const double e = std::abs(static_cast<double>(v)) - delta;
      r += e * e;
    }
    return r;
  }
  const double lmax = spec.max_level();
  for (T v : w) {
    const double a = std::abs(static_cast<double>(v));
    const double e = a - level_index(a, delta, lmax) * delta;
    r += e * e;
  }
  return r;
}

template <typename T>
T compute_delta_stddev(std::span<const T> w, int bits) {
  if (bits < 1) throw ConfigError("compute_delta_stddev: bits must be >= 1");
  const double sigma = std::sqrt(moments(w).variance);
  static constexpr std::array<double, 4> kCoefficients = {0.0, 1.0, 0.7, 0.4};
  double delta;
  if (bits <= 3) {
    delta = kCoefficients[static_cast<std::size_t>(bits)] * sigma;
  } else {
    const double m = static_cast<double>((1 << bits) - 1);
    delta = 6.0 * sigma / (m - 1.0);
  }
  return static_cast<T>(delta);
}

template <typename T>
std::pair<double, double> delta_search_bracket(std::span<const T> w, const QuantizerSpec& spec) {
  const Moments m = moments(w);
  return {m.max_abs / (10.0 * spec.max_level()), 2.0 * m.max_abs};
}

namespace {

// Least-squares step for a fixed level assignment:
//   delta = sum |w| k / sum k^2.
template <typename T>
double lloyd_step(std::span<const T> w, const QuantizerSpec& spec, double delta) {
  if (spec.bits <= 1) {
    double s = 0.0;
    for (T v : w) s += std::abs(static_cast<double>(v));
    return s / static_cast<double>(w.size());
  }
  const double lmax = spec.max_level();
  double num = 0.0, den = 0.0;
  for (T v : w) {
    const double a = std::abs(static_cast<double>(v));
    const double k = level_index(a, delta, lmax);
    num += a * k;
    den += k * k;
  }
  return den > 0.0 ? num / den : delta;
}

template <typename T>
double golden_section(std::span<const T> w, const QuantizerSpec& spec, double lo, double hi,
                      double rel_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = quantization_residual(w, spec, c);
  double fd = quantization_residual(w, spec, d);
  while ((b - a) > rel_tol * 0.5 * (a + b)) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = quantization_residual(w, spec, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = quantization_residual(w, spec, d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace

template <typename T>
T compute_delta_l2(std::span<const T> w, const QuantizerSpec& spec) {
  spec.validate();
  const auto [lo, hi] = delta_search_bracket(w, spec);

  constexpr int kScanPoints = 256;
  constexpr int kRefineCandidates = 3;
  std::vector<double> grid(kScanPoints), resid(kScanPoints);
  const double ratio = std::pow(hi / lo, 1.0 / (kScanPoints - 1));
  for (int i = 0; i < kScanPoints; ++i) {
    grid[i] = i == kScanPoints - 1 ? hi : lo * std::pow(ratio, i);
    resid[i] = quantization_residual(w, spec, grid[i]);
  }
  std::vector<int> order(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + kRefineCandidates, order.end(),
                    [&](int a, int b) { return resid[a] < resid[b]; });

  double best = grid[order[0]];
  double best_r = resid[order[0]];
  auto consider = [&](double delta) {
    if (!(delta > 0.0)) return;
    const double r = quantization_residual(w, spec, delta);
    if (r < best_r) {
      best_r = r;
      best = delta;
    }
  };
  for (int c = 0; c < kRefineCandidates; ++c) {
    const int i = order[c];
    const double a = grid[std::max(0, i - 1)];
    const double b = grid[std::min(kScanPoints - 1, i + 1)];
    consider(golden_section(w, spec, a, b, 1e-4));
  }

  auto polish = [&] {
    for (int it = 0; it < 100; ++it) {
      const double next = lloyd_step(w, spec, best);
      const double r = quantization_residual(w, spec, next);
      if (!(r < best_r)) break;
      best = next;
      best_r = r;
    }
  };
  polish();

  // Local optimality check on a +-1% grid around the answer.
  for (int round = 0; round < 4; ++round) {
    const double center = best;
    bool improved = false;
    for (int i = 0; i < 100; ++i) {
      const double delta = center * (0.99 + 0.02 * i / 99.0);
      const double r = quantization_residual(w, spec, delta);
      if (r < best_r) {
        best_r = r;
        best = delta;
        improved = true;
      }
    }
    if (!improved) break;
    polish();
  }
  return static_cast<T>(best);
}

template <typename T>
T compute_delta(std::span<const T> w, const QuantizerSpec& spec) {
  return spec.delta_policy == DeltaPolicy::kStdDev ? compute_delta_stddev(w, spec.bits)
                                                   : compute_delta_l2(w, spec);
}

template <typename T>
Tensor<T> ste_backward(const Tensor<T>& grad_wq, const Shape& shadow_shape) {
  if (grad_wq.shape() != shadow_shape) {
    throw DimensionError("ste_backward: gradient " + shape_str(grad_wq.shape()) +
                         " does not match shadow weights " + shape_str(shadow_shape));
  }
  return grad_wq.detach();
}

template <typename T>
ShadowPair<T>::ShadowPair(Tensor<T> full, Tensor<T> quantized)
    : full_(std::move(full)), quantized_(std::move(quantized)) {
  if (full_.shape() != quantized_.shape()) {
    throw DimensionError("ShadowPair: full " + shape_str(full_.shape()) + " vs quantized " +
                         shape_str(quantized_.shape()));
  }
}

template <typename T>
void ShadowPair<T>::refresh_delta(const QuantizerSpec& spec) {
  delta_ = compute_delta<T>(full_.data(), spec);
}

template <typename T>
void ShadowPair<T>::requantize(const QuantizerSpec& spec) {
  quantize_b<T>(full_.data(), spec, delta_, quantized_.mutable_data());
}

template <typename T>
void ShadowPair<T>::apply_ste() {
  if (!quantized_.has_grad()) return;
  const Tensor<T> g(quantized_.shape(), std::vector<T>(quantized_.grad().begin(), quantized_.grad().end()));
  const Tensor<T> passed = ste_backward(g, full_.shape());
  auto dst = full_.mutable_grad();
  std::copy(passed.data().begin(), passed.data().end(), dst.begin());
  quantized_.zero_grad();
}

#define QKD_INSTANTIATE_QUANT(T)                                                           \
  template void binarize<T>(std::span<const T>, T, std::span<T>);                          \
  template Tensor<T> binarize<T>(const Tensor<T>&, T);                                     \
  template void quantize_b<T>(std::span<const T>, const QuantizerSpec&, T, std::span<T>);  \
  template Tensor<T> quantize_b<T>(const Tensor<T>&, const QuantizerSpec&, T);             \
  template double quantization_residual<T>(std::span<const T>, const QuantizerSpec&, double); \
  template T compute_delta_stddev<T>(std::span<const T>, int);                             \
  template std::pair<double, double> delta_search_bracket<T>(std::span<const T>,           \
                                                             const QuantizerSpec&);        \
  template T compute_delta_l2<T>(std::span<const T>, const QuantizerSpec&);                \
  template T compute_delta<T>(std::span<const T>, const QuantizerSpec&);                   \
  template Tensor<T> ste_backward<T>(const Tensor<T>&, const Shape&);                      \
  template class ShadowPair<T>;

QKD_INSTANTIATE_QUANT(float)
QKD_INSTANTIATE_QUANT(double)

}  // namespace qkd
