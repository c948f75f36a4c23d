// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/quant/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "qkd/core/error.hpp"
#include "qkd/core/optim.hpp"
#include "qkd/core/rng.hpp"
#include "quant_oracle.hpp"

namespace qkd {
namespace {

using testing::nearest_level;

QuantizerSpec bits(int b) { return QuantizerSpec{.bits = b}; }

TEST(BinarizeTest, SignConvention) {
  Tensor<double> w({3}, {0.3, -0.2, 0.0});
  auto q = binarize(w, 0.25);
  EXPECT_EQ(std::vector<double>(q.data().begin(), q.data().end()),
            (std::vector<double>{0.25, -0.25, 0.25}));
  auto q2 = binarize(Tensor<double>({2}, {-5, 5}), 1.0);
  EXPECT_EQ(q2.at(0), -1.0);
  EXPECT_EQ(q2.at(1), 1.0);
  EXPECT_THROW(binarize(w, 0.0), DomainError);
  EXPECT_THROW(binarize(w, -1.0), DomainError);
}

TEST(BinarizeTest, MagnitudeIsAlwaysDelta) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> w(37);
    for (auto& v : w) v = static_cast<float>(rng.normal(0, 2));
    const float delta = static_cast<float>(rng.uniform(0.01, 3));
    std::vector<float> out(w.size());
    binarize<float>(w, delta, out);
    for (float v : out) EXPECT_EQ(std::abs(v), delta);
  }
}

TEST(QuantizeTest, HandEvaluatedTwoBit) {
  // b=2: M=3, clamp at 1 level, delta 0.5
  Tensor<double> w({5}, {0.7, 1.8, 0.2, -0.7, 0.0});
  auto q = quantize_b(w, bits(2), 0.5);
  EXPECT_EQ(std::vector<double>(q.data().begin(), q.data().end()),
            (std::vector<double>{0.5, 0.5, 0.0, -0.5, 0.0}));
  EXPECT_EQ(bits(2).levels(), 3);
  EXPECT_EQ(bits(2).max_level(), 1);
  EXPECT_EQ(bits(4).levels(), 15);
  EXPECT_EQ(bits(4).max_level(), 7);
}

TEST(QuantizeTest, ZeroMapsToZero) {
  for (int b : {2, 3, 4, 8}) {
    EXPECT_EQ(quantize_b(Tensor<double>({1}, std::vector<double>{0.0}), bits(b), 0.3).at(0), 0.0);
  }
}

TEST(QuantizeTest, OneBitRoutesToBinarize) {
  auto q = quantize_b(Tensor<double>({3}, {0.01, -3.0, 0.0}), bits(1), 0.4);
  EXPECT_EQ(q.at(0), 0.4);
  EXPECT_EQ(q.at(1), -0.4);
  EXPECT_EQ(q.at(2), 0.4);
  EXPECT_THROW(quantize_b(Tensor<double>({1}, std::vector<double>{1.0}), bits(3), 0.0), DomainError);
}

TEST(QuantizeTest, TiesGoTowardLargerMagnitude) {
  auto q = quantize_b(Tensor<double>({2}, {0.25, -0.75}), bits(3), 0.5);
  EXPECT_EQ(q.at(0), 0.5);
  EXPECT_EQ(q.at(1), -1.0);
}

template <typename T>
void expect_matches_oracle(int b, std::uint64_t seed) {
  Rng rng(seed);
  const QuantizerSpec spec = bits(b);
  for (int i = 0; i < 10000; ++i) {
    const T delta = static_cast<T>(rng.uniform(0.01, 1.0));
    const T w = static_cast<T>(rng.normal(0.0, delta * spec.max_level() * 0.8));
    T out;
    quantize_b<T>(std::span<const T>(&w, 1), spec, delta, std::span<T>(&out, 1));
    ASSERT_EQ(out, nearest_level<T>(w, spec, delta)) << "b=" << b << " w=" << w << " delta=" << delta;
  }
}

TEST(QuantizeTest, AgreesWithBruteForceNearestLevel) {
  for (int b : {1, 2, 3, 4, 8}) {
    expect_matches_oracle<double>(b, 100 + b);
    expect_matches_oracle<float>(b, 200 + b);
  }
}

TEST(QuantizeTest, NearMidpointsRoundExactly) {
  // (k + 0.5) * delta rounds to a double just above or below the true
  // midpoint; the division estimate alone gets some of these wrong.
  Rng rng(41);
  for (int b : {3, 4, 8}) {
    const QuantizerSpec spec = bits(b);
    for (int i = 0; i < 5000; ++i) {
      const double delta = rng.uniform(0.01, 2.0);
      const int k = static_cast<int>(rng.uniform(0.0, spec.max_level() - 1e-9));
      const double w = (k + 0.5) * delta;
      double out;
      quantize_b<double>(std::span<const double>(&w, 1), spec, delta, std::span<double>(&out, 1));
      ASSERT_EQ(out, nearest_level<double>(w, spec, delta)) << "b=" << b << " k=" << k << " delta=" << delta;
    }
  }
}

TEST(QuantizeTest, IdempotentSymmetricBounded) {
  Rng rng(3);
  for (int b : {1, 2, 3, 4, 8}) {
    const QuantizerSpec spec = bits(b);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> w(64);
      for (auto& v : w) v = rng.normal(0, 1);
      const double delta = rng.uniform(0.05, 1.5);
      std::vector<double> q(w.size()), qq(w.size()), neg(w.size()), qneg(w.size());
      quantize_b<double>(w, spec, delta, q);
      quantize_b<double>(q, spec, delta, qq);
      EXPECT_EQ(q, qq);
      for (std::size_t i = 0; i < w.size(); ++i) neg[i] = -w[i];
      quantize_b<double>(neg, spec, delta, qneg);
      std::set<double> distinct;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] != 0.0) {
          EXPECT_EQ(qneg[i], -q[i]);
        }
        EXPECT_LE(std::abs(q[i]), delta * spec.max_level() * (1 + 1e-15));
        distinct.insert(q[i]);
      }
      EXPECT_LE(static_cast<int>(distinct.size()), spec.levels());
    }
  }
}

TEST(DeltaStdDevTest, CoefficientTable) {
  std::vector<double> alternating(100);
  for (std::size_t i = 0; i < alternating.size(); ++i) alternating[i] = i % 2 ? 1.0 : -1.0;
  EXPECT_DOUBLE_EQ(compute_delta_stddev<double>(alternating, 1), 1.0);
  EXPECT_DOUBLE_EQ(compute_delta_stddev<double>(alternating, 2), 0.7);
  EXPECT_DOUBLE_EQ(compute_delta_stddev<double>(alternating, 3), 0.4);
  EXPECT_DOUBLE_EQ(compute_delta_stddev<double>(alternating, 4), 6.0 / 14.0);
  EXPECT_DOUBLE_EQ(compute_delta_stddev<double>(alternating, 8), 6.0 / 254.0);
}

TEST(DeltaStdDevTest, Homogeneous) {
  Rng rng(4);
  std::vector<double> w(500), scaled(500);
  for (auto& v : w) v = rng.normal(0.1, 0.3);
  for (double s : {0.01, 3.0, 250.0}) {
    for (std::size_t i = 0; i < w.size(); ++i) scaled[i] = s * w[i];
    for (int b : {1, 2, 5}) {
      EXPECT_NEAR(compute_delta_stddev<double>(scaled, b), s * compute_delta_stddev<double>(w, b),
                  1e-12 * s);
    }
  }
}

TEST(DeltaStdDevTest, InsideL2SearchBracketOnGaussianWeights) {
  Rng rng(5);
  for (int b : {1, 2, 3, 4, 8}) {
    std::vector<double> w(2000);
    for (auto& v : w) v = rng.normal(0, 0.2);
    const auto [lo, hi] = delta_search_bracket<double>(w, bits(b));
    const double d = compute_delta_stddev<double>(w, b);
    EXPECT_GE(d, lo) << b;
    EXPECT_LE(d, hi) << b;
  }
}

TEST(DeltaTest, DegenerateInputs) {
  std::vector<double> zeros(10, 0.0), constant(10, 0.5), empty;
  EXPECT_THROW(compute_delta_stddev<double>(zeros, 2), DegenerateInputError);
  EXPECT_THROW(compute_delta_stddev<double>(constant, 2), DegenerateInputError);
  EXPECT_THROW(compute_delta_l2<double>(zeros, bits(2)), DegenerateInputError);
  EXPECT_THROW(compute_delta_l2<double>(empty, bits(2)), DegenerateInputError);
}

TEST(DeltaL2Test, ExactlyRepresentableLevels) {
  for (int b : {2, 3, 4}) {
    const QuantizerSpec spec = bits(b);
    const double d0 = 0.137;
    std::vector<double> w;
    for (int k = -spec.max_level(); k <= spec.max_level(); ++k) {
      for (int rep = 0; rep < 3; ++rep) w.push_back(k * d0);
    }
    const double d = compute_delta_l2<double>(w, spec);
    EXPECT_NEAR(d, d0, 1e-12 * d0) << b;
    EXPECT_NEAR(quantization_residual<double>(w, spec, d), 0.0, 1e-20);
  }
}

TEST(DeltaL2Test, BinaryOptimumIsMeanAbs) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(300);
    double mean_abs = 0;
    for (auto& v : w) {
      v = rng.normal(0.05, 0.4);
      mean_abs += std::abs(v);
    }
    mean_abs /= w.size();
    EXPECT_NEAR(compute_delta_l2<double>(w, bits(1)), mean_abs, 1e-3 * mean_abs);
  }
}

TEST(DeltaL2Test, NoGridPointBeatsTheOptimum) {
  Rng rng(7);
  for (int b : {2, 3, 4}) {
    const QuantizerSpec spec = bits(b);
    std::vector<double> w(400);
    for (auto& v : w) v = rng.normal(0, 1);
    const double d = compute_delta_l2<double>(w, spec);
    const double r = quantization_residual<double>(w, spec, d);
    const auto [lo, hi] = delta_search_bracket<double>(w, spec);
    for (int i = 0; i < 1000; ++i) {
      const double g = lo + (hi - lo) * i / 999.0;
      EXPECT_LE(r, quantization_residual<double>(w, spec, g) * (1 + 1e-12)) << "b=" << b << " grid " << g;
    }
  }
}

TEST(DeltaTest, PolicyDispatch) {
  std::vector<double> w = {-1, 1, -1, 1};
  EXPECT_DOUBLE_EQ(compute_delta<double>(w, {.bits = 1, .delta_policy = DeltaPolicy::kStdDev}), 1.0);
  EXPECT_DOUBLE_EQ(compute_delta<double>(w, {.bits = 1, .delta_policy = DeltaPolicy::kL2Optimal}), 1.0);
  EXPECT_EQ(parse_delta_policy("l2"), DeltaPolicy::kL2Optimal);
  EXPECT_THROW(parse_delta_policy("median"), ConfigError);
}

TEST(SteTest, IdentityPassThrough) {
  Tensor<double> g({2}, {1.0, -2.0});
  auto passed = ste_backward(g, Shape{2});
  EXPECT_EQ(passed.at(0), 1.0);
  EXPECT_EQ(passed.at(1), -2.0);
  EXPECT_THROW(ste_backward(g, Shape{3}), DimensionError);
}

TEST(SteTest, ShadowWeightCrossesLevel) {
  const QuantizerSpec spec = bits(2);
  ShadowPair<double> pair(Tensor<double>({1}, {0.26}, true), Tensor<double>::zeros({1}, true));
  pair.set_delta(0.5);
  pair.requantize(spec);
  EXPECT_EQ(pair.quantized().at(0), 0.5);
  pair.quantized().mutable_grad()[0] = 1.0;
  pair.apply_ste();
  Sgd<double> opt({pair.full()}, {.lr = 0.1, .momentum = 0.0, .weight_decay = 0.0});
  opt.step();
  EXPECT_NEAR(pair.full().at(0), 0.16, 1e-15);
  pair.requantize(spec);
  EXPECT_EQ(pair.quantized().at(0), 0.0);
}

// Minimizes mean (w_q x - y)^2 through the STE loop and compares with the
// best level found by enumeration.
double run_scalar_regression(double true_w, double w0, int steps) {
  const QuantizerSpec spec = bits(3);
  const double delta = 0.25;
  std::vector<double> xs = {0.5, -1.0, 1.5, 2.0, -0.3};
  ShadowPair<double> pair(Tensor<double>({1}, {w0}, true), Tensor<double>::zeros({1}, true));
  pair.set_delta(delta);
  Sgd<double> opt({pair.full()}, {.lr = 0.05, .momentum = 0.0, .weight_decay = 0.0});
  for (int s = 0; s < steps; ++s) {
    pair.requantize(spec);
    double g = 0;
    for (double x : xs) g += 2 * (pair.quantized().at(0) * x - true_w * x) * x / xs.size();
    pair.quantized().mutable_grad()[0] = g;
    pair.apply_ste();
    opt.step();
    pair.full().zero_grad();
  }
  pair.requantize(spec);
  return pair.quantized().at(0);
}

double best_level(double true_w) {
  const QuantizerSpec spec = bits(3);
  double best = 0, best_loss = 1e300;
  for (int k = -spec.max_level(); k <= spec.max_level(); ++k) {
    const double loss = (k * 0.25 - true_w) * (k * 0.25 - true_w);
    if (loss < best_loss) {
      best_loss = loss;
      best = k * 0.25;
    }
  }
  return best;
}

TEST(SteTest, ScalarRegressionReachesRepresentableOptimum) {
  EXPECT_EQ(run_scalar_regression(0.5, -0.7, 100), best_level(0.5));
  EXPECT_EQ(run_scalar_regression(-0.25, 0.9, 100), best_level(-0.25));
  // Optimum outside the level range: saturates at the largest level.
  EXPECT_EQ(run_scalar_regression(3.0, 0.0, 100), best_level(3.0));
  EXPECT_EQ(best_level(3.0), 0.75);
}

}  // namespace
}  // namespace qkd
