// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "grad_check.hpp"
#include "qkd/core/error.hpp"
#include "qkd/core/ops.hpp"
#include "qkd/core/optim.hpp"
#include "qkd/data/dataset.hpp"
#include "qkd/distill/kd_loss.hpp"
#include "qkd/distill/soft_labels.hpp"
#include "qkd/distill/teacher.hpp"

namespace qkd {
namespace {

using testing::TensorD;

// Scalar evaluation of the KD objective on one row, written out longhand.
double kd_reference(const std::vector<double>& zs, const std::vector<double>& zt, int y, double tau,
                    double lambda) {
  auto softmax_row = [](const std::vector<double>& z, double t) {
    std::vector<double> p(z.size());
    double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] / t));
    for (double& v : p) v /= s;
    return p;
  };
  const auto ps1 = softmax_row(zs, 1.0);
  const auto pst = softmax_row(zs, tau);
  const auto ptt = softmax_row(zt, tau);
  const double hard = -std::log(ps1[static_cast<std::size_t>(y)]);
  double soft = 0;
  for (std::size_t i = 0; i < zs.size(); ++i) soft -= ptt[i] * std::log(pst[i]);
  return (1 - lambda) * hard + lambda * soft;
}

TensorD row(std::vector<double> v) {
  const std::size_t c = v.size();
  return TensorD({1, c}, std::move(v));
}

TEST(KdLoss, HandExampleMatchesLonghandEvaluation) {
  const std::vector<int> y = {0};
  const double got = kd_loss(row({1, 0, 0}), row({2, 0, 0}), y, 5.0, 0.5).item();
  EXPECT_NEAR(got, kd_reference({1, 0, 0}, {2, 0, 0}, 0, 5.0, 0.5), 1e-12);
  // Digits worked by hand: hard = ln(e + 2) - 1, soft = ln(e^0.2 + 2) - 0.2 p0.
  const double p0 = std::exp(0.4) / (std::exp(0.4) + 2.0);
  const double hard = std::log(std::exp(1.0) + 2.0) - 1.0;
  const double soft = std::log(std::exp(0.2) + 2.0) - 0.2 * p0;
  EXPECT_NEAR(got, 0.5 * hard + 0.5 * soft, 1e-12);
}

TEST(KdLoss, LambdaZeroIsExactlyHardLabelCrossEntropy) {
  Rng rng(3);
  const TensorD zs = testing::random_tensor({8, 5}, rng, 2.0);
  const TensorD zt = testing::random_tensor({8, 5}, rng, 2.0);
  const std::vector<int> y = {0, 1, 2, 3, 4, 0, 1, 2};
  const double plain = cross_entropy(one_hot<double>(y, 5), softmax(zs)).item();
  for (double tau : {1.0, 4.0, 20.0}) {
    EXPECT_EQ(kd_loss(zs, zt, y, tau, 0.0).item(), plain);
  }
  const Tensor<float> fs({8, 5}, std::vector<float>(zs.data().begin(), zs.data().end()));
  const Tensor<float> ft({8, 5}, std::vector<float>(zt.data().begin(), zt.data().end()));
  EXPECT_EQ(kd_loss(fs, ft, y, 3.0, 0.0).item(), cross_entropy(one_hot<float>(y, 5), softmax(fs)).item());
}

TEST(KdLoss, LambdaOneWithIdenticalLogitsIsEntropy) {
  const std::vector<double> z = {0.3, -1.2, 2.0, 0.0};
  const std::vector<int> y = {1};
  double h = 0, s = 0;
  for (double v : z) s += std::exp(v);
  for (double v : z) h -= std::exp(v) / s * std::log(std::exp(v) / s);
  EXPECT_NEAR(kd_loss(row(z), row(z), y, 1.0, 1.0).item(), h, 1e-12);
}

TEST(KdLoss, AffineInLambda) {
  Rng rng(8);
  const TensorD zs = testing::random_tensor({6, 4}, rng, 3.0);
  const TensorD zt = testing::random_tensor({6, 4}, rng, 3.0);
  const std::vector<int> y = {3, 2, 1, 0, 1, 2};
  for (double tau : {1.0, 2.0, 7.5}) {
    for (bool sq : {false, true}) {
      const double l0 = kd_loss(zs, zt, y, tau, 0.0, sq).item();
      const double l1 = kd_loss(zs, zt, y, tau, 1.0, sq).item();
      for (double lambda = 0.0; lambda <= 1.0; lambda += 0.125) {
        EXPECT_NEAR(kd_loss(zs, zt, y, tau, lambda, sq).item(), (1 - lambda) * l0 + lambda * l1, 1e-10);
      }
    }
  }
}

TEST(KdLoss, TauSquaredScalesSoftTermOnly) {
  const std::vector<int> y = {0};
  const auto plain = kd_loss_terms(row({1, 0, 0}), row({2, 0, 0}), y, 5.0, 0.5, false);
  const auto scaled = kd_loss_terms(row({1, 0, 0}), row({2, 0, 0}), y, 5.0, 0.5, true);
  EXPECT_EQ(plain.hard.item(), scaled.hard.item());
  EXPECT_NEAR(scaled.soft.item(), 25.0 * plain.soft.item(), 1e-12);
}

TEST(KdLoss, StudentGradientMatchesFiniteDifferences) {
  Rng rng(4);
  const TensorD zt = testing::random_tensor({5, 6}, rng, 2.0);
  const std::vector<int> y = {5, 0, 2, 2, 1};
  for (double tau : {1.0, 4.0}) {
    for (double lambda : {0.0, 0.3, 1.0}) {
      auto f = [&](const std::vector<TensorD>& in) { return kd_loss(in[0], zt, y, tau, lambda, true); };
      const auto r = testing::check_gradients(f, {testing::random_tensor({5, 6}, rng, 2.0)});
      EXPECT_LT(r.max_rel_error, 1e-4) << "tau=" << tau << " lambda=" << lambda;
    }
  }
}

TEST(KdLoss, TeacherLogitsReceiveNoGradient) {
  Rng rng(5);
  TensorD zs = testing::random_tensor({3, 4}, rng);
  TensorD zt = testing::random_tensor({3, 4}, rng);
  zs.set_requires_grad(true);
  zt.set_requires_grad(true);
  const std::vector<int> y = {0, 1, 2};
  kd_loss(zs, zt, y, 2.0, 1.0).backward();
  ASSERT_TRUE(zs.has_grad());
  double gs = 0;
  for (double g : zs.grad()) gs += std::abs(g);
  EXPECT_GT(gs, 0.0);
  if (zt.has_grad()) {
    for (double g : zt.grad()) EXPECT_EQ(g, 0.0);
  }
}

TEST(KdLoss, DomainAndShapeErrors) {
  const std::vector<int> y = {0};
  EXPECT_THROW(kd_loss(row({1, 0}), row({1, 0}), y, 1.0, -0.1), DomainError);
  EXPECT_THROW(kd_loss(row({1, 0}), row({1, 0}), y, 1.0, 1.5), DomainError);
  EXPECT_THROW(kd_loss(row({1, 0}), row({1, 0}), y, 0.0, 0.5), DomainError);
  EXPECT_THROW(kd_loss(row({1, 0}), row({1, 0, 0}), y, 1.0, 0.5), DimensionError);
  const std::vector<int> bad = {2};
  EXPECT_THROW(kd_loss(row({1, 0}), row({1, 0}), bad, 1.0, 0.5), DomainError);
}

TEST(Gslr, EndpointsAndLinearity) {
  EXPECT_EQ(gslr_lambda(0, 0.5, 1000), 0.5);
  EXPECT_EQ(gslr_lambda(1000, 0.5, 1000), 0.0);
  EXPECT_EQ(gslr_lambda(500, 0.5, 1000), 0.25);
  EXPECT_EQ(gslr_lambda(5000, 0.5, 1000), 0.0);
  EXPECT_THROW(gslr_lambda(0, 0.5, 0), DomainError);
  EXPECT_THROW(gslr_lambda(-1, 0.5, 10), DomainError);
  EXPECT_THROW(gslr_lambda(0, 1.5, 10), DomainError);
}

TEST(Gslr, NonincreasingContinuousAndBounded) {
  const std::int64_t horizon = 977;
  double prev = gslr_lambda(0, 0.5, horizon);
  for (std::int64_t s = 1; s <= 2 * horizon; ++s) {
    const double v = gslr_lambda(s, 0.5, horizon);
    EXPECT_LE(v, prev);
    EXPECT_LE(prev - v, 0.5 / static_cast<double>(horizon) + 1e-15);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
}

TEST(LambdaPolicy, ConstantAndScheduleAndJson) {
  const auto c = LambdaPolicy::constant(0.3);
  EXPECT_EQ(c.at(0), 0.3);
  EXPECT_EQ(c.at(123456), 0.3);
  EXPECT_EQ(c.label(), "0.3");
  const auto g = LambdaPolicy::gslr(0.5, 100);
  EXPECT_EQ(g.at(50), 0.25);
  EXPECT_EQ(g.label(), "gslr");
  EXPECT_EQ(LambdaPolicy::from_json(g.to_json()), g);
  EXPECT_EQ(LambdaPolicy::from_json(nlohmann::json(0.7)), LambdaPolicy::constant(0.7));
  EXPECT_THROW(LambdaPolicy::from_json(nlohmann::json("gslr")), ConfigError);
  EXPECT_THROW(LambdaPolicy::from_json({{"policy", "gslr"}}), ConfigError);
  EXPECT_THROW(LambdaPolicy::from_json({{"policy", "constant"}, {"lambda", 0.5}, {"x", 1}}), ConfigError);
  EXPECT_THROW(LambdaPolicy::constant(2.0), DomainError);
  EXPECT_THROW(LambdaPolicy::gslr(0.5, 0).at(3), ConfigError);
}

TEST(DistillConfig, JsonRoundTripAndValidation) {
  DistillConfig c;
  c.tau = 4.0;
  c.lambda = LambdaPolicy::gslr(0.5);
  c.tau_squared_scaling = true;
  EXPECT_EQ(DistillConfig::from_json(c.to_json()), c);
  EXPECT_THROW(DistillConfig::from_json({{"tau", 0.0}}), DomainError);
  EXPECT_THROW(DistillConfig::from_json({{"temperature", 2.0}}), ConfigError);
}

TEST(SoftLabels, UniformLogits) {
  const TensorD z({3, 7}, std::vector<double>(21, 1.25));
  const auto s = soft_label_stats(z, 3.0);
  EXPECT_NEAR(s.mean_entropy, std::log(7.0), 1e-12);
  EXPECT_NEAR(s.mean_peak, 1.0 / 7.0, 1e-12);
}

TEST(SoftLabels, EntropyMonotoneInTauAndBounded) {
  Rng rng(10);
  const TensorD z = testing::random_tensor({100, 10}, rng, 3.0);
  std::vector<double> prev(100, -1.0);
  for (double tau : {1.0, 2.0, 5.0, 10.0}) {
    const auto s = soft_label_stats(z, tau);
    for (std::size_t i = 0; i < 100; ++i) {
      EXPECT_GT(s.entropy[i], prev[i]);
      EXPECT_LE(s.entropy[i], std::log(10.0) + 1e-12);
      EXPECT_GE(s.peak[i], 0.1 - 1e-12);
      EXPECT_LE(s.peak[i], 1.0);
      prev[i] = s.entropy[i];
    }
  }
}

TEST(SoftLabels, ExtremeLogitsStayFinite) {
  const TensorD z({2, 3}, {1000.0, -1000.0, 0.0, 0.0, 0.0, 800.0});
  const auto s = soft_label_stats(z, 0.05);
  for (double h : s.entropy) EXPECT_TRUE(std::isfinite(h));
  EXPECT_EQ(s.mean_peak, 1.0);
}

TEST(SoftLabels, CsvExports) {
  const TensorD z({3, 2}, {0.0, 0.0, 1.0, 0.0, 0.0, std::log(3.0)});
  const std::vector<int> labels = {1, 0, 1};
  const auto s = soft_label_stats(z, 1.0, labels, 1);
  std::ostringstream hist;
  write_histogram_csv(s, hist);
  EXPECT_EQ(hist.str(), "example_id,class_id,probability\n0,0,0.5\n0,1,0.5\n2,0,0.25\n2,1,0.75\n");
  std::ostringstream summary;
  const std::vector<SoftLabelStats> all = {s};
  write_summary_csv(all, summary);
  EXPECT_EQ(summary.str().substr(0, 27), "tau,mean_entropy,mean_peak\n");
  EXPECT_EQ(summary.str().substr(27, 2), "1,");
}

// A small mlp fitted to separable synthetic clusters.
Model<float> trained_mlp(const DatasetPair& data, std::uint64_t seed) {
  ModelSpec spec;
  spec.input_shape = {1, 1, data.train.sample_size()};
  auto model = Model<float>::build(spec, seed);
  Sgd<float> opt(model.trainable_tensors(), {.lr = 0.05, .momentum = 0.9, .weight_decay = 1e-4});
  for (std::uint64_t epoch = 0; epoch < 15; ++epoch) {
    for (const auto& batch : make_batches(data.train.size(), 32, seed, epoch)) {
      opt.zero_grad();
      const auto y = data.train.labels_at(batch);
      auto loss = cross_entropy(one_hot<float>(y, 10), softmax(model.forward(data.train.images_tensor<float>(batch), true)));
      loss.backward();
      opt.step();
    }
  }
  return model;
}

TEST(Teacher, FloatModeEqualsOrdinaryInference) {
  auto model = Model<float>::build(ModelSpec{}, 3);
  Rng rng(1);
  std::vector<float> x(4 * 784);
  for (float& v : x) v = static_cast<float>(rng.uniform());
  const Tensor<float> in({4, 1, 28, 28}, x);
  const auto expect = model.forward(in, false);
  const auto got = teacher_forward(make_checkpoint(model, {}), in, TeacherMode::full_precision());
  EXPECT_TRUE(std::equal(expect.data().begin(), expect.data().end(), got.data().begin()));
  EXPECT_FALSE(got.node()->tracked());
}

TEST(Teacher, EightBitAgreesWithFloatOnHeldOutSlice) {
  SynthOptions o;
  o.separation = 4.0;
  o.n_per_class_train = 60;
  o.n_per_class_test = 60;
  const auto data = synth_clusters(o);
  const auto ck = make_checkpoint(trained_mlp(data, 7), {});
  std::vector<std::size_t> all(data.test.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto x = data.test.images_tensor<float>(all);
  const auto a = argmax_rows(teacher_forward(ck, x, TeacherMode::full_precision()));
  int labels_right = 0;
  for (std::size_t i = 0; i < all.size(); ++i) labels_right += a[i] == data.test.labels[i];
  EXPECT_GT(labels_right, static_cast<int>(0.8 * all.size()));
  for (DeltaPolicy policy : {DeltaPolicy::kL2Optimal, DeltaPolicy::kStdDev}) {
    const auto logits_q = teacher_forward(ck, x, TeacherMode::quantized_bits(8, policy));
    const auto b = argmax_rows(logits_q);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i];
    EXPECT_GE(static_cast<double>(agree) / static_cast<double>(a.size()), 0.99) << to_string(policy);
  }
}

TEST(Teacher, BinaryRandomTeacherGivesFiniteLogits) {
  ModelSpec spec;
  spec.family = Family::kSmallConv;
  spec.input_shape = {1, 12, 12};
  const auto ck = make_checkpoint(Model<float>::build(spec, 2), {});
  Rng rng(3);
  std::vector<float> x(5 * 144);
  for (float& v : x) v = static_cast<float>(rng.normal());
  const auto out = teacher_forward(ck, Tensor<float>({5, 1, 12, 12}, x), TeacherMode::quantized_bits(1));
  EXPECT_EQ(out.shape(), (Shape{5, 10}));
  for (float v : out.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Teacher, QuantizedWeightsTakeFewLevels) {
  const auto model = Model<double>::build(ModelSpec{}, 4);
  const TeacherModel<double> t(model.clone(), TeacherMode::quantized_bits(2));
  for (const auto& p : t.model().parameters()) {
    if (p.kind != ParamKind::kWeight) continue;
    std::vector<double> v(p.value.data().begin(), p.value.data().end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    EXPECT_LE(v.size(), 3u) << p.name;
  }
}

TEST(Teacher, InputShapeMismatchIsConfigError) {
  const auto ck = make_checkpoint(Model<float>::build(ModelSpec{}, 1), {});
  EXPECT_THROW(teacher_forward(ck, Tensor<float>({2, 3, 28, 28}), TeacherMode::full_precision()), ConfigError);
  EXPECT_THROW(teacher_forward(ck, Tensor<float>({2, 784}), TeacherMode::full_precision()), ConfigError);
}

}  // namespace
}  // namespace qkd
