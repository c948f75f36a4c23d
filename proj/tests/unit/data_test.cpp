// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "qkd/core/error.hpp"
#include "qkd/data/dataset.hpp"

namespace qkd {
namespace {

namespace fs = std::filesystem;
using Bytes = std::vector<std::uint8_t>;

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "qkd_data_test";
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_gz(const fs::path& path, const Bytes& bytes) {
  gzFile f = gzopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

void append_be32(Bytes& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

Bytes idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols, const Bytes& pixels) {
  Bytes b;
  append_be32(b, 0x00000803);
  append_be32(b, n);
  append_be32(b, rows);
  append_be32(b, cols);
  b.insert(b.end(), pixels.begin(), pixels.end());
  return b;
}

Bytes idx_labels(const Bytes& labels) {
  Bytes b;
  append_be32(b, 0x00000801);
  append_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

// Two 2x2 images: a checkerboard of 0/255 and its complement.
struct Fixture {
  fs::path images = temp_dir() / "fx-images";
  fs::path labels = temp_dir() / "fx-labels";
  Fixture() {
    write_bytes(images, idx_images(2, 2, 2, {0, 255, 255, 0, 255, 0, 0, 255}));
    write_bytes(labels, idx_labels({3, 9}));
  }
};

TEST(Idx, HandcraftedFixture) {
  Fixture fx;
  const Dataset d = load_idx(fx.images, fx.labels);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.sample_shape, (std::array<std::size_t, 3>{1, 2, 2}));
  const std::vector<std::size_t> all = {0, 1};
  const auto t = d.images_tensor<float>(all);
  EXPECT_EQ(t.shape(), (Shape{2, 1, 2, 2}));
  EXPECT_EQ(std::vector<float>(t.data().begin(), t.data().end()),
            (std::vector<float>{0, 1, 1, 0, 1, 0, 0, 1}));
  EXPECT_EQ(d.labels, (std::vector<int>{3, 9}));
  EXPECT_EQ(d.split, Split::kTrain);
}

TEST(Idx, GzipDetectedByContent) {
  const auto dir = temp_dir();
  write_gz(dir / "gz-images", idx_images(2, 2, 2, {0, 255, 255, 0, 255, 0, 0, 255}));
  write_gz(dir / "gz-labels", idx_labels({3, 9}));
  Fixture fx;
  const Dataset a = load_idx(dir / "gz-images", dir / "gz-labels");
  const Dataset b = load_idx(fx.images, fx.labels);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Idx, LabelCountMismatchIsFormatError) {
  Fixture fx;
  const auto labels = temp_dir() / "three-labels";
  write_bytes(labels, idx_labels({1, 2, 3}));
  try {
    load_idx(fx.images, labels);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4);
  }
}

TEST(Idx, MalformedInputsAreFormatErrors) {
  Fixture fx;
  const auto dir = temp_dir();
  Bytes bad_magic = idx_images(2, 2, 2, Bytes(8, 0));
  bad_magic[3] = 0x02;
  write_bytes(dir / "bad-magic", bad_magic);
  EXPECT_THROW(load_idx(dir / "bad-magic", fx.labels), FormatError);

  write_bytes(dir / "short-pixels", idx_images(2, 2, 2, Bytes(7, 0)));
  try {
    load_idx(dir / "short-pixels", fx.labels);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 23);
  }

  write_bytes(dir / "short-header", Bytes{0, 0, 8, 3, 0, 0});
  EXPECT_THROW(load_idx(dir / "short-header", fx.labels), FormatError);

  write_bytes(dir / "zero-rows", idx_images(2, 0, 2, {}));
  EXPECT_THROW(load_idx(dir / "zero-rows", fx.labels), FormatError);

  write_bytes(dir / "label-range", idx_labels({3, 10}));
  EXPECT_THROW(load_idx(fx.images, dir / "label-range"), FormatError);

  EXPECT_THROW(load_idx(dir / "does-not-exist", fx.labels), FormatError);
}

TEST(Idx, WriteReloadRoundTrip) {
  Fixture fx;
  const Dataset d = load_idx(fx.images, fx.labels);
  const auto dir = temp_dir();
  write_idx(d, dir / "rt-images", dir / "rt-labels");
  const Dataset r = load_idx(dir / "rt-images", dir / "rt-labels");
  EXPECT_EQ(r.images, d.images);
  EXPECT_EQ(r.labels, d.labels);
  EXPECT_EQ(r.sample_shape, d.sample_shape);

  // Every byte value survives the 1/255 scaling and back.
  Bytes pixels(256);
  for (int i = 0; i < 256; ++i) pixels[i] = static_cast<std::uint8_t>(i);
  write_bytes(dir / "all-images", idx_images(4, 8, 8, pixels));
  write_bytes(dir / "all-labels", idx_labels({0, 1, 2, 3}));
  const Dataset full = load_idx(dir / "all-images", dir / "all-labels");
  write_idx(full, dir / "all2-images", dir / "all2-labels");
  std::ifstream in(dir / "all2-images", std::ios::binary);
  Bytes back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(back, idx_images(4, 8, 8, pixels));
}

TEST(Idx, BundledMnistSubset) {
  const fs::path root = fs::path(QKD_SOURCE_DIR) / "data" / "mnist5k";
  const Dataset train = load_idx(root / "train-images-idx3-ubyte.gz", root / "train-labels-idx1-ubyte.gz");
  const Dataset test =
      load_idx(root / "t10k-images-idx3-ubyte.gz", root / "t10k-labels-idx1-ubyte.gz", Split::kTest);
  EXPECT_EQ(train.size(), 4000u);
  EXPECT_EQ(test.size(), 1000u);
  EXPECT_EQ(train.sample_shape, (std::array<std::size_t, 3>{1, 28, 28}));
  std::vector<int> counts(10, 0);
  for (int l : train.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) EXPECT_EQ(c, 400);
  EXPECT_NO_THROW(train.validate());
  const auto [lo, hi] = std::minmax_element(train.images.begin(), train.images.end());
  EXPECT_EQ(*lo, 0.0f);
  EXPECT_EQ(*hi, 1.0f);
}

Bytes cifar_record(std::uint8_t label, std::uint8_t fill) {
  Bytes r(3073, fill);
  r[0] = label;
  return r;
}

TEST(Cifar, OneRecordFile) {
  const auto path = temp_dir() / "one.bin";
  write_bytes(path, cifar_record(7, 255));
  const Dataset d = load_cifar10_batch(path, Split::kTest);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.labels[0], 7);
  EXPECT_EQ(d.sample_shape, (std::array<std::size_t, 3>{3, 32, 32}));
  EXPECT_TRUE(std::all_of(d.images.begin(), d.images.end(), [](float v) { return v == 1.0f; }));
  EXPECT_EQ(d.split, Split::kTest);
}

TEST(Cifar, ChannelMajorLayout) {
  Bytes r(3073, 0);
  r[0] = 1;
  r[1 + 1024 + 5] = 255;  // G channel, pixel (0, 5)
  const auto path = temp_dir() / "layout.bin";
  write_bytes(path, r);
  const Dataset d = load_cifar10_batch(path, Split::kTrain);
  EXPECT_EQ(d.images[1024 + 5], 1.0f);
  EXPECT_EQ(std::count(d.images.begin(), d.images.end(), 1.0f), 1);
}

TEST(Cifar, WrongSizesAndMissingFilesAreFormatErrors) {
  const auto dir = temp_dir() / "cifar";
  fs::create_directories(dir);
  auto rec = cifar_record(1, 0);
  rec.pop_back();
  write_bytes(dir / "short.bin", rec);
  EXPECT_THROW(load_cifar10_batch(dir / "short.bin", Split::kTrain), FormatError);
  write_bytes(dir / "bad-label.bin", cifar_record(12, 0));
  EXPECT_THROW(load_cifar10_batch(dir / "bad-label.bin", Split::kTrain), FormatError);

  // A directory with a one-record test batch is not a valid CIFAR-10 directory.
  write_bytes(dir / "test_batch.bin", cifar_record(3, 0));
  EXPECT_THROW(load_cifar10_bin(dir, Split::kTest), FormatError);
  try {
    load_cifar10_bin(dir, Split::kTrain);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("data_batch_1.bin"), std::string::npos);
  }
}

// Multinomial logistic regression by full-batch gradient descent.
double linear_classifier_accuracy(const DatasetPair& data, int classes) {
  const std::size_t dim = data.train.sample_size();
  std::vector<double> w(dim * static_cast<std::size_t>(classes), 0.0), b(static_cast<std::size_t>(classes), 0.0);
  auto logits = [&](const float* x, std::vector<double>& z) {
    for (int c = 0; c < classes; ++c) {
      z[c] = b[c];
      for (std::size_t j = 0; j < dim; ++j) z[c] += w[j * classes + c] * x[j];
    }
  };
  std::vector<double> z(classes), gw(w.size()), gb(b.size());
  for (int it = 0; it < 200; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      const float* x = data.train.images.data() + i * dim;
      logits(x, z);
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0;
      for (double& v : z) s += (v = std::exp(v - m));
      for (int c = 0; c < classes; ++c) {
        const double g = z[c] / s - (data.train.labels[i] == c ? 1.0 : 0.0);
        gb[c] += g;
        for (std::size_t j = 0; j < dim; ++j) gw[j * classes + c] += g * x[j];
      }
    }
    const double lr = 0.5 / static_cast<double>(data.train.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * gw[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * gb[k];
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    logits(data.test.images.data() + i * dim, z);
    if (std::max_element(z.begin(), z.end()) - z.begin() == data.test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.test.size());
}

TEST(Synth, ShapesLabelsAndDeterminism) {
  SynthOptions o;
  o.classes = 4;
  o.dim = 6;
  const auto a = synth_clusters(o);
  const auto b = synth_clusters(o);
  EXPECT_EQ(a.train.images, b.train.images);
  EXPECT_EQ(a.test.labels, b.test.labels);
  EXPECT_EQ(a.train.size(), 400u);
  EXPECT_EQ(a.test.size(), 200u);
  EXPECT_EQ(a.train.split, Split::kTrain);
  EXPECT_EQ(a.test.split, Split::kTest);
  EXPECT_NE(a.train.images, a.test.images);
  o.seed = 2;
  EXPECT_NE(synth_clusters(o).train.images, a.train.images);
}

TEST(Synth, ZeroSeparationIsChance) {
  SynthOptions o;
  o.separation = 0.0;
  o.n_per_class_train = 100;
  o.n_per_class_test = 100;
  const double acc = linear_classifier_accuracy(synth_clusters(o), o.classes);
  EXPECT_NEAR(acc, 0.1, 0.05);
}

TEST(Synth, LargeSeparationIsLinearlySeparable) {
  SynthOptions o;
  o.separation = 8.0;
  const double acc = linear_classifier_accuracy(synth_clusters(o), o.classes);
  EXPECT_GT(acc, 0.99);
  EXPECT_GT(synth_bayes_accuracy(o.classes, o.separation), 0.999);
}

TEST(Synth, DegenerateParametersRejected) {
  SynthOptions o;
  o.classes = 1;
  EXPECT_THROW(synth_clusters(o), ConfigError);
  o = {};
  o.separation = -1.0;
  EXPECT_THROW(synth_clusters(o), ConfigError);
  o = {};
  o.dim = 3;
  EXPECT_THROW(synth_clusters(o), ConfigError);
  o = {};
  o.n_per_class_test = 0;
  EXPECT_THROW(synth_clusters(o), ConfigError);
}

TEST(Synth, BayesAccuracyClosedForms) {
  // Two classes: the decision is the sign of a N(s, 2) difference.
  for (double s : {0.0, 0.5, 1.0, 3.0}) {
    EXPECT_NEAR(synth_bayes_accuracy(2, s), 0.5 * std::erfc(-s / 2.0), 1e-9);
  }
  for (int c : {2, 3, 10}) EXPECT_NEAR(synth_bayes_accuracy(c, 0.0), 1.0 / c, 1e-9);
}

TEST(Synth, EmpiricalAccuracyTracksBayes) {
  SynthOptions o;
  o.classes = 5;
  o.dim = 5;
  o.separation = 2.0;
  o.n_per_class_train = 400;
  o.n_per_class_test = 400;
  const double acc = linear_classifier_accuracy(synth_clusters(o), o.classes);
  EXPECT_NEAR(acc, synth_bayes_accuracy(o.classes, o.separation), 0.04);
}

TEST(Batches, PartialFinalBatch) {
  const auto batches = make_batches(10, 3, 1, 0);
  std::vector<std::size_t> sizes;
  for (const auto& b : batches) sizes.push_back(b.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 3, 3, 1}));
  EXPECT_THROW(make_batches(10, 0, 1, 0), ConfigError);
  EXPECT_TRUE(make_batches(0, 4, 1, 0).empty());
}

TEST(Batches, DeterministicPerSeedAndEpoch) {
  EXPECT_EQ(make_batches(100, 7, 5, 2), make_batches(100, 7, 5, 2));
  EXPECT_NE(make_batches(100, 7, 5, 2), make_batches(100, 7, 5, 3));
  EXPECT_NE(make_batches(100, 7, 5, 2), make_batches(100, 7, 6, 2));
  const auto ordered = make_batches(5, 2, 5, 2, false);
  EXPECT_EQ(ordered, (std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}, {4}}));
}

TEST(Batches, EachExampleExactlyOncePerEpoch) {
  for (std::uint64_t epoch = 0; epoch < 5; ++epoch) {
    std::vector<int> seen(97, 0);
    for (const auto& b : make_batches(97, 8, 3, epoch)) {
      for (std::size_t i : b) ++seen[i];
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST(Normalizer, UsesTrainSplitOnly) {
  SynthOptions o;
  o.classes = 2;
  o.dim = 2;
  auto data = synth_clusters(o);
  EXPECT_THROW(Normalizer::fit(data.test), ConfigError);
  const Normalizer n = Normalizer::fit(data.train);
  n.apply(data.train);
  n.apply(data.test);
  const Normalizer again = Normalizer::fit(data.train);
  EXPECT_NEAR(again.mean()[0], 0.0, 1e-6);
  EXPECT_NEAR(again.stddev()[0], 1.0, 1e-5);
  EXPECT_EQ(data.test.split, Split::kTest);
}

TEST(Augment, FlipCropPreservesShapeAndIsSeeded) {
  std::vector<float> x(2 * 3 * 8 * 8);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i % 17);
  Tensor<float> a({2, 3, 8, 8}, x), b({2, 3, 8, 8}, x);
  Rng ra(4), rb(4);
  augment_flip_crop(a, ra);
  augment_flip_crop(b, rb);
  EXPECT_EQ(a.shape(), (Shape{2, 3, 8, 8}));
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));

  // Zero padding means no pixel is invented: every value comes from the image or is 0.
  for (float v : a.data()) EXPECT_TRUE(v == 0.0f || (v >= 0.0f && v <= 16.0f));

  Tensor<float> single({1, 1, 2, 2}, {1, 2, 3, 4});
  Rng r(0);
  augment_flip_crop(single, r, 0);
  const std::vector<float> got(single.data().begin(), single.data().end());
  EXPECT_TRUE(got == (std::vector<float>{1, 2, 3, 4}) || got == (std::vector<float>{2, 1, 4, 3}));
}

}  // namespace
}  // namespace qkd
