// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "io.hpp"
#include "qkd/core/error.hpp"
#include "qkd/data/dataset.hpp"

namespace qkd {

namespace {
constexpr std::size_t kRecord = 3073;
constexpr std::size_t kPixels = 3072;
constexpr std::size_t kRecordsPerFile = 10000;
}  // namespace

Dataset load_cifar10_batch(const std::filesystem::path& path, Split split) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.empty() || bytes.size() % kRecord != 0) {
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                          " is not a positive multiple of the 3073-byte record",
                      static_cast<long long>(bytes.size() - bytes.size() % kRecord));
  }
  Dataset d;
  d.split = split;
  d.num_classes = 10;
  d.sample_shape = {3, 32, 32};
  const std::size_t n = bytes.size() / kRecord;
  d.labels.resize(n);
  d.images.resize(n * kPixels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kRecord;
    if (rec[0] > 9) {
      throw FormatError(path.string() + ": label " + std::to_string(rec[0]) + " outside [0, 10)",
                        static_cast<long long>(i * kRecord));
    }
    d.labels[i] = rec[0];
    // Stored channel-major (1024 R, 1024 G, 1024 B), i.e. already CHW.
    for (std::size_t j = 0; j < kPixels; ++j) d.images[i * kPixels + j] = static_cast<float>(rec[1 + j]) / 255.0f;
  }
  return d;
}

Dataset load_cifar10_bin(const std::filesystem::path& dir, Split split) {
  std::vector<std::string> files;
  if (split == Split::kTrain) {
    for (int i = 1; i <= 5; ++i) files.push_back("data_batch_" + std::to_string(i) + ".bin");
  } else {
    files.push_back("test_batch.bin");
  }
  Dataset all;
  all.split = split;
  all.num_classes = 10;
  all.sample_shape = {3, 32, 32};
  for (const auto& name : files) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) throw FormatError("missing CIFAR-10 batch file " + path.string());
    const auto size = std::filesystem::file_size(path);
    if (size != kRecordsPerFile * kRecord) {
      throw FormatError(path.string() + ": size " + std::to_string(size) + " != 10000 * 3073 bytes",
                        static_cast<long long>(std::min<std::uintmax_t>(size, kRecordsPerFile * kRecord)));
    }
    Dataset part = load_cifar10_batch(path, split);
    all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
    all.images.insert(all.images.end(), part.images.begin(), part.images.end());
  }
  return all;
}

}  // namespace qkd
