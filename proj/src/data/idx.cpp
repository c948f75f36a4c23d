// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "io.hpp"
#include "qkd/core/error.hpp"
#include "qkd/data/dataset.hpp"

namespace qkd {

namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw FormatError("cannot open data file " + path.string());
  }
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw FormatError("cannot open data file " + path.string());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 16);
  for (;;) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      gzclose(f);
      throw FormatError("corrupt compressed data in " + path.string(), static_cast<long long>(out.size()));
    }
    if (n == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  gzclose(f);
  return out;
}

}  // namespace detail

namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t offset, const std::string& file) {
  if (offset + 4 > b.size()) throw FormatError(file + ": truncated IDX header", static_cast<long long>(b.size()));
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split, int num_classes) {
  const std::string ifile = images_path.string();
  const std::string lfile = labels_path.string();
  const auto img = detail::read_file_bytes(images_path);
  const auto lab = detail::read_file_bytes(labels_path);

  const std::uint32_t imagic = be32(img, 0, ifile);
  if (imagic != kImagesMagic) {
    throw FormatError(ifile + ": bad IDX image magic " + hex32(imagic), 0);
  }
  const std::uint32_t n = be32(img, 4, ifile);
  const std::uint32_t rows = be32(img, 8, ifile);
  const std::uint32_t cols = be32(img, 12, ifile);
  if (rows == 0 || cols == 0) throw FormatError(ifile + ": zero image dimension", 8);
  const std::size_t expected = 16 + std::size_t{n} * rows * cols;
  if (img.size() != expected) {
    throw FormatError(ifile + ": expected " + std::to_string(expected) + " bytes for " + std::to_string(n) +
                          " images, file has " + std::to_string(img.size()),
                      static_cast<long long>(std::min(img.size(), expected)));
  }

  const std::uint32_t lmagic = be32(lab, 0, lfile);
  if (lmagic != kLabelsMagic) {
    throw FormatError(lfile + ": bad IDX label magic " + hex32(lmagic), 0);
  }
  const std::uint32_t nl = be32(lab, 4, lfile);
  if (nl != n) {
    throw FormatError(lfile + ": " + std::to_string(nl) + " labels for " + std::to_string(n) + " images", 4);
  }
  if (lab.size() != 8 + std::size_t{nl}) {
    throw FormatError(lfile + ": expected " + std::to_string(8 + std::size_t{nl}) + " bytes, file has " +
                          std::to_string(lab.size()),
                      static_cast<long long>(std::min(lab.size(), 8 + std::size_t{nl})));
  }

  Dataset d;
  d.split = split;
  d.num_classes = num_classes;
  d.sample_shape = {1, rows, cols};
  d.images.resize(std::size_t{n} * rows * cols);
  for (std::size_t i = 0; i < d.images.size(); ++i) d.images[i] = static_cast<float>(img[16 + i]) / 255.0f;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = lab[8 + i];
    if (label >= num_classes) {
      throw FormatError(lfile + ": label " + std::to_string(label) + " outside [0, " +
                            std::to_string(num_classes) + ")",
                        static_cast<long long>(8 + i));
    }
    d.labels[i] = label;
  }
  return d;
}

void write_idx(const Dataset& d, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  d.validate();
  if (d.sample_shape[0] != 1) throw ConfigError("write_idx: only single-channel images are supported");
  std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
  std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
  if (!img || !lab) throw ConfigError("write_idx: cannot open output files");
  put_be32(img, kImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(d.size()));
  put_be32(img, static_cast<std::uint32_t>(d.sample_shape[1]));
  put_be32(img, static_cast<std::uint32_t>(d.sample_shape[2]));
  for (float v : d.images) {
    const long b = std::lround(static_cast<double>(v) * 255.0);
    img.put(static_cast<char>(std::clamp(b, 0L, 255L)));
  }
  put_be32(lab, kLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(d.size()));
  for (int l : d.labels) lab.put(static_cast<char>(l));
}

}  // namespace qkd
