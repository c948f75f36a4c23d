// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_HARNESS_RESULTS_STORE_HPP_
#define QKD_HARNESS_RESULTS_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qkd/harness/trainer.hpp"

namespace qkd {

// Append-only newline-delimited JSON file of RunRecords keyed by
// (config hash, seed). The in-memory index is rebuilt from the file on open;
// a torn final line from an interrupted writer is ignored and overwritten.
// Appends are serialized; one store object per file per process.
class ResultsStore {
 public:
  enum class Mode { kReadWrite, kReadOnly };
  // Read-only stores never touch the file, so reports can run beside a sweep.
  explicit ResultsStore(std::filesystem::path path, Mode mode = Mode::kReadWrite);

  bool contains(const std::string& config_hash, std::uint64_t seed) const;
  // Latest record for the key.
  std::optional<RunRecord> find(const std::string& config_hash, std::uint64_t seed) const;
  void append(const RunRecord& record);

  // Latest record per key, in first-seen order.
  std::vector<RunRecord> records() const;
  std::size_t size() const;
  // Lines in the file, including superseded records.
  std::size_t line_count() const;
  const std::filesystem::path& path() const { return path_; }

  static std::vector<RunRecord> read_all(const std::filesystem::path& path);

 private:
  using Key = std::pair<std::string, std::uint64_t>;
  std::filesystem::path path_;
  Mode mode_;
  mutable std::mutex mu_;
  std::vector<RunRecord> lines_;
  std::map<Key, std::size_t> index_;  // key -> position in lines_
  std::vector<Key> order_;
  std::uintmax_t valid_bytes_ = 0;
};

}  // namespace qkd

#endif  // QKD_HARNESS_RESULTS_STORE_HPP_
