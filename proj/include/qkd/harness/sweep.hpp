// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_HARNESS_SWEEP_HPP_
#define QKD_HARNESS_SWEEP_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkd/harness/config.hpp"
#include "qkd/harness/results_store.hpp"

namespace qkd {

struct SweepGrid {
  std::vector<double> taus;
  std::vector<double> widths;  // teacher width factors
  std::vector<LambdaPolicy> lambdas;
  bool include_hd = true;  // one hard-label cell per seed
};

// A base run config whose teacher checkpoint is a "{width}"/"{seed}" template,
// crossed with the grid.
struct SweepConfig {
  RunConfig base;
  SweepGrid grid;

  nlohmann::json to_json() const;
  static SweepConfig from_json(const nlohmann::json& j);
  static SweepConfig load(const std::filesystem::path& path);
};

struct SweepCell {
  RunConfig config;
  std::uint64_t seed = 0;
  std::string hash;
};

// Hard-label cells first, then width, tau, lambda, seed in grid order.
std::vector<SweepCell> expand_grid(const SweepConfig& sweep);

// Every teacher and student checkpoint the cells reference that does not exist.
std::vector<std::filesystem::path> missing_checkpoints(const std::vector<SweepCell>& cells,
                                                       const std::filesystem::path& artifact_root);

struct SweepOptions {
  int workers = 1;
  bool force = false;
  // Stop after this many newly run cells (0: no limit); mimics an interruption.
  std::size_t stop_after = 0;
  std::function<void(const RunRecord&, std::size_t done, std::size_t total)> progress;
};

struct SweepSummary {
  std::size_t total = 0;
  std::size_t ran = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  bool interrupted = false;
};

// Runs every cell not yet in the store. Throws ConfigError listing missing
// checkpoints before any cell starts.
SweepSummary run_sweep(const SweepConfig& sweep, const DatasetPair& data, ResultsStore& store,
                       const std::filesystem::path& artifact_root, const SweepOptions& options = {});

}  // namespace qkd

#endif  // QKD_HARNESS_SWEEP_HPP_
