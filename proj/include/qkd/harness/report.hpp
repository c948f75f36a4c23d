// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_HARNESS_REPORT_HPP_
#define QKD_HARNESS_REPORT_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkd/harness/trainer.hpp"

namespace qkd {

// Seed replicates of one config hash.
struct CellSummary {
  std::string config_hash;
  nlohmann::json labels;
  std::size_t n = 0;       // successful runs
  std::size_t failed = 0;  // runs that aborted
  double mean = 0.0;       // test accuracy
  double stddev = 0.0;     // sample standard deviation, 0 for n < 2
  double mean_train = 0.0;

  std::string kind() const;
  double width() const;
  double tau() const;
  std::string lambda() const;
};

// Sorted hard-label cells first, then by (width, tau, lambda).
std::vector<CellSummary> summarize(const std::vector<RunRecord>& records);

// The hard-label cell trained with the same student and bit width, if any.
const CellSummary* matching_baseline(const std::vector<CellSummary>& cells, const CellSummary& cell);

void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& out);
void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out);
// Long format, constant-lambda cells: width, tau, lambda, mean, stddev, n, hd_mean.
void write_fig3_csv(const std::vector<CellSummary>& cells, std::ostream& out);
// Constant lambda versus the GSLR schedule per (width, tau), with the HD mean.
void write_fig4_csv(const std::vector<CellSummary>& cells, std::ostream& out);
void write_markdown_table(const std::vector<CellSummary>& cells, std::ostream& out);

struct ChartSeries {
  std::string name;
  std::vector<std::optional<double>> ys;  // one per x position
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;
  std::vector<ChartSeries> series;
  std::optional<double> baseline;  // drawn as a horizontal rule
  std::string baseline_label = "HD";
};

std::string render_svg(const LineChart& chart);

struct ReportFormats {
  bool csv = true;
  bool svg = true;
  bool markdown = true;
};

// Writes the selected artifacts into out_dir and returns their paths.
// Empty input is a UsageError.
std::vector<std::filesystem::path> write_report(const std::vector<RunRecord>& records,
                                                const std::filesystem::path& out_dir,
                                                const ReportFormats& formats = {});

}  // namespace qkd

#endif  // QKD_HARNESS_REPORT_HPP_
