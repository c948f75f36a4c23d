// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/harness/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include "qkd/core/error.hpp"

namespace qkd {

namespace fs = std::filesystem;
using nlohmann::json;

json SweepConfig::to_json() const {
  json lambdas = json::array();
  for (const auto& l : grid.lambdas) lambdas.push_back(l.to_json());
  return {{"base", base.to_json()},
          {"grid", {{"tau", grid.taus}, {"width", grid.widths}, {"lambda", lambdas}, {"include_hd", grid.include_hd}}}};
}

SweepConfig SweepConfig::from_json(const json& j) {
  require_known_keys(j, {"base", "grid"}, "sweep config");
  if (!j.contains("base") || !j.contains("grid")) throw ConfigError("sweep config needs \"base\" and \"grid\"");
  SweepConfig s;
  s.base = RunConfig::from_json(j.at("base"));
  const json& g = j.at("grid");
  require_known_keys(g, {"tau", "width", "lambda", "include_hd"}, "sweep grid");
  s.grid.taus = g.value("tau", std::vector<double>{});
  s.grid.widths = g.value("width", std::vector<double>{});
  for (const auto& l : g.value("lambda", json::array())) s.grid.lambdas.push_back(LambdaPolicy::from_json(l));
  s.grid.include_hd = g.value("include_hd", true);
  const bool any_kd = !s.grid.taus.empty() || !s.grid.widths.empty() || !s.grid.lambdas.empty();
  if (any_kd && (s.grid.taus.empty() || s.grid.widths.empty() || s.grid.lambdas.empty())) {
    throw ConfigError("sweep grid needs non-empty tau, width and lambda lists");
  }
  if (any_kd && !s.base.teacher) throw ConfigError("sweep grid needs a teacher template in base.teacher");
  if (!any_kd && !s.grid.include_hd) throw ConfigError("sweep grid is empty");
  for (double t : s.grid.taus) {
    if (!(t > 0.0)) throw ConfigError("sweep grid tau values must be positive");
  }
  if (any_kd && s.grid.widths.size() > 1 && s.base.teacher->checkpoint.find("{width}") == std::string::npos) {
    throw ConfigError("teacher checkpoint template needs \"{width}\" when sweeping several widths");
  }
  return s;
}

SweepConfig SweepConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sweep config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("sweep config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::vector<SweepCell> expand_grid(const SweepConfig& sweep) {
  std::vector<SweepCell> cells;
  auto push = [&](const RunConfig& c) {
    const std::string hash = c.cell_hash();
    for (std::uint64_t seed : c.seeds) cells.push_back({c, seed, hash});
  };
  if (sweep.grid.include_hd) {
    RunConfig hd = sweep.base;
    hd.teacher.reset();
    hd.distill = DistillConfig{};
    hd.distill.lambda = LambdaPolicy::constant(0.0);
    push(hd);
  }
  for (double width : sweep.grid.widths) {
    for (double tau : sweep.grid.taus) {
      for (const auto& lambda : sweep.grid.lambdas) {
        RunConfig c = sweep.base;
        c.teacher->width = width;
        c.distill.tau = tau;
        c.distill.lambda = lambda;
        push(c);
      }
    }
  }
  return cells;
}

std::vector<fs::path> missing_checkpoints(const std::vector<SweepCell>& cells, const fs::path& root) {
  std::set<fs::path> missing;
  auto check = [&](const std::string& pattern, std::uint64_t seed, double width) {
    fs::path p = expand_template(pattern, seed, width);
    if (!p.is_absolute()) p = root / p;
    if (!fs::exists(p)) missing.insert(p);
  };
  for (const auto& cell : cells) {
    const RunConfig& c = cell.config;
    if (!c.student_init.empty()) check(c.student_init, cell.seed, c.student.width_factor);
    if (c.teacher) {
      check(c.teacher->checkpoint, cell.seed, c.teacher->width);
      if (c.teacher->assistant) check(c.teacher->assistant->checkpoint, cell.seed, c.teacher->width);
    }
  }
  return {missing.begin(), missing.end()};
}

SweepSummary run_sweep(const SweepConfig& sweep, const DatasetPair& data, ResultsStore& store, const fs::path& root,
                       const SweepOptions& options) {
  const auto cells = expand_grid(sweep);
  if (const auto missing = missing_checkpoints(cells, root); !missing.empty()) {
    std::string msg = "teacher zoo is incomplete; missing " + std::to_string(missing.size()) + " checkpoint(s):";
    for (const auto& p : missing) msg += "\n  " + p.string();
    throw ConfigError(msg);
  }
  SweepSummary summary;
  summary.total = cells.size();
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!options.force && store.contains(cells[i].hash, cells[i].seed)) {
      ++summary.skipped;
    } else {
      todo.push_back(i);
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> budget_used{0};
  std::atomic<std::size_t> ran{0};
  std::atomic<std::size_t> failed{0};
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  const std::size_t budget = options.stop_after;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      if (budget != 0 && budget_used.fetch_add(1) >= budget) return;
      const SweepCell& cell = cells[todo[k]];
      try {
        RunRecord r = train_student_kd(cell.config, cell.seed, data, root);
        store.append(r);
        if (!r.ok()) failed.fetch_add(1);
        const std::size_t done = ran.fetch_add(1) + 1;
        if (options.progress) {
          std::lock_guard lock(err_mu);
          options.progress(r, done + summary.skipped, summary.total);
        }
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(options.workers, static_cast<int>(std::max<std::size_t>(1, todo.size()))));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  summary.ran = ran.load();
  summary.failed = failed.load();
  summary.interrupted = summary.ran + summary.skipped < summary.total;
  return summary;
}

}  // namespace qkd
