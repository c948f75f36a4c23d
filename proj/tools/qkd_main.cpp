// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

// qkd: train teachers, fine-tune quantized students with distillation, run
// sweeps and write reports.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qkd/core/error.hpp"
#include "qkd/core/hash.hpp"
#include "qkd/core/ops.hpp"
#include "qkd/distill/soft_labels.hpp"
#include "qkd/harness/config.hpp"
#include "qkd/harness/report.hpp"
#include "qkd/harness/results_store.hpp"
#include "qkd/harness/sweep.hpp"
#include "qkd/harness/trainer.hpp"
#include "qkd/models/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace qkd;

namespace {

struct Common {
  std::string config;
  std::string seed_list;
  std::string out_dir;
  std::string dataset_root;
  std::string artifact_root = ".";
  int workers = 1;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
  auto* opt = cmd->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed-list", c.seed_list, "seeds, e.g. 1,2,3 or 1-5 (overrides the config)");
  cmd->add_option("--dataset-root", c.dataset_root, "dataset root (default: $QKD_DATASET_ROOT, then .)");
}

std::vector<std::uint64_t> seeds_for(const Common& c, const RunConfig& cfg) {
  return c.seed_list.empty() ? cfg.seeds : parse_seed_list(c.seed_list);
}

void print_record(const RunRecord& r, std::size_t done, std::size_t total) {
  const auto& l = r.labels;
  std::printf("[%zu/%zu] %s seed=%llu kind=%s", done, total, r.config_hash.c_str(),
              static_cast<unsigned long long>(r.seed), l.value("kind", "").c_str());
  if (l.contains("width")) std::printf(" width=%g", l.at("width").get<double>());
  if (l.contains("tau")) std::printf(" tau=%g", l.at("tau").get<double>());
  if (l.contains("lambda")) std::printf(" lambda=%s", l.at("lambda").get<std::string>().c_str());
  if (r.ok()) {
    std::printf(" test=%.4f train=%.4f (%.1fs)\n", r.final_test_accuracy, r.final_train_accuracy, r.wall_time_s);
  } else {
    std::printf(" FAILED: %s\n", r.error.c_str());
  }
  std::fflush(stdout);
}

int cmd_train_teacher(const Common& c, const std::string& role, const std::string& widths, const std::string& name) {
  RunConfig cfg = RunConfig::load(c.config);
  const auto data = load_dataset(cfg.dataset, resolve_dataset_root(c.dataset_root));
  const fs::path out = c.out_dir.empty() ? fs::path("zoo") : fs::path(c.out_dir);
  fs::create_directories(out);
  std::vector<double> width_list = widths.empty() ? std::vector<double>{cfg.student.width_factor} : parse_number_list(widths);
  const std::string pattern =
      !name.empty() ? name : (role == "student" ? "student_fp_w{width}_s{seed}.qkdc" : "teacher_w{width}_s{seed}.qkdc");
  for (double w : width_list) {
    RunConfig run = cfg;
    run.student.width_factor = w;
    for (std::uint64_t seed : seeds_for(c, cfg)) {
      const fs::path path = out / expand_template(pattern, seed, w);
      if (fs::exists(path) && !c.force) {
        std::printf("exists, skipping: %s\n", path.string().c_str());
        continue;
      }
      RunRecord rec;
      const Checkpoint ck = train_teacher(run, seed, data, &rec);
      save_checkpoint(ck, path);
      std::printf("%s: width=%g seed=%llu params=%zu train=%.4f test=%.4f (%.1fs)\n", path.string().c_str(), w,
                  static_cast<unsigned long long>(seed), param_count(run.student), ck.meta.train_accuracy,
                  ck.meta.test_accuracy, rec.wall_time_s);
      std::fflush(stdout);
    }
  }
  return 0;
}

int cmd_train_student(const Common& c) {
  RunConfig cfg = RunConfig::load(c.config);
  cfg.seeds = seeds_for(c, cfg);
  const auto data = load_dataset(cfg.dataset, resolve_dataset_root(c.dataset_root));
  const fs::path out = c.out_dir.empty() ? fs::path("results") : fs::path(c.out_dir);
  ResultsStore store(out / "results.ndjson");
  SweepConfig single;
  single.base = cfg;
  single.grid.include_hd = cfg.is_hard_label_only();
  if (!cfg.is_hard_label_only()) {
    single.grid.taus = {cfg.distill.tau};
    single.grid.widths = {cfg.teacher->width};
    single.grid.lambdas = {cfg.distill.lambda};
  }
  SweepOptions opts;
  opts.workers = c.workers;
  opts.force = c.force;
  opts.progress = print_record;
  const auto s = run_sweep(single, data, store, c.artifact_root, opts);
  std::printf("ran %zu, skipped %zu, failed %zu; results in %s\n", s.ran, s.skipped, s.failed,
              store.path().string().c_str());
  return s.failed == 0 ? 0 : 1;
}

int cmd_sweep(const Common& c, std::size_t stop_after) {
  SweepConfig sweep = SweepConfig::load(c.config);
  if (!c.seed_list.empty()) sweep.base.seeds = parse_seed_list(c.seed_list);
  const auto data = load_dataset(sweep.base.dataset, resolve_dataset_root(c.dataset_root));
  const fs::path out = c.out_dir.empty() ? fs::path("results") : fs::path(c.out_dir);
  ResultsStore store(out / "results.ndjson");
  SweepOptions opts;
  opts.workers = c.workers;
  opts.force = c.force;
  opts.stop_after = stop_after;
  opts.progress = print_record;
  const auto s = run_sweep(sweep, data, store, c.artifact_root, opts);
  std::printf("%zu cells: ran %zu, skipped %zu, failed %zu%s; results in %s\n", s.total, s.ran, s.skipped, s.failed,
              s.interrupted ? " (stopped early)" : "", store.path().string().c_str());
  return 0;
}

int cmd_report(const std::string& results, const std::string& out_dir, const std::string& formats) {
  ReportFormats f{false, false, false};
  for (const auto& part : CLI::detail::split(formats, ',')) {
    if (part == "csv") f.csv = true;
    else if (part == "svg") f.svg = true;
    else if (part == "md" || part == "markdown") f.markdown = true;
    else throw UsageError("unknown report format \"" + part + "\" (csv, svg, md)");
  }
  const auto records = ResultsStore::read_all(results);
  for (const auto& p : write_report(records, out_dir, f)) std::printf("%s\n", p.string().c_str());
  return 0;
}

int cmd_analyze(const Common& c, const std::vector<std::string>& checkpoints, const std::string& taus, int label,
                const std::string& split, std::size_t limit) {
  RunConfig cfg = RunConfig::load(c.config);
  auto data = load_dataset(cfg.dataset, resolve_dataset_root(c.dataset_root));
  Dataset& d = split == "test" ? data.test : data.train;
  d = d.head(limit);
  const auto tau_list = parse_number_list(taus);
  const fs::path out = c.out_dir.empty() ? fs::path("softlabels") : fs::path(c.out_dir);
  fs::create_directories(out);
  for (const auto& path : checkpoints) {
    const TeacherModel<float> teacher(model_from_checkpoint<float>(load_checkpoint(path)), TeacherMode::full_precision());
    const auto logits = teacher_logits(teacher, d);
    const Tensor<float> z({d.size(), static_cast<std::size_t>(teacher.model().spec().num_classes)}, logits);
    std::vector<SoftLabelStats> stats;
    const std::string stem = fs::path(path).stem().string();
    for (double tau : tau_list) {
      stats.push_back(soft_label_stats(z, tau, d.labels, label));
      std::ofstream hist(out / (stem + "_label" + std::to_string(label) + "_tau" + format_number(tau) + ".csv"));
      write_histogram_csv(stats.back(), hist);
    }
    std::ofstream summary(out / (stem + "_summary.csv"));
    write_summary_csv(stats, summary);
    std::printf("%s (%s split, %zu examples)\n", path.c_str(), split.c_str(), d.size());
    for (const auto& s : stats) {
      std::printf("  tau=%-5g mean_entropy=%.4f mean_peak=%.4f\n", s.tau, s.mean_entropy, s.mean_peak);
    }
  }
  return 0;
}

int cmd_inspect(const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  nlohmann::json j = {{"path", path},
                      {"format_version", Checkpoint::kVersion},
                      {"spec_hash", hex64(ck.spec_hash())},
                      {"spec", ck.spec.to_json()},
                      {"meta", ck.meta.to_json()},
                      {"trainable_parameters", ck.trainable_count()}};
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : ck.tensors) {
    tensors.push_back({{"name", t.name}, {"kind", std::string(to_string(t.kind))}, {"shape", t.shape}});
  }
  j["tensors"] = std::move(tensors);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized-student knowledge distillation toolkit"};
  app.require_subcommand(1);
  Common c;

  auto* teacher = app.add_subcommand("train-teacher", "train full-precision networks on hard labels");
  add_common(teacher, c);
  std::string role = "teacher", widths, name;
  teacher->add_option("--role", role, "teacher or student (names the output file)")
      ->check(CLI::IsMember({"teacher", "student"}));
  teacher->add_option("--widths", widths, "width factors to train, e.g. 1,2,4");
  teacher->add_option("--name", name, "output file template with {width} and {seed}");
  teacher->add_option("--out-dir", c.out_dir, "checkpoint directory (default zoo)");
  teacher->add_flag("--force-rerun", c.force, "overwrite existing checkpoints");

  auto* student = app.add_subcommand("train-student", "quantization-aware fine-tuning with distillation");
  add_common(student, c);
  student->add_option("--out-dir", c.out_dir, "results directory (default results)");
  student->add_option("--artifact-root", c.artifact_root, "base for relative checkpoint paths");
  student->add_option("--workers", c.workers, "parallel runs")->check(CLI::PositiveNumber);
  student->add_flag("--force-rerun", c.force, "rerun seeds already in the results store");

  auto* sweep = app.add_subcommand("sweep", "run a (tau x width x lambda) grid with seed replication");
  add_common(sweep, c);
  std::size_t stop_after = 0;
  sweep->add_option("--out-dir", c.out_dir, "results directory (default results)");
  sweep->add_option("--artifact-root", c.artifact_root, "base for relative checkpoint paths");
  sweep->add_option("--workers", c.workers, "parallel cells")->check(CLI::PositiveNumber);
  sweep->add_flag("--force-rerun", c.force, "rerun cells already in the results store");
  sweep->add_option("--stop-after", stop_after, "stop after this many new cells");

  auto* report = app.add_subcommand("report", "write CSV, SVG and markdown summaries");
  std::string results = "results/results.ndjson", report_dir = "report", formats = "csv,svg,md";
  report->add_option("--results", results, "results store")->capture_default_str();
  report->add_option("--out-dir", report_dir, "output directory")->capture_default_str();
  report->add_option("--format", formats, "comma list of csv, svg, md")->capture_default_str();

  auto* analyze = app.add_subcommand("analyze-softlabels", "entropy and peak of teacher soft labels per tau");
  add_common(analyze, c);
  std::vector<std::string> checkpoints;
  std::string taus = "1,2,5,10", split = "train";
  int label = 6;
  std::size_t limit = 0;
  analyze->add_option("--checkpoint", checkpoints, "teacher checkpoint(s)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--tau-list", taus, "temperatures")->capture_default_str();
  analyze->add_option("--label", label, "class whose distributions are exported")->capture_default_str();
  analyze->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  analyze->add_option("--limit", limit, "use only the first N examples");
  analyze->add_option("--out-dir", c.out_dir, "output directory (default softlabels)");

  auto* inspect = app.add_subcommand("inspect-checkpoint", "print a checkpoint's header and tensor directory");
  std::string inspect_path;
  inspect->add_option("path", inspect_path, "checkpoint file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*teacher) return cmd_train_teacher(c, role, widths, name);
    if (*student) return cmd_train_student(c);
    if (*sweep) return cmd_sweep(c, stop_after);
    if (*report) return cmd_report(results, report_dir, formats);
    if (*analyze) return cmd_analyze(c, checkpoints, taus, label, split, limit);
    if (*inspect) return cmd_inspect(inspect_path);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
