// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include "qkd/core/error.hpp"
#include "qkd/core/hash.hpp"

namespace qkd {

namespace fs = std::filesystem;
using nlohmann::json;

void require_known_keys(const json& j, std::initializer_list<std::string_view> keys, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw ConfigError("unknown key \"" + key + "\" in " + std::string(where));
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string expand_template(std::string_view pattern, std::uint64_t seed, double width) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern.substr(i, 6) == "{seed}") {
      out += std::to_string(seed);
      i += 6;
    } else if (pattern.substr(i, 7) == "{width}") {
      out += format_number(width);
      i += 7;
    } else {
      out += pattern[i++];
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::uint64_t parse_u64(const std::string& s, std::string_view text) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw UsageError("bad seed list \"" + std::string(text) + "\"");
  }
  return std::stoull(s);
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split_commas(text)) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(parse_u64(part, text));
    } else {
      const std::uint64_t a = parse_u64(part.substr(0, dash), text), b = parse_u64(part.substr(dash + 1), text);
      if (b < a) throw UsageError("bad seed range \"" + part + "\"");
      for (std::uint64_t v = a; v <= b; ++v) seeds.push_back(v);
    }
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) throw UsageError("duplicate seed " + std::to_string(seeds[i]));
    }
  }
  return seeds;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& part : split_commas(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("bad number list \"" + std::string(text) + "\"");
    }
  }
  return out;
}

json quantizer_to_json(const QuantizerSpec& s) {
  return {{"bits", s.bits},
          {"delta_policy", std::string(to_string(s.delta_policy))},
          {"exempt_first_last", s.exempt_first_last}};
}

QuantizerSpec quantizer_from_json(const json& j) {
  require_known_keys(j, {"bits", "delta_policy", "exempt_first_last"}, "quantizer");
  if (!j.contains("delta_policy")) {
    throw ConfigError("quantizer needs an explicit \"delta_policy\" (\"stddev\" or \"l2\")");
  }
  QuantizerSpec s;
  s.bits = j.value("bits", 2);
  s.delta_policy = parse_delta_policy(j.at("delta_policy").get<std::string>());
  s.exempt_first_last = j.value("exempt_first_last", false);
  s.validate();
  return s;
}

json DatasetConfig::to_json() const {
  json j = {{"kind", kind}, {"normalize", normalize}, {"train_limit", train_limit}, {"test_limit", test_limit}};
  if (augment) j["augment"] = *augment;
  if (kind == "synthetic") {
    j["synthetic"] = {{"classes", synthetic.classes},
                      {"n_per_class_train", synthetic.n_per_class_train},
                      {"n_per_class_test", synthetic.n_per_class_test},
                      {"dim", synthetic.dim},
                      {"separation", synthetic.separation},
                      {"seed", synthetic.seed}};
  } else {
    j["root"] = root;
    if (kind == "idx") {
      j["train_images"] = train_images;
      j["train_labels"] = train_labels;
      j["test_images"] = test_images;
      j["test_labels"] = test_labels;
    }
  }
  return j;
}

DatasetConfig DatasetConfig::from_json(const json& j) {
  require_known_keys(j,
                     {"kind", "root", "train_images", "train_labels", "test_images", "test_labels", "train_limit",
                      "test_limit", "normalize", "augment", "synthetic"},
                     "dataset");
  DatasetConfig d;
  d.kind = j.value("kind", d.kind);
  if (d.kind != "idx" && d.kind != "cifar10" && d.kind != "synthetic") {
    throw ConfigError("dataset kind must be idx, cifar10 or synthetic, got " + d.kind);
  }
  d.root = j.value("root", d.root);
  d.train_images = j.value("train_images", d.train_images);
  d.train_labels = j.value("train_labels", d.train_labels);
  d.test_images = j.value("test_images", d.test_images);
  d.test_labels = j.value("test_labels", d.test_labels);
  d.train_limit = j.value("train_limit", d.train_limit);
  d.test_limit = j.value("test_limit", d.test_limit);
  d.normalize = j.value("normalize", d.normalize);
  if (j.contains("augment")) d.augment = j.at("augment").get<bool>();
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    require_known_keys(s, {"classes", "n_per_class_train", "n_per_class_test", "dim", "separation", "seed"},
                       "dataset.synthetic");
    d.synthetic.classes = s.value("classes", d.synthetic.classes);
    d.synthetic.n_per_class_train = s.value("n_per_class_train", d.synthetic.n_per_class_train);
    d.synthetic.n_per_class_test = s.value("n_per_class_test", d.synthetic.n_per_class_test);
    d.synthetic.dim = s.value("dim", d.synthetic.dim);
    d.synthetic.separation = s.value("separation", d.synthetic.separation);
    d.synthetic.seed = s.value("seed", d.synthetic.seed);
  }
  return d;
}

double OptimizerConfig::lr_at(std::int64_t step, std::int64_t total_steps) const {
  if (schedule == "constant" || total_steps <= 0) return lr;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

json OptimizerConfig::to_json() const {
  return {{"lr", lr},
          {"momentum", momentum},
          {"weight_decay", weight_decay},
          {"schedule", schedule},
          {"batch_size", batch_size},
          {"epochs", epochs}};
}

OptimizerConfig OptimizerConfig::from_json(const json& j, int default_epochs) {
  require_known_keys(j, {"lr", "momentum", "weight_decay", "schedule", "batch_size", "epochs"}, "optimizer");
  OptimizerConfig o;
  o.epochs = default_epochs;
  o.lr = j.value("lr", o.lr);
  o.momentum = j.value("momentum", o.momentum);
  o.weight_decay = j.value("weight_decay", o.weight_decay);
  o.schedule = j.value("schedule", o.schedule);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.epochs = j.value("epochs", o.epochs);
  if (o.schedule != "cosine" && o.schedule != "constant") {
    throw ConfigError("optimizer.schedule must be cosine or constant");
  }
  if (!(o.lr > 0.0)) throw ConfigError("optimizer.lr must be positive");
  if (o.momentum < 0.0 || o.momentum >= 1.0) throw ConfigError("optimizer.momentum must lie in [0, 1)");
  if (o.weight_decay < 0.0) throw ConfigError("optimizer.weight_decay must be non-negative");
  if (o.batch_size == 0) throw ConfigError("optimizer.batch_size must be >= 1");
  if (o.epochs < 1) throw ConfigError("optimizer.epochs must be >= 1");
  return o;
}

json AssistantConfig::to_json() const {
  return {{"checkpoint", checkpoint}, {"distill", distill.to_json()}, {"optimizer", optimizer.to_json()}};
}

AssistantConfig AssistantConfig::from_json(const json& j) {
  require_known_keys(j, {"checkpoint", "distill", "optimizer"}, "teacher.assistant");
  for (const char* required : {"checkpoint", "distill"}) {
    if (!j.contains(required)) {
      throw ConfigError(std::string("teacher.assistant needs \"") + required + "\"");
    }
  }
  AssistantConfig a;
  a.checkpoint = j.at("checkpoint").get<std::string>();
  a.distill = DistillConfig::from_json(j.at("distill"));
  a.optimizer = OptimizerConfig::from_json(j.value("optimizer", json::object()), 20);
  return a;
}

json TeacherConfig::to_json() const {
  json j = {{"checkpoint", checkpoint}, {"width", width}};
  const json m = mode.to_json();
  for (const auto& [k, v] : m.items()) j[k] = v;
  if (assistant) j["assistant"] = assistant->to_json();
  return j;
}

TeacherConfig TeacherConfig::from_json(const json& j) {
  require_known_keys(j, {"checkpoint", "width", "mode", "bits", "delta_policy", "assistant"}, "teacher");
  if (!j.contains("checkpoint")) throw ConfigError("teacher needs \"checkpoint\"");
  TeacherConfig t;
  t.checkpoint = j.at("checkpoint").get<std::string>();
  t.width = j.value("width", 1.0);
  const std::string mode = j.value("mode", "float");
  if (mode == "quantized") {
    if (!j.contains("bits") || !j.contains("delta_policy")) {
      throw ConfigError("quantized teacher needs \"bits\" and \"delta_policy\"");
    }
    t.mode = TeacherMode::quantized_bits(j.at("bits").get<int>(),
                                         parse_delta_policy(j.at("delta_policy").get<std::string>()));
  } else if (mode != "float") {
    throw ConfigError("teacher.mode must be float or quantized");
  } else if (j.contains("bits") || j.contains("delta_policy")) {
    throw ConfigError("teacher bits/delta_policy require mode \"quantized\"");
  }
  if (j.contains("assistant")) {
    t.assistant = std::make_shared<AssistantConfig>(AssistantConfig::from_json(j.at("assistant")));
  }
  return t;
}

bool RunConfig::is_hard_label_only() const {
  return !teacher ||
         (distill.lambda.kind == LambdaPolicy::Kind::kConstant && distill.lambda.lambda == 0.0);
}

void RunConfig::validate() const {
  student.validate();
  if (quantizer) quantizer->validate();
  distill.validate();
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (teacher && teacher->checkpoint.empty()) throw ConfigError("teacher.checkpoint must not be empty");
}

json RunConfig::to_json() const {
  json j = {{"dataset", dataset.to_json()},
            {"student", student.to_json()},
            {"distill", distill.to_json()},
            {"optimizer", optimizer.to_json()},
            {"student_init", student_init},
            {"seeds", seeds}};
  j["quantizer"] = quantizer ? quantizer_to_json(*quantizer) : json(nullptr);
  j["teacher"] = teacher ? teacher->to_json() : json(nullptr);
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  require_known_keys(j, {"dataset", "student", "quantizer", "distill", "teacher", "student_init", "optimizer", "seeds"},
                     "run config");
  RunConfig c;
  if (j.contains("dataset")) c.dataset = DatasetConfig::from_json(j.at("dataset"));
  if (j.contains("student")) c.student = ModelSpec::from_json(j.at("student"));
  if (j.contains("quantizer") && !j.at("quantizer").is_null()) c.quantizer = quantizer_from_json(j.at("quantizer"));
  if (j.contains("teacher") && !j.at("teacher").is_null()) c.teacher = TeacherConfig::from_json(j.at("teacher"));
  if (j.contains("distill")) {
    c.distill = DistillConfig::from_json(j.at("distill"));
  } else if (!c.teacher) {
    c.distill.lambda = LambdaPolicy::constant(0.0);
  } else {
    throw ConfigError("a teacher is configured but \"distill\" is missing");
  }
  if (!c.teacher && !(c.distill.lambda.kind == LambdaPolicy::Kind::kConstant && c.distill.lambda.lambda == 0.0)) {
    throw ConfigError("distill.lambda is non-zero but no teacher is configured");
  }
  c.student_init = j.value("student_init", std::string());
  c.optimizer = OptimizerConfig::from_json(j.value("optimizer", json::object()), 20);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::string RunConfig::canonical() const {
  json j = to_json();
  j.erase("seeds");
  if (is_hard_label_only()) {
    j.erase("teacher");
    j.erase("distill");
  }
  return j.dump();
}

std::string RunConfig::cell_hash() const { return hex64(fnv1a64(canonical())); }

fs::path resolve_dataset_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("QKD_DATASET_ROOT"); env != nullptr && *env != '\0') return env;
  return fs::current_path();
}

DatasetPair load_dataset(const DatasetConfig& c, const fs::path& root) {
  DatasetPair pair;
  if (c.kind == "synthetic") {
    pair = synth_clusters(c.synthetic);
  } else {
    const fs::path base = c.root.empty() ? root : (fs::path(c.root).is_absolute() ? fs::path(c.root) : root / c.root);
    if (c.kind == "idx") {
      pair.train = load_idx(base / c.train_images, base / c.train_labels, Split::kTrain);
      pair.test = load_idx(base / c.test_images, base / c.test_labels, Split::kTest);
    } else {
      pair.train = load_cifar10_bin(base, Split::kTrain);
      pair.test = load_cifar10_bin(base, Split::kTest);
    }
  }
  pair.train = pair.train.head(c.train_limit);
  pair.test = pair.test.head(c.test_limit);
  if (c.normalize) {
    const Normalizer n = Normalizer::fit(pair.train);
    n.apply(pair.train);
    n.apply(pair.test);
  }
  return pair;
}

}  // namespace qkd
