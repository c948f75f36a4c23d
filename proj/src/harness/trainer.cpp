// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/harness/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "qkd/core/error.hpp"
#include "qkd/core/ops.hpp"
#include "qkd/core/optim.hpp"
#include "qkd/distill/soft_labels.hpp"

namespace qkd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kAugmentStream = 3;

json epoch_to_json(const EpochRecord& e) {
  return {{"epoch", e.epoch},           {"train_loss", e.train_loss}, {"train_accuracy", e.train_accuracy},
          {"test_loss", e.test_loss},   {"test_accuracy", e.test_accuracy}, {"lambda", e.lambda},
          {"lr", e.lr}};
}

EpochRecord epoch_from_json(const json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<int>();
  e.train_loss = j.at("train_loss").get<double>();
  e.train_accuracy = j.at("train_accuracy").get<double>();
  e.test_loss = j.at("test_loss").get<double>();
  e.test_accuracy = j.at("test_accuracy").get<double>();
  e.lambda = j.at("lambda").get<double>();
  e.lr = j.at("lr").get<double>();
  return e;
}

fs::path resolve(const fs::path& root, const std::string& pattern, std::uint64_t seed, double width) {
  const fs::path p = expand_template(pattern, seed, width);
  return p.is_absolute() ? p : root / p;
}

Checkpoint load_required(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " checkpoint not found: " + path.string());
  return load_checkpoint(path);
}

void check_compatible(const ModelSpec& spec, const Dataset& data, std::string_view what) {
  if (spec.input_shape != data.sample_shape || spec.num_classes != data.num_classes) {
    throw ConfigError(std::string(what) + " expects input " + std::to_string(spec.input_shape[0]) + "x" +
                      std::to_string(spec.input_shape[1]) + "x" + std::to_string(spec.input_shape[2]) + " with " +
                      std::to_string(spec.num_classes) + " classes; dataset has " +
                      std::to_string(data.sample_shape[0]) + "x" + std::to_string(data.sample_shape[1]) + "x" +
                      std::to_string(data.sample_shape[2]) + " with " + std::to_string(data.num_classes));
  }
}

std::vector<std::size_t> iota_range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

json run_labels(const RunConfig& c, std::string_view kind) {
  json l = {{"kind", kind},
            {"student_family", std::string(to_string(c.student.family))},
            {"student_width", c.student.width_factor},
            {"bits", c.quantizer ? c.quantizer->bits : 32}};
  if (kind == "kd") {
    l["width"] = c.teacher->width;
    l["tau"] = c.distill.tau;
    l["lambda"] = c.distill.lambda.label();
    l["teacher_mode"] = c.teacher->mode.label();
    l["assistant"] = static_cast<bool>(c.teacher->assistant);
  }
  return l;
}

}  // namespace

bool RunRecord::same_results(const RunRecord& o) const {
  return config_hash == o.config_hash && seed == o.seed && status == o.status && error == o.error &&
         labels == o.labels && epochs == o.epochs && final_train_accuracy == o.final_train_accuracy &&
         final_test_accuracy == o.final_test_accuracy && soft_labels == o.soft_labels;
}

json RunRecord::to_json() const {
  json j = {{"config_hash", config_hash},
            {"seed", seed},
            {"status", status},
            {"labels", labels},
            {"final_train_accuracy", final_train_accuracy},
            {"final_test_accuracy", final_test_accuracy},
            {"wall_time_s", wall_time_s}};
  if (!error.empty()) j["error"] = error;
  json e = json::array();
  for (const auto& ep : epochs) e.push_back(epoch_to_json(ep));
  j["epochs"] = std::move(e);
  if (soft_labels) {
    j["soft_labels"] = {{"tau", soft_labels->tau},
                        {"mean_entropy", soft_labels->mean_entropy},
                        {"mean_peak", soft_labels->mean_peak}};
  }
  return j;
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.error = j.value("error", std::string());
  r.labels = j.value("labels", json::object());
  r.final_train_accuracy = j.at("final_train_accuracy").get<double>();
  r.final_test_accuracy = j.at("final_test_accuracy").get<double>();
  r.wall_time_s = j.value("wall_time_s", 0.0);
  for (const auto& e : j.value("epochs", json::array())) r.epochs.push_back(epoch_from_json(e));
  if (j.contains("soft_labels")) {
    const auto& s = j.at("soft_labels");
    r.soft_labels = SoftLabelSnapshot{s.at("tau").get<double>(), s.at("mean_entropy").get<double>(),
                                      s.at("mean_peak").get<double>()};
  }
  return r;
}

Evaluation evaluate(Model<float>& model, const Dataset& data, std::size_t batch_size) {
  NoGradGuard no_grad;
  Evaluation ev;
  if (data.size() == 0) return ev;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  const auto classes = static_cast<std::size_t>(model.spec().num_classes);
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const auto idx = iota_range(start, std::min(data.size(), start + batch_size));
    const auto labels = data.labels_at(idx);
    const auto logits = model.forward(data.images_tensor<float>(idx), false);
    const auto pred = argmax_rows(logits);
    for (std::size_t i = 0; i < idx.size(); ++i) correct += pred[i] == labels[i];
    loss_sum += static_cast<double>(cross_entropy(one_hot<float>(labels, classes), softmax(logits)).item()) *
                static_cast<double>(idx.size());
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  ev.loss = loss_sum / static_cast<double>(data.size());
  return ev;
}

std::vector<float> teacher_logits(const TeacherModel<float>& teacher, const Dataset& data, std::size_t batch_size) {
  std::vector<float> out;
  out.reserve(data.size() * static_cast<std::size_t>(teacher.model().spec().num_classes));
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const auto idx = iota_range(start, std::min(data.size(), start + batch_size));
    const auto z = teacher.forward(data.images_tensor<float>(idx));
    out.insert(out.end(), z.data().begin(), z.data().end());
  }
  return out;
}

TeacherModel<float> load_teacher(const RunConfig& config, std::uint64_t seed, const DatasetPair& data,
                                 const fs::path& root) {
  if (!config.teacher) throw ConfigError("no teacher configured");
  const TeacherConfig& t = *config.teacher;
  const fs::path path = resolve(root, t.checkpoint, seed, t.width);
  const Checkpoint ck = load_required(path, "teacher");
  check_compatible(ck.spec, data.train, "teacher " + path.string());
  if (!t.assistant) return TeacherModel<float>::from_checkpoint(ck, t.mode);

  // Distill the large teacher into the assistant, then teach with the assistant.
  const AssistantConfig& a = *t.assistant;
  RunConfig inner;
  inner.dataset = config.dataset;
  inner.student_init = a.checkpoint;
  inner.distill = a.distill;
  inner.optimizer = a.optimizer;
  inner.teacher = TeacherConfig{t.checkpoint, t.width, TeacherMode::full_precision(), nullptr};
  inner.seeds = {seed};
  const Checkpoint init = load_required(resolve(root, a.checkpoint, seed, t.width), "assistant");
  inner.student = init.spec;
  TrainResult ta = train_run(inner, seed, data, root);
  if (!ta.record.ok()) throw ConfigError("assistant training failed: " + ta.record.error);
  return TeacherModel<float>(std::move(ta.model), t.mode);
}

TrainResult train_run(const RunConfig& config, std::uint64_t seed, const DatasetPair& data, const fs::path& root,
                      const TrainHooks& hooks) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset& train = data.train;
  check_compatible(config.student, train, "student");
  if (train.size() == 0) throw ConfigError("empty training split");

  Model<float> student = Model<float>::build(config.student, mix_seed(seed, kInitStream));
  if (!config.student_init.empty()) {
    const fs::path init_path = resolve(root, config.student_init, seed, config.student.width_factor);
    student.load_state(load_required(init_path, "student"));
  }

  std::optional<TeacherModel<float>> teacher;
  std::vector<float> cached;
  const bool augment = config.dataset.augmentation_enabled();
  const auto classes = static_cast<std::size_t>(config.student.num_classes);
  RunRecord record;
  record.config_hash = config.cell_hash();
  record.seed = seed;
  record.labels = run_labels(config, config.teacher ? (config.is_hard_label_only() ? "hd" : "kd") : "hd");
  if (config.teacher) {
    teacher.emplace(load_teacher(config, seed, data, root));
    if (static_cast<std::size_t>(teacher->model().spec().num_classes) != classes) {
      throw ConfigError("teacher and student disagree on the class count");
    }
    if (!augment) {
      cached = teacher_logits(*teacher, train);
      const Tensor<float> all({train.size(), classes}, cached);
      const auto s = soft_label_stats(all, config.distill.tau);
      record.soft_labels = SoftLabelSnapshot{config.distill.tau, s.mean_entropy, s.mean_peak};
    }
  }

  // Weight layers trained through their quantized image keep a shadow copy.
  std::vector<ShadowPair<float>> shadows;
  std::vector<Tensor<float>> trained;
  const int last_layer = student.weight_layer_count() - 1;
  for (auto& p : student.parameters()) {
    if (!is_trainable(p.kind)) continue;
    const bool exempt = config.quantizer && config.quantizer->exempt_first_last &&
                        (p.weight_layer == 0 || p.weight_layer == last_layer);
    if (config.quantizer && p.kind == ParamKind::kWeight && !exempt) {
      Tensor<float> full(p.value.shape(), std::vector<float>(p.value.data().begin(), p.value.data().end()), true);
      shadows.emplace_back(full, p.value);
      trained.push_back(full);
    } else {
      trained.push_back(p.value);
    }
  }

  const OptimizerConfig& oc = config.optimizer;
  Sgd<float> opt(trained, {.lr = oc.lr, .momentum = oc.momentum, .weight_decay = oc.weight_decay});
  const std::size_t per_epoch = (train.size() + oc.batch_size - 1) / oc.batch_size;
  const auto total_steps = static_cast<std::int64_t>(per_epoch) * oc.epochs;
  LambdaPolicy policy = config.distill.lambda;
  if (policy.kind == LambdaPolicy::Kind::kGslr && policy.horizon_steps == 0) policy.horizon_steps = total_steps;
  Rng aug_rng(mix_seed(seed, kAugmentStream));
  const std::uint64_t batch_seed = mix_seed(seed, kBatchStream);

  auto requantize_all = [&] {
    for (auto& s : shadows) s.requantize(*config.quantizer);
  };
  auto finish = [&](TrainResult&& r) {
    r.record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(r);
  };

  auto fail = [&](std::string what, int epoch, std::int64_t at, const EpochRecord& er) {
    record.status = "failed";
    record.error = std::move(what) + " at epoch " + std::to_string(epoch) + ", step " + std::to_string(at);
    record.epochs.push_back(er);
    return finish(TrainResult{std::move(student), std::move(record)});
  };

  std::int64_t step = 0;
  for (int epoch = 0; epoch < oc.epochs; ++epoch) {
    EpochRecord er;
    er.epoch = epoch;
    if (!std::all_of(trained.begin(), trained.end(), [](const Tensor<float>& t) { return all_finite(t.data()); })) {
      return fail("non-finite weights", epoch, step, er);
    }
    for (auto& s : shadows) s.refresh_delta(*config.quantizer);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& batch : make_batches(train.size(), oc.batch_size, batch_seed, static_cast<std::uint64_t>(epoch))) {
      requantize_all();
      Tensor<float> x = train.images_tensor<float>(batch);
      if (augment) augment_flip_crop(x, aug_rng);
      const auto y = train.labels_at(batch);
      const Tensor<float> logits = student.forward(x, true);
      if (!all_finite(logits.data())) return fail("non-finite logits", epoch, step, er);
      Tensor<float> loss;
      er.lambda = 0.0;
      if (teacher) {
        Tensor<float> zt;
        if (augment) {
          zt = teacher->forward(x);
        } else {
          std::vector<float> g(batch.size() * classes);
          for (std::size_t i = 0; i < batch.size(); ++i) {
            std::copy_n(cached.begin() + static_cast<std::ptrdiff_t>(batch[i] * classes), classes,
                        g.begin() + static_cast<std::ptrdiff_t>(i * classes));
          }
          zt = Tensor<float>({batch.size(), classes}, std::move(g));
        }
        er.lambda = policy.at(step);
        loss = kd_loss(logits, zt, y, config.distill.tau, er.lambda, config.distill.tau_squared_scaling);
      } else {
        loss = cross_entropy(one_hot<float>(y, classes), softmax(logits));
      }
      const double lv = loss.item();
      if (!std::isfinite(lv)) return fail("non-finite loss", epoch, step, er);
      opt.zero_grad();
      loss.backward();
      for (auto& s : shadows) s.apply_ste();
      er.lr = oc.lr_at(step, total_steps);
      opt.set_lr(er.lr);
      opt.step();
      if (hooks.on_step) hooks.on_step(step, lv);
      loss_sum += lv * static_cast<double>(batch.size());
      const auto pred = argmax_rows(logits);
      for (std::size_t i = 0; i < batch.size(); ++i) correct += pred[i] == y[i];
      ++step;
    }
    // Evaluation always sees Q(w_full) of the updated shadow weights.
    requantize_all();
    if (hooks.on_eval) {
      hooks.on_eval(EvalProbe{student, shadows, config.quantizer ? &*config.quantizer : nullptr, epoch});
    }
    const Evaluation test = evaluate(student, data.test);
    er.train_loss = loss_sum / static_cast<double>(train.size());
    er.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    er.test_loss = test.loss;
    er.test_accuracy = test.accuracy;
    record.epochs.push_back(er);
  }
  if (hooks.on_eval) {
    hooks.on_eval(EvalProbe{student, shadows, config.quantizer ? &*config.quantizer : nullptr, oc.epochs});
  }
  record.final_train_accuracy = evaluate(student, train).accuracy;
  record.final_test_accuracy = record.epochs.back().test_accuracy;
  return finish(TrainResult{std::move(student), std::move(record)});
}

Checkpoint train_teacher(const RunConfig& config, std::uint64_t seed, const DatasetPair& data, RunRecord* record) {
  if (config.quantizer) throw ConfigError("teacher training runs in full precision; remove \"quantizer\"");
  if (config.teacher) throw ConfigError("teacher training uses hard labels only; remove \"teacher\"");
  TrainResult r = train_run(config, seed, data, fs::current_path());
  r.record.labels["kind"] = "teacher";
  r.record.labels["width"] = config.student.width_factor;
  if (!r.record.ok()) throw Error("teacher training failed: " + r.record.error);
  CheckpointMeta meta;
  meta.seed = seed;
  meta.epochs = config.optimizer.epochs;
  meta.train_accuracy = r.record.final_train_accuracy;
  meta.test_accuracy = r.record.final_test_accuracy;
  meta.extra = {{"config_hash", r.record.config_hash}};
  Checkpoint ck = make_checkpoint(r.model, meta);
  if (record != nullptr) *record = std::move(r.record);
  return ck;
}

RunRecord train_student_kd(const RunConfig& config, std::uint64_t seed, const DatasetPair& data,
                           const fs::path& root, const TrainHooks& hooks) {
  if (config.student_init.empty()) {
    throw ConfigError("student fine-tuning starts from a pretrained checkpoint; set \"student_init\"");
  }
  return train_run(config, seed, data, root, hooks).record;
}

}  // namespace qkd
