#include "melada/adaptation/adaptation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "melada/data/rng.hpp"
#include "melada/error.hpp"
#include "melada/model/controller.hpp"
#include "melada/model/networks.hpp"

namespace melada::adapt {

namespace {

void check_target(const model::ModelParams& params, const data::Batch& target) {
  if (target.size() == 0) throw InvalidArgument("self_adapt: empty target data");
  if (target.features != params.dims.input_dim || target.steps != params.dims.seq_len) {
    throw ShapeError(fmt::format("target batch is {}x{} per sample, model expects {}x{}",
                                 target.steps, target.features, params.dims.seq_len,
                                 params.dims.input_dim));
  }
}

/// Single-domain L_C with theta as leaves (when `trainable`).
ad::Var target_loss(ad::Tape& tape, const model::ModelParams& params, const data::Batch& target,
                    bool adversarial, bool trainable, std::vector<ad::Var>& theta) {
  theta = model::bind(tape, params.extractor, trainable);
  const auto omega = model::bind(tape, params.controller, false);
  const auto tau = model::bind(tape, params.anchor, false).at(0);
  const std::array<ad::Var, 1> feats{model::extract(tape, target, theta)};
  return model::controller_loss(feats, model::mlp_inner_map(omega), tau,
                                {.adversarial = adversarial});
}

double score(const model::ModelParams& params, const data::Batch& target,
             std::span<const std::uint8_t> labels) {
  return model::accuracy(predict(params, target), labels);
}

}  // namespace

double target_controller_loss(const model::ModelParams& params, const data::Batch& target,
                              bool adversarial) {
  check_target(params, target);
  ad::Tape tape;
  std::vector<ad::Var> theta;
  return target_loss(tape, params, target, adversarial, false, theta).value().item();
}

std::vector<std::uint8_t> predict(const model::ModelParams& params, const data::Batch& samples) {
  if (samples.features != params.dims.input_dim || samples.steps != params.dims.seq_len) {
    throw ShapeError(fmt::format("predict: samples are {}x{}, model expects {}x{}", samples.steps,
                                 samples.features, params.dims.seq_len, params.dims.input_dim));
  }
  return model::argmax_rows(train::predict_logits(params, samples));
}

AdaptResult self_adapt(const model::ModelParams& params, const data::Batch& target,
                       const AdaptConfig& cfg,
                       std::optional<std::span<const std::uint8_t>> report_labels) {
  check_target(params, target);
  if (!(cfg.adapt_lr >= 0.0)) {
    throw InvalidArgument(fmt::format("self_adapt: adapt_lr must be >= 0, got {}", cfg.adapt_lr));
  }
  if (report_labels && report_labels->size() != target.size()) {
    throw InvalidArgument("self_adapt: report labels do not match the target size");
  }
  // The update path only ever sees unlabeled data.
  data::Batch unlabeled;
  unlabeled.steps = target.steps;
  unlabeled.features = target.features;
  unlabeled.data = target.data;
  unlabeled.labels.assign(target.size(), 0);

  AdaptResult result{params, {}};
  auto record = [&](std::uint32_t step, double l_c) {
    AdaptationStep s{step, l_c, std::nullopt};
    if (report_labels) s.accuracy = score(result.params, unlabeled, *report_labels);
    result.report.steps.push_back(s);
  };

  for (std::uint32_t step = 0;; ++step) {
    ad::Tape tape;
    std::vector<ad::Var> theta;
    const auto loss = target_loss(tape, result.params, unlabeled, cfg.adversarial, true, theta);
    record(step, loss.value().item());
    if (step == cfg.steps) break;
    tape.backward(loss);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const auto& g = tape.node(theta[i].id()).grad;
      if (!g) continue;
      auto dst = result.params.extractor.tensors[i].data();
      const auto src = g->data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= cfg.adapt_lr * src[k];
    }
  }
  if (report_labels) result.report.final_accuracy = result.report.steps.back().accuracy;
  return result;
}

FoldResult run_fold(std::span<const data::Domain> dataset, std::size_t target_index,
                    const LosoConfig& cfg) {
  if (target_index >= dataset.size()) {
    throw InvalidArgument(fmt::format("run_fold: target index {} out of range", target_index));
  }
  const data::Domain& target = dataset[target_index];
  std::vector<data::Domain> sources;
  sources.reserve(dataset.size() - 1);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (i != target_index) sources.push_back(dataset[i]);
  }
  for (const auto& s : sources) {
    if (s.subject_id == target.subject_id) {
      throw InvalidArgument(fmt::format(
          "fold isolation violated: subject {} appears among its own sources", target.subject_id));
    }
  }

  train::TrainConfig tcfg = cfg.train;
  tcfg.seed = data::derive_seed(cfg.train.seed, target.subject_id);
  const auto dims = train::dims_for(sources, cfg.dims);

  FoldResult fold;
  fold.subject_id = target.subject_id;
  auto session = train::start_session(sources, dims, tcfg);
  std::optional<train::TrainResult> reference;
  if (cfg.baseline) reference = train::continue_supervised(session, tcfg);
  auto trained = train::continue_meta(std::move(session), sources, tcfg);
  fold.pretrain = trained.pretrain;
  fold.history = std::move(trained.history);

  const auto batch = data::whole_domain(target);
  auto adapted = self_adapt(trained.params, batch, cfg.adapt, std::span(target.labels));
  fold.report = std::move(adapted.report);
  fold.accuracy_before = *fold.report.steps.front().accuracy;
  fold.accuracy = *fold.report.final_accuracy;

  if (reference) fold.baseline_accuracy = score(reference->params, batch, target.labels);
  return fold;
}

void summarise(LosoReport& report) {
  const auto n = static_cast<double>(report.folds.size());
  if (report.folds.empty()) throw InvalidArgument("LOSO report has no folds");
  double sum = 0.0;
  double before = 0.0;
  for (const auto& f : report.folds) {
    sum += f.accuracy;
    before += f.accuracy_before;
  }
  report.mean_accuracy = sum / n;
  report.mean_accuracy_before = before / n;
  double ss = 0.0;
  for (const auto& f : report.folds) ss += (f.accuracy - report.mean_accuracy) * (f.accuracy - report.mean_accuracy);
  report.std_deviation = std::sqrt(ss / n);
  if (std::all_of(report.folds.begin(), report.folds.end(),
                  [](const auto& f) { return f.baseline_accuracy.has_value(); })) {
    double b = 0.0;
    for (const auto& f : report.folds) b += *f.baseline_accuracy;
    report.mean_baseline_accuracy = b / n;
  } else {
    report.mean_baseline_accuracy.reset();
  }
}

LosoReport loso_evaluate(std::span<const data::Domain> dataset, const LosoConfig& cfg,
                         const FoldObserver& on_fold) {
  if (dataset.size() < 2) {
    throw InvalidArgument(
        fmt::format("LOSO needs at least 2 subjects, got {}", dataset.size()));
  }
  data::validate_dataset(dataset);
  cfg.train.validate();

  const std::size_t n = dataset.size();
  std::vector<std::optional<FoldResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::mutex observer_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = run_fold(dataset, i, cfg);
        if (on_fold) {
          std::lock_guard lock(observer_mutex);
          on_fold(*results[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, n);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  LosoReport report;
  report.folds.reserve(n);
  for (auto& r : results) report.folds.push_back(std::move(*r));
  std::sort(report.folds.begin(), report.folds.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
  summarise(report);
  return report;
}

void write_adaptation_report_csv(const AdaptationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out << "step,l_c,accuracy\n";
  for (const auto& s : report.steps) {
    out << fmt::format("{},{},{}\n", s.step, s.l_c,
                       s.accuracy ? fmt::format("{}", *s.accuracy) : std::string());
  }
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

void write_loso_csv(const LosoReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out << "subject,accuracy\n";
  for (const auto& f : report.folds) out << fmt::format("{},{}\n", f.subject_id, f.accuracy);
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

void write_adaptation_curve_csv(const LosoReport& report, const std::filesystem::path& path) {
  if (report.folds.empty()) throw InvalidArgument("adaptation curve: no folds");
  const std::size_t steps = report.folds.front().report.steps.size();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out << "step,l_c,accuracy\n";
  const auto n = static_cast<double>(report.folds.size());
  for (std::size_t s = 0; s < steps; ++s) {
    double l_c = 0.0;
    double acc = 0.0;
    for (const auto& f : report.folds) {
      if (f.report.steps.size() != steps) {
        throw InvalidArgument("adaptation curve: folds have different step counts");
      }
      l_c += f.report.steps[s].l_c;
      acc += f.report.steps[s].accuracy.value_or(0.0);
    }
    out << fmt::format("{},{},{}\n", s, l_c / n, acc / n);
  }
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

}  // namespace melada::adapt
