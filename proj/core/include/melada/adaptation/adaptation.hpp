#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "melada/data/domain.hpp"
#include "melada/model/params.hpp"
#include "melada/training/config.hpp"
#include "melada/training/trainer.hpp"

namespace melada::adapt {

struct AdaptConfig {
  std::uint32_t steps = 10;
  double adapt_lr = 1e-3;
  bool adversarial = true;
};

struct AdaptationStep {
  std::uint32_t step = 0;
  double l_c = 0.0;
  std::optional<double> accuracy;
};

struct AdaptationReport {
  /// steps.size() == configured steps + 1; entry 0 is before adaptation.
  std::vector<AdaptationStep> steps;
  std::optional<double> final_accuracy;
};

struct AdaptResult {
  model::ModelParams params;
  AdaptationReport report;
};

/// Plain gradient descent on the extractor only, minimising the single-domain
/// controller loss on the target data; classifier, controller and anchor stay
/// fixed. Target labels are never used by the update: the data's own labels
/// are ignored, and `report_labels`, when given, only feed the reported accuracy.
AdaptResult self_adapt(const model::ModelParams& params, const data::Batch& target,
                       const AdaptConfig& cfg,
                       std::optional<std::span<const std::uint8_t>> report_labels = std::nullopt);

/// Single-domain L_C of `target` under `params`, no gradients.
double target_controller_loss(const model::ModelParams& params, const data::Batch& target,
                              bool adversarial = true);

/// Argmax class per sample; ties go to the lowest index.
std::vector<std::uint8_t> predict(const model::ModelParams& params, const data::Batch& samples);

struct FoldResult {
  std::uint32_t subject_id = 0;
  /// Accuracy after self-adaptation.
  double accuracy = 0.0;
  /// Accuracy of the trained model before self-adaptation.
  double accuracy_before = 0.0;
  /// Accuracy of the supervised reference model, when requested.
  std::optional<double> baseline_accuracy;
  AdaptationReport report;
  train::PretrainResult pretrain;
  std::vector<train::HistoryRow> history;
};

struct LosoReport {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  /// Population standard deviation over folds.
  double std_deviation = 0.0;
  std::optional<double> mean_baseline_accuracy;
  double mean_accuracy_before = 0.0;
};

struct LosoConfig {
  model::ModelDims dims;
  train::TrainConfig train;
  AdaptConfig adapt;
  /// Number of folds trained concurrently.
  std::uint32_t jobs = 1;
  /// Also train the supervised reference arm in every fold.
  bool baseline = false;
};

using FoldObserver = std::function<void(const FoldResult&)>;

/// Trains, adapts and scores one fold with `target_index` held out.
FoldResult run_fold(std::span<const data::Domain> dataset, std::size_t target_index,
                    const LosoConfig& cfg);

/// Leave-one-subject-out over every domain. Folds finish in any order; the
/// report lists them by ascending subject id.
LosoReport loso_evaluate(std::span<const data::Domain> dataset, const LosoConfig& cfg,
                         const FoldObserver& on_fold = {});

/// Mean and population standard deviation, filled from the folds.
void summarise(LosoReport& report);

/// One adaptation run: step, l_c, accuracy (empty when no labels were given).
void write_adaptation_report_csv(const AdaptationReport& report, const std::filesystem::path& path);

void write_loso_csv(const LosoReport& report, const std::filesystem::path& path);
/// Fold-averaged adaptation curve: step, l_c, accuracy.
void write_adaptation_curve_csv(const LosoReport& report, const std::filesystem::path& path);

}  // namespace melada::adapt
