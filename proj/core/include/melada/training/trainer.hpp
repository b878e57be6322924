#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "melada/autodiff/adam.hpp"
#include "melada/data/domain.hpp"
#include "melada/model/params.hpp"
#include "melada/training/config.hpp"
#include "melada/training/episode.hpp"
#include "melada/training/objectives.hpp"

namespace melada::train {

/// Parameters plus one Adam state per parameter group.
struct TrainState {
  model::ModelParams params;
  ad::AdamState theta;
  ad::AdamState phi;
  ad::AdamState omega;
  ad::AdamState tau;

  explicit TrainState(model::ModelParams p) : params(std::move(p)) {}
};

struct NetworkStepReport {
  double l_c = 0.0;
  double loss_train = 0.0;
  double loss_valid = 0.0;
  double total = 0.0;
};

/// One Adam update of (theta, phi) on lambda*L_C + loss_train + loss_valid(theta').
/// Marks the controller frozen once `iteration` exceeds cfg.freeze_threshold.
NetworkStepReport melada_step(TrainState& state, const EpisodeBatches& episode,
                              const TrainConfig& cfg, std::uint32_t iteration,
                              const ExtractorFn& extractor = lstm_extractor());

struct ControllerStepReport {
  double l_c = 0.0;
  double l_meta = 0.0;
  double total = 0.0;
  bool omega_updated = false;
};

/// One Adam update of (omega, tau) on L_C + lambda*L_meta. A frozen
/// controller keeps omega (and its Adam state) untouched; tau still moves.
ControllerStepReport controller_step(TrainState& state, const EpisodeBatches& episode,
                                     const TrainConfig& cfg,
                                     const ExtractorFn& extractor = lstm_extractor());

enum class PretrainStatus { GateReached, CapReached };

struct PretrainResult {
  PretrainStatus status = PretrainStatus::CapReached;
  /// Iteration at which training stopped (1-based; the gate is checked before
  /// that iteration's update).
  std::uint32_t stopped_at = 0;
  std::uint32_t updates = 0;
  double accuracy = 0.0;
};

/// Supervised cross-entropy training of (theta, phi) until training accuracy
/// exceeds cfg.pretrain_acc_gate, checked at iteration 1 and every
/// cfg.pretrain_eval_every iterations, or cfg.pretrain_max_iters updates.
PretrainResult pretrain(TrainState& state, std::span<const data::Domain> sources,
                        const TrainConfig& cfg, EpisodeSampler& sampler,
                        const ExtractorFn& extractor = lstm_extractor());

/// Logits without gradients, evaluated in chunks.
ad::Tensor predict_logits(const model::ModelParams& params, const data::Batch& batch,
                          const ExtractorFn& extractor = lstm_extractor());

/// Sample-level accuracy over whole domains.
double domain_accuracy(const model::ModelParams& params, std::span<const data::Domain> domains,
                       const ExtractorFn& extractor = lstm_extractor());

struct HistoryRow {
  std::uint32_t iteration = 0;
  double l_c = 0.0;
  double loss_train = 0.0;
  double loss_valid = 0.0;
  double l_meta = 0.0;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct TrainResult {
  model::ModelParams params;
  PretrainResult pretrain;
  std::vector<HistoryRow> history;
};

using IterationObserver = std::function<void(const HistoryRow&, const model::ModelParams&)>;

/// Model dims with input_dim, seq_len and classes taken from the data.
model::ModelDims dims_for(std::span<const data::Domain> sources, model::ModelDims base);

/// Initialised and pretrained model together with the sampler position, so
/// that several arms can continue from the same starting point.
struct Session {
  TrainState state;
  EpisodeSampler sampler;
  PretrainResult pretrain;
};

/// Initialises parameters from cfg.seed and runs pretraining. `sources` must
/// outlive the session.
Session start_session(std::span<const data::Domain> sources, const model::ModelDims& dims,
                      const TrainConfig& cfg);

/// cfg.max_iterations episodes of partition -> melada_step -> controller_step.
TrainResult continue_meta(Session session, std::span<const data::Domain> sources,
                          const TrainConfig& cfg, const IterationObserver& observer = {});

/// cfg.max_iterations plain supervised steps on all sources.
TrainResult continue_supervised(Session session, const TrainConfig& cfg);

/// Pretraining followed by cfg.max_iterations episodes of
/// partition -> melada_step -> controller_step.
TrainResult train_loop(std::span<const data::Domain> sources, const model::ModelDims& dims,
                       const TrainConfig& cfg, const IterationObserver& observer = {});

/// Reference arm: the same pretraining, then cfg.max_iterations plain
/// supervised steps on all sources. No controller, no meta-learning.
TrainResult train_baseline(std::span<const data::Domain> sources, const model::ModelDims& dims,
                           const TrainConfig& cfg);

void write_history_csv(std::span<const HistoryRow> history, const std::filesystem::path& path);

}  // namespace melada::train
