#pragma once

#include <functional>
#include <span>
#include <vector>

#include "melada/autodiff/tape.hpp"
#include "melada/data/domain.hpp"
#include "melada/training/config.hpp"
#include "melada/training/episode.hpp"

namespace melada::train {

/// Feature extractor F(x; theta). The LSTM is the default; tests plug in
/// small closed-form extractors.
using ExtractorFn =
    std::function<ad::Var(ad::Tape&, const data::Batch&, std::span<const ad::Var>)>;

ExtractorFn lstm_extractor();

/// Parameters placed on one tape.
struct BoundModel {
  std::vector<ad::Var> theta;
  std::vector<ad::Var> phi;
  std::vector<ad::Var> omega;
  ad::Var tau;
};

/// L_C over the meta-train domains: features of every domain batch go through
/// the controller with inner map g(omega) and anchor tau.
ad::Var episode_controller_loss(ad::Tape& tape, std::span<const data::Batch> domains,
                                const BoundModel& model, bool adversarial,
                                const ExtractorFn& extractor);

/// theta' = theta - alpha * dL_C/dtheta. With `record`, theta' stays a
/// differentiable function of everything L_C depends on (omega and tau included).
std::vector<ad::Var> inner_update(ad::Tape& tape, std::span<const ad::Var> theta, ad::Var l_c,
                                  double alpha, bool record);

/// sum over samples of tanh(l(x, y; theta') - l(x, y; theta)) with per-sample
/// cross-entropy losses.
ad::Var meta_loss(ad::Tape& tape, const data::Batch& valid, std::span<const ad::Var> theta,
                  std::span<const ad::Var> theta_prime, std::span<const ad::Var> phi,
                  const ExtractorFn& extractor);

struct ControllerTerms {
  ad::Var l_c;
  ad::Var l_meta;
  /// l_c + lambda * l_meta
  ad::Var total;
};

/// Objective minimised by the (omega, tau) update.
ControllerTerms controller_objective(ad::Tape& tape, const EpisodeBatches& episode,
                                     const BoundModel& model, const TrainConfig& cfg,
                                     const ExtractorFn& extractor);

struct NetworkTerms {
  ad::Var l_c;
  ad::Var loss_train;
  ad::Var loss_valid;
  /// lambda * l_c + loss_train + loss_valid
  ad::Var total;
};

/// Objective minimised by the (theta, phi) update. loss_valid is evaluated at
/// the inner-updated extractor theta'.
NetworkTerms network_objective(ad::Tape& tape, const EpisodeBatches& episode,
                               const BoundModel& model, const TrainConfig& cfg,
                               const ExtractorFn& extractor);

}  // namespace melada::train
