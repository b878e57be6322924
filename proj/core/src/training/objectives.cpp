#include "melada/training/objectives.hpp"

#include <fmt/format.h>

#include "melada/error.hpp"
#include "melada/model/controller.hpp"
#include "melada/model/networks.hpp"

namespace melada::train {

ExtractorFn lstm_extractor() {
  return [](ad::Tape& tape, const data::Batch& batch, std::span<const ad::Var> theta) {
    return model::extract(tape, batch, theta);
  };
}

ad::Var episode_controller_loss(ad::Tape& tape, std::span<const data::Batch> domains,
                                const BoundModel& model, bool adversarial,
                                const ExtractorFn& extractor) {
  if (domains.empty()) throw InvalidArgument("controller loss: no meta-train domains");
  // One extractor pass over the stacked batch, then split rows per domain.
  const data::Batch stacked = data::concat_batches(domains);
  const ad::Var feats = extractor(tape, stacked, model.theta);
  std::vector<ad::Var> per_domain;
  per_domain.reserve(domains.size());
  std::size_t row = 0;
  for (const auto& d : domains) {
    if (d.size() == 0) throw InvalidArgument("controller loss: empty domain batch");
    per_domain.push_back(ad::slice_rows(feats, row, d.size()));
    row += d.size();
  }
  return model::controller_loss(per_domain, model::mlp_inner_map(model.omega), model.tau,
                                {.adversarial = adversarial});
}

std::vector<ad::Var> inner_update(ad::Tape& tape, std::span<const ad::Var> theta, ad::Var l_c,
                                  double alpha, bool record) {
  if (!(alpha >= 0.0)) {
    throw InvalidArgument(fmt::format("inner_update: alpha must be >= 0, got {}", alpha));
  }
  const auto grads = tape.gradients(l_c, theta, {.record = record});
  std::vector<ad::Var> out;
  out.reserve(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out.push_back(ad::sub(theta[i], ad::scale(grads[i], alpha)));
  }
  return out;
}

ad::Var meta_loss(ad::Tape& tape, const data::Batch& valid, std::span<const ad::Var> theta,
                  std::span<const ad::Var> theta_prime, std::span<const ad::Var> phi,
                  const ExtractorFn& extractor) {
  if (valid.size() == 0) throw InvalidArgument("meta_loss: empty validation batch");
  if (theta.size() != theta_prime.size()) {
    throw ShapeError("meta_loss: theta and theta' have different tensor counts");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!theta[i].value().same_shape(theta_prime[i].value())) {
      throw ShapeError(fmt::format("meta_loss: theta[{}] and theta'[{}] differ in shape", i, i));
    }
  }
  const ad::Var before =
      model::cross_entropy_per_sample(model::classify(extractor(tape, valid, theta), phi),
                                      valid.labels);
  const ad::Var after = model::cross_entropy_per_sample(
      model::classify(extractor(tape, valid, theta_prime), phi), valid.labels);
  return ad::sum_all(ad::tanh(ad::sub(after, before)));
}

ControllerTerms controller_objective(ad::Tape& tape, const EpisodeBatches& episode,
                                     const BoundModel& model, const TrainConfig& cfg,
                                     const ExtractorFn& extractor) {
  ControllerTerms t;
  t.l_c = episode_controller_loss(tape, episode.train, model, cfg.adversarial, extractor);
  const auto theta_prime =
      inner_update(tape, model.theta, t.l_c, cfg.inner_alpha, cfg.second_order);
  t.l_meta = meta_loss(tape, episode.valid, model.theta, theta_prime, model.phi, extractor);
  t.total = ad::add(t.l_c, ad::scale(t.l_meta, cfg.lambda));
  return t;
}

NetworkTerms network_objective(ad::Tape& tape, const EpisodeBatches& episode,
                               const BoundModel& model, const TrainConfig& cfg,
                               const ExtractorFn& extractor) {
  if (episode.train.empty()) throw InvalidArgument("network objective: no meta-train domains");
  NetworkTerms t;
  const data::Batch stacked = data::concat_batches(episode.train);
  const ad::Var feats = extractor(tape, stacked, model.theta);
  std::vector<ad::Var> per_domain;
  std::size_t row = 0;
  for (const auto& d : episode.train) {
    per_domain.push_back(ad::slice_rows(feats, row, d.size()));
    row += d.size();
  }
  t.l_c = model::controller_loss(per_domain, model::mlp_inner_map(model.omega), model.tau,
                                 {.adversarial = cfg.adversarial});
  t.loss_train = model::cross_entropy(model::classify(feats, model.phi), stacked.labels);
  const auto theta_prime =
      inner_update(tape, model.theta, t.l_c, cfg.inner_alpha, cfg.second_order);
  if (episode.valid.size() == 0) throw InvalidArgument("network objective: empty validation batch");
  t.loss_valid = model::cross_entropy(
      model::classify(extractor(tape, episode.valid, theta_prime), model.phi), episode.valid.labels);
  t.total = ad::add(ad::add(ad::scale(t.l_c, cfg.lambda), t.loss_train), t.loss_valid);
  return t;
}

}  // namespace melada::train
