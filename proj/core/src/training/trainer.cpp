#include "melada/training/trainer.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "melada/error.hpp"
#include "melada/model/networks.hpp"

namespace melada::train {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSamplerStream = 2;
constexpr std::uint64_t kPartitionStream = 3;
constexpr std::size_t kEvalChunk = 512;

std::vector<ad::Tensor> leaf_grads(const ad::Tape& tape, std::span<const ad::Var> vars) {
  std::vector<ad::Tensor> out;
  out.reserve(vars.size());
  for (const auto& v : vars) {
    const auto& g = tape.node(v.id()).grad;
    out.push_back(g ? *g : ad::Tensor::zeros(v.value().shape()));
  }
  return out;
}

void apply(model::ParamGroup& group, ad::AdamState& state, std::span<const ad::Tensor> grads,
           const ad::AdamHyper& hyper) {
  ad::adam_step(group.tensors, grads, state, hyper);
}

void supervised_update(TrainState& state, const data::Batch& batch, const ad::AdamHyper& hyper,
                       const ExtractorFn& extractor) {
  ad::Tape tape;
  const auto theta = model::bind(tape, state.params.extractor, true);
  const auto phi = model::bind(tape, state.params.classifier, true);
  const auto loss = model::cross_entropy(model::classify(extractor(tape, batch, theta), phi),
                                         batch.labels);
  tape.backward(loss);
  apply(state.params.extractor, state.theta, leaf_grads(tape, theta), hyper);
  apply(state.params.classifier, state.phi, leaf_grads(tape, phi), hyper);
}

data::Batch all_sources_batch(EpisodeSampler& sampler) {
  const auto parts = sampler.sample_all();
  return data::concat_batches(parts);
}

}  // namespace

NetworkStepReport melada_step(TrainState& state, const EpisodeBatches& episode,
                              const TrainConfig& cfg, std::uint32_t iteration,
                              const ExtractorFn& extractor) {
  if (iteration < 1) throw InvalidArgument("melada_step: iteration must be >= 1");
  if (iteration > cfg.freeze_threshold) state.params.controller_frozen = true;

  ad::Tape tape;
  BoundModel m;
  m.theta = model::bind(tape, state.params.extractor, true);
  m.phi = model::bind(tape, state.params.classifier, true);
  m.omega = model::bind(tape, state.params.controller, false);
  m.tau = model::bind(tape, state.params.anchor, false).at(0);
  const auto terms = network_objective(tape, episode, m, cfg, extractor);
  tape.backward(terms.total);

  const auto hyper = cfg.adam();
  apply(state.params.extractor, state.theta, leaf_grads(tape, m.theta), hyper);
  apply(state.params.classifier, state.phi, leaf_grads(tape, m.phi), hyper);
  return {terms.l_c.value().item(), terms.loss_train.value().item(),
          terms.loss_valid.value().item(), terms.total.value().item()};
}

ControllerStepReport controller_step(TrainState& state, const EpisodeBatches& episode,
                                     const TrainConfig& cfg, const ExtractorFn& extractor) {
  ad::Tape tape;
  BoundModel m;
  // theta is a leaf so that dL_C/dtheta exists for the inner update; it is
  // not modified here.
  m.theta = model::bind(tape, state.params.extractor, true);
  m.phi = model::bind(tape, state.params.classifier, false);
  const bool update_omega = !state.params.controller_frozen;
  m.omega = model::bind(tape, state.params.controller, true);
  m.tau = model::bind(tape, state.params.anchor, true).at(0);
  const auto terms = controller_objective(tape, episode, m, cfg, extractor);
  tape.backward(terms.total);

  const auto hyper = cfg.adam();
  if (update_omega) apply(state.params.controller, state.omega, leaf_grads(tape, m.omega), hyper);
  const std::array<ad::Var, 1> tau{m.tau};
  apply(state.params.anchor, state.tau, leaf_grads(tape, tau), hyper);
  return {terms.l_c.value().item(), terms.l_meta.value().item(), terms.total.value().item(),
          update_omega};
}

ad::Tensor predict_logits(const model::ModelParams& params, const data::Batch& batch,
                          const ExtractorFn& extractor) {
  if (batch.size() == 0) throw InvalidArgument("predict: empty batch");
  const std::size_t stride = batch.steps * batch.features;
  std::vector<double> out;
  std::size_t classes = 0;
  for (std::size_t start = 0; start < batch.size(); start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, batch.size() - start);
    data::Batch chunk;
    chunk.steps = batch.steps;
    chunk.features = batch.features;
    chunk.data.assign(batch.data.begin() + static_cast<std::ptrdiff_t>(start * stride),
                      batch.data.begin() + static_cast<std::ptrdiff_t>((start + n) * stride));
    chunk.labels.assign(batch.labels.begin() + static_cast<std::ptrdiff_t>(start),
                        batch.labels.begin() + static_cast<std::ptrdiff_t>(start + n));
    ad::Tape tape;
    const auto theta = model::bind(tape, params.extractor, false);
    const auto phi = model::bind(tape, params.classifier, false);
    const auto logits = model::classify(extractor(tape, chunk, theta), phi);
    classes = logits.value().cols();
    const auto vals = logits.value().data();
    out.insert(out.end(), vals.begin(), vals.end());
  }
  return ad::Tensor({batch.size(), classes}, std::move(out));
}

double domain_accuracy(const model::ModelParams& params, std::span<const data::Domain> domains,
                       const ExtractorFn& extractor) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& d : domains) {
    const auto batch = data::whole_domain(d);
    const auto pred = model::argmax_rows(predict_logits(params, batch, extractor));
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i] ? 1 : 0;
    total += pred.size();
  }
  if (total == 0) throw InvalidArgument("accuracy: no samples");
  return static_cast<double>(correct) / static_cast<double>(total);
}

PretrainResult pretrain(TrainState& state, std::span<const data::Domain> sources,
                        const TrainConfig& cfg, EpisodeSampler& sampler,
                        const ExtractorFn& extractor) {
  if (sources.empty() ||
      std::all_of(sources.begin(), sources.end(), [](const auto& d) { return d.size() == 0; })) {
    throw InvalidArgument("pretrain: no labelled source data");
  }
  const auto hyper = cfg.adam();
  PretrainResult r;
  for (std::uint32_t it = 1; it <= cfg.pretrain_max_iters; ++it) {
    if (it == 1 || (it - 1) % cfg.pretrain_eval_every == 0) {
      r.accuracy = domain_accuracy(state.params, sources, extractor);
      if (r.accuracy > cfg.pretrain_acc_gate) {
        r.status = PretrainStatus::GateReached;
        r.stopped_at = it;
        return r;
      }
    }
    supervised_update(state, all_sources_batch(sampler), hyper, extractor);
    r.updates = it;
  }
  r.stopped_at = cfg.pretrain_max_iters + 1;
  r.accuracy = domain_accuracy(state.params, sources, extractor);
  r.status = r.accuracy > cfg.pretrain_acc_gate ? PretrainStatus::GateReached
                                                : PretrainStatus::CapReached;
  return r;
}

model::ModelDims dims_for(std::span<const data::Domain> sources, model::ModelDims base) {
  if (sources.empty()) throw InvalidArgument("dims_for: no domains");
  data::validate_dataset(sources);
  base.input_dim = sources.front().feat_dim;
  base.seq_len = sources.front().seq_len;
  base.classes = sources.front().n_classes;
  return base;
}

namespace {

void check_sources(std::span<const data::Domain> sources, const model::ModelDims& dims) {
  if (sources.size() < 2) {
    throw InvalidArgument(
        fmt::format("training needs at least 2 source domains, got {}", sources.size()));
  }
  data::validate_dataset(sources);
  dims.validate();
  const auto& d = sources.front();
  if (d.feat_dim != dims.input_dim || d.seq_len != dims.seq_len || d.n_classes != dims.classes) {
    throw ShapeError(fmt::format(
        "model dims (input {}, seq {}, classes {}) do not match data (input {}, seq {}, classes {})",
        dims.input_dim, dims.seq_len, dims.classes, d.feat_dim, d.seq_len, d.n_classes));
  }
}

}  // namespace

Session start_session(std::span<const data::Domain> sources, const model::ModelDims& dims,
                      const TrainConfig& cfg) {
  cfg.validate();
  check_sources(sources, dims);
  Session s{TrainState(model::init_params(dims, data::derive_seed(cfg.seed, kInitStream))),
            EpisodeSampler(sources, cfg.batch_per_domain,
                           data::derive_seed(cfg.seed, kSamplerStream)),
            {}};
  s.pretrain = pretrain(s.state, sources, cfg, s.sampler);
  return s;
}

TrainResult continue_meta(Session session, std::span<const data::Domain> sources,
                          const TrainConfig& cfg, const IterationObserver& observer) {
  auto& state = session.state;
  data::SplitMix64 partition_rng(data::derive_seed(cfg.seed, kPartitionStream));
  std::vector<std::size_t> ids(sources.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  const std::size_t n_valid = std::min<std::size_t>(cfg.n_valid_domains, sources.size() - 1);

  TrainResult result{.params = {}, .pretrain = session.pretrain, .history = {}};
  result.history.reserve(cfg.max_iterations);
  for (std::uint32_t it = 1; it <= cfg.max_iterations; ++it) {
    NetworkStepReport net;
    for (std::uint32_t k = 0; k < cfg.network_updates_per_iteration; ++k) {
      const auto split = partition_episode(ids, n_valid, partition_rng);
      net = melada_step(state, session.sampler.sample(split), cfg, it);
    }
    const auto split = partition_episode(ids, n_valid, partition_rng);
    const auto ctl = controller_step(state, session.sampler.sample(split), cfg);
    const HistoryRow row{it, net.l_c, net.loss_train, net.loss_valid, ctl.l_meta};
    result.history.push_back(row);
    if (observer) observer(row, state.params);
  }
  result.params = std::move(state.params);
  return result;
}

TrainResult continue_supervised(Session session, const TrainConfig& cfg) {
  const auto hyper = cfg.adam();
  for (std::uint32_t it = 1; it <= cfg.max_iterations; ++it) {
    supervised_update(session.state, all_sources_batch(session.sampler), hyper, lstm_extractor());
  }
  return {std::move(session.state.params), session.pretrain, {}};
}

TrainResult train_loop(std::span<const data::Domain> sources, const model::ModelDims& dims,
                       const TrainConfig& cfg, const IterationObserver& observer) {
  return continue_meta(start_session(sources, dims, cfg), sources, cfg, observer);
}

TrainResult train_baseline(std::span<const data::Domain> sources, const model::ModelDims& dims,
                           const TrainConfig& cfg) {
  return continue_supervised(start_session(sources, dims, cfg), cfg);
}

void write_history_csv(std::span<const HistoryRow> history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out << "iteration,l_c,loss_train,loss_valid,l_meta\n";
  for (const auto& r : history) {
    out << fmt::format("{},{},{},{},{}\n", r.iteration, r.l_c, r.loss_train, r.loss_valid,
                       r.l_meta);
  }
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

}  // namespace melada::train
