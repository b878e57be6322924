#include <benchmark/benchmark.h>

#include "melada/data/rng.hpp"
#include "melada/model/networks.hpp"

namespace {

using namespace melada;

data::Batch random_batch(std::size_t n, std::size_t steps, std::size_t features) {
  data::SplitMix64 rng(1);
  data::Batch b;
  b.steps = steps;
  b.features = features;
  b.data.resize(n * steps * features);
  for (double& v : b.data) v = rng.normal();
  b.labels.assign(n, 0);
  return b;
}

model::ModelDims dims_for_hidden(std::uint32_t hidden) {
  model::ModelDims d;
  d.input_dim = 20;
  d.seq_len = 15;
  d.hidden = hidden;
  return d;
}

void LstmForward(benchmark::State& state) {
  const auto dims = dims_for_hidden(static_cast<std::uint32_t>(state.range(0)));
  const auto params = model::init_params(dims, 3);
  const auto batch = random_batch(64, dims.seq_len, dims.input_dim);
  for (auto _ : state) {
    ad::Tape tape;
    const auto theta = model::bind(tape, params.extractor, false);
    benchmark::DoNotOptimize(model::extract(tape, batch, theta).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(LstmForward)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void LstmForwardBackward(benchmark::State& state) {
  const auto dims = dims_for_hidden(static_cast<std::uint32_t>(state.range(0)));
  const auto params = model::init_params(dims, 3);
  const auto batch = random_batch(64, dims.seq_len, dims.input_dim);
  for (auto _ : state) {
    ad::Tape tape;
    const auto theta = model::bind(tape, params.extractor, true);
    const auto phi = model::bind(tape, params.classifier, true);
    const auto loss =
        model::cross_entropy(model::classify(model::extract(tape, batch, theta), phi), batch.labels);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.node(theta[0].id()).grad);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(LstmForwardBackward)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
