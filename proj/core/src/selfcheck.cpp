#include "melada/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "melada/autodiff/adam.hpp"
#include "melada/autodiff/tape.hpp"
#include "melada/data/meld_io.hpp"
#include "melada/data/rng.hpp"
#include "melada/data/synthetic.hpp"
#include "melada/model/checkpoint.hpp"
#include "melada/model/controller.hpp"
#include "melada/model/params.hpp"
#include "melada/signal/features.hpp"

namespace melada {

namespace {

ad::Tensor random_matrix(data::SplitMix64& rng, std::size_t r, std::size_t c) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.normal();
  return ad::Tensor::matrix(r, c, std::move(v));
}

CheckResult check_grl() {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor::matrix(1, 2, {1.5, -2.0}));
  const auto y = ad::grl(x);
  const bool forward = y.value() == x.value();
  tape.backward(ad::sum_all(y));
  const bool negated = tape.node(x.id()).grad->data()[0] == -1.0;

  ad::Tape t2;
  const auto z = t2.leaf(ad::Tensor::matrix(1, 2, {0.3, 0.7}));
  const auto g2 = t2.gradients(ad::sum_all(ad::square(ad::grl(ad::grl(z)))), std::span(&z, 1));
  const auto g1 = t2.gradients(ad::sum_all(ad::square(z)), std::span(&z, 1));
  const bool twice = g2[0].value() == g1[0].value();
  return {"grl_contract", forward && negated && twice,
          fmt::format("forward {}, negation {}, double reversal {}", forward, negated, twice)};
}

CheckResult check_gradients(data::SplitMix64& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto a0 = random_matrix(rng, 3, 4);
    const auto w0 = random_matrix(rng, 4, 2);
    auto f = [&](const ad::Tensor& a, const ad::Tensor& w, ad::Tape& tape, ad::Var& av) {
      av = tape.leaf(a);
      const auto wv = tape.constant(w);
      const auto h = ad::tanh(ad::matmul(av, wv));
      return ad::sum_all(ad::mul(ad::log_softmax(h), ad::sigmoid(h)));
    };
    ad::Tape tape;
    ad::Var av;
    const auto loss = f(a0, w0, tape, av);
    const auto grad = tape.gradients(loss, std::span(&av, 1))[0].value();
    constexpr double h = 1e-5;
    for (std::size_t i = 0; i < a0.size(); ++i) {
      auto plus = a0;
      auto minus = a0;
      plus.data()[i] += h;
      minus.data()[i] -= h;
      ad::Tape tp;
      ad::Tape tm;
      ad::Var unused;
      const double fd = (f(plus, w0, tp, unused).value().item() -
                         f(minus, w0, tm, unused).value().item()) / (2 * h);
      const double an = grad.data()[i];
      worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return {"gradient_finite_difference", worst < 1e-6, fmt::format("max relative error {:.3g}", worst)};
}

CheckResult check_second_order() {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor::scalar(2.0));
  const auto cube = ad::mul(ad::square(x), x);
  const auto d1 = tape.gradients(cube, std::span(&x, 1), {.record = true})[0];
  const auto d2 = tape.gradients(d1, std::span(&x, 1))[0];
  const double v = d2.value().item();
  return {"second_order", std::abs(v - 12.0) < 1e-12, fmt::format("d2(x^3)/dx2 at 2 = {}", v)};
}

double controller_value(const std::vector<ad::Tensor>& domains, const model::ParamGroup& omega,
                        const ad::Tensor& tau) {
  ad::Tape tape;
  std::vector<ad::Var> feats;
  for (const auto& d : domains) feats.push_back(tape.constant(d));
  const auto w = model::bind(tape, omega, false);
  return model::controller_loss(feats, model::mlp_inner_map(w), tape.constant(tau)).value().item();
}

CheckResult check_permutation(data::SplitMix64& rng) {
  model::ModelDims dims;
  dims.input_dim = 4;
  dims.hidden = 6;
  dims.layers = 1;
  dims.mlp_hidden = 4;
  dims.ctrl_hidden = 5;
  dims.ctrl_out = 3;
  const auto params = model::init_params(dims, rng.next());
  std::vector<ad::Tensor> domains;
  for (int i = 0; i < 3; ++i) domains.push_back(random_matrix(rng, 5 + i, dims.hidden));
  const auto tau = random_matrix(rng, 1, dims.ctrl_out);
  const double base = controller_value(domains, params.controller, tau);

  auto shuffled = domains;
  for (auto& d : shuffled) {
    std::vector<std::size_t> rows(d.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    rng.shuffle(std::span(rows));
    ad::Tensor p = d;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < d.cols(); ++c) p(r, c) = d(rows[r], c);
    }
    d = std::move(p);
  }
  std::reverse(shuffled.begin(), shuffled.end());
  const double moved = controller_value(shuffled, params.controller, tau);
  const double delta = std::abs(base - moved);
  return {"controller_permutation_invariance", delta <= 1e-9, fmt::format("|delta| = {:.3g}", delta)};
}

CheckResult check_barycenter(data::SplitMix64& rng) {
  std::vector<std::vector<double>> means(6, std::vector<double>(8));
  for (auto& m : means) {
    for (auto& v : m) v = rng.normal();
  }
  const auto [lhs, rhs] = model::barycenter_identity_check(means);
  const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
  return {"barycenter_identity", rel <= 1e-9, fmt::format("relative gap {:.3g}", rel)};
}

CheckResult check_mmnd(data::SplitMix64& rng) {
  const auto a = random_matrix(rng, 7, 4);
  const auto b = random_matrix(rng, 9, 4);
  const double ab = model::mmnd_estimate(a, b, nullptr);
  const double ba = model::mmnd_estimate(b, a, nullptr);
  const double aa = model::mmnd_estimate(a, a, nullptr);
  const bool ok = ab >= 0.0 && std::abs(ab - ba) <= 1e-12 && aa <= 1e-12;
  return {"mmnd_properties", ok, fmt::format("d(a,b) {:.6g}, d(b,a) {:.6g}, d(a,a) {:.3g}", ab, ba, aa)};
}

CheckResult check_alpha_band() {
  constexpr std::size_t fs = 200;
  std::vector<double> window(fs);
  for (std::size_t n = 0; n < fs; ++n) {
    window[n] = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(n) / fs);
  }
  const auto bands = signal::default_bands();
  const auto e = signal::stft_band_energy(window, 1, fs, bands);
  const double total = std::accumulate(e.begin(), e.end(), 0.0);
  const double share = e[2] / total;
  return {"alpha_band_energy", share > 0.999999, fmt::format("alpha share {:.9f}", share)};
}

CheckResult check_adam() {
  std::vector<ad::Tensor> p{ad::Tensor::scalar(0.0)};
  const std::vector<ad::Tensor> g{ad::Tensor::scalar(1.0)};
  ad::AdamState state;
  ad::adam_step(p, g, state, {});
  const double expected = -2e-4 / (1.0 + 1e-8);
  const double got = p[0].item();
  return {"adam_first_step", std::abs(got - expected) <= 1e-18,
          fmt::format("p' = {:.10g}", got)};
}

CheckResult check_roundtrips() {
  data::SynthSpec spec;
  spec.n_domains = 2;
  spec.samples_per_class = 2;
  spec.feat_dim = 3;
  spec.seq_len = 4;
  const auto domains = data::gen_synthetic(spec);
  const auto decoded = data::decode_meld(data::encode_meld(domains));
  bool meld = decoded.size() == domains.size();
  for (std::size_t i = 0; meld && i < domains.size(); ++i) meld = decoded[i].same_content(domains[i]);

  model::ModelDims dims;
  dims.input_dim = 3;
  dims.seq_len = 4;
  dims.hidden = 5;
  dims.mlp_hidden = 4;
  dims.ctrl_hidden = 3;
  dims.ctrl_out = 2;
  auto params = model::init_params(dims, 11);
  params.controller_frozen = true;
  const bool ckpt = model::decode_checkpoint(model::encode_checkpoint(params)) == params;
  return {"serialization_roundtrip", meld && ckpt, fmt::format("meld {}, checkpoint {}", meld, ckpt)};
}

CheckResult check_lds() {
  const std::vector<double> constant(20, 3.25);
  const auto s = signal::lds_smooth_series(constant);
  double worst = 0.0;
  for (double v : s) worst = std::max(worst, std::abs(v - 3.25));
  return {"lds_constant_series", worst <= 1e-9, fmt::format("max deviation {:.3g}", worst)};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
  data::SplitMix64 rng(seed);
  std::vector<CheckResult> out;
  const std::vector<std::function<CheckResult()>> checks{
      [] { return check_grl(); },
      [&] { return check_gradients(rng); },
      [] { return check_second_order(); },
      [&] { return check_permutation(rng); },
      [&] { return check_barycenter(rng); },
      [&] { return check_mmnd(rng); },
      [] { return check_alpha_band(); },
      [] { return check_adam(); },
      [] { return check_roundtrips(); },
      [] { return check_lds(); },
  };
  for (const auto& check : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace melada
