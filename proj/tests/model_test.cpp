#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>

#include "melada/data/rng.hpp"
#include "melada/error.hpp"
#include "melada/model/checkpoint.hpp"
#include "melada/model/controller.hpp"
#include "melada/model/networks.hpp"
#include "melada/model/params.hpp"
#include "support/oracles.hpp"

namespace melada::model {
namespace {

ModelDims tiny_dims() {
  ModelDims d;
  d.input_dim = 3;
  d.seq_len = 4;
  d.hidden = 5;
  d.layers = 2;
  d.mlp_hidden = 4;
  d.classes = 3;
  d.ctrl_hidden = 6;
  d.ctrl_out = 3;
  return d;
}

data::Batch random_batch(const ModelDims& d, std::size_t n, std::uint64_t seed) {
  data::SplitMix64 rng(seed);
  data::Batch b;
  b.steps = d.seq_len;
  b.features = d.input_dim;
  for (std::size_t i = 0; i < n * d.seq_len * d.input_dim; ++i) b.data.push_back(rng.normal());
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<std::uint8_t>(i % d.classes));
  return b;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Plain-loop stacked LSTM: gates i, f, g, o on [x_t, h_{t-1}].
std::vector<double> lstm_oracle(const ModelParams& p, const data::Batch& b) {
  const std::size_t h = p.dims.hidden;
  std::vector<double> out(b.size() * h);
  for (std::size_t s = 0; s < b.size(); ++s) {
    std::vector<std::vector<double>> inputs(b.steps);
    for (std::size_t t = 0; t < b.steps; ++t) {
      const auto* x = b.data.data() + (s * b.steps + t) * b.features;
      inputs[t].assign(x, x + b.features);
    }
    for (std::uint32_t l = 0; l < p.dims.layers; ++l) {
      const auto& w = p.extractor.tensors[2 * l];
      const auto& bias = p.extractor.tensors[2 * l + 1];
      std::vector<double> hs(h, 0.0), cs(h, 0.0);
      for (std::size_t t = 0; t < b.steps; ++t) {
        std::vector<double> z = inputs[t];
        z.insert(z.end(), hs.begin(), hs.end());
        std::vector<double> pre(4 * h);
        for (std::size_t j = 0; j < 4 * h; ++j) {
          double acc = bias(0, j);
          for (std::size_t k = 0; k < z.size(); ++k) acc += z[k] * w(k, j);
          pre[j] = acc;
        }
        for (std::size_t j = 0; j < h; ++j) {
          const double i = sigmoid(pre[j]);
          const double f = sigmoid(pre[h + j]);
          const double g = std::tanh(pre[2 * h + j]);
          const double o = sigmoid(pre[3 * h + j]);
          cs[j] = f * cs[j] + i * g;
          hs[j] = o * std::tanh(cs[j]);
        }
        inputs[t] = hs;
      }
    }
    std::copy(inputs.back().begin(), inputs.back().end(), out.begin() + static_cast<std::ptrdiff_t>(s * h));
  }
  return out;
}

TEST(Params, InitShapesAndConventions) {
  const auto d = tiny_dims();
  const auto p = init_params(d, 1);
  ASSERT_EQ(p.extractor.size(), 4u);
  EXPECT_EQ(p.extractor.tensors[0].shape(), (std::vector<std::size_t>{8, 20}));
  EXPECT_EQ(p.extractor.tensors[2].shape(), (std::vector<std::size_t>{10, 20}));
  for (std::size_t j = 5; j < 10; ++j) EXPECT_EQ(p.extractor.tensors[1](0, j), 1.0);
  const double k = 1.0 / std::sqrt(5.0);
  for (double v : p.extractor.tensors[0].data()) EXPECT_LE(std::abs(v), k);
  EXPECT_EQ(p.classifier.at("classifier.fc2.weight").shape(), (std::vector<std::size_t>{4, 3}));
  EXPECT_EQ(p.controller.at("controller.fc2.weight").shape(), (std::vector<std::size_t>{6, 3}));
  EXPECT_EQ(p.anchor.at("anchor.tau"), ad::Tensor::zeros({1, 3}));
  EXPECT_EQ(init_params(d, 1), p);
  EXPECT_NE(init_params(d, 2), p);
}

TEST(Params, FullScaleDimensions) {
  const ModelDims d;
  EXPECT_EQ(d.input_dim, 310u);
  EXPECT_EQ(d.hidden, 256u);
  EXPECT_EQ(d.mlp_hidden, 100u);
  const auto p = init_params(d, 3);
  const auto out = features(p, random_batch(d, 4, 1));
  EXPECT_EQ(out.shape(), (std::vector<std::size_t>{4, 256}));
}

TEST(Extract, MatchesPlainLoopLstm) {
  const auto d = tiny_dims();
  const auto p = init_params(d, 8);
  const auto b = random_batch(d, 3, 2);
  const auto got = features(p, b);
  const auto want = lstm_oracle(p, b);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.data()[i], want[i], 1e-12);
}

TEST(Extract, ZeroWeightsGiveZeroFeatures) {
  const auto d = tiny_dims();
  auto p = init_params(d, 8);
  for (auto& t : p.extractor.tensors) std::fill(t.data().begin(), t.data().end(), 0.0);
  const auto out = features(p, random_batch(d, 4, 3));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Extract, EmptyBatchAndShapeErrors) {
  const auto d = tiny_dims();
  const auto p = init_params(d, 8);
  auto empty = random_batch(d, 0, 1);
  EXPECT_EQ(features(p, empty).shape(), (std::vector<std::size_t>{0, 5}));
  auto wrong = random_batch(d, 2, 1);
  wrong.features = 4;
  wrong.data.resize(2 * 4 * 4);
  EXPECT_THROW(features(p, wrong), ShapeError);
}

TEST(Classify, ZeroWeightsGiveUniformSoftmax) {
  const auto d = tiny_dims();
  auto p = init_params(d, 4);
  for (auto& t : p.classifier.tensors) std::fill(t.data().begin(), t.data().end(), 0.0);
  ad::Tape tape;
  const auto phi = bind(tape, p.classifier, false);
  const auto feats = tape.constant(ad::Tensor::full({2, 5}, 0.7));
  const std::vector<std::uint8_t> labels{0, 2};
  EXPECT_NEAR(cross_entropy(classify(feats, phi), labels).value().item(), std::log(3.0), 1e-15);
}

TEST(Classify, DuplicateRowsAndSingleRow) {
  const auto d = tiny_dims();
  const auto p = init_params(d, 4);
  auto b = random_batch(d, 1, 9);
  b.data.insert(b.data.end(), b.data.begin(), b.data.end());
  b.labels.push_back(b.labels[0]);
  const auto l = logits(p, b);
  EXPECT_EQ(l.shape(), (std::vector<std::size_t>{2, 3}));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(l(0, c), l(1, c));
  EXPECT_EQ(logits(p, random_batch(d, 1, 3)).shape(), (std::vector<std::size_t>{1, 3}));
}

TEST(CrossEntropy, Examples) {
  ad::Tape tape;
  const auto z = tape.constant(ad::Tensor::matrix(1, 3, {10, -10, -10}));
  const std::vector<std::uint8_t> zero{0};
  const double ce = cross_entropy(z, zero).value().item();
  EXPECT_NEAR(ce, std::log1p(2.0 * std::exp(-20.0)), 1e-14);
  EXPECT_NEAR(ce, 4.1e-9, 1e-10);
  const auto certain = tape.constant(ad::Tensor::matrix(1, 3, {700, -700, -700}));
  EXPECT_EQ(cross_entropy(certain, zero).value().item(), 0.0);
  const std::vector<std::uint8_t> bad{3};
  EXPECT_THROW(cross_entropy(z, bad), InvalidArgument);
  const auto per = cross_entropy_per_sample(
      tape.constant(ad::Tensor::matrix(2, 3, {0, 0, 0, 1, 2, 3})), std::vector<std::uint8_t>{1, 2});
  EXPECT_NEAR(per.value()(0, 0), std::log(3.0), 1e-15);
  EXPECT_NEAR(per.value()(1, 0), std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0, 1e-15);
}

TEST(Argmax, TiesGoLow) {
  const auto pred = argmax_rows(ad::Tensor::matrix(3, 3, {1, 1, 0, 0, 2, 2, -1, -3, -1}));
  EXPECT_EQ(pred, (std::vector<std::uint8_t>{0, 1, 0}));
  const std::vector<std::uint8_t> labels{0, 2, 0};
  EXPECT_DOUBLE_EQ(accuracy(pred, labels), 2.0 / 3.0);
}

TEST(Controller, SingleDomainAtItsMean) {
  ad::Tape tape;
  const auto f = ad::Tensor::matrix(3, 2, {1, 2, 3, 5, -1, 0.5});
  const auto mean = oracle::row_mean(f);
  const auto tau = tape.constant(ad::Tensor::matrix(1, 2, mean));
  const std::vector<ad::Var> doms{tape.constant(f)};
  EXPECT_NEAR(controller_loss(doms, identity_map(), tau).value().item(), 0.0, 1e-15);
}

TEST(Controller, TwoSingletons) {
  ad::Tape tape;
  const std::vector<double> mu{0.3, -1.2, 2.0};
  const std::vector<ad::Var> doms{tape.constant(ad::Tensor::matrix(1, 3, mu)),
                                  tape.constant(ad::Tensor::matrix(1, 3, {-0.3, 1.2, -2.0}))};
  const auto tau = tape.constant(ad::Tensor::zeros({1, 3}));
  const double norm = std::sqrt(0.09 + 1.44 + 4.0);
  EXPECT_NEAR(controller_loss(doms, identity_map(), tau).value().item(), 2.0 * norm, 1e-14);
}

TEST(Controller, MatchesPlainLoopValue) {
  const auto d = tiny_dims();
  const auto p = init_params(d, 12);
  data::SplitMix64 rng(5);
  std::vector<ad::Tensor> sets;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> v(static_cast<std::size_t>(2 + i) * d.hidden);
    for (double& x : v) x = rng.normal();
    sets.push_back(ad::Tensor::matrix(2 + i, d.hidden, v));
  }
  const std::vector<double> tau{0.1, -0.2, 0.3};
  ad::Tape tape;
  std::vector<ad::Var> doms;
  for (const auto& s : sets) doms.push_back(tape.constant(s));
  const auto omega = bind(tape, p.controller, false);
  const double got =
      controller_loss(doms, mlp_inner_map(omega), tape.constant(ad::Tensor::matrix(1, 3, tau)))
          .value()
          .item();
  const auto& c = p.controller.tensors;
  const double want = oracle::controller_loss_value(
      sets, [&](std::span<const double> x) { return oracle::mlp_row(x, c[0], c[1], c[2], c[3]); }, tau);
  EXPECT_NEAR(got, want, 1e-12);
}

TEST(Controller, GradientSigns) {
  // tau and features descend; g ascends.
  const auto d = tiny_dims();
  const auto p = init_params(d, 3);
  ad::Tape tape;
  const auto feats = tape.leaf(ad::Tensor::full({2, 5}, 0.4));
  const auto omega = bind(tape, p.controller, true);
  const auto tau = tape.leaf(ad::Tensor::matrix(1, 3, {0.5, 0.5, 0.5}));
  const std::vector<ad::Var> doms{feats};
  const auto adv = controller_loss(doms, mlp_inner_map(omega), tau);
  const auto plain = controller_loss(doms, mlp_inner_map(omega), tau, {.adversarial = false});
  std::vector<ad::Var> wrt{feats, tau};
  wrt.insert(wrt.end(), omega.begin(), omega.end());
  const auto ga = tape.gradients(adv, wrt);
  const auto gp = tape.gradients(plain, wrt);
  EXPECT_EQ(adv.value(), plain.value());
  EXPECT_EQ(ga[0].value(), gp[0].value());
  EXPECT_EQ(ga[1].value(), gp[1].value());
  for (std::size_t i = 2; i < wrt.size(); ++i) {
    for (std::size_t e = 0; e < ga[i].value().size(); ++e) {
      EXPECT_EQ(ga[i].value().data()[e], -gp[i].value().data()[e]);
    }
  }
}

TEST(Controller, PermutationInvariance) {
  const auto d = tiny_dims();
  data::SplitMix64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = init_params(d, rng.next());
    std::vector<ad::Tensor> sets;
    for (int i = 0; i < 3; ++i) {
      const std::size_t n = 1 + rng.below(6);
      std::vector<double> v(n * d.hidden);
      for (double& x : v) x = rng.normal();
      sets.push_back(ad::Tensor::matrix(n, d.hidden, v));
    }
    const auto value = [&](const std::vector<ad::Tensor>& s) {
      ad::Tape tape;
      std::vector<ad::Var> doms;
      for (const auto& t : s) doms.push_back(tape.constant(t));
      const auto omega = bind(tape, p.controller, false);
      return controller_loss(doms, mlp_inner_map(omega), bind(tape, p.anchor, false)[0]).value().item();
    };
    auto shuffled = sets;
    for (auto& t : shuffled) {
      std::vector<std::size_t> order(t.rows());
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(std::span<std::size_t>(order));
      ad::Tensor copy = t;
      for (std::size_t r = 0; r < order.size(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) copy(r, c) = t(order[r], c);
      }
      t = copy;
    }
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_LE(std::abs(value(sets) - value(shuffled)), 1e-9);
  }
}

TEST(Controller, Errors) {
  ad::Tape tape;
  const std::vector<ad::Var> none;
  const auto tau = tape.constant(ad::Tensor::zeros({1, 2}));
  EXPECT_THROW(controller_loss(none, identity_map(), tau), InvalidArgument);
  const std::vector<ad::Var> empty{tape.constant(ad::Tensor::zeros({0, 2}))};
  EXPECT_THROW(controller_loss(empty, identity_map(), tau), InvalidArgument);
  const std::vector<ad::Var> three(3, tau);
  EXPECT_THROW(mlp_inner_map(three), ShapeError);
}

TEST(Mmnd, Properties) {
  const auto d = tiny_dims();
  const auto p = init_params(d, 6);
  const auto a = ad::Tensor::matrix(2, 5, {1, 2, 3, 4, 5, -1, 0, 1, 0, 2});
  const auto b = ad::Tensor::matrix(3, 5, {0, 0, 1, 1, 2, 3, -2, 1, 0, 0, 1, 1, 1, 1, 1});
  EXPECT_LE(mmnd_estimate(a, a, &p.controller), 1e-12);
  EXPECT_EQ(mmnd_estimate(a, b, &p.controller), mmnd_estimate(b, a, &p.controller));
  EXPECT_GE(mmnd_estimate(a, b, &p.controller), 0.0);
  const auto x1 = ad::Tensor::matrix(1, 2, {1.0, 2.0});
  const auto x2 = ad::Tensor::matrix(1, 2, {4.0, -2.0});
  EXPECT_DOUBLE_EQ(mmnd_estimate(x1, x2, nullptr), 5.0);
  EXPECT_THROW(mmnd_estimate(ad::Tensor::zeros({0, 2}), x2, nullptr), InvalidArgument);
}

TEST(Barycenter, Examples) {
  const std::vector<std::vector<double>> two{{1, 2}, {4, 6}};
  const auto [l2, r2] = barycenter_identity_check(two);
  EXPECT_DOUBLE_EQ(l2, 25.0);
  EXPECT_DOUBLE_EQ(r2, 25.0);
  const std::vector<std::vector<double>> same(4, {0.5, -1.0, 2.0});
  const auto [l0, r0] = barycenter_identity_check(same);
  EXPECT_EQ(l0, 0.0);
  EXPECT_EQ(r0, 0.0);
  data::SplitMix64 rng(42);
  std::vector<std::vector<double>> five(5, std::vector<double>(8));
  for (auto& m : five) {
    for (double& v : m) v = rng.normal();
  }
  const auto [l5, r5] = barycenter_identity_check(five);
  const double brute = oracle::brute_pairwise(five);
  EXPECT_LT(std::abs(l5 - brute) / brute, 1e-12);
  EXPECT_LT(std::abs(l5 - r5) / l5, 1e-9);
  EXPECT_THROW(barycenter_identity_check(std::vector<std::vector<double>>{{1.0}}), InvalidArgument);
}

TEST(Checkpoint, RoundTrip) {
  auto p = init_params(tiny_dims(), 31);
  p.controller_frozen = true;
  const auto path = std::filesystem::temp_directory_path() / "melada_ckpt.bin";
  write_checkpoint(p, path);
  EXPECT_EQ(read_checkpoint(path), p);
  std::filesystem::remove(path);
  const auto bytes = encode_checkpoint(p);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MLDA");
  EXPECT_EQ(bytes[4], kCheckpointVersion);
  EXPECT_EQ(bytes[8], 3);   // input_dim
  EXPECT_EQ(bytes[40], 1);  // frozen flag
}

TEST(Checkpoint, Errors) {
  const auto p = init_params(tiny_dims(), 31);
  auto bytes = encode_checkpoint(p);
  auto magic = bytes;
  magic[0] = 'X';
  try {
    decode_checkpoint(magic);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("XLDA"), std::string::npos);
  }
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  EXPECT_THROW(decode_checkpoint(cut), FormatError);
  auto extra = bytes;
  extra.push_back(1);
  EXPECT_THROW(decode_checkpoint(extra), FormatError);
  auto wrong = p;
  wrong.dims.hidden = 6;
  EXPECT_THROW(encode_checkpoint(wrong), ShapeError);
}

TEST(Params, GroupHash) {
  auto p = init_params(tiny_dims(), 2);
  const auto h = group_hash(p.controller);
  EXPECT_EQ(h.size(), 64u);
  EXPECT_EQ(group_hash(p.controller), h);
  p.controller.tensors[1].data()[0] += 1e-300;
  EXPECT_EQ(group_hash(p.controller), h);
  p.controller.tensors[1].data()[0] = std::nextafter(p.controller.tensors[1].data()[0], 1.0);
  EXPECT_NE(group_hash(p.controller), h);
}

}  // namespace
}  // namespace melada::model
