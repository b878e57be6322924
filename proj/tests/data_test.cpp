#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>

#include <gtest/gtest.h>

#include "melada/data/meld_io.hpp"
#include "melada/data/rng.hpp"
#include "melada/data/synthetic.hpp"
#include "melada/error.hpp"
#include "melada/model/controller.hpp"
#include "melada/util/binary.hpp"
#include "support/recorded.hpp"

namespace melada::data {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("melada_" + name); }

/// Written from the published algorithm description, sharing no code with the library.
struct ReferenceMix {
  std::uint64_t s;
  std::optional<double> spare;
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) / 9007199254740992.0; }
  double normal() {
    if (spare) {
      const double v = *spare;
      spare.reset();
      return v;
    }
    const double a = uniform();
    const double b = uniform();
    const double rad = std::sqrt(-2.0 * std::log(a));
    spare = rad * std::sin(2.0 * std::numbers::pi * b);
    return rad * std::cos(2.0 * std::numbers::pi * b);
  }
};

TEST(SplitMix64, KnownSequence) {
  SplitMix64 g(1234567);
  EXPECT_EQ(g.next(), 6457827717110365317ULL);
  EXPECT_EQ(g.next(), 3203168211198807973ULL);
  EXPECT_EQ(g.next(), 9817491932198370423ULL);
  EXPECT_EQ(g.next(), 4593380528125082431ULL);
  EXPECT_EQ(g.next(), 16408922859458223821ULL);
}

TEST(SplitMix64, SeedZero) {
  SplitMix64 g(0);
  EXPECT_EQ(g.next(), 0xE220A8397B1DCDAFULL);
}

TEST(SplitMix64, NormalsMatchReference) {
  SplitMix64 g(99);
  ReferenceMix ref{99, std::nullopt};
  for (int i = 0; i < 101; ++i) EXPECT_EQ(g.normal(), ref.normal());
  for (int i = 0; i < 10; ++i) {
    const double u = g.uniform();
    EXPECT_EQ(u, ref.uniform());
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SplitMix64, BelowAndShuffle) {
  SplitMix64 g(5);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(g.below(7), 7u);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  g.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_NE(derive_seed(42, 1), derive_seed(42, 2));
  EXPECT_EQ(derive_seed(42, 1), derive_seed(42, 1));
}

TEST(Synthetic, MatchesReferenceGenerator) {
  SynthSpec spec;
  spec.n_domains = 2;
  spec.feat_dim = 4;
  spec.seq_len = 3;
  spec.samples_per_class = 2;
  spec.seed = 17;
  const auto got = gen_synthetic(spec);

  ReferenceMix ref{spec.seed, std::nullopt};
  const std::size_t d = spec.feat_dim;
  std::vector<std::vector<double>> means(spec.n_classes, std::vector<double>(d));
  for (auto& m : means) {
    for (auto& v : m) v = spec.class_scale * ref.normal();
  }
  for (std::uint32_t s = 0; s < spec.n_domains; ++s) {
    std::vector<double> r(d * d), b(d);
    for (auto& v : r) v = ref.normal() / std::sqrt(static_cast<double>(d));
    for (auto& v : b) v = ref.normal();
    std::size_t pos = 0;
    std::size_t sample = 0;
    EXPECT_EQ(got[s].subject_id, s + 1);
    EXPECT_EQ(got[s].provenance, Provenance::Synthetic);
    for (std::uint32_t k = 0; k < spec.samples_per_class; ++k) {
      for (std::uint32_t c = 0; c < spec.n_classes; ++c) {
        EXPECT_EQ(got[s].labels[sample++], c);
        for (std::uint32_t t = 0; t < spec.seq_len; ++t) {
          std::vector<double> u(d);
          for (std::size_t j = 0; j < d; ++j) u[j] = means[c][j] + spec.noise_sigma * ref.normal();
          for (std::size_t i = 0; i < d; ++i) {
            double ru = 0.0;
            for (std::size_t j = 0; j < d; ++j) ru += r[i * d + j] * u[j];
            EXPECT_NEAR(got[s].frames[pos++], u[i] + spec.shift_strength * (ru + b[i]), 1e-12);
          }
        }
      }
    }
  }
}

TEST(Synthetic, DefaultsAndDeterminism) {
  const SynthSpec spec;
  EXPECT_EQ(spec.n_domains, 8u);
  EXPECT_EQ(spec.feat_dim, 20u);
  EXPECT_EQ(spec.seq_len, 15u);
  EXPECT_EQ(spec.samples_per_class, 120u);
  EXPECT_EQ(spec.shift_strength, 0.6);
  EXPECT_EQ(spec.noise_sigma, 0.3);
  const auto a = encode_meld(gen_synthetic(spec));
  const auto b = encode_meld(gen_synthetic(spec));
  EXPECT_EQ(a, b);
}

TEST(Synthetic, RecordedSeed42Digest) {
  EXPECT_EQ(util::sha256_hex(encode_meld(gen_synthetic(SynthSpec{}))),
            recorded::kSeed42DatasetSha256);
}

TEST(Synthetic, NoShiftMeansAgree) {
  SynthSpec spec;
  spec.shift_strength = 0.0;
  const auto doms = gen_synthetic(spec);
  const std::size_t dim = spec.feat_dim;
  const double n = static_cast<double>(spec.samples_per_class) * spec.seq_len;
  for (std::uint32_t c = 0; c < spec.n_classes; ++c) {
    std::vector<std::vector<double>> m(doms.size(), std::vector<double>(dim, 0.0));
    std::vector<double> grand(dim, 0.0);
    for (std::size_t s = 0; s < doms.size(); ++s) {
      for (std::size_t i = 0; i < doms[s].size(); ++i) {
        if (doms[s].labels[i] != c) continue;
        const auto x = doms[s].sample(i);
        for (std::size_t t = 0; t < spec.seq_len; ++t) {
          for (std::size_t j = 0; j < dim; ++j) m[s][j] += x[t * dim + j] / n;
        }
      }
      for (std::size_t j = 0; j < dim; ++j) grand[j] += m[s][j] / static_cast<double>(doms.size());
    }
    for (std::size_t s = 0; s < doms.size(); ++s) {
      double sq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) sq += (m[s][j] - grand[j]) * (m[s][j] - grand[j]);
      EXPECT_LT(std::sqrt(sq / static_cast<double>(dim)), 3.0 * spec.noise_sigma / std::sqrt(n));
    }
  }
}

double mean_pairwise_mmnd(double eps) {
  SynthSpec spec;
  spec.shift_strength = eps;
  spec.samples_per_class = 40;
  const auto doms = gen_synthetic(spec);
  std::vector<ad::Tensor> sets;
  for (const auto& d : doms) {
    sets.emplace_back(std::vector<std::size_t>{d.size() * d.seq_len, d.feat_dim}, d.frames);
  }
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      total += model::mmnd_estimate(sets[i], sets[j], nullptr);
      ++pairs;
    }
  }
  return total / pairs;
}

TEST(Synthetic, MonotoneDifficulty) {
  const double a = mean_pairwise_mmnd(0.0);
  const double b = mean_pairwise_mmnd(0.3);
  const double c = mean_pairwise_mmnd(0.6);
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
}

TEST(Synthetic, InvalidSpec) {
  SynthSpec s;
  s.n_domains = 0;
  EXPECT_THROW(gen_synthetic(s), InvalidArgument);
  s = {};
  s.shift_strength = -0.1;
  EXPECT_THROW(gen_synthetic(s), InvalidArgument);
  s = {};
  s.noise_sigma = NAN;
  EXPECT_THROW(gen_synthetic(s), InvalidArgument);
  s = {};
  s.class_scale = 0.0;
  EXPECT_THROW(gen_synthetic(s), InvalidArgument);
}

std::vector<Domain> small_dataset() {
  SynthSpec spec;
  spec.n_domains = 3;
  spec.feat_dim = 5;
  spec.seq_len = 4;
  spec.samples_per_class = 3;
  return gen_synthetic(spec);
}

TEST(Meld, RoundTrip) {
  const auto doms = small_dataset();
  const auto path = temp_file("roundtrip.meld");
  write_dataset(doms, path);
  const auto back = read_dataset(path);
  ASSERT_EQ(back.size(), doms.size());
  for (std::size_t i = 0; i < doms.size(); ++i) {
    EXPECT_TRUE(back[i].same_content(doms[i]));
    EXPECT_EQ(back[i].frames, doms[i].frames);
  }
  EXPECT_EQ(encode_meld(back), util::read_file(path));
  fs::remove(path);
}

TEST(Meld, Layout) {
  Domain d;
  d.subject_id = 9;
  d.n_classes = 3;
  d.seq_len = 1;
  d.feat_dim = 2;
  d.push_back(std::vector<double>{1.0, -2.0}, 2);
  const std::vector<Domain> one{d};
  const auto bytes = encode_meld(one);
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 5 * 4 + 1 + 2 * 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MELD");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[12], 9);
  EXPECT_EQ(bytes[16], 1);
  EXPECT_EQ(bytes[32], 2);
  double v = 0.0;
  std::memcpy(&v, bytes.data() + 33 + 8, 8);
  EXPECT_EQ(v, -2.0);
}

std::string error_of(std::span<const std::uint8_t> bytes) {
  try {
    decode_meld(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

TEST(Meld, BadMagicNamesWhatWasFound) {
  auto bytes = encode_meld(small_dataset());
  std::memcpy(bytes.data(), "MELX", 4);
  const auto msg = error_of(bytes);
  EXPECT_NE(msg.find("MELX"), std::string::npos) << msg;
}

TEST(Meld, TruncatedSamples) {
  Domain d;
  d.subject_id = 1;
  d.seq_len = 1;
  d.feat_dim = 1;
  for (int i = 0; i < 10; ++i) d.push_back(std::vector<double>{0.5 * i}, 0);
  const std::vector<Domain> one{d};
  auto bytes = encode_meld(one);
  bytes.resize(bytes.size() - 8);
  const auto msg = error_of(bytes);
  EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
  EXPECT_NE(error_of(std::span<const std::uint8_t>(bytes).first(2)), "");
}

TEST(Meld, OtherCorruptions) {
  const auto good = encode_meld(small_dataset());
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_NE(error_of(trailing).find("trailing"), std::string::npos);
  auto version = good;
  version[4] = 7;
  EXPECT_NE(error_of(version).find("version"), std::string::npos);
  auto dims = good;
  dims[12 + 12] = 0;  // feat_dim of the first domain
  dims[12 + 13] = 0;
  EXPECT_NE(error_of(dims), "");
  EXPECT_THROW(read_dataset(temp_file("does_not_exist.meld")), Error);
}

TEST(Meld, MismatchedDomainsRejected) {
  auto doms = small_dataset();
  doms[1].subject_id = doms[0].subject_id;
  EXPECT_THROW(validate_dataset(doms), InvalidArgument);
  doms = small_dataset();
  doms[2].feat_dim = 4;
  doms[2].frames.resize(doms[2].size() * doms[2].sample_stride());
  EXPECT_THROW(validate_dataset(doms), InvalidArgument);
}

TEST(Meld, CsvView) {
  const auto doms = small_dataset();
  const auto path = temp_file("view.csv");
  write_dataset_csv(doms, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("subject,sample,label,step,f0,", 0), 0u);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3u * 9u * 4u);
  fs::remove(path);
}

TEST(Domain, Validation) {
  Domain d;
  d.seq_len = 2;
  d.feat_dim = 2;
  EXPECT_THROW(d.push_back(std::vector<double>{1, 2, 3}, 0), InvalidArgument);
  d.push_back(std::vector<double>{1, 2, 3, 4}, 1);
  EXPECT_NO_THROW(d.validate());
  d.labels[0] = 3;
  EXPECT_THROW(d.validate(), InvalidArgument);
}

TEST(Batch, StackAndIndex) {
  const auto doms = small_dataset();
  const std::vector<std::size_t> idx{2, 0};
  const auto b = make_batch(doms[0], idx);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.labels[0], doms[0].labels[2]);
  EXPECT_TRUE(std::equal(b.data.begin(), b.data.begin() + 20, doms[0].sample(2).begin()));
  const std::vector<std::size_t> bad{99};
  EXPECT_THROW(make_batch(doms[0], bad), InvalidArgument);
  const std::vector<Batch> parts{b, whole_domain(doms[1])};
  EXPECT_EQ(concat_batches(parts).size(), 2u + doms[1].size());
}

}  // namespace
}  // namespace melada::data
