#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "melada_cli/cli.hpp"
#include "support/recorded.hpp"

namespace melada::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("melada_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::vector<std::string> small_synth() const {
    return {"gen-synth",      "--out",       path("small.meld"), "--n-domains",  "3",
            "--feat-dim",     "4",           "--seq-len",        "3",            "--samples-per-class",
            "6"};
  }

  std::vector<std::string> small_loso(const std::string& out_dir) const {
    return {"loso",        "--data",          path("small.meld"), "--out-dir",
            out_dir,       "--hidden",        "8",                "--layers",
            "1",           "--mlp-hidden",    "8",                "--ctrl-hidden",
            "6",           "--ctrl-out",      "4",                "--max-iterations",
            "3",           "--freeze-threshold", "2",             "--pretrain-max-iters",
            "2",           "--batch-per-domain", "4",             "--n-valid-domains",
            "1",           "--steps",         "2"};
  }

  fs::path dir_;
};

TEST_F(CliTest, VersionFlag) {
  const auto r = invoke({"--version"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("0.1.0"), std::string::npos) << r.out;
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  const auto r = invoke({"--frobnicate"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"loso", "--data", path("x.meld"), "--lr", "abc"}).code, kExitUsage);
}

TEST_F(CliTest, ConfigUnknownKeyIsUsageError) {
  std::ofstream(path("bad.cfg")) << "lr = 0.1\nwibble = 3\n";
  const auto r = invoke({"gen-synth", "--out", path("a.meld"), "--config", path("bad.cfg")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("wibble"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("a.meld")));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  std::ofstream(path("run.cfg")) << "# comment\nlr = 0.125\nlambda = 0.5\n";
  auto args = small_synth();
  args.insert(args.end(), {"--config", path("run.cfg"), "--lr", "0.25"});
  const auto r = invoke(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("lr=0.25\n"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("lambda=0.5\n"), std::string::npos) << r.err;
}

TEST_F(CliTest, DefaultDatasetDigestIsRecorded) {
  const auto r = invoke({"gen-synth", "--out", path("default.meld")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, 64), recorded::kSeed42DatasetSha256);
}

TEST_F(CliTest, LosoWritesReproducibleCsvs) {
  ASSERT_EQ(invoke(small_synth()).code, kExitOk);
  const auto a = invoke(small_loso(path("run_a")));
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const auto b = invoke(small_loso(path("run_b")));
  ASSERT_EQ(b.code, kExitOk) << b.err;
  for (const char* name : {"loso_results.csv", "adaptation_curve.csv"}) {
    const auto x = slurp(fs::path(path("run_a")) / name);
    ASSERT_FALSE(x.empty()) << name;
    EXPECT_EQ(x, slurp(fs::path(path("run_b")) / name)) << name;
  }
  EXPECT_EQ(slurp(fs::path(path("run_a")) / "loso_results.csv").rfind("subject,accuracy\n", 0),
            0u);
}

TEST_F(CliTest, TrainAdaptRoundTrip) {
  ASSERT_EQ(invoke(small_synth()).code, kExitOk);
  std::vector<std::string> net{"--hidden", "8", "--layers", "1", "--mlp-hidden", "8",
                               "--ctrl-hidden", "6", "--ctrl-out", "4", "--max-iterations", "2",
                               "--freeze-threshold", "1", "--pretrain-max-iters", "2",
                               "--batch-per-domain", "4", "--n-valid-domains", "1"};
  std::vector<std::string> train{"train", "--data", path("small.meld"), "--out", path("m.ckpt"),
                                 "--exclude", "3", "--history", path("h.csv")};
  train.insert(train.end(), net.begin(), net.end());
  const auto t = invoke(train);
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_TRUE(fs::exists(path("m.ckpt")));
  EXPECT_EQ(slurp(path("h.csv")).rfind("iteration,l_c,loss_train,loss_valid,l_meta\n", 0), 0u);

  const auto a = invoke({"adapt", "--model", path("m.ckpt"), "--data", path("small.meld"),
                         "--subject", "3", "--curve", path("curve.csv"), "--steps", "2"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(slurp(path("curve.csv")).rfind("step,l_c,accuracy\n", 0), 0u);

  std::vector<std::string> missing = train;
  missing[6] = "9";
  EXPECT_EQ(invoke(missing).code, kExitUsage);
}

TEST_F(CliTest, MissingInputIsRuntimeError) {
  const auto r = invoke({"loso", "--data", path("absent.meld"), "--out-dir", path("o")});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("absent.meld"), std::string::npos) << r.err;
}

TEST_F(CliTest, SelfcheckPasses) {
  const auto r = invoke({"selfcheck"});
  EXPECT_EQ(r.code, kExitOk) << r.err << r.out;
}

}  // namespace
}  // namespace melada::cli
