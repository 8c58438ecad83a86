#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ambipose/cli.hpp"
#include "ambipose/error.hpp"

using namespace ambipose;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ambipose_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

int summary_int(const fs::path& summary, const std::string& key) {
  std::ifstream in(summary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with(key + " ") || line.starts_with(key + "=") || line.starts_with(key + ":")) {
      return std::stoi(line.substr(line.find_first_of(" =:") + 1));
    }
  }
  return -1;
}

}  // namespace

TEST_F(CliTest, ConfigErrorsCarryLineNumbers) {
  RunConfig c;
  try {
    apply_config_text("[ambiguity]\nsigma_o = 0.3\n\nbogus = 1\n", "run.conf", c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.conf:4"), std::string::npos) << e.what();
  }
  try {
    apply_config_text("[graph]\nmax_iterations = many\n", "run.conf", c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.conf:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(apply_config_text("[graph\n", "x", c), ConfigError);
  EXPECT_THROW(apply_config_text("no equals sign\n", "x", c), ConfigError);
}

TEST_F(CliTest, PrecedenceIsFlagThenFileThenDefault) {
  const auto conf = write("p.conf", "[ambiguity]\nsigma_o = 0.25\n[pose_init]\nsigma_icp = 0.2\n[scenario]\nseed = 7\n");
  const RunConfig defaults = resolve_config({});
  EXPECT_EQ(defaults.sigma_o, kDefaultSigmaO);
  EXPECT_EQ(defaults.scenario.seed, 1u);

  const RunConfig file = resolve_config({"--config", conf.string()});
  EXPECT_EQ(file.sigma_o, 0.25);
  EXPECT_EQ(file.sigma_icp, 0.2);
  EXPECT_EQ(file.scenario.seed, 7u);
  EXPECT_TRUE(file.icp);

  const RunConfig both = resolve_config({"--config", conf.string(), "--sigma-o", "0.35", "--no-icp"});
  EXPECT_EQ(both.sigma_o, 0.35);
  EXPECT_EQ(both.sigma_icp, 0.2);
  EXPECT_EQ(both.scenario.seed, 7u);
  EXPECT_FALSE(both.icp);

  EXPECT_EQ(resolve_config({"--seed", "11", "--config", conf.string()}).scenario.seed, 11u);
}

TEST_F(CliTest, InvalidValuesAreConfigErrors) {
  EXPECT_THROW(resolve_config({"--sigma-o", "-1"}), ConfigError);
  EXPECT_THROW(resolve_config({"--sweep-sigma-o", "0.5:0.1:0.1"}), ConfigError);
  EXPECT_EQ(run({"--sigma-o", "0", "--out", (dir_ / "o").string()}), kExitConfig);
  EXPECT_EQ(run({"--bogus-flag"}), kExitUsage);
}

TEST_F(CliTest, MissingPathsExitWithIoCode) {
  EXPECT_EQ(run({"--config", "/nonexistent/run.conf"}), kExitIo);
  EXPECT_NE(err_.str().find("/nonexistent/run.conf"), std::string::npos);
  EXPECT_EQ(run({"--replay", "/nonexistent/m.txt", "--out", (dir_ / "o").string()}), kExitIo);
  EXPECT_NE(err_.str().find("/nonexistent/m.txt"), std::string::npos);
}

TEST_F(CliTest, DemoRunWritesEverything) {
  const fs::path out = dir_ / "demo";
  ASSERT_EQ(run({"--out", out.string(), "--dump-graph"}), kExitOk) << err_.str();
  for (const char* f : {"measurements.txt", "proposals.csv", "optimized.csv", "metrics.csv", "cost_trace.csv",
                        "graph.txt", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_NE(err_.str().find("valid axes: "), std::string::npos);
  double raw = 0, opt = 0;
  std::istringstream line(out_.str().substr(out_.str().find("raw") + 3));
  std::string word;
  line >> raw >> word >> opt;
  EXPECT_EQ(word, "optimized");
  EXPECT_GT(raw, 0.0);
  EXPECT_LT(opt, raw);
}

TEST_F(CliTest, RepeatedRunsAndReplayAreByteIdentical) {
  const fs::path a = dir_ / "a", b = dir_ / "b", r = dir_ / "r";
  ASSERT_EQ(run({"--out", a.string(), "--seed", "4"}), kExitOk);
  ASSERT_EQ(run({"--out", b.string(), "--seed", "4"}), kExitOk);
  for (const char* f : {"measurements.txt", "proposals.csv", "optimized.csv", "metrics.csv", "summary.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  ASSERT_EQ(run({"--out", r.string(), "--replay", (a / "measurements.txt").string()}), kExitOk) << err_.str();
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(r / "metrics.csv"));
  EXPECT_EQ(slurp(a / "optimized.csv"), slurp(r / "optimized.csv"));
}

TEST_F(CliTest, ReplayWithOtherThresholdChangesValidAxes) {
  const fs::path a = dir_ / "a", r = dir_ / "r";
  ASSERT_EQ(run({"--out", a.string()}), kExitOk);
  ASSERT_EQ(run({"--out", r.string(), "--replay", (a / "measurements.txt").string(), "--sigma-o", "0.2"}), kExitOk);
  const int before = summary_int(a / "summary.txt", "valid_axes");
  const int after = summary_int(r / "summary.txt", "valid_axes");
  ASSERT_GT(before, 0);
  EXPECT_LT(after, before);
  EXPECT_EQ(slurp(a / "measurements.txt"), slurp(r / "measurements.txt"));
}

TEST_F(CliTest, SweepWritesOneRowPerValue) {
  const fs::path out = dir_ / "s";
  ASSERT_EQ(run({"--out", out.string(), "--sweep-sigma-o", "0:0.6:0.05"}), kExitOk) << err_.str();
  const std::string csv = slurp(out / "sweep.csv");
  EXPECT_EQ(count_lines(csv), 14u);
  EXPECT_TRUE(csv.starts_with("sigma_o,valid_axes,accepted,ar_raw,ar_optimized\n"));
  EXPECT_NE(csv.find("\n0.15,"), std::string::npos);
  EXPECT_NE(csv.find("\n0.6,"), std::string::npos);
}
