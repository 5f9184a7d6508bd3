// Runs the installed-style binary end to end.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(GHOSTKIT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root = fs::temp_directory_path() /
           ("gk_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  void TearDown() override { fs::remove_all(root); }

  std::string dir(const std::string& name) const { return (root / name).string(); }

  void generate(const std::string& name, const std::string& extra = "") {
    ASSERT_EQ(run("generate --out " + dir(name) + " --size 16 --masks 120 --photons 100 --seed 3" + extra), 0);
  }

  fs::path root;
};

}  // namespace

TEST_F(Cli, GenerateIsDeterministic) {
  generate("a");
  generate("b");
  for (const char* f : {"phantom.gitk", "masks.gitk", "buckets.gitk", "clean_buckets.gitk", "phantom.pgm",
                        "manifest.json"})
    EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
  const auto m = read_json(root / "a" / "manifest.json");
  EXPECT_EQ(m["command"], "generate");
  EXPECT_GT(m["noise_fluctuation_ratio"].get<double>(), 0.0);
}

TEST_F(Cli, InfinitePhotonsCopyCleanBuckets) {
  ASSERT_EQ(run("generate --out " + dir("d") + " --size 8 --masks 30 --photons inf"), 0);
  const auto buckets = slurp(root / "d" / "buckets.gitk");
  const auto clean = slurp(root / "d" / "clean_buckets.gitk");
  // Same payload; metadata may differ.
  ASSERT_GT(buckets.size(), 32u + 30 * 8);
  EXPECT_EQ(buckets.substr(0, 24 + 30 * 8), clean.substr(0, 24 + 30 * 8));
}

TEST_F(Cli, ReconstructLsWritesReport) {
  generate("d");
  ASSERT_EQ(run("reconstruct --method ls --data " + dir("d") + " --out " + dir("r")), 0);
  for (const char* f : {"image.gitk", "image.pgm", "report.json", "manifest.json"}) EXPECT_TRUE(fs::exists(root / "r" / f)) << f;
  EXPECT_FALSE(fs::exists(root / "r" / "trace.csv"));
  const auto rep = read_json(root / "r" / "report.json");
  EXPECT_TRUE(rep.contains("metrics"));
  EXPECT_EQ(rep["config"]["method"], "ls");
}

TEST_F(Cli, ReconstructLearnedWritesTraceAndCheckpoint) {
  generate("d");
  ASSERT_EQ(run("reconstruct --method gidc --epochs 3 --features 2 --lambda 0.1 --data " + dir("d") + " --out " +
                dir("r")),
            0);
  EXPECT_TRUE(fs::exists(root / "r" / "checkpoint.gitk"));
  const auto trace = slurp(root / "r" / "trace.csv");
  EXPECT_EQ(trace.rfind("epoch,train_loss,cv_loss\n", 0), 0u);
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 5);  // header + epochs 0..3
  const auto m = read_json(root / "r" / "manifest.json");
  EXPECT_EQ(m["config"]["method"]["lambda"], 0.1);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  generate("d");
  EXPECT_EQ(run("reconstruct --method magic --data " + dir("d") + " --out " + dir("r")), 2);
  EXPECT_EQ(run("reconstruct --method ls --out " + dir("r")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("evaluate --image " + dir("d") + "/nope.gitk --reference " + dir("d") + "/phantom.gitk --out " +
                dir("e")),
            2);
  EXPECT_EQ(run("reconstruct --method ls --data " + dir("d") + " --reference " + dir("d") + "/nope.gitk --out " +
                dir("r2")),
            2);
  // Without a phantom in the data directory the metrics are simply skipped.
  fs::remove(root / "d" / "phantom.gitk");
  ASSERT_EQ(run("reconstruct --method ls --data " + dir("d") + " --out " + dir("r3")), 0);
  EXPECT_FALSE(read_json(root / "r3" / "report.json").contains("metrics"));
}

TEST_F(Cli, BudgetErrorExitsOne) {
  generate("d");
  const auto cfg = root / "cfg.json";
  std::ofstream(cfg) << R"({"method":"n2g","epochs":1,"memory_budget_mb":0.001})";
  EXPECT_EQ(run("reconstruct --method-config " + cfg.string() + " --data " + dir("d") + " --out " + dir("r")), 1);
}

TEST_F(Cli, EvaluateWritesMetricsAndFrc) {
  generate("d");
  const auto ref = dir("d") + "/phantom.gitk";
  ASSERT_EQ(run("evaluate --image " + ref + " --reference " + ref + " --out " + dir("e")), 0);
  const auto m = read_json(root / "e" / "metrics.json");
  for (const char* k : {"psnr", "ssim", "mse", "resolution"}) EXPECT_TRUE(m.contains(k)) << k;
  EXPECT_EQ(m["psnr"], "inf");
  EXPECT_EQ(slurp(root / "e" / "frc.csv").rfind("ring,frequency,correlation,samples,half_bit_threshold\n", 0), 0u);
}

TEST_F(Cli, SweepProducesOneRowPerLevelAndMethod) {
  ASSERT_EQ(run("sweep --levels 10,100 --methods ls,tv --repeats 2 --size 12 --masks 60 --out " + dir("s")), 0);
  const auto s = read_json(root / "s" / "sweep.json");
  ASSERT_TRUE(s.is_array());
  ASSERT_EQ(s.size(), 4u);
  const auto csv = slurp(root / "s" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST_F(Cli, GridsearchPicksFromGrid) {
  generate("d");
  ASSERT_EQ(run("gridsearch --method tv --lambdas 0.01,1 --data " + dir("d") + " --out " + dir("g")), 0);
  const auto g = read_json(root / "g" / "gridsearch.json");
  const double best = g["best_lambda"];
  EXPECT_TRUE(best == 0.01 || best == 1.0);
  EXPECT_EQ(g["rows"].size(), 2u);
}

TEST_F(Cli, ReplayReproducesOutputs) {
  generate("d");
  ASSERT_EQ(run("reconstruct --method tv --lambda 0.5 --data " + dir("d") + " --out " + dir("r")), 0);
  ASSERT_EQ(run("replay --manifest " + dir("r") + "/manifest.json --out " + dir("r2")), 0);
  for (const char* f : {"image.gitk", "image.pgm", "manifest.json"}) EXPECT_EQ(slurp(root / "r" / f), slurp(root / "r2" / f)) << f;
  auto a = read_json(root / "r" / "report.json");
  auto b = read_json(root / "r2" / "report.json");
  a.erase("wall_seconds");
  b.erase("wall_seconds");
  EXPECT_EQ(a, b);
}
