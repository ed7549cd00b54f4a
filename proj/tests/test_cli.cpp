#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bcirepair/cli.hpp"

using namespace bcirepair;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config(const fs::path& out) {
  auto j = nlohmann::json::parse(R"({
    "seed": 21,
    "trials": 2,
    "dataset": {"source": "synthetic", "kind": "discrete", "scenario": {
      "states": ["Rest", "LeftFist", "RightFist"],
      "illegal_transitions": [["LeftFist", "RightFist"], ["RightFist", "LeftFist"]],
      "means": [[0, 0], [3, 0], [0, 1.5]], "noise": 0.5, "weights": [0.5, 0.25, 0.25],
      "dwell": 20, "length": 2000}},
    "split": {"train_keep": {"RightFist": 0.2}},
    "decoder": {"type": "softmax", "learning_rate": 0.5, "epochs": 60},
    "oracles": {"illegal_transitions": [["LeftFist", "RightFist"], ["RightFist", "LeftFist"]]},
    "acquisition": {"strategies": ["fault_based", "natural"], "n": 80}
  })");
  j["output_dir"] = out.string();
  return j;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("bcirepair_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write_config(const nlohmann::json& j, const std::string& name = "config.json") const {
    const auto p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "bcirepair");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out.str("");
    err.str("");
    return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  }

  static std::string slurp(const fs::path& p) { return detail::read_file(p); }

  fs::path dir;
  std::ostringstream out, err;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"run"}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"run", "--config", (dir / "missing.json").string()}), 1);
  std::ofstream(dir / "bad.json") << "{not json";
  EXPECT_EQ(run({"run", "--config", (dir / "bad.json").string()}), 1);
  auto j = small_config(dir);
  j["acquisition"]["n"] = 0;
  EXPECT_EQ(run({"run", "--config", write_config(j).string()}), 1);
  EXPECT_FALSE(err.str().empty());
  EXPECT_EQ(run({"run", "--config", write_config(small_config(dir)).string(), "--strategies", "nonsense"}), 1);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}), 0); }

TEST_F(Cli, GenerateIsReproducible) {
  const auto cfg = write_config(small_config(dir / "a"));
  ASSERT_EQ(run({"generate", "--config", cfg.string()}), 0) << err.str();
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", (dir / "b").string()}), 0) << err.str();
  EXPECT_EQ(slurp(dir / "a" / "dataset.csv"), slurp(dir / "b" / "dataset.csv"));
  const auto m = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(m["length"], 2000);
  EXPECT_EQ(m["seed"], 21);
  EXPECT_EQ(m["checksum"], "fnv1a64:" + hex64(fnv1a64(slurp(dir / "a" / "dataset.csv"))));
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--seed", "22", "--out", (dir / "c").string()}), 0);
  EXPECT_NE(slurp(dir / "a" / "dataset.csv"), slurp(dir / "c" / "dataset.csv"));
}

TEST_F(Cli, RunWritesByteIdenticalReports) {
  auto j = small_config(dir / "a");
  j["write_sidecars"] = true;
  const auto cfg = write_config(j);
  ASSERT_EQ(run({"run", "--config", cfg.string()}), 0) << err.str();
  ASSERT_EQ(run({"run", "--config", cfg.string(), "--out", (dir / "b").string(), "--parallel-trials", "2"}), 0);
  EXPECT_EQ(slurp(dir / "a" / "experiment.json"), slurp(dir / "b" / "experiment.json"));
  for (const char* f : {"events.jsonl", "corrections.jsonl", "localization.json"}) EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "a" / "trial_00" / "slices.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "trial_01" / "events.jsonl"));
  const auto rep = nlohmann::json::parse(slurp(dir / "a" / "experiment.json"));
  EXPECT_EQ(rep["trials"].size(), 2u);
}

TEST_F(Cli, StrategiesOverride) {
  const auto cfg = write_config(small_config(dir));
  ASSERT_EQ(run({"run", "--config", cfg.string(), "--strategies", "natural,corrected_only"}), 0) << err.str();
  const auto rep = nlohmann::json::parse(slurp(dir / "experiment.json"));
  EXPECT_TRUE(rep["aggregates"].contains("natural"));
  EXPECT_TRUE(rep["aggregates"].contains("corrected_only"));
  EXPECT_FALSE(rep["aggregates"].contains("fault_based"));
}

TEST_F(Cli, AllTrialsFailingExitsTwo) {
  auto j = small_config(dir);
  j["dataset"]["scenario"]["length"] = 3;
  EXPECT_EQ(run({"run", "--config", write_config(j).string()}), 2);
  EXPECT_NE(err.str().find("trial 0 failed"), std::string::npos);
}

TEST_F(Cli, LocalizeFromFiles) {
  std::ofstream(dir / "events.jsonl") << "";
  std::ofstream(dir / "slices.csv") << "index,family,label\n0,task,A\n1,task,B\n2,task,A\n";
  ASSERT_EQ(run({"localize", "--events", (dir / "events.jsonl").string(), "--slices", (dir / "slices.csv").string(),
                 "--out", dir.string()}),
            0)
      << err.str();
  const auto j = nlohmann::json::parse(slurp(dir / "localization.json"));
  ASSERT_FALSE(j["entries"].empty());
  for (const auto& e : j["entries"]) EXPECT_EQ(e["test"]["testable"], false);

  std::ofstream(dir / "events.jsonl") << to_json(FaultEvent{FaultType::IllegalTransition, 0, 0, "x", ""}).dump()
                                      << "\n";
  ASSERT_EQ(run({"localize", "--events", (dir / "events.jsonl").string(), "--slices", (dir / "slices.csv").string(),
                 "--out", dir.string()}),
            0);
  EXPECT_EQ(run({"localize", "--events", (dir / "nope.jsonl").string(), "--slices", (dir / "slices.csv").string()}),
            2);
}

TEST_F(Cli, ExecutableExitCodes) {
  const std::string exe = BCIREPAIR_CLI_PATH;
  const auto code = [&](const std::string& args) {
    const int s = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(code("--help"), 0);
  EXPECT_EQ(code("run"), 1);
  const auto cfg = write_config(small_config(dir));
  EXPECT_EQ(code("generate --config " + cfg.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "dataset.csv"));
}
