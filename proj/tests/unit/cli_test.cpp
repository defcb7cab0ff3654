// Copyright (c) 2026 The dynnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dynnet/cli.hpp"
#include "dynnet/errors.hpp"
#include "dynnet/sim.hpp"

namespace dynnet {
namespace {

namespace fs = std::filesystem;

const std::string kFix = DYNNET_FIXTURES_DIR;

fs::path tmp_dir(const std::string& name) {
  const fs::path d = fs::path(DYNNET_TEST_TMP) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dynnet");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

TEST(Override, WalksSectionsAndParsesJson) {
  nlohmann::json cfg{{"acc_lo", 70.0}, {"min_levels", 1u}, {"name", "x"},
                     {"search", {{"seed", 1u}, {"lat_init", 15.0}, {"flag", false}}}};
  cli::apply_override(cfg, "acc_lo=72", {"search"});
  EXPECT_DOUBLE_EQ(cfg["acc_lo"].get<double>(), 72.0);
  cli::apply_override(cfg, "seed=9", {"search"});
  EXPECT_EQ(cfg["search"]["seed"], 9u);
  cli::apply_override(cfg, "search.lat_init=20.5", {});
  EXPECT_DOUBLE_EQ(cfg["search"]["lat_init"].get<double>(), 20.5);
  cli::apply_override(cfg, "flag=true", {"search"});
  EXPECT_TRUE(cfg["search"]["flag"].get<bool>());
  cli::apply_override(cfg, "name=hello", {});
  EXPECT_EQ(cfg["name"], "hello");
}

TEST(Override, RejectsBadAssignments) {
  nlohmann::json cfg{{"min_levels", 1u}, {"acc_lo", 70.0}, {"flag", false}};
  EXPECT_THROW(cli::apply_override(cfg, "min_levels", {}), InvalidInput);
  EXPECT_THROW(cli::apply_override(cfg, "nope=1", {}), InvalidInput);
  EXPECT_THROW(cli::apply_override(cfg, "min_levels=-1", {}), InvalidInput);
  EXPECT_THROW(cli::apply_override(cfg, "min_levels=1.5", {}), InvalidInput);
  EXPECT_THROW(cli::apply_override(cfg, "acc_lo=abc", {}), InvalidInput);
  EXPECT_THROW(cli::apply_override(cfg, "flag=1", {}), InvalidInput);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, cli::kExitInput);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitInput);
  EXPECT_EQ(run_cli({"profile", "--out", "x.csv"}).code, cli::kExitInput);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(Cli, ProfileWritesEveryEntry) {
  const auto dir = tmp_dir("cli_profile");
  const auto r = run_cli({"profile", "--device", "gpu-like", "--seed", "3", "--out",
                          (dir / "t.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote 4700 entries"), std::string::npos);
  EXPECT_EQ(run_cli({"profile", "--device", "tpu-like", "--out", (dir / "u.csv").string()}).code,
            cli::kExitInput);
  EXPECT_EQ(run_cli({"profile", "--device", "gpu-like", "--space", (dir / "none.json").string(),
                     "--out", (dir / "v.csv").string()})
                .code,
            cli::kExitInput);
}

TEST(Cli, SearchInfeasibleExitsThree) {
  const auto dir = tmp_dir("cli_search");
  ASSERT_EQ(run_cli({"profile", "--device", "gpu-like", "--out", (dir / "t.csv").string()}).code, 0);
  const auto r = run_cli({"search", "--table", (dir / "t.csv").string(), "--config",
                          kFix + "/search_infeasible.json", "--out", (dir / "r.json").string()});
  EXPECT_EQ(r.code, cli::kExitInfeasible) << r.err;
  EXPECT_EQ(run_cli({"search", "--table", (dir / "t.csv").string(), "--config",
                     kFix + "/search_infeasible.json", "--set", "bogus=1", "--out",
                     (dir / "r.json").string()})
                .code,
            cli::kExitInput);
}

TEST(Cli, SimulateAndReport) {
  const auto dir = tmp_dir("cli_sim");
  const auto trace = (dir / "trace.csv").string();
  const auto summary = (dir / "summary.json").string();
  auto r = run_cli({"simulate", "--manifest", kFix + "/scenarios/manifest.json", "--scenario",
                    kFix + "/scenarios/constraint_change.json", "--set", "rtm.dwell=2", "--summary",
                    summary, "--out", trace});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(load_trace(trace).empty());
  r = run_cli({"report", "--trace", trace});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("models"));
  std::ifstream in(summary);
  EXPECT_EQ(nlohmann::json::parse(in), j);

  EXPECT_EQ(run_cli({"simulate", "--manifest", kFix + "/scenarios/manifest.json", "--scenario",
                     kFix + "/scenarios/constraint_change.json", "--mode", "psychic", "--out", trace})
                .code,
            cli::kExitInput);
  EXPECT_EQ(run_cli({"simulate", "--manifest", kFix + "/scenarios/manifest.json", "--scenario",
                     kFix + "/scenarios/constraint_change.json", "--set", "dwell=0", "--out", trace})
                .code,
            cli::kExitInput);
}

TEST(Cli, ScenarioErrorsExitFour) {
  const auto dir = tmp_dir("cli_scenario");
  write(dir / "bad_device.json", R"({"duration_ms": 100, "models": [
      {"model_id": "A", "device": "tpu", "constraint_ms": 50}]})");
  write(dir / "unsorted.json", R"({"duration_ms": 100, "models": [
      {"model_id": "A", "device": "gpu-a", "constraint_ms": 50}],
      "events": [{"at_ms": 20, "kind": "stop_background"},
                 {"at_ms": 10, "kind": "stop_background"}]})");
  write(dir / "bad_manifest.json", R"({"duration_ms": 100, "models": [
      {"model_id": "A", "manifest": "missing.json", "device": "gpu-a", "constraint_ms": 50}]})");
  for (const char* name : {"bad_device.json", "unsorted.json", "bad_manifest.json"}) {
    const auto r = run_cli({"simulate", "--manifest", kFix + "/scenarios/manifest.json", "--scenario",
                            (dir / name).string(), "--out", (dir / "t.csv").string()});
    EXPECT_EQ(r.code, cli::kExitScenario) << name << ": " << r.err;
  }
}

TEST(Cli, ReportOnEmptyTraceExitsTwo) {
  const auto dir = tmp_dir("cli_report");
  write(dir / "empty.csv", std::string(kTraceHeader) + "\n");
  EXPECT_EQ(run_cli({"report", "--trace", (dir / "empty.csv").string()}).code, cli::kExitInput);
  EXPECT_EQ(run_cli({"report", "--trace", (dir / "missing.csv").string()}).code, cli::kExitInput);
}

}  // namespace
}  // namespace dynnet
