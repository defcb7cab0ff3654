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

#include <nlohmann/json.hpp>

#include "dynnet/errors.hpp"
#include "dynnet/sim.hpp"
#include "oracles.hpp"

namespace dynnet {
namespace {

const std::vector<double> kLat{22, 30, 41, 55, 68, 92};
const std::vector<double> kAcc{73.0, 74.6, 75.9, 77.2, 78.0, 78.9};

std::map<std::string, FamilyManifest> manifests() {
  return {{"", oracle::level_manifest("gpu", kLat, kAcc)}};
}

Scenario basic(double constraint, std::optional<int> level = std::nullopt) {
  Scenario s;
  s.duration_ms = 3000;
  s.seed = 5;
  s.models.push_back({"A", "", "gpu", constraint, level});
  return s;
}

TEST(EffectiveLatency, Examples) {
  EXPECT_DOUBLE_EQ(effective_latency(50, 1.0, 1.0, 1.0), 50.0);
  EXPECT_DOUBLE_EQ(effective_latency(50, 1.6, 1.0, 1.0), 80.0);
  EXPECT_DOUBLE_EQ(effective_latency(50, 1.0, 0.5, 1.0), 100.0);
  EXPECT_THROW(effective_latency(50, 0.9, 1.0, 1.0), InvalidInput);
  EXPECT_THROW(effective_latency(50, 1.0, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(effective_latency(50, 1.0, 1.0, 0.0), InvalidInput);
}

TEST(Scenario, ParsesAndValidates) {
  const auto s = scenario_from_string(R"({"duration_ms": 100, "models": [
      {"model_id": "A", "device": "gpu", "constraint_ms": 50, "initial_level": "auto"}],
      "events": [{"at_ms": 10, "kind": "set_frequency", "factor": 0.5},
                 {"at_ms": 20, "kind": "start_background", "slowdown": 1.5}]})");
  EXPECT_FALSE(s.models[0].initial_level);
  EXPECT_DOUBLE_EQ(s.events[1].factor, 1.5);
  const nlohmann::json j = s;
  EXPECT_EQ(j.get<Scenario>().events.size(), 2u);

  EXPECT_THROW(scenario_from_string("{"), InvalidInput);
  EXPECT_THROW(scenario_from_string(R"({"models": []})"), InvalidInput);
  EXPECT_THROW(scenario_from_string(R"({"duration_ms": 100, "models": []})"), ScenarioError);
  EXPECT_THROW(scenario_from_string(R"({"duration_ms": 100, "models": [
      {"model_id": "A", "device": "gpu", "constraint_ms": 50}],
      "events": [{"at_ms": 10, "kind": "set_constraint", "model": "B", "value_ms": 3}]})"),
               ScenarioError);
  EXPECT_THROW(scenario_from_string(R"({"duration_ms": 100, "models": [
      {"model_id": "A", "device": "gpu", "constraint_ms": 50}],
      "events": [{"at_ms": 20, "kind": "stop_background"},
                 {"at_ms": 10, "kind": "stop_background"}]})"),
               ScenarioError);
  EXPECT_THROW(scenario_from_string(R"({"duration_ms": 100, "models": [
      {"model_id": "A", "device": "gpu", "constraint_ms": 50}],
      "events": [{"at_ms": 10, "kind": "start_background", "slowdown": 0.5}]})"),
               ScenarioError);
  EXPECT_THROW(scenario_from_string(R"({"duration_ms": 100, "models": [
      {"model_id": "A", "device": "gpu", "constraint_ms": 50}],
      "events": [{"at_ms": 10, "kind": "explode"}]})"),
               InvalidInput);
}

TEST(Run, UnresolvableReferences) {
  auto s = basic(50);
  s.models[0].device = "tpu";
  EXPECT_THROW(run_scenario(s, manifests(), {}, RtmMode::reactive), ScenarioError);
  s = basic(50);
  s.models[0].manifest = "other";
  EXPECT_THROW(run_scenario(s, manifests(), {}, RtmMode::reactive), ScenarioError);
  s = basic(50, 9);
  EXPECT_THROW(run_scenario(s, manifests(), {}, RtmMode::reactive), ScenarioError);
}

TEST(Run, DeterministicForSeed) {
  auto s = basic(35, 6);
  const auto a = trace_to_csv(run_scenario(s, manifests(), {}, RtmMode::reactive).records);
  const auto b = trace_to_csv(run_scenario(s, manifests(), {}, RtmMode::reactive).records);
  EXPECT_EQ(a, b);
  s.seed = 6;
  EXPECT_NE(trace_to_csv(run_scenario(s, manifests(), {}, RtmMode::reactive).records), a);
}

TEST(Run, TimeIsConservedAndStallsMatchSwitchCost) {
  for (auto mode : {RtmMode::reactive, RtmMode::lookup}) {
    auto s = basic(35, 6);
    s.events.push_back({1500, EventKind::set_constraint, "A", 80, 1.0});
    const auto res = run_scenario(s, manifests(), {}, mode);
    EXPECT_EQ(oracle::check_trace(res.records, 73.0), "");
    std::size_t switches = 0;
    for (const auto& r : res.records) switches += r.has_flag("switch");
    EXPECT_EQ(switches, res.decisions.size());
    EXPECT_GT(switches, 0u);
  }
}

TEST(Run, NoiseFreeLatencyIsExact) {
  auto s = basic(100, 3);
  s.noise = 0.0;
  s.events.push_back({500, EventKind::start_background, "", 0, 2.0});
  const auto res = run_scenario(s, manifests(), {}, RtmMode::reactive);
  ASSERT_FALSE(res.records.empty());
  EXPECT_DOUBLE_EQ(res.records.front().latency_ms, 41.0);
  EXPECT_DOUBLE_EQ(res.records.front().t_ms, 41.0);
  for (const auto& r : res.records) {
    if (r.has_flag("stall")) continue;
    const double base = kLat[static_cast<std::size_t>(r.level - 1)];
    EXPECT_TRUE(r.latency_ms == base || r.latency_ms == 2.0 * base) << r.t_ms;
    EXPECT_LE(r.t_ms - r.latency_ms, s.duration_ms);
  }
}

TEST(Run, AutoStartUsesLookup) {
  const auto res = run_scenario(basic(65), manifests(), {}, RtmMode::reactive);
  EXPECT_EQ(res.records.front().level, 4);
  EXPECT_DOUBLE_EQ(res.records.front().pred_acc, 77.2);
}

TEST(Trace, CsvRoundTrip) {
  auto s = basic(35, 6);
  const auto res = run_scenario(s, manifests(), {}, RtmMode::reactive);
  const auto csv = trace_to_csv(res.records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kTraceHeader);
  EXPECT_EQ(trace_to_csv(trace_from_csv(csv)), csv);
  EXPECT_THROW(trace_from_csv("t_ms,model_id\n1,A\n"), InvalidInput);
  EXPECT_THROW(trace_from_csv(std::string(kTraceHeader) + "\n1,A,2\n"), InvalidInput);
}

TEST(Summary, ConstantLevelHasNoReactions) {
  std::vector<TraceRecord> rows;
  for (int i = 1; i <= 20; ++i) {
    TraceRecord r;
    r.t_ms = 30.0 * i;
    r.model_id = "A";
    r.level = 2;
    r.latency_ms = 30.0;
    r.constraint_ms = 50.0;
    if (i % 10 == 0) r.window_avg_ms = 30.0;
    rows.push_back(r);
  }
  const auto j = summarize_trace(rows);
  const auto& m = j.at("models").at("A");
  EXPECT_EQ(m.at("inferences"), 20);
  EXPECT_EQ(m.at("switches"), 0);
  EXPECT_EQ(m.at("windows"), 2);
  EXPECT_EQ(m.at("reactions"), 0);
  EXPECT_DOUBLE_EQ(m.at("violation_ratio").get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(m.at("level_occupancy").at("2").get<double>(), 1.0);
  EXPECT_TRUE(m.at("phases").at(0).at("reaction_inferences").is_null());
  EXPECT_THROW(summarize_trace({}), EmptyInput);
}

TEST(Summary, ReactionCountsToLastSwitch) {
  std::vector<TraceRecord> rows;
  auto add = [&](double t, int level, std::vector<std::string> flags, double lat = 10.0) {
    TraceRecord r;
    r.t_ms = t;
    r.model_id = "A";
    r.level = level;
    r.latency_ms = lat;
    r.constraint_ms = 50.0;
    r.flags = std::move(flags);
    rows.push_back(r);
  };
  add(10, 3, {});
  add(20, 3, {"event"});
  add(30, 3, {});
  add(40, 3, {"switch"});
  add(113, 2, {"stall"}, 73.0);
  add(123, 2, {});
  add(133, 2, {"switch"});
  add(206, 1, {"stall"}, 73.0);
  add(216, 1, {});
  const auto m = summarize_trace(rows).at("models").at("A");
  EXPECT_EQ(m.at("phases").size(), 2u);
  EXPECT_EQ(m.at("phases").at(1).at("reaction_inferences"), 5);
  EXPECT_EQ(m.at("switches"), 2);
  EXPECT_DOUBLE_EQ(m.at("stall_ms").get<double>(), 146.0);
  EXPECT_EQ(m.at("inferences"), 7);
}

}  // namespace
}  // namespace dynnet
