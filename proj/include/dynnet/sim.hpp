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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynnet/family.hpp"
#include "dynnet/rtm.hpp"

namespace dynnet {

/// base * c / f * jitter. Requires c >= 1, 0 < f <= 1, jitter > 0.
double effective_latency(double base_ms, double contention, double frequency, double jitter);

struct ScenarioModel {
  std::string model_id;
  std::string manifest;  // key into the manifest map; empty selects the default
  std::string device;
  double constraint_ms = 0.0;
  std::optional<int> initial_level;  // empty means "auto"
};

enum class EventKind { set_constraint, start_background, stop_background, set_frequency };

const char* event_kind_name(EventKind kind);

struct ScenarioEvent {
  double at_ms = 0.0;
  EventKind kind = EventKind::set_constraint;
  std::string model;     // set_constraint only
  double value_ms = 0.0; // set_constraint only
  double factor = 1.0;   // slowdown or frequency factor
};

struct Scenario {
  double duration_ms = 0.0;
  std::uint64_t seed = 0;
  double noise = 0.02;
  std::vector<ScenarioModel> models;
  std::vector<ScenarioEvent> events;

  /// Throws ScenarioError on semantic problems.
  void validate() const;
};

void from_json(const nlohmann::json& j, Scenario& s);
void to_json(nlohmann::json& j, const Scenario& s);

/// Parses scenario JSON. Malformed JSON or missing fields raise
/// InvalidInput; semantic problems raise ScenarioError.
Scenario scenario_from_string(const std::string& text);
Scenario load_scenario(const std::string& path);

struct TraceRecord {
  double t_ms = 0.0;
  std::string model_id;
  int level = 0;
  double latency_ms = 0.0;
  std::optional<double> window_avg_ms;
  double constraint_ms = 0.0;
  double pred_acc = 0.0;
  // switch, stall, violation, event, infeasible
  std::vector<std::string> flags;

  bool has_flag(const std::string& flag) const;
};

struct SimResult {
  std::vector<TraceRecord> records;
  std::vector<DecisionEvent> decisions;
};

/**
 * Runs the scenario. Each model runs inferences back to back; the latency
 * of an inference is fixed when it starts. Scenario events are applied
 * before completions that share a timestamp. A switch appends a stall
 * record of the device switch cost and resets the window. In collective
 * mode a round runs once every model has a fresh window average.
 *
 * `manifests` maps a model's manifest key to its manifest ("" is the
 * default). Throws ScenarioError for unresolvable references.
 */
SimResult run_scenario(const Scenario& scenario, const std::map<std::string, FamilyManifest>& manifests,
                       const RtmPolicyConfig& policy, RtmMode mode);

inline constexpr const char* kTraceHeader =
    "t_ms,model_id,level,latency_ms,window_avg_ms,constraint_ms,pred_acc,flags";

std::string trace_to_csv(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> trace_from_csv(const std::string& text);
void save_trace(const std::string& path, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> load_trace(const std::string& path);

/**
 * Per-model summary of a trace: switches, stall time, violation ratio,
 * level occupancy and phases. A phase starts at the first record flagged
 * `event`; its reaction is the number of inferences from the phase start
 * to the last switch inside it. Throws EmptyInput on an empty trace.
 */
nlohmann::json summarize_trace(const std::vector<TraceRecord>& records);

}  // namespace dynnet
