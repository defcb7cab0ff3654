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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynnet/family.hpp"

namespace dynnet {

/// Non-overlapping block average: every `capacity`-th push emits the mean
/// of the block and starts a new one.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity = 10);

  std::optional<double> push(double latency_ms);
  void reset() { block_.clear(); }

  std::size_t capacity() const { return capacity_; }
  std::size_t filled() const { return block_.size(); }

 private:
  std::size_t capacity_;
  std::vector<double> block_;
};

struct RtmPolicyConfig {
  std::size_t window = 10;
  double violation_margin = 0.0;
  double upgrade_headroom = 0.10;
  std::size_t dwell = 3;
  std::size_t settle = 1;
  // Upgrade only if the next level, scaled by the observed slowdown of the
  // current one, is predicted to stay within the constraint.
  bool predictive_upgrade = true;

  bool valid() const;
  void check() const;
};

enum class RtmMode { lookup, reactive, collective };

const char* mode_name(RtmMode mode);
RtmMode parse_mode(const std::string& name);

struct ManagedModel {
  std::string model_id;
  DeviceSection section;
  int level = 1;
  double constraint_ms = 0.0;
  SlidingWindow window;
  // Windows emitted since the last switch; decisions wait for `settle`.
  std::size_t windows_since_switch = 0;
  std::size_t windows_satisfied = 0;

  ManagedModel() = default;
  ManagedModel(std::string id, DeviceSection device, int initial_level, double constraint,
               const RtmPolicyConfig& policy);

  const ManifestLevel& active() const { return section.level(level); }
};

/// Pushes one latency; returns the block mean when a window completes.
std::optional<double> record_inference(ManagedModel& model, double latency_ms);

struct Decision {
  int from_level = 0;
  int to_level = 0;
  // Set when the constraint cannot be met even at level 1.
  bool unsatisfiable = false;
  std::string reason;  // stay, settle, violation, headroom, lookup, unsatisfiable

  bool is_switch() const { return from_level != to_level; }
};

/**
 * One decision for one model after a window average. A switch is applied
 * to `model` (level updated, window and counters reset); the caller is
 * responsible for the stall.
 *
 * lookup: jump to lookup_level(constraint); no feasible level means level 1
 * plus the unsatisfiable flag.
 * reactive: step down one level on violation, step up one level after
 * `dwell` consecutive windows below constraint * (1 - headroom).
 */
Decision decide_single(ManagedModel& model, double window_avg, RtmMode mode,
                       const RtmPolicyConfig& policy);

/**
 * One coordination round over models sharing a device; `avgs[i]` is the
 * fresh window average of `models[i]`. At most one model switches: the
 * largest relative violator steps down, or, when every model is
 * satisfied, the dwell-qualified model with the largest relative headroom
 * steps up.
 */
std::vector<Decision> decide_collective(std::vector<ManagedModel*>& models,
                                        const std::vector<double>& avgs,
                                        const RtmPolicyConfig& policy);

struct DecisionEvent {
  double t_ms = 0.0;
  std::string model_id;
  int old_level = 0;
  int new_level = 0;
  double window_avg_ms = 0.0;
  std::string reason;
};

void to_json(nlohmann::json& j, const RtmPolicyConfig& cfg);
void from_json(const nlohmann::json& j, RtmPolicyConfig& cfg);
void to_json(nlohmann::json& j, const DecisionEvent& e);

}  // namespace dynnet
