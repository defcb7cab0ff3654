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

#include "dynnet/rtm.hpp"

#include <numeric>

#include <nlohmann/json.hpp>

#include "dynnet/errors.hpp"

namespace dynnet {

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw InvalidInput("sliding window capacity must be >= 1");
  block_.reserve(capacity_);
}

std::optional<double> SlidingWindow::push(double latency_ms) {
  block_.push_back(latency_ms);
  if (block_.size() < capacity_) return std::nullopt;
  const double mean =
      std::accumulate(block_.begin(), block_.end(), 0.0) / static_cast<double>(block_.size());
  block_.clear();
  return mean;
}

bool RtmPolicyConfig::valid() const {
  return window >= 1 && violation_margin >= 0.0 && violation_margin < 1.0 &&
         upgrade_headroom >= 0.0 && upgrade_headroom < 1.0 && dwell >= 1 && settle >= 1;
}

void RtmPolicyConfig::check() const {
  if (!valid()) {
    throw InvalidInput(
        "rtm config: need window >= 1, margins in [0, 1), dwell >= 1, settle >= 1");
  }
}

const char* mode_name(RtmMode mode) {
  switch (mode) {
    case RtmMode::lookup: return "lookup";
    case RtmMode::reactive: return "reactive";
    case RtmMode::collective: return "collective";
  }
  return "?";
}

RtmMode parse_mode(const std::string& name) {
  if (name == "lookup") return RtmMode::lookup;
  if (name == "reactive") return RtmMode::reactive;
  if (name == "collective") return RtmMode::collective;
  throw InvalidInput("unknown mode '" + name + "' (expected lookup, reactive or collective)");
}

ManagedModel::ManagedModel(std::string id, DeviceSection device, int initial_level,
                           double constraint, const RtmPolicyConfig& policy)
    : model_id(std::move(id)),
      section(std::move(device)),
      level(initial_level),
      constraint_ms(constraint),
      window(policy.window) {
  section.level(level);
  if (!(constraint_ms > 0.0)) throw InvalidInput("model '" + model_id + "': constraint must be > 0");
}

std::optional<double> record_inference(ManagedModel& model, double latency_ms) {
  if (!(latency_ms > 0.0)) throw InvalidInput("latency must be > 0");
  return model.window.push(latency_ms);
}

namespace {

bool violates(const ManagedModel& m, double avg, const RtmPolicyConfig& p) {
  return avg > m.constraint_ms * (1.0 + p.violation_margin);
}

// Updates the per-window counters; returns whether the model may act.
bool observe(ManagedModel& m, double avg, const RtmPolicyConfig& p) {
  ++m.windows_since_switch;
  if (avg < m.constraint_ms * (1.0 - p.upgrade_headroom)) {
    ++m.windows_satisfied;
  } else {
    m.windows_satisfied = 0;
  }
  return m.windows_since_switch >= p.settle;
}

bool can_upgrade(const ManagedModel& m, double avg, const RtmPolicyConfig& p) {
  if (m.level >= static_cast<int>(m.section.levels.size())) return false;
  if (m.windows_satisfied < p.dwell) return false;
  if (!p.predictive_upgrade) return true;
  const double predicted = avg * m.section.level(m.level + 1).lat / m.active().lat;
  return !violates(m, predicted, p);
}

void apply(ManagedModel& m, const Decision& d) {
  if (!d.is_switch()) return;
  m.level = d.to_level;
  m.window.reset();
  m.windows_since_switch = 0;
  m.windows_satisfied = 0;
}

Decision stay(const ManagedModel& m, std::string reason) {
  return Decision{m.level, m.level, false, std::move(reason)};
}

}  // namespace

Decision decide_single(ManagedModel& model, double window_avg, RtmMode mode,
                       const RtmPolicyConfig& policy) {
  policy.check();
  if (!observe(model, window_avg, policy)) return stay(model, "settle");

  Decision d = stay(model, "stay");
  if (mode == RtmMode::lookup) {
    try {
      d.to_level = lookup_level(model.section, LevelConstraint{model.constraint_ms, std::nullopt});
      d.reason = "lookup";
    } catch (const NoFeasibleLevel&) {
      d.to_level = 1;
      d.unsatisfiable = true;
      d.reason = "unsatisfiable";
    }
    if (!d.is_switch() && !d.unsatisfiable) d.reason = "stay";
  } else if (violates(model, window_avg, policy)) {
    if (model.level > 1) {
      d.to_level = model.level - 1;
      d.reason = "violation";
    } else {
      d.unsatisfiable = true;
      d.reason = "unsatisfiable";
    }
  } else if (can_upgrade(model, window_avg, policy)) {
    d.to_level = model.level + 1;
    d.reason = "headroom";
  }
  apply(model, d);
  return d;
}

std::vector<Decision> decide_collective(std::vector<ManagedModel*>& models,
                                        const std::vector<double>& avgs,
                                        const RtmPolicyConfig& policy) {
  policy.check();
  if (models.size() != avgs.size()) {
    throw InvalidInput("decide_collective: one window average per model required");
  }
  std::vector<Decision> out;
  std::vector<bool> eligible;
  out.reserve(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    eligible.push_back(observe(*models[i], avgs[i], policy));
    out.push_back(stay(*models[i], eligible.back() ? "stay" : "settle"));
  }

  bool any_violation = false;
  std::optional<std::size_t> down;
  double worst = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const ManagedModel& m = *models[i];
    if (!violates(m, avgs[i], policy)) continue;
    any_violation = true;
    if (m.level == 1) {
      out[i].unsatisfiable = true;
      out[i].reason = "unsatisfiable";
      continue;
    }
    const double ratio = avgs[i] / m.constraint_ms;
    if (eligible[i] && (!down || ratio > worst)) {
      down = i;
      worst = ratio;
    }
  }
  if (down) {
    out[*down].to_level = models[*down]->level - 1;
    out[*down].reason = "violation";
  } else if (!any_violation) {
    std::optional<std::size_t> up;
    double best = 0.0;
    for (std::size_t i = 0; i < models.size(); ++i) {
      const ManagedModel& m = *models[i];
      if (!eligible[i] || !can_upgrade(m, avgs[i], policy)) continue;
      const double headroom = 1.0 - avgs[i] / m.constraint_ms;
      if (!up || headroom > best) {
        up = i;
        best = headroom;
      }
    }
    if (up) {
      out[*up].to_level = models[*up]->level + 1;
      out[*up].reason = "headroom";
    }
  }
  for (std::size_t i = 0; i < models.size(); ++i) apply(*models[i], out[i]);
  return out;
}

void to_json(nlohmann::json& j, const RtmPolicyConfig& cfg) {
  j = nlohmann::json{{"window", cfg.window},
                     {"violation_margin", cfg.violation_margin},
                     {"upgrade_headroom", cfg.upgrade_headroom},
                     {"dwell", cfg.dwell},
                     {"settle", cfg.settle},
                     {"predictive_upgrade", cfg.predictive_upgrade}};
}

void from_json(const nlohmann::json& j, RtmPolicyConfig& cfg) {
  RtmPolicyConfig c;
  c.window = j.value("window", c.window);
  c.violation_margin = j.value("violation_margin", c.violation_margin);
  c.upgrade_headroom = j.value("upgrade_headroom", c.upgrade_headroom);
  c.dwell = j.value("dwell", c.dwell);
  c.settle = j.value("settle", c.settle);
  c.predictive_upgrade = j.value("predictive_upgrade", c.predictive_upgrade);
  cfg = c;
}

void to_json(nlohmann::json& j, const DecisionEvent& e) {
  j = nlohmann::json{{"t_ms", e.t_ms},
                     {"model_id", e.model_id},
                     {"old_level", e.old_level},
                     {"new_level", e.new_level},
                     {"window_avg_ms", e.window_avg_ms},
                     {"reason", e.reason}};
}

}  // namespace dynnet
