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

#include "dynnet/sim.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "dynnet/errors.hpp"
#include "dynnet/random.hpp"
#include "io_util.hpp"

namespace dynnet {

double effective_latency(double base_ms, double contention, double frequency, double jitter) {
  if (!(base_ms > 0.0)) throw InvalidInput("effective_latency: base must be > 0");
  if (!(contention >= 1.0)) throw InvalidInput("effective_latency: contention must be >= 1");
  if (!(frequency > 0.0 && frequency <= 1.0)) {
    throw InvalidInput("effective_latency: frequency must be in (0, 1]");
  }
  if (!(jitter > 0.0)) throw InvalidInput("effective_latency: jitter must be > 0");
  return base_ms * contention / frequency * jitter;
}

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::set_constraint: return "set_constraint";
    case EventKind::start_background: return "start_background";
    case EventKind::stop_background: return "stop_background";
    case EventKind::set_frequency: return "set_frequency";
  }
  return "?";
}

namespace {

EventKind parse_event_kind(const std::string& name) {
  for (auto k : {EventKind::set_constraint, EventKind::start_background,
                 EventKind::stop_background, EventKind::set_frequency}) {
    if (name == event_kind_name(k)) return k;
  }
  throw InvalidInput("scenario: unknown event kind '" + name + "'");
}

}  // namespace

void Scenario::validate() const {
  if (!(duration_ms > 0.0)) throw ScenarioError("scenario: duration_ms must be > 0");
  if (!(noise >= 0.0 && noise < 1.0)) throw ScenarioError("scenario: noise must be in [0, 1)");
  if (models.empty()) throw ScenarioError("scenario: no models");
  std::set<std::string> ids;
  for (const auto& m : models) {
    if (m.model_id.empty() || m.model_id.find_first_of(",|\n\r\"") != std::string::npos) {
      throw ScenarioError("scenario: invalid model_id '" + m.model_id + "'");
    }
    if (!ids.insert(m.model_id).second) {
      throw ScenarioError("scenario: duplicate model_id '" + m.model_id + "'");
    }
    if (!(m.constraint_ms > 0.0)) {
      throw ScenarioError("scenario: model '" + m.model_id + "' needs constraint_ms > 0");
    }
  }
  double last = 0.0;
  for (const auto& e : events) {
    if (!(e.at_ms >= 0.0)) throw ScenarioError("scenario: event before t=0");
    if (e.at_ms < last) throw ScenarioError("scenario: events must be sorted by at_ms");
    last = e.at_ms;
    switch (e.kind) {
      case EventKind::set_constraint:
        if (!ids.contains(e.model)) {
          throw ScenarioError("scenario: set_constraint refers to unknown model '" + e.model + "'");
        }
        if (!(e.value_ms > 0.0)) throw ScenarioError("scenario: set_constraint needs value_ms > 0");
        break;
      case EventKind::start_background:
        if (!(e.factor >= 1.0)) throw ScenarioError("scenario: slowdown must be >= 1");
        break;
      case EventKind::set_frequency:
        if (!(e.factor > 0.0 && e.factor <= 1.0)) {
          throw ScenarioError("scenario: frequency factor must be in (0, 1]");
        }
        break;
      case EventKind::stop_background:
        break;
    }
  }
}

void from_json(const nlohmann::json& j, Scenario& s) {
  Scenario out;
  try {
    j.at("duration_ms").get_to(out.duration_ms);
    out.seed = j.value("seed", std::uint64_t{0});
    out.noise = j.value("noise", 0.02);
    for (const auto& jm : j.at("models")) {
      ScenarioModel m;
      jm.at("model_id").get_to(m.model_id);
      m.manifest = jm.value("manifest", std::string{});
      jm.at("device").get_to(m.device);
      jm.at("constraint_ms").get_to(m.constraint_ms);
      if (jm.contains("initial_level")) {
        const auto& jl = jm.at("initial_level");
        if (jl.is_string()) {
          if (jl.get<std::string>() != "auto") {
            throw InvalidInput("scenario: initial_level must be \"auto\" or an integer");
          }
        } else {
          m.initial_level = jl.get<int>();
        }
      }
      out.models.push_back(std::move(m));
    }
    if (j.contains("events")) {
      for (const auto& je : j.at("events")) {
        ScenarioEvent e;
        je.at("at_ms").get_to(e.at_ms);
        e.kind = parse_event_kind(je.at("kind").get<std::string>());
        switch (e.kind) {
          case EventKind::set_constraint:
            je.at("model").get_to(e.model);
            je.at("value_ms").get_to(e.value_ms);
            break;
          case EventKind::start_background:
            e.factor = je.contains("slowdown") ? je.at("slowdown").get<double>()
                                               : je.at("factor").get<double>();
            break;
          case EventKind::set_frequency:
            je.at("factor").get_to(e.factor);
            break;
          case EventKind::stop_background:
            break;
        }
        out.events.push_back(std::move(e));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("scenario JSON: ") + e.what());
  }
  s = std::move(out);
}

void to_json(nlohmann::json& j, const Scenario& s) {
  auto models = nlohmann::json::array();
  for (const auto& m : s.models) {
    nlohmann::json jm{{"model_id", m.model_id},
                      {"device", m.device},
                      {"constraint_ms", m.constraint_ms}};
    if (!m.manifest.empty()) jm["manifest"] = m.manifest;
    if (m.initial_level) {
      jm["initial_level"] = *m.initial_level;
    } else {
      jm["initial_level"] = "auto";
    }
    models.push_back(std::move(jm));
  }
  auto events = nlohmann::json::array();
  for (const auto& e : s.events) {
    nlohmann::json je{{"at_ms", e.at_ms}, {"kind", event_kind_name(e.kind)}};
    switch (e.kind) {
      case EventKind::set_constraint:
        je["model"] = e.model;
        je["value_ms"] = e.value_ms;
        break;
      case EventKind::start_background: je["slowdown"] = e.factor; break;
      case EventKind::set_frequency: je["factor"] = e.factor; break;
      case EventKind::stop_background: break;
    }
    events.push_back(std::move(je));
  }
  j = nlohmann::json{{"duration_ms", s.duration_ms},
                     {"seed", s.seed},
                     {"noise", s.noise},
                     {"models", models},
                     {"events", events}};
}

Scenario scenario_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("scenario JSON: ") + e.what());
  }
  Scenario s = j.get<Scenario>();
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  return scenario_from_string(detail::read_file(path));
}

bool TraceRecord::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

namespace {

struct Runner {
  ManagedModel model;
  int run_level = 0;
  double run_latency = 0.0;
  bool pending_event = false;
  bool deferred_switch = false;
  std::optional<double> fresh_avg;
};

enum class EntryType { scenario_event = 0, completion = 1, start = 2 };

struct Entry {
  double t;
  EntryType type;
  std::uint64_t seq;
  std::size_t index;

  bool operator>(const Entry& o) const {
    return std::tie(t, type, seq) > std::tie(o.t, o.type, o.seq);
  }
};

}  // namespace

SimResult run_scenario(const Scenario& scenario,
                       const std::map<std::string, FamilyManifest>& manifests,
                       const RtmPolicyConfig& policy, RtmMode mode) {
  scenario.validate();
  policy.check();

  std::vector<Runner> runners;
  std::map<std::string, std::size_t> by_id;
  for (const auto& sm : scenario.models) {
    auto mit = manifests.find(sm.manifest);
    if (mit == manifests.end()) {
      throw ScenarioError("scenario: model '" + sm.model_id + "' refers to unknown manifest '" +
                          sm.manifest + "'");
    }
    auto dit = mit->second.devices.find(sm.device);
    if (dit == mit->second.devices.end()) {
      throw ScenarioError("scenario: model '" + sm.model_id + "' refers to unknown device '" +
                          sm.device + "'");
    }
    const DeviceSection& section = dit->second;
    int level = 1;
    if (sm.initial_level) {
      level = *sm.initial_level;
      if (level < 1 || level > static_cast<int>(section.levels.size())) {
        throw ScenarioError("scenario: model '" + sm.model_id + "' initial level " +
                            std::to_string(level) + " does not exist");
      }
    } else {
      try {
        level = lookup_level(section, LevelConstraint{sm.constraint_ms, std::nullopt});
      } catch (const NoFeasibleLevel&) {
        level = 1;
      }
    }
    by_id[sm.model_id] = runners.size();
    Runner runner;
    runner.model = ManagedModel(sm.model_id, section, level, sm.constraint_ms, policy);
    runners.push_back(std::move(runner));
  }

  Rng rng(scenario.seed);
  double contention = 1.0;
  double frequency = 1.0;
  SimResult result;

  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::uint64_t seq = 0;
  for (std::size_t i = 0; i < scenario.events.size(); ++i) {
    queue.push(Entry{scenario.events[i].at_ms, EntryType::scenario_event, seq++, i});
  }
  for (std::size_t i = 0; i < runners.size(); ++i) {
    queue.push(Entry{0.0, EntryType::start, seq++, i});
  }

  auto stall_record = [&](Runner& r, double t) {
    const double cost = r.model.section.switch_cost_ms;
    TraceRecord stall;
    stall.t_ms = t + cost;
    stall.model_id = r.model.model_id;
    stall.level = r.model.level;
    stall.latency_ms = cost;
    stall.constraint_ms = r.model.constraint_ms;
    stall.pred_acc = r.model.active().acc;
    stall.flags = {"stall"};
    result.records.push_back(std::move(stall));
    return t + cost;
  };

  auto log_decision = [&](const Runner& r, const Decision& d, double t, double avg) {
    result.decisions.push_back(
        DecisionEvent{t, r.model.model_id, d.from_level, d.to_level, avg, d.reason});
  };

  while (!queue.empty()) {
    const Entry entry = queue.top();
    queue.pop();
    const double t = entry.t;

    if (entry.type == EntryType::scenario_event) {
      const ScenarioEvent& e = scenario.events[entry.index];
      switch (e.kind) {
        case EventKind::set_constraint: {
          Runner& r = runners[by_id.at(e.model)];
          r.model.constraint_ms = e.value_ms;
          r.pending_event = true;
          break;
        }
        case EventKind::start_background:
          contention = e.factor;
          break;
        case EventKind::stop_background:
          contention = 1.0;
          break;
        case EventKind::set_frequency:
          frequency = e.factor;
          break;
      }
      if (e.kind != EventKind::set_constraint) {
        for (auto& r : runners) r.pending_event = true;
      }
      continue;
    }

    Runner& r = runners[entry.index];
    if (entry.type == EntryType::start) {
      if (t >= scenario.duration_ms) continue;
      const double jitter = 1.0 + scenario.noise * (2.0 * uniform_unit(rng) - 1.0);
      r.run_level = r.model.level;
      r.run_latency = effective_latency(r.model.active().lat, contention, frequency, jitter);
      queue.push(Entry{t + r.run_latency, EntryType::completion, seq++, entry.index});
      continue;
    }

    TraceRecord rec;
    rec.t_ms = t;
    rec.model_id = r.model.model_id;
    rec.level = r.run_level;
    rec.latency_ms = r.run_latency;
    rec.constraint_ms = r.model.constraint_ms;
    rec.pred_acc = r.model.section.level(r.run_level).acc;
    if (r.pending_event) {
      rec.flags.push_back("event");
      r.pending_event = false;
    }

    bool stall = false;
    if (r.deferred_switch) {
      r.deferred_switch = false;
      rec.flags.push_back("switch");
      stall = true;
    } else if (auto avg = record_inference(r.model, r.run_latency)) {
      rec.window_avg_ms = avg;
      if (*avg > r.model.constraint_ms * (1.0 + policy.violation_margin)) {
        rec.flags.push_back("violation");
      }
      if (mode != RtmMode::collective) {
        const Decision d = decide_single(r.model, *avg, mode, policy);
        if (d.unsatisfiable) rec.flags.push_back("infeasible");
        if (d.is_switch()) {
          rec.flags.push_back("switch");
          log_decision(r, d, t, *avg);
          stall = true;
        }
      } else {
        r.fresh_avg = avg;
        const bool all_fresh = std::all_of(runners.begin(), runners.end(),
                                           [](const Runner& x) { return x.fresh_avg.has_value(); });
        if (all_fresh) {
          std::vector<ManagedModel*> ptrs;
          std::vector<double> avgs;
          for (auto& x : runners) {
            ptrs.push_back(&x.model);
            avgs.push_back(*x.fresh_avg);
            x.fresh_avg.reset();
          }
          const auto decisions = decide_collective(ptrs, avgs, policy);
          for (std::size_t k = 0; k < runners.size(); ++k) {
            const Decision& d = decisions[k];
            if (k == entry.index && d.unsatisfiable) rec.flags.push_back("infeasible");
            if (!d.is_switch()) continue;
            log_decision(runners[k], d, t, avgs[k]);
            if (k == entry.index) {
              rec.flags.push_back("switch");
              stall = true;
            } else {
              runners[k].deferred_switch = true;
            }
          }
        }
      }
    }
    result.records.push_back(std::move(rec));

    const double next = stall ? stall_record(r, t) : t;
    queue.push(Entry{next, EntryType::start, seq++, entry.index});
  }
  return result;
}

std::string trace_to_csv(const std::vector<TraceRecord>& records) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : records) {
    out += detail::format_double(r.t_ms);
    out += ',';
    out += r.model_id;
    out += ',';
    out += std::to_string(r.level);
    out += ',';
    out += detail::format_double(r.latency_ms);
    out += ',';
    if (r.window_avg_ms) out += detail::format_double(*r.window_avg_ms);
    out += ',';
    out += detail::format_double(r.constraint_ms);
    out += ',';
    out += detail::format_double(r.pred_acc);
    out += ',';
    for (std::size_t i = 0; i < r.flags.size(); ++i) {
      if (i > 0) out += '|';
      out += r.flags[i];
    }
    out += '\n';
  }
  return out;
}

std::vector<TraceRecord> trace_from_csv(const std::string& text) {
  std::vector<TraceRecord> out;
  auto lines = detail::split(text, '\n');
  if (lines.empty() || lines[0] != kTraceHeader) {
    throw InvalidInput("trace CSV: expected header '" + std::string(kTraceHeader) + "'");
  }
  for (std::size_t n = 1; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 8) {
      throw InvalidInput("trace CSV line " + std::to_string(n + 1) + ": expected 8 fields");
    }
    TraceRecord r;
    r.t_ms = detail::parse_double(f[0], "t_ms");
    r.model_id = std::string(f[1]);
    r.level = detail::parse_int(f[2], "level");
    r.latency_ms = detail::parse_double(f[3], "latency_ms");
    if (!f[4].empty()) r.window_avg_ms = detail::parse_double(f[4], "window_avg_ms");
    r.constraint_ms = detail::parse_double(f[5], "constraint_ms");
    r.pred_acc = detail::parse_double(f[6], "pred_acc");
    if (!f[7].empty()) {
      for (auto flag : detail::split(f[7], '|')) r.flags.emplace_back(flag);
    }
    if (r.model_id.empty()) {
      throw InvalidInput("trace CSV line " + std::to_string(n + 1) + ": empty model_id");
    }
    if (!(r.latency_ms > 0.0)) {
      throw InvalidInput("trace CSV line " + std::to_string(n + 1) + ": latency must be > 0");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_trace(const std::string& path, const std::vector<TraceRecord>& records) {
  detail::write_file(path, trace_to_csv(records));
}

std::vector<TraceRecord> load_trace(const std::string& path) {
  return trace_from_csv(detail::read_file(path));
}

namespace {

struct PhaseStats {
  double start_ms = 0.0;
  double end_ms = 0.0;
  double constraint_ms = 0.0;
  std::size_t inferences = 0;
  double latency_sum = 0.0;
  std::size_t windows = 0;
  std::size_t violations = 0;
  std::size_t switches = 0;
  std::optional<std::size_t> reaction;
  int final_level = 0;

  nlohmann::json to_json() const {
    nlohmann::json j{
        {"start_ms", start_ms},
        {"end_ms", end_ms},
        {"constraint_ms", constraint_ms},
        {"inferences", inferences},
        {"mean_latency_ms", inferences ? latency_sum / static_cast<double>(inferences) : 0.0},
        {"windows", windows},
        {"violations", violations},
        {"violation_ratio",
         windows ? static_cast<double>(violations) / static_cast<double>(windows) : 0.0},
        {"switches", switches},
        {"final_level", final_level}};
    j["reaction_inferences"] = reaction ? nlohmann::json(*reaction) : nlohmann::json(nullptr);
    return j;
  }
};

}  // namespace

nlohmann::json summarize_trace(const std::vector<TraceRecord>& records) {
  if (records.empty()) throw EmptyInput("trace is empty");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const TraceRecord*>> per_model;
  for (const auto& r : records) {
    auto [it, inserted] = per_model.try_emplace(r.model_id);
    if (inserted) order.push_back(r.model_id);
    it->second.push_back(&r);
  }

  nlohmann::json models = nlohmann::json::object();
  std::size_t total_switches = 0;
  std::size_t total_windows = 0;
  std::size_t total_violations = 0;
  for (const auto& id : order) {
    const auto& rows = per_model.at(id);
    std::vector<PhaseStats> phases(1);
    std::map<int, std::size_t> occupancy;
    std::size_t inferences = 0;
    std::size_t switches = 0;
    std::size_t windows = 0;
    std::size_t violations = 0;
    double latency_sum = 0.0;
    double stall_ms = 0.0;
    for (const TraceRecord* r : rows) {
      if (r->has_flag("stall")) {
        stall_ms += r->latency_ms;
        continue;
      }
      if (r->has_flag("event") && phases.back().inferences > 0) phases.emplace_back();
      PhaseStats& p = phases.back();
      if (p.inferences == 0) {
        p.start_ms = r->t_ms;
        p.constraint_ms = r->constraint_ms;
      }
      p.end_ms = r->t_ms;
      ++p.inferences;
      p.latency_sum += r->latency_ms;
      p.final_level = r->level;
      ++inferences;
      latency_sum += r->latency_ms;
      ++occupancy[r->level];
      if (r->window_avg_ms) {
        ++p.windows;
        ++windows;
      }
      if (r->has_flag("violation")) {
        ++p.violations;
        ++violations;
      }
      if (r->has_flag("switch")) {
        ++p.switches;
        ++switches;
        p.reaction = p.inferences;
      }
    }
    nlohmann::json occ = nlohmann::json::object();
    for (const auto& [level, count] : occupancy) {
      occ[std::to_string(level)] =
          inferences ? static_cast<double>(count) / static_cast<double>(inferences) : 0.0;
    }
    auto jphases = nlohmann::json::array();
    std::size_t reactions = 0;
    for (const auto& p : phases) {
      jphases.push_back(p.to_json());
      if (p.reaction) ++reactions;
    }
    models[id] = nlohmann::json{
        {"inferences", inferences},
        {"final_t_ms", rows.back()->t_ms},
        {"mean_latency_ms", inferences ? latency_sum / static_cast<double>(inferences) : 0.0},
        {"switches", switches},
        {"stall_ms", stall_ms},
        {"windows", windows},
        {"violations", violations},
        {"violation_ratio",
         windows ? static_cast<double>(violations) / static_cast<double>(windows) : 0.0},
        {"level_occupancy", occ},
        {"reactions", reactions},
        {"phases", jphases}};
    total_switches += switches;
    total_windows += windows;
    total_violations += violations;
  }
  return nlohmann::json{
      {"models", models},
      {"switches", total_switches},
      {"violation_ratio", total_windows ? static_cast<double>(total_violations) /
                                              static_cast<double>(total_windows)
                                        : 0.0}};
}

}  // namespace dynnet
