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

#include "dynnet/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynnet/arch_space.hpp"
#include "dynnet/errors.hpp"
#include "dynnet/family.hpp"
#include "dynnet/predictors.hpp"
#include "dynnet/rtm.hpp"
#include "dynnet/search.hpp"
#include "dynnet/sim.hpp"
#include "io_util.hpp"

namespace dynnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_file(const std::string& path, const char* what) {
  try {
    return json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string(what) + " '" + path + "': " + e.what());
  }
}

json::json_pointer to_pointer(const std::string& dotted) {
  std::string ptr;
  for (auto part : detail::split(dotted, '.')) {
    if (part.empty()) throw InvalidInput("override: malformed key '" + dotted + "'");
    ptr += '/';
    ptr += part;
  }
  return json::json_pointer(ptr);
}

bool same_kind(const json& old_value, const json& new_value) {
  switch (old_value.type()) {
    case json::value_t::boolean: return new_value.is_boolean();
    case json::value_t::number_unsigned: return new_value.is_number_unsigned();
    case json::value_t::number_integer: return new_value.is_number_integer();
    case json::value_t::number_float: return new_value.is_number();
    case json::value_t::string: return new_value.is_string();
    default: return false;
  }
}

SearchSpace load_space(const std::optional<std::string>& path) {
  if (!path) return SearchSpace{};
  return parse_json_file(*path, "space").get<SearchSpace>();
}

void write_json(const std::string& path, const json& j) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  detail::write_file(path, j.dump(2) + "\n");
}

struct Options {
  std::optional<std::string> space;
  std::string device = "gpu-like";
  std::optional<std::string> device_id;
  double scale = 1.0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string table;
  std::optional<std::string> acc_model;
  std::optional<std::string> config;
  std::vector<std::string> sets;
  bool keep_evaluated = false;
  std::vector<std::string> reports;
  double switch_cost = kDefaultSwitchCostMs;
  std::size_t payload_bytes = kDefaultPayloadBytes;
  double payload_load = kDefaultPayloadLoadMs;
  std::string manifest;
  std::string scenario;
  std::string mode = "reactive";
  std::optional<std::string> summary;
  std::string trace;
};

int cmd_profile(const Options& o, std::ostream& out) {
  const SearchSpace space = load_space(o.space);
  LatencyTable table =
      generate_synthetic_profile(space, parse_device_kind(o.device), o.scale, o.seed.value_or(0));
  if (o.device_id) table.device_id = *o.device_id;
  save_latency_table(o.out, table);
  out << "wrote " << table.entries_us.size() << " entries for device '" << table.device_id
      << "' to " << o.out << "\n";
  return kExitOk;
}

int cmd_search(const Options& o, std::ostream& out) {
  const SearchSpace space = load_space(o.space);
  const LatencyTable table = load_latency_table(o.table);
  const AccuracyModel model =
      o.acc_model ? load_accuracy_model(*o.acc_model) : AccuracyModel::make_analytic(space);
  if (!(model.space == space)) {
    throw InvalidInput("accuracy model was built for a different search space");
  }

  json cfg_json = json(FamilySearchConfig{});
  if (o.config) {
    cfg_json = json(parse_json_file(*o.config, "search config").get<FamilySearchConfig>());
  }
  for (const auto& s : o.sets) apply_override(cfg_json, s, {"search"});
  FamilySearchConfig cfg;
  try {
    cfg = cfg_json.get<FamilySearchConfig>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("search config: ") + e.what());
  }
  if (o.seed) cfg.search.seed = *o.seed;

  const Evaluator eval{space, table, model};
  const SearchReport report = search_family(eval, cfg);
  json j = report;
  if (!o.keep_evaluated) j.erase("evaluated");
  write_json(o.out, j);

  out << "device '" << report.device_id << "': " << report.levels.levels.size() << " levels, "
      << report.evaluated.size() << " candidates evaluated\n";
  for (std::size_t i = 0; i < report.levels.levels.size(); ++i) {
    const Candidate& c = report.levels.levels[i];
    out << "  level " << (i + 1) << ": acc " << detail::format_double(c.acc) << " %, lat "
        << detail::format_double(c.lat) << " ms\n";
  }
  if (!report.feasible) {
    out << "infeasible: fewer than " << cfg.min_levels << " level(s) found in ["
        << detail::format_double(cfg.acc_lo) << ", " << detail::format_double(cfg.acc_hi)
        << "]\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int cmd_manifest(const Options& o, std::ostream& out) {
  std::vector<ParetoFamily> families;
  std::map<std::string, double> switch_costs;
  for (const auto& path : o.reports) {
    const json j = parse_json_file(path, "search report");
    ParetoFamily family;
    try {
      family = j.at("levels").get<ParetoFamily>();
    } catch (const json::exception& e) {
      throw InvalidInput("search report '" + path + "': " + e.what());
    }
    if (family.levels.empty()) {
      out << "report '" << path << "' has no levels\n";
      return kExitInfeasible;
    }
    switch_costs[family.device_id] = o.switch_cost;
    families.push_back(std::move(family));
  }
  PayloadStore store(o.payload_bytes, o.payload_load);
  const FamilyManifest manifest = build_manifest(families, store, switch_costs);
  save_manifest(o.out, manifest, &store);
  for (const auto& [id, section] : manifest.devices) {
    out << "device '" << id << "': " << section.levels.size() << " levels\n";
  }
  return kExitOk;
}

void print_summary(const json& summary, std::ostream& out) {
  out << "switches " << summary.at("switches").get<std::size_t>() << ", violation ratio "
      << detail::format_double(summary.at("violation_ratio").get<double>()) << "\n";
  for (const auto& [id, m] : summary.at("models").items()) {
    out << "model '" << id << "': " << m.at("switches").get<std::size_t>() << " switches\n";
    std::size_t k = 0;
    for (const auto& p : m.at("phases")) {
      out << "  phase " << k++ << ": constraint "
          << detail::format_double(p.at("constraint_ms").get<double>()) << " ms, mean latency "
          << detail::format_double(p.at("mean_latency_ms").get<double>())
          << " ms, violation ratio "
          << detail::format_double(p.at("violation_ratio").get<double>()) << ", final level "
          << p.at("final_level").get<int>() << "\n";
    }
  }
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const FamilyManifest manifest = load_manifest(o.manifest);
  const std::string scenario_text = detail::read_file(o.scenario);
  Scenario scenario = scenario_from_string(scenario_text);
  if (o.seed) scenario.seed = *o.seed;

  std::map<std::string, FamilyManifest> manifests{{"", manifest}};
  const fs::path base = fs::path(o.scenario).parent_path();
  for (const auto& m : scenario.models) {
    if (m.manifest.empty() || manifests.contains(m.manifest)) continue;
    try {
      manifests.emplace(m.manifest, load_manifest((base / m.manifest).string()));
    } catch (const InvalidInput& e) {
      throw ScenarioError("scenario: model '" + m.model_id + "': " + e.what());
    }
  }

  json policy_json = json(RtmPolicyConfig{});
  if (o.config) {
    policy_json = json(parse_json_file(*o.config, "rtm config").get<RtmPolicyConfig>());
  }
  for (const auto& s : o.sets) {
    const bool prefixed = s.rfind("rtm.", 0) == 0;
    apply_override(policy_json, prefixed ? s.substr(4) : s);
  }
  RtmPolicyConfig policy;
  try {
    policy = policy_json.get<RtmPolicyConfig>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("rtm config: ") + e.what());
  }
  policy.check();

  const SimResult result = run_scenario(scenario, manifests, policy, parse_mode(o.mode));
  save_trace(o.out, result.records);
  const json summary = summarize_trace(result.records);
  if (o.summary) write_json(*o.summary, summary);
  out << "wrote " << result.records.size() << " trace records to " << o.out << "\n";
  print_summary(summary, out);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const json summary = summarize_trace(load_trace(o.trace));
  if (o.out.empty()) {
    out << summary.dump(2) << "\n";
  } else {
    write_json(o.out, summary);
    print_summary(summary, out);
  }
  return kExitOk;
}

}  // namespace

void apply_override(json& config, const std::string& assignment,
                    const std::vector<std::string>& sections) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidInput("override '" + assignment + "': expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  std::optional<json::json_pointer> target;
  const auto direct = to_pointer(key);
  if (config.contains(direct)) {
    target = direct;
  } else {
    for (const auto& section : sections) {
      const auto nested = to_pointer(section + "." + key);
      if (config.contains(nested)) {
        target = nested;
        break;
      }
    }
  }
  if (!target) throw InvalidInput("override: unknown key '" + key + "'");

  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json& slot = config[*target];
  if (!same_kind(slot, value)) {
    throw InvalidInput("override '" + key + "': expected a value of type " +
                       std::string(slot.type_name()) + ", got '" + text + "'");
  }
  if (slot.is_number_float()) value = value.get<double>();
  slot = std::move(value);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic sub-network family search and runtime simulation", "dynnet"};
  app.require_subcommand(1);
  Options o;

  auto* profile = app.add_subcommand("profile", "Generate a synthetic latency table");
  profile->add_option("--space", o.space, "Search space JSON (default space when omitted)");
  profile->add_option("--device", o.device, "gpu-like or cpu-like")->required();
  profile->add_option("--device-id", o.device_id, "Device id written to the table");
  profile->add_option("--scale", o.scale, "Multiplier applied to every entry");
  profile->add_option("--seed", o.seed, "Profile seed");
  profile->add_option("--out", o.out, "Output CSV")->required();

  auto* search = app.add_subcommand("search", "Search a level family for one device");
  search->add_option("--space", o.space, "Search space JSON");
  search->add_option("--table", o.table, "Latency table CSV")->required();
  search->add_option("--acc-model", o.acc_model, "Accuracy model JSON (analytic when omitted)");
  search->add_option("--config", o.config, "Family search config JSON");
  search->add_option("--seed", o.seed, "Search seed");
  search->add_option("--set", o.sets, "Override a config field, key=value");
  search->add_flag("--keep-evaluated", o.keep_evaluated, "Keep every evaluated candidate");
  search->add_option("--out", o.out, "Output report JSON")->required();

  auto* manifest = app.add_subcommand("manifest", "Package search reports into a manifest");
  manifest->add_option("--report", o.reports, "Search report JSON (repeatable)")->required();
  manifest->add_option("--switch-cost", o.switch_cost, "Per-switch stall in ms");
  manifest->add_option("--payload-bytes", o.payload_bytes, "Calibration payload size");
  manifest->add_option("--payload-load-ms", o.payload_load, "Calibration payload load cost");
  manifest->add_option("--out", o.out, "Output manifest JSON")->required();

  auto* simulate = app.add_subcommand("simulate", "Replay a scenario under the runtime manager");
  simulate->add_option("--manifest", o.manifest, "Manifest JSON")->required();
  simulate->add_option("--scenario", o.scenario, "Scenario JSON")->required();
  simulate->add_option("--mode", o.mode, "lookup, reactive or collective");
  simulate->add_option("--config", o.config, "Runtime manager config JSON");
  simulate->add_option("--seed", o.seed, "Override the scenario seed");
  simulate->add_option("--set", o.sets, "Override a policy field, key=value");
  simulate->add_option("--summary", o.summary, "Also write the summary JSON here");
  simulate->add_option("--out", o.out, "Output trace CSV")->required();

  auto* report = app.add_subcommand("report", "Summarize a trace");
  report->add_option("--trace", o.trace, "Trace CSV")->required();
  report->add_option("--out", o.out, "Output summary JSON (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (profile->parsed()) return cmd_profile(o, out);
    if (search->parsed()) return cmd_search(o, out);
    if (manifest->parsed()) return cmd_manifest(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const NotFound& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace dynnet::cli
