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

#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dynnet/arch_space.hpp"
#include "dynnet/cli.hpp"
#include "dynnet/errors.hpp"
#include "dynnet/family.hpp"
#include "dynnet/predictors.hpp"
#include "dynnet/rtm.hpp"
#include "dynnet/search.hpp"
#include "dynnet/sim.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace dynnet {
namespace {

// JSON crosses the boundary as text; the Python layer decodes it.
SearchSpace space_from(const std::string& text) {
  if (text.empty()) return SearchSpace{};
  SearchSpace s;
  try {
    s = json::parse(text).get<SearchSpace>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("search space JSON: ") + e.what());
  }
  return s;
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string(what) + ": " + e.what());
  }
}

std::string count(const std::string& space, bool include_resolution) {
  return count_architectures(space_from(space), include_resolution).str();
}

std::string sample(const std::string& space, std::uint64_t seed) {
  return json(random_arch(space_from(space), seed)).dump();
}

std::string profile(const std::string& device, std::uint64_t seed, double scale,
                    const std::string& space) {
  const auto table = generate_synthetic_profile(space_from(space), parse_device_kind(device), scale, seed);
  std::ostringstream os;
  write_latency_csv(os, table);
  return os.str();
}

std::string search(const std::string& table_csv, const std::string& config,
                   const std::string& space_text, bool keep_evaluated) {
  const SearchSpace space = space_from(space_text);
  std::istringstream is(table_csv);
  const LatencyTable table = read_latency_csv(is);
  const AccuracyModel model = AccuracyModel::make_analytic(space);
  FamilySearchConfig cfg;
  if (!config.empty()) {
    try {
      cfg = parse(config, "search config").get<FamilySearchConfig>();
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("search config: ") + e.what());
    }
  }
  SearchReport report;
  {
    py::gil_scoped_release release;
    report = search_family(Evaluator{space, table, model}, cfg);
  }
  json j = report;
  if (!keep_evaluated) j.erase("evaluated");
  return j.dump();
}

std::string pareto(const std::string& candidates) {
  std::vector<Candidate> cs;
  try {
    cs = parse(candidates, "candidates").get<std::vector<Candidate>>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("candidates: ") + e.what());
  }
  return json(pareto_front(cs)).dump();
}

std::string manifest(const std::vector<std::string>& reports, double switch_cost) {
  std::vector<ParetoFamily> families;
  std::map<std::string, double> costs;
  for (const auto& r : reports) {
    const json j = parse(r, "search report");
    ParetoFamily f;
    try {
      f = j.at("levels").get<ParetoFamily>();
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("search report: ") + e.what());
    }
    if (f.device_id.empty()) f.device_id = j.value("device_id", std::string{});
    costs[f.device_id] = switch_cost;
    families.push_back(std::move(f));
  }
  PayloadStore store;
  return manifest_to_string(build_manifest(families, store, costs));
}

int lookup(const std::string& manifest_text, const std::string& device, double max_lat,
           std::optional<double> min_acc) {
  return lookup_level(manifest_from_string(manifest_text), device, LevelConstraint{max_lat, min_acc});
}

py::tuple simulate(const std::string& manifest_text, const std::string& scenario_text,
                   const std::string& mode, const std::string& policy_text) {
  const FamilyManifest m = manifest_from_string(manifest_text);
  const Scenario s = scenario_from_string(scenario_text);
  RtmPolicyConfig policy;
  if (!policy_text.empty()) policy = parse(policy_text, "rtm config").get<RtmPolicyConfig>();
  policy.check();
  SimResult res;
  {
    py::gil_scoped_release release;
    res = run_scenario(s, {{"", m}}, policy, parse_mode(mode));
  }
  return py::make_tuple(trace_to_csv(res.records), json(res.decisions).dump());
}

std::string summarize(const std::string& trace_csv) {
  return summarize_trace(trace_from_csv(trace_csv)).dump();
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv{"dynnet"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::run(argv, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace
}  // namespace dynnet

PYBIND11_MODULE(_dynnet, m) {
  using namespace dynnet;
  m.doc() = "Native core of the dynnet package.";
  auto base = py::register_exception<Error>(m, "DynnetError", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<NotFound>(m, "NotFound", base.ptr());
  py::register_exception<EmptyInput>(m, "EmptyInput", base.ptr());
  py::register_exception<NoFeasibleLevel>(m, "NoFeasibleLevel", base.ptr());
  py::register_exception<ScenarioError>(m, "ScenarioError", base.ptr());

  m.def("count_architectures", &count, py::arg("space") = "", py::arg("include_resolution") = false);
  m.def("random_arch", &sample, py::arg("space") = "", py::arg("seed") = 0);
  m.def("profile", &profile, py::arg("device"), py::arg("seed") = 0, py::arg("scale") = 1.0,
        py::arg("space") = "");
  m.def("search", &search, py::arg("table_csv"), py::arg("config") = "", py::arg("space") = "",
        py::arg("keep_evaluated") = false);
  m.def("pareto_front", &pareto, py::arg("candidates"));
  m.def("build_manifest", &manifest, py::arg("reports"),
        py::arg("switch_cost") = kDefaultSwitchCostMs);
  m.def("lookup_level", &lookup, py::arg("manifest"), py::arg("device"), py::arg("max_lat"),
        py::arg("min_acc") = py::none());
  m.def("simulate", &simulate, py::arg("manifest"), py::arg("scenario"),
        py::arg("mode") = "reactive", py::arg("policy") = "");
  m.def("summarize", &summarize, py::arg("trace_csv"));
  m.def("run_cli", &run_cli, py::arg("args"));
}
