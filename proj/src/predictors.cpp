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

#include "dynnet/predictors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dynnet/errors.hpp"
#include "io_util.hpp"

namespace dynnet {

namespace {

constexpr std::array<std::string_view, 5> kOpKindNames{"input", "conv", "pooling", "output",
                                                       "classifier"};
constexpr std::string_view kCsvHeader =
    "device_id,op_kind,unit,layer,kernel,expand,resolution,latency_us";

}  // namespace

std::string_view to_string(OpKind kind) { return kOpKindNames[static_cast<std::size_t>(kind)]; }

OpKind parse_op_kind(std::string_view name) {
  for (std::size_t i = 0; i < kOpKindNames.size(); ++i) {
    if (kOpKindNames[i] == name) return static_cast<OpKind>(i);
  }
  throw InvalidInput("unknown op kind '" + std::string(name) + "'");
}

std::string to_string(const OpSignature& sig) {
  std::ostringstream os;
  os << to_string(sig.kind) << "(unit=" << sig.unit << ", layer=" << sig.layer
     << ", kernel=" << sig.kernel << ", expand=" << sig.expand << ", resolution=" << sig.resolution
     << ")";
  return os.str();
}

double LatencyTable::lookup_us(const OpSignature& sig) const {
  auto it = entries_us.find(sig);
  if (it == entries_us.end()) {
    throw MissingEntry("latency table '" + device_id + "' has no entry for " + to_string(sig));
  }
  return it->second;
}

std::vector<OpSignature> active_ops(const OfaArchitecture& arch) {
  std::vector<OpSignature> ops;
  const int r = arch.resolution;
  ops.push_back({OpKind::input, 0, 0, 0, 0, r});
  for (std::size_t u = 0; u < arch.depths.size(); ++u) {
    const int unit = static_cast<int>(u);
    for (int l = 0; l < arch.depths[u]; ++l) {
      ops.push_back({OpKind::conv, unit, l, arch.kernels[u][l], arch.expands[u][l], r});
    }
    ops.push_back({OpKind::pooling, unit, 0, 0, 0, r});
  }
  ops.push_back({OpKind::output, 0, 0, 0, 0, r});
  ops.push_back({OpKind::classifier, 0, 0, 0, 0, r});
  return ops;
}

std::vector<OpSignature> all_signatures(const SearchSpace& space) {
  std::vector<OpSignature> sigs;
  for (int r : space.resolution_choices) {
    sigs.push_back({OpKind::input, 0, 0, 0, 0, r});
    for (int u = 0; u < space.num_units; ++u) {
      for (int l = 0; l < space.max_depth(); ++l) {
        for (int k : space.kernel_choices) {
          for (int e : space.expand_choices) sigs.push_back({OpKind::conv, u, l, k, e, r});
        }
      }
      sigs.push_back({OpKind::pooling, u, 0, 0, 0, r});
    }
    sigs.push_back({OpKind::output, 0, 0, 0, 0, r});
    sigs.push_back({OpKind::classifier, 0, 0, 0, 0, r});
  }
  std::sort(sigs.begin(), sigs.end());
  return sigs;
}

double predict_latency(const LatencyTable& table, const OfaArchitecture& arch) {
  double total_us = 0.0;
  for (const auto& sig : active_ops(arch)) total_us += table.lookup_us(sig);
  return total_us / 1000.0;
}

void write_latency_csv(std::ostream& os, const LatencyTable& table) {
  os << kCsvHeader << '\n';
  for (const auto& [sig, us] : table.entries_us) {
    os << table.device_id << ',' << to_string(sig.kind) << ',' << sig.unit << ',' << sig.layer
       << ',' << sig.kernel << ',' << sig.expand << ',' << sig.resolution << ','
       << detail::format_double(us) << '\n';
  }
}

LatencyTable read_latency_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("latency CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw InvalidInput("latency CSV: unexpected header '" + line + "'");
  LatencyTable table;
  bool first = true;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 8) {
      throw InvalidInput("latency CSV line " + std::to_string(lineno) + ": expected 8 fields");
    }
    if (first) {
      table.device_id = std::string(f[0]);
      first = false;
    } else if (f[0] != table.device_id) {
      throw InvalidInput("latency CSV line " + std::to_string(lineno) + ": mixed device ids");
    }
    OpSignature sig{parse_op_kind(f[1]),         detail::parse_int(f[2], "unit"),
                    detail::parse_int(f[3], "layer"), detail::parse_int(f[4], "kernel"),
                    detail::parse_int(f[5], "expand"), detail::parse_int(f[6], "resolution")};
    const double us = detail::parse_double(f[7], "latency_us");
    if (!(us > 0.0)) {
      throw InvalidInput("latency CSV line " + std::to_string(lineno) + ": latency must be > 0");
    }
    if (!table.entries_us.emplace(sig, us).second) {
      throw InvalidInput("latency CSV line " + std::to_string(lineno) + ": duplicate " +
                         to_string(sig));
    }
  }
  return table;
}

void save_latency_table(const std::string& path, const LatencyTable& table) {
  std::ostringstream os;
  write_latency_csv(os, table);
  detail::write_file(path, os.str());
}

LatencyTable load_latency_table(const std::string& path) {
  std::istringstream is(detail::read_file(path));
  return read_latency_csv(is);
}

std::string_view to_string(DeviceKind kind) {
  return kind == DeviceKind::gpu_like ? "gpu-like" : "cpu-like";
}

DeviceKind parse_device_kind(std::string_view name) {
  if (name == "gpu-like" || name == "gpu") return DeviceKind::gpu_like;
  if (name == "cpu-like" || name == "cpu") return DeviceKind::cpu_like;
  throw InvalidInput("unknown device kind '" + std::string(name) + "'");
}

namespace {

struct CostModel {
  double layer_us;     // fixed cost per conv layer
  double other_us;     // fixed cost per non-conv op
  double mac_coeff;    // us per (MMAC)^exponent
  double exponent;
};

constexpr CostModel kGpuCost{700.0, 250.0, 330.0, 0.80};
constexpr CostModel kCpuCost{900.0, 300.0, 10500.0, 1.0};

constexpr std::array<int, 5> kUnitStrides{2, 2, 2, 1, 2};
constexpr std::array<double, 5> kUnitChannels{24, 40, 80, 112, 160};

double unit_channels(int u) {
  if (u < static_cast<int>(kUnitChannels.size())) return kUnitChannels[u];
  return kUnitChannels.back() * std::pow(1.4, u - static_cast<int>(kUnitChannels.size()) + 1);
}

// Feature-map side length inside unit u; the stem halves the input.
double unit_side(int u, int resolution) {
  double side = resolution / 2.0;
  for (int v = 0; v <= u; ++v) side /= kUnitStrides[v % kUnitStrides.size()];
  return side;
}

double op_mmacs(const OpSignature& sig, int num_units) {
  const double r = sig.resolution;
  switch (sig.kind) {
    case OpKind::input: {
      const double side = r / 2.0;
      return side * side * 16.0 * 27.0 / 1e6;
    }
    case OpKind::conv: {
      const double side = unit_side(sig.unit, sig.resolution);
      const double c = unit_channels(sig.unit);
      return side * side * c * sig.expand * (2.0 * c + double(sig.kernel) * sig.kernel) / 1e6;
    }
    case OpKind::pooling: {
      const double side = unit_side(sig.unit, sig.resolution);
      return side * side * unit_channels(sig.unit) / 1e6;
    }
    case OpKind::output: {
      const double side = unit_side(num_units - 1, sig.resolution);
      const double c = unit_channels(num_units - 1);
      return side * side * c * 6.0 * c / 1e6;
    }
    case OpKind::classifier: {
      const double c = unit_channels(num_units - 1);
      return (6.0 * c * 1280.0 + 1280.0 * 1000.0) / 1e6;
    }
  }
  return 0.0;
}

}  // namespace

LatencyTable generate_synthetic_profile(const SearchSpace& space, DeviceKind kind, double scale,
                                        std::uint64_t seed) {
  space.check();
  if (!(scale > 0.0)) throw InvalidInput("profile scale must be > 0");
  const CostModel& cost = kind == DeviceKind::gpu_like ? kGpuCost : kCpuCost;
  LatencyTable table;
  table.device_id = std::string(to_string(kind));
  table.frequency_label = "max";
  for (const auto& sig : all_signatures(space)) {
    const double fixed = sig.kind == OpKind::conv ? cost.layer_us : cost.other_us;
    const double us = fixed + cost.mac_coeff * std::pow(op_mmacs(sig, space.num_units), cost.exponent);
    const std::uint64_t key = mix64(seed ^ mix64((static_cast<std::uint64_t>(sig.kind) << 40) ^
                                                 (static_cast<std::uint64_t>(sig.unit) << 20) ^
                                                 static_cast<std::uint64_t>(sig.layer)));
    const double spread = 1.0 + 0.05 * (2.0 * (static_cast<double>(key >> 11) * 0x1.0p-53) - 1.0);
    // Rounded to nanoseconds so the CSV stays readable.
    table.entries_us[sig] = std::round(scale * us * spread * 1000.0) / 1000.0;
  }
  return table;
}

AccuracyModel AccuracyModel::make_analytic(const SearchSpace& space,
                                           AnalyticAccuracyParams params) {
  space.check();
  AccuracyModel m;
  m.kind = Kind::analytic;
  m.space = space;
  m.analytic = params;
  return m;
}

AccuracyModel AccuracyModel::make_tabular(
    const SearchSpace& space, std::unordered_map<OfaArchitecture, double, ArchitectureHash> table) {
  AccuracyModel m;
  m.kind = Kind::tabular;
  m.space = space;
  m.table = std::move(table);
  return m;
}

double AccuracyModel::capacity(const OfaArchitecture& arch) const {
  const auto& s = space;
  const AnalyticAccuracyParams& p = analytic;
  const double units = s.num_units;
  const double slots = units * s.max_depth();
  auto span = [](const std::vector<int>& c) { return std::max<double>(1.0, c.size() - 1.0); };

  double depth = 0.0, kernel = 0.0, expand = 0.0;
  for (std::size_t u = 0; u < arch.depths.size(); ++u) {
    depth += choice_index(s.depth_choices, arch.depths[u]);
    for (int l = 0; l < arch.depths[u]; ++l) {
      kernel += choice_index(s.kernel_choices, arch.kernels[u][l]);
      expand += choice_index(s.expand_choices, arch.expands[u][l]);
    }
  }
  const double res = choice_index(s.resolution_choices, arch.resolution);

  double c = p.w_depth * depth / (units * span(s.depth_choices)) +
             p.w_kernel * kernel / (slots * span(s.kernel_choices)) +
             p.w_expand * expand / (slots * span(s.expand_choices)) +
             p.w_resolution * res / span(s.resolution_choices);
  if (p.noise > 0.0) {
    std::uint64_t h = mix64(p.noise_seed);
    for (int v : arch.active_encoding()) h = mix64(h ^ static_cast<std::uint64_t>(v));
    c += p.noise * (2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0);
  }
  return c;
}

double predict_accuracy(const AccuracyModel& model, const OfaArchitecture& arch) {
  if (!validate(model.space, arch)) {
    throw InvalidInput("architecture outside the accuracy model's space: " + arch.to_string());
  }
  if (model.kind == AccuracyModel::Kind::tabular) {
    auto it = model.table.find(arch);
    if (it == model.table.end()) {
      throw UnknownArchitecture("tabular accuracy model has no entry for " + arch.to_string());
    }
    return std::clamp(it->second, 0.0, 100.0);
  }
  const auto& p = model.analytic;
  const double c = model.capacity(arch);
  const double gain = c + p.saturation > 0.0 ? p.max_gain * c / (c + p.saturation) : 0.0;
  return std::clamp(p.base + gain, 0.0, 100.0);
}

Measurement measure_oracle(const LatencyTable& table, const AccuracyModel& model,
                           const OfaArchitecture& arch, double optimistic_bias) {
  Measurement m;
  m.latency_ms = predict_latency(table, arch);
  m.accuracy = std::max(0.0, predict_accuracy(model, arch) - optimistic_bias);
  return m;
}

void to_json(nlohmann::json& j, const AccuracyModel& model) {
  if (model.kind == AccuracyModel::Kind::analytic) {
    const auto& p = model.analytic;
    j = nlohmann::json{{"kind", "analytic"},
                       {"params",
                        {{"base", p.base},
                         {"max_gain", p.max_gain},
                         {"saturation", p.saturation},
                         {"weights",
                          {{"depth", p.w_depth},
                           {"kernel", p.w_kernel},
                           {"expand", p.w_expand},
                           {"resolution", p.w_resolution}}},
                         {"noise", p.noise},
                         {"noise_seed", p.noise_seed},
                         {"space", model.space}}}};
    return;
  }
  // Sorted so that save -> load -> save is byte-stable.
  std::vector<std::pair<OfaArchitecture, double>> rows(model.table.begin(), model.table.end());
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return active_less(a.first, b.first); });
  auto entries = nlohmann::json::array();
  for (const auto& [arch, acc] : rows) entries.push_back({{"arch", arch}, {"accuracy", acc}});
  j = nlohmann::json{{"kind", "tabular"}, {"params", {{"space", model.space}, {"entries", entries}}}};
}

void from_json(const nlohmann::json& j, AccuracyModel& model) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const auto& params = j.at("params");
    SearchSpace space;
    if (params.contains("space")) params.at("space").get_to(space);
    if (kind == "analytic") {
      AnalyticAccuracyParams p;
      p.base = params.value("base", p.base);
      p.max_gain = params.value("max_gain", p.max_gain);
      p.saturation = params.value("saturation", p.saturation);
      if (params.contains("weights")) {
        const auto& w = params.at("weights");
        p.w_depth = w.value("depth", p.w_depth);
        p.w_kernel = w.value("kernel", p.w_kernel);
        p.w_expand = w.value("expand", p.w_expand);
        p.w_resolution = w.value("resolution", p.w_resolution);
      }
      p.noise = params.value("noise", p.noise);
      p.noise_seed = params.value("noise_seed", p.noise_seed);
      if (p.noise < 0.0) throw InvalidInput("accuracy model: noise must be >= 0");
      model = AccuracyModel::make_analytic(space, p);
    } else if (kind == "tabular") {
      std::unordered_map<OfaArchitecture, double, ArchitectureHash> table;
      for (const auto& e : params.at("entries")) {
        table[e.at("arch").get<OfaArchitecture>()] = e.at("accuracy").get<double>();
      }
      model = AccuracyModel::make_tabular(space, std::move(table));
    } else {
      throw InvalidInput("accuracy model: unknown kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("accuracy model JSON: ") + e.what());
  }
}

void save_accuracy_model(const std::string& path, const AccuracyModel& model) {
  detail::write_file(path, nlohmann::json(model).dump(2) + "\n");
}

AccuracyModel load_accuracy_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("accuracy model '" + path + "': " + e.what());
  }
  return j.get<AccuracyModel>();
}

}  // namespace dynnet
