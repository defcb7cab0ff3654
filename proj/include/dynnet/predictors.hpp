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

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynnet/arch_space.hpp"

namespace dynnet {

enum class OpKind { input, conv, pooling, output, classifier };

std::string_view to_string(OpKind kind);
OpKind parse_op_kind(std::string_view name);

/// Key of one profiled operation. Non-conv ops carry kernel = expand = 0.
struct OpSignature {
  OpKind kind = OpKind::conv;
  int unit = 0;
  int layer = 0;
  int kernel = 0;
  int expand = 0;
  int resolution = 0;

  auto operator<=>(const OpSignature&) const = default;
};

std::string to_string(const OpSignature& sig);

/// Per-device lookup table of operation latencies, in microseconds.
struct LatencyTable {
  std::string device_id;
  std::map<OpSignature, double> entries_us;
  // Kept in memory only; the CSV format has no column for them.
  std::string frequency_label;
  std::string created;

  double lookup_us(const OpSignature& sig) const;
};

/// Operations an architecture executes, in network order:
/// input, active convs and one pooling per unit, output, classifier.
std::vector<OpSignature> active_ops(const OfaArchitecture& arch);

/// Every signature a complete table for `space` must contain.
std::vector<OpSignature> all_signatures(const SearchSpace& space);

/// Sum of the active operations' table entries, in milliseconds.
/// Throws MissingEntry naming the first absent signature.
double predict_latency(const LatencyTable& table, const OfaArchitecture& arch);

void write_latency_csv(std::ostream& os, const LatencyTable& table);
LatencyTable read_latency_csv(std::istream& is);
void save_latency_table(const std::string& path, const LatencyTable& table);
LatencyTable load_latency_table(const std::string& path);

enum class DeviceKind { gpu_like, cpu_like };

std::string_view to_string(DeviceKind kind);
DeviceKind parse_device_kind(std::string_view name);

/**
 * Synthetic stand-in for on-device profiling. Conv cost follows an
 * inverted-residual block: H*W*C*expand*(2C + kernel^2) MACs, with H, W
 * set by the input resolution and a fixed stride schedule.
 *
 * gpu-like: large fixed cost per layer, sub-linear in MACs, so extra
 * depth is expensive and extra width is cheap.
 * cpu-like: small per-layer cost, linear in MACs.
 *
 * `scale` multiplies every entry (1.0 is the calibrated default). A
 * seeded +/-5% factor per (op kind, unit, layer) emulates measurement
 * spread without disturbing monotonicity in kernel, expand or resolution.
 */
LatencyTable generate_synthetic_profile(const SearchSpace& space, DeviceKind kind,
                                        double scale, std::uint64_t seed);

struct AnalyticAccuracyParams {
  double base = 70.0;        // prediction for the smallest architecture
  double max_gain = 30.0;    // asymptotic gain above base
  double saturation = 120.0; // capacity at which half of max_gain is reached
  double w_depth = 30.0;
  double w_kernel = 30.0;
  double w_expand = 30.0;
  double w_resolution = 30.0;
  double noise = 0.3;        // amplitude of the per-architecture offset
  std::uint64_t noise_seed = 0;
};

/**
 * Accuracy predictor. The analytic reference model maps normalized
 * capacity (depth, kernel, expand, resolution indices) through
 * base + max_gain * c / (c + saturation). A hashed offset of at most
 * `noise` is added to the capacity before the map; at default weights
 * every single-choice increase adds at least 0.75 capacity, so the
 * prediction stays monotone in every dimension.
 */
struct AccuracyModel {
  enum class Kind { analytic, tabular };

  Kind kind = Kind::analytic;
  SearchSpace space;
  AnalyticAccuracyParams analytic;
  std::unordered_map<OfaArchitecture, double, ArchitectureHash> table;

  static AccuracyModel make_analytic(const SearchSpace& space,
                                     AnalyticAccuracyParams params = {});
  static AccuracyModel make_tabular(
      const SearchSpace& space,
      std::unordered_map<OfaArchitecture, double, ArchitectureHash> table);

  /// Pre-saturation capacity including the noise offset.
  double capacity(const OfaArchitecture& arch) const;
};

double predict_accuracy(const AccuracyModel& model, const OfaArchitecture& arch);

struct Measurement {
  double latency_ms = 0.0;
  double accuracy = 0.0;
};

/// Ground truth is the predictor pair; `optimistic_bias` is subtracted from
/// accuracy (clamped at 0) to emulate a predictor that reads high.
Measurement measure_oracle(const LatencyTable& table, const AccuracyModel& model,
                           const OfaArchitecture& arch, double optimistic_bias = 0.0);

void to_json(nlohmann::json& j, const AccuracyModel& model);
void from_json(const nlohmann::json& j, AccuracyModel& model);
void save_accuracy_model(const std::string& path, const AccuracyModel& model);
AccuracyModel load_accuracy_model(const std::string& path);

}  // namespace dynnet
