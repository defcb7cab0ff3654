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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynnet/arch_space.hpp"
#include "dynnet/predictors.hpp"

namespace dynnet {

/// Knobs for the constrained random search and the evolutionary refinement.
struct SearchConfig {
  // Accept when predicted accuracy > acc_max - acc_r.
  double acc_max = 100.0;
  double acc_r = 100.0;
  // Latency bound starts at lat_init and grows by lat_add every itr_n
  // iterations while it is below lat_max.
  double lat_init = 20.0;
  double lat_add = 2.0;
  double lat_max = 200.0;
  std::size_t itr_n = 100;
  std::size_t itr_max = 20000;

  std::size_t population_size = 100;
  std::size_t generations = 500;
  std::size_t tournament_size = 25;
  double mutation_prob = 0.1;

  std::uint64_t seed = 0;

  bool valid() const;
  void check() const;
};

struct Candidate {
  OfaArchitecture arch;
  double acc = 0.0;  // predicted accuracy, %
  double lat = 0.0;  // predicted latency, ms
  std::optional<Measurement> measured;
};

/// Bundles the space with both predictors.
struct Evaluator {
  const SearchSpace& space;
  const LatencyTable& table;
  const AccuracyModel& model;

  Candidate evaluate(const OfaArchitecture& arch) const;
};

/// Effective latency bound at iteration i of the random search.
double relaxed_latency_bound(const SearchConfig& cfg, std::size_t iteration);

struct RandomSearchOutcome {
  std::optional<Candidate> found;
  std::size_t iteration = 0;  // index of the accepting iteration, or itr_max
  double latency_bound = 0.0; // bound in force at that iteration
};

/**
 * Accuracy-constrained random search with latency relaxation. Samples
 * random architectures and returns the first one with
 * acc > acc_max - acc_r, lat < bound and not in `parents`. The bound starts
 * at lat_init and, every itr_n iterations after the first, grows by lat_add
 * if it is still below lat_max (so it can overshoot lat_max by < lat_add).
 * `found` is empty when itr_max iterations pass without acceptance.
 */
RandomSearchOutcome random_search(const Evaluator& eval, const SearchConfig& cfg,
                                  const ArchitectureSet& parents, Rng& rng);
RandomSearchOutcome random_search(const Evaluator& eval, const SearchConfig& cfg,
                                  const ArchitectureSet& parents);

struct SearchConstraint {
  double max_lat = 0.0;
  double acc_lo = 0.0;
  double acc_hi = 100.0;

  bool satisfied_by(const Candidate& c) const {
    return c.lat <= max_lat && c.acc >= acc_lo && c.acc <= acc_hi;
  }
};

struct EvolutionResult {
  Candidate best;
  std::vector<Candidate> evaluated;  // seeds first, then one child per generation
  std::size_t random_iterations = 0;
};

/**
 * Regularized (aging) evolution. The population is seeded with
 * population_size distinct random_search results; every seed is added to
 * `parents`. Each generation samples tournament_size members, mutates the
 * best constraint-satisfying one, appends the child and evicts the oldest.
 * Returns the best satisfying candidate ever evaluated.
 *
 * Throws NotFound if seeding cannot fill the population or no evaluated
 * candidate satisfies the constraint.
 */
EvolutionResult evolutionary_search(const Evaluator& eval, const SearchConfig& cfg,
                                    const SearchConstraint& constraint, ArchitectureSet& parents,
                                    Rng& rng);
EvolutionResult evolutionary_search(const Evaluator& eval, const SearchConfig& cfg,
                                    const SearchConstraint& constraint);

/// Total order used for ties: higher accuracy, lower FLOPs estimate,
/// then lexicographic active encoding.
bool better_candidate(const Candidate& a, const Candidate& b);

struct ParetoFamily {
  std::string device_id;
  std::vector<Candidate> levels;  // ascending latency and accuracy
  double spacing = 0.0;
  double acc_lo = 0.0;
  double acc_hi = 100.0;

  bool is_strictly_ordered() const;
};

/// Maximal non-dominated subset, one entry per (lat, acc) point, sorted by
/// ascending latency. Throws EmptyInput on an empty list.
ParetoFamily pareto_front(const std::vector<Candidate>& candidates);

/**
 * Greedy ~`spacing` % accuracy steps through the part of the front inside
 * [acc_lo, acc_hi]. A member is kept once it is at least
 * spacing * (1 - tolerance) above the last kept one. The top in-window
 * member is always kept; it replaces the last kept member when the gap
 * would be too small, unless that member is the bottom one.
 */
ParetoFamily select_levels(const ParetoFamily& front, double spacing, double acc_lo,
                           double acc_hi, double tolerance = 0.25);

/// Per-unit stride schedule used by estimate_flops.
inline constexpr int kFlopsStrides[] = {2, 2, 2, 1, 2};

/// Mega-operations: sum over active layers of
/// kernel^2 * expand * (resolution / cumulative_stride(unit))^2 / 1e6.
double estimate_flops(const OfaArchitecture& arch);

// Family search: sweeps accuracy bands of width `spacing` from acc_lo up,
// runs random_search per band to fix a latency target, refines it with
// evolutionary_search, then extracts the front and selects the levels.
struct FamilySearchConfig {
  SearchConfig search;
  double acc_lo = 70.0;
  double acc_hi = 85.0;
  double spacing = 1.0;
  double tolerance = 0.25;
  double measure_bias = 0.0;
  // Minimum number of selected levels; fewer is reported as infeasible.
  std::size_t min_levels = 1;
};

struct BandResult {
  double acc_floor = 0.0;
  bool found = false;
  std::size_t iterations = 0;
  double latency_target = 0.0;
  std::optional<Candidate> best;
};

struct SearchReport {
  FamilySearchConfig config;
  std::string device_id;
  std::vector<BandResult> bands;
  std::size_t iterations_used = 0;
  std::vector<Candidate> evaluated;
  ParetoFamily front;
  ParetoFamily levels;
  bool feasible = false;
};

SearchReport search_family(const Evaluator& eval, const FamilySearchConfig& cfg);

void to_json(nlohmann::json& j, const SearchConfig& cfg);
void from_json(const nlohmann::json& j, SearchConfig& cfg);
void to_json(nlohmann::json& j, const FamilySearchConfig& cfg);
void from_json(const nlohmann::json& j, FamilySearchConfig& cfg);
void to_json(nlohmann::json& j, const Candidate& c);
void from_json(const nlohmann::json& j, Candidate& c);
void to_json(nlohmann::json& j, const ParetoFamily& f);
void from_json(const nlohmann::json& j, ParetoFamily& f);
void to_json(nlohmann::json& j, const SearchReport& r);

}  // namespace dynnet
