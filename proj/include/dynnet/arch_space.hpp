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
#include <string>
#include <unordered_set>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json_fwd.hpp>

#include "dynnet/random.hpp"

namespace dynnet {

using BigInt = boost::multiprecision::cpp_int;

/**
 * Elastic architecture space: a chain of units, each with a variable
 * number of layers, each layer with its own kernel size and expansion
 * ratio, plus one input resolution for the whole network.
 *
 * The defaults are the MobileNetV3-style elastic space (5 units, depth
 * 2-4, kernel 3/5/7, expand 3/4/6, resolution 128..224 step 4).
 */
struct SearchSpace {
  int num_units = 5;
  std::vector<int> depth_choices{2, 3, 4};
  std::vector<int> kernel_choices{3, 5, 7};
  std::vector<int> expand_choices{3, 4, 6};
  std::vector<int> resolution_choices = default_resolutions();

  static std::vector<int> default_resolutions();

  /// Layer slots stored per unit (the largest depth choice).
  int max_depth() const { return depth_choices.empty() ? 0 : depth_choices.back(); }

  bool valid() const;
  /// Throws InvalidInput describing the first violated invariant.
  void check() const;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

/**
 * One point of the space. `kernels[u]` and `expands[u]` always hold
 * max_depth() slots; only the first `depths[u]` of them are active.
 * Equality, hashing and ordering look at the active configuration only.
 */
struct OfaArchitecture {
  std::vector<int> depths;
  std::vector<std::vector<int>> kernels;
  std::vector<std::vector<int>> expands;
  int resolution = 0;

  int total_depth() const;

  /// Canonical integer encoding of the active configuration:
  /// resolution, then per unit: depth, active kernels, active expands.
  std::vector<int> active_encoding() const;
  std::string to_string() const;

  friend bool operator==(const OfaArchitecture& a, const OfaArchitecture& b) {
    return a.active_encoding() == b.active_encoding();
  }
};

/// Lexicographic order on active_encoding(); used for deterministic ties.
bool active_less(const OfaArchitecture& a, const OfaArchitecture& b);

struct ArchitectureHash {
  std::size_t operator()(const OfaArchitecture& arch) const;
};

using ArchitectureSet = std::unordered_set<OfaArchitecture, ArchitectureHash>;

bool validate(const SearchSpace& space, const OfaArchitecture& arch);

/// Number of distinct active configurations. The default space without
/// resolution gives (9^2 + 9^3 + 9^4)^5.
BigInt count_architectures(const SearchSpace& space, bool include_resolution);

OfaArchitecture random_arch(const SearchSpace& space, Rng& rng);
OfaArchitecture random_arch(const SearchSpace& space, std::uint64_t seed);

/// Resamples each unit depth, each active kernel/expand slot (active under
/// the mutated depth) and the resolution with probability `mutation_prob`.
OfaArchitecture mutate(const SearchSpace& space, const OfaArchitecture& arch,
                       double mutation_prob, Rng& rng);
OfaArchitecture mutate(const SearchSpace& space, const OfaArchitecture& arch,
                       double mutation_prob, std::uint64_t seed);

OfaArchitecture minimal_arch(const SearchSpace& space);
OfaArchitecture maximal_arch(const SearchSpace& space);

/// Index of `value` in a choice list, or -1.
int choice_index(const std::vector<int>& choices, int value);

void to_json(nlohmann::json& j, const SearchSpace& space);
void from_json(const nlohmann::json& j, SearchSpace& space);
void to_json(nlohmann::json& j, const OfaArchitecture& arch);
void from_json(const nlohmann::json& j, OfaArchitecture& arch);

}  // namespace dynnet
