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

#include "dynnet/arch_space.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dynnet/errors.hpp"

namespace dynnet {

namespace {

bool strictly_increasing_positive(const std::vector<int>& v) {
  if (v.empty() || v.front() <= 0) return false;
  return std::adjacent_find(v.begin(), v.end(),
                            [](int a, int b) { return a >= b; }) == v.end();
}

int pick(const std::vector<int>& choices, Rng& rng) {
  return choices[uniform_index(rng, choices.size())];
}

}  // namespace

std::vector<int> SearchSpace::default_resolutions() {
  std::vector<int> r;
  for (int px = 128; px <= 224; px += 4) r.push_back(px);
  return r;
}

bool SearchSpace::valid() const {
  return num_units >= 1 && strictly_increasing_positive(depth_choices) &&
         strictly_increasing_positive(kernel_choices) &&
         strictly_increasing_positive(expand_choices) &&
         strictly_increasing_positive(resolution_choices);
}

void SearchSpace::check() const {
  if (num_units < 1) throw InvalidInput("search space: num_units must be >= 1");
  const std::pair<const char*, const std::vector<int>*> sets[] = {
      {"depth_choices", &depth_choices},
      {"kernel_choices", &kernel_choices},
      {"expand_choices", &expand_choices},
      {"resolution_choices", &resolution_choices}};
  for (const auto& [name, values] : sets) {
    if (!strictly_increasing_positive(*values)) {
      throw InvalidInput(std::string("search space: ") + name +
                         " must be non-empty, positive and strictly increasing");
    }
  }
}

int OfaArchitecture::total_depth() const {
  int total = 0;
  for (int d : depths) total += d;
  return total;
}

std::vector<int> OfaArchitecture::active_encoding() const {
  std::vector<int> enc;
  enc.reserve(1 + depths.size() * 9);
  enc.push_back(resolution);
  for (std::size_t u = 0; u < depths.size(); ++u) {
    const int d = depths[u];
    enc.push_back(d);
    for (int l = 0; l < d; ++l) {
      enc.push_back(u < kernels.size() && l < static_cast<int>(kernels[u].size()) ? kernels[u][l] : 0);
    }
    for (int l = 0; l < d; ++l) {
      enc.push_back(u < expands.size() && l < static_cast<int>(expands[u].size()) ? expands[u][l] : 0);
    }
  }
  return enc;
}

std::string OfaArchitecture::to_string() const {
  std::ostringstream os;
  os << "r" << resolution;
  for (std::size_t u = 0; u < depths.size(); ++u) {
    os << " |";
    for (int l = 0; l < depths[u]; ++l) os << ' ' << kernels[u][l] << 'x' << expands[u][l];
  }
  return os.str();
}

bool active_less(const OfaArchitecture& a, const OfaArchitecture& b) {
  return a.active_encoding() < b.active_encoding();
}

std::size_t ArchitectureHash::operator()(const OfaArchitecture& arch) const {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (int v : arch.active_encoding()) h = mix64(h ^ static_cast<std::uint64_t>(v));
  return static_cast<std::size_t>(h);
}

int choice_index(const std::vector<int>& choices, int value) {
  auto it = std::lower_bound(choices.begin(), choices.end(), value);
  if (it == choices.end() || *it != value) return -1;
  return static_cast<int>(it - choices.begin());
}

bool validate(const SearchSpace& space, const OfaArchitecture& arch) {
  if (!space.valid()) return false;
  const auto units = static_cast<std::size_t>(space.num_units);
  const auto slots = static_cast<std::size_t>(space.max_depth());
  if (arch.depths.size() != units || arch.kernels.size() != units ||
      arch.expands.size() != units) {
    return false;
  }
  if (choice_index(space.resolution_choices, arch.resolution) < 0) return false;
  for (std::size_t u = 0; u < units; ++u) {
    if (choice_index(space.depth_choices, arch.depths[u]) < 0) return false;
    if (arch.kernels[u].size() != slots || arch.expands[u].size() != slots) return false;
    for (int l = 0; l < arch.depths[u]; ++l) {
      if (choice_index(space.kernel_choices, arch.kernels[u][l]) < 0) return false;
      if (choice_index(space.expand_choices, arch.expands[u][l]) < 0) return false;
    }
  }
  return true;
}

BigInt count_architectures(const SearchSpace& space, bool include_resolution) {
  space.check();
  const BigInt per_layer = BigInt(space.kernel_choices.size()) * space.expand_choices.size();
  BigInt per_unit = 0;
  for (int d : space.depth_choices) per_unit += boost::multiprecision::pow(per_layer, d);
  BigInt total = boost::multiprecision::pow(per_unit, space.num_units);
  if (include_resolution) total *= space.resolution_choices.size();
  return total;
}

OfaArchitecture random_arch(const SearchSpace& space, Rng& rng) {
  const auto units = static_cast<std::size_t>(space.num_units);
  const auto slots = static_cast<std::size_t>(space.max_depth());
  OfaArchitecture arch;
  arch.depths.resize(units);
  arch.kernels.assign(units, std::vector<int>(slots));
  arch.expands.assign(units, std::vector<int>(slots));
  // Inactive slots are sampled too so that a later depth mutation
  // activates a valid gene.
  for (std::size_t u = 0; u < units; ++u) {
    arch.depths[u] = pick(space.depth_choices, rng);
    for (std::size_t l = 0; l < slots; ++l) {
      arch.kernels[u][l] = pick(space.kernel_choices, rng);
      arch.expands[u][l] = pick(space.expand_choices, rng);
    }
  }
  arch.resolution = pick(space.resolution_choices, rng);
  return arch;
}

OfaArchitecture random_arch(const SearchSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return random_arch(space, rng);
}

OfaArchitecture mutate(const SearchSpace& space, const OfaArchitecture& arch,
                       double mutation_prob, Rng& rng) {
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) {
    throw InvalidInput("mutate: mutation_prob must lie in [0, 1]");
  }
  OfaArchitecture out = arch;
  auto hit = [&] { return uniform_unit(rng) < mutation_prob; };
  for (std::size_t u = 0; u < out.depths.size(); ++u) {
    if (hit()) out.depths[u] = pick(space.depth_choices, rng);
    for (int l = 0; l < out.depths[u]; ++l) {
      if (hit()) out.kernels[u][l] = pick(space.kernel_choices, rng);
      if (hit()) out.expands[u][l] = pick(space.expand_choices, rng);
    }
  }
  if (hit()) out.resolution = pick(space.resolution_choices, rng);
  return out;
}

OfaArchitecture mutate(const SearchSpace& space, const OfaArchitecture& arch,
                       double mutation_prob, std::uint64_t seed) {
  Rng rng(seed);
  return mutate(space, arch, mutation_prob, rng);
}

namespace {

OfaArchitecture corner_arch(const SearchSpace& space, bool largest) {
  auto sel = [largest](const std::vector<int>& c) { return largest ? c.back() : c.front(); };
  const auto units = static_cast<std::size_t>(space.num_units);
  const auto slots = static_cast<std::size_t>(space.max_depth());
  OfaArchitecture arch;
  arch.depths.assign(units, sel(space.depth_choices));
  arch.kernels.assign(units, std::vector<int>(slots, sel(space.kernel_choices)));
  arch.expands.assign(units, std::vector<int>(slots, sel(space.expand_choices)));
  arch.resolution = sel(space.resolution_choices);
  return arch;
}

}  // namespace

OfaArchitecture minimal_arch(const SearchSpace& space) { return corner_arch(space, false); }
OfaArchitecture maximal_arch(const SearchSpace& space) { return corner_arch(space, true); }

void to_json(nlohmann::json& j, const SearchSpace& space) {
  j = nlohmann::json{{"num_units", space.num_units},
                     {"depth_choices", space.depth_choices},
                     {"kernel_choices", space.kernel_choices},
                     {"expand_choices", space.expand_choices},
                     {"resolution_choices", space.resolution_choices}};
}

void from_json(const nlohmann::json& j, SearchSpace& space) {
  SearchSpace s;
  try {
    s.num_units = j.value("num_units", s.num_units);
    s.depth_choices = j.value("depth_choices", s.depth_choices);
    s.kernel_choices = j.value("kernel_choices", s.kernel_choices);
    s.expand_choices = j.value("expand_choices", s.expand_choices);
    s.resolution_choices = j.value("resolution_choices", s.resolution_choices);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("search space JSON: ") + e.what());
  }
  s.check();
  space = std::move(s);
}

void to_json(nlohmann::json& j, const OfaArchitecture& arch) {
  j = nlohmann::json{{"depths", arch.depths},
                     {"kernels", arch.kernels},
                     {"expands", arch.expands},
                     {"resolution", arch.resolution}};
}

void from_json(const nlohmann::json& j, OfaArchitecture& arch) {
  OfaArchitecture a;
  try {
    j.at("depths").get_to(a.depths);
    j.at("kernels").get_to(a.kernels);
    j.at("expands").get_to(a.expands);
    j.at("resolution").get_to(a.resolution);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("architecture JSON: ") + e.what());
  }
  if (a.kernels.size() != a.depths.size() || a.expands.size() != a.depths.size()) {
    throw InvalidInput("architecture JSON: depths/kernels/expands unit counts differ");
  }
  for (std::size_t u = 0; u < a.depths.size(); ++u) {
    const auto d = static_cast<std::size_t>(std::max(a.depths[u], 0));
    if (a.kernels[u].size() < d || a.expands[u].size() < d) {
      throw InvalidInput("architecture JSON: unit has fewer slots than its depth");
    }
  }
  arch = std::move(a);
}

}  // namespace dynnet
