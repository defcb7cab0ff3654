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

#include "dynnet/search.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dynnet/errors.hpp"

namespace dynnet {

bool SearchConfig::valid() const {
  return acc_r > 0.0 && lat_init <= lat_max && lat_add > 0.0 && itr_n >= 1 && itr_max >= 1 &&
         tournament_size >= 1 && population_size >= tournament_size && mutation_prob >= 0.0 &&
         mutation_prob <= 1.0;
}

void SearchConfig::check() const {
  if (!valid()) {
    throw InvalidInput(
        "search config: need acc_r > 0, lat_init <= lat_max, lat_add > 0, itr_n >= 1, "
        "itr_max >= 1, population_size >= tournament_size >= 1, mutation_prob in [0, 1]");
  }
}

Candidate Evaluator::evaluate(const OfaArchitecture& arch) const {
  Candidate c;
  c.arch = arch;
  c.acc = predict_accuracy(model, arch);
  c.lat = predict_latency(table, arch);
  return c;
}

double relaxed_latency_bound(const SearchConfig& cfg, std::size_t iteration) {
  double bound = cfg.lat_init;
  for (std::size_t k = 1; k * cfg.itr_n <= iteration; ++k) {
    if (!(bound < cfg.lat_max)) break;
    bound += cfg.lat_add;
  }
  return bound;
}

RandomSearchOutcome random_search(const Evaluator& eval, const SearchConfig& cfg,
                                  const ArchitectureSet& parents, Rng& rng) {
  cfg.check();
  const double acc_floor = cfg.acc_max - cfg.acc_r;
  double bound = cfg.lat_init;
  for (std::size_t i = 0; i < cfg.itr_max; ++i) {
    // No relaxation at i == 0: lat_init holds for the first itr_n samples.
    if (i > 0 && i % cfg.itr_n == 0 && bound < cfg.lat_max) bound += cfg.lat_add;
    Candidate c = eval.evaluate(random_arch(eval.space, rng));
    if (c.acc > acc_floor && c.lat < bound && !parents.contains(c.arch)) {
      return {std::move(c), i, bound};
    }
  }
  return {std::nullopt, cfg.itr_max, bound};
}

RandomSearchOutcome random_search(const Evaluator& eval, const SearchConfig& cfg,
                                  const ArchitectureSet& parents) {
  Rng rng(cfg.seed);
  return random_search(eval, cfg, parents, rng);
}

double estimate_flops(const OfaArchitecture& arch) {
  constexpr std::size_t n_strides = std::size(kFlopsStrides);
  double total = 0.0;
  double stride = 1.0;
  for (std::size_t u = 0; u < arch.depths.size(); ++u) {
    stride *= kFlopsStrides[u % n_strides];
    const double side = arch.resolution / stride;
    for (int l = 0; l < arch.depths[u]; ++l) {
      const double k = arch.kernels[u][l];
      total += k * k * arch.expands[u][l] * side * side;
    }
  }
  return total / 1e6;
}

bool better_candidate(const Candidate& a, const Candidate& b) {
  if (a.acc != b.acc) return a.acc > b.acc;
  const double fa = estimate_flops(a.arch);
  const double fb = estimate_flops(b.arch);
  if (fa != fb) return fa < fb;
  return active_less(a.arch, b.arch);
}

namespace {

// Tournament winner: best satisfying member, else the fastest one.
const Candidate& tournament_winner(const std::deque<Candidate>& population,
                                   const std::vector<std::size_t>& picks,
                                   const SearchConstraint& constraint) {
  const Candidate* winner = nullptr;
  bool winner_ok = false;
  for (std::size_t idx : picks) {
    const Candidate& c = population[idx];
    const bool ok = constraint.satisfied_by(c);
    if (winner == nullptr) {
      winner = &c;
      winner_ok = ok;
      continue;
    }
    if (ok != winner_ok) {
      if (ok) {
        winner = &c;
        winner_ok = true;
      }
      continue;
    }
    const bool better = ok ? better_candidate(c, *winner)
                           : (c.lat < winner->lat ||
                              (c.lat == winner->lat && better_candidate(c, *winner)));
    if (better) winner = &c;
  }
  return *winner;
}

}  // namespace

EvolutionResult evolutionary_search(const Evaluator& eval, const SearchConfig& cfg,
                                    const SearchConstraint& constraint, ArchitectureSet& parents,
                                    Rng& rng) {
  cfg.check();
  EvolutionResult result;
  std::deque<Candidate> population;
  std::optional<Candidate> best;
  auto consider = [&](const Candidate& c) {
    result.evaluated.push_back(c);
    if (constraint.satisfied_by(c) && (!best || better_candidate(c, *best))) best = c;
  };

  while (population.size() < cfg.population_size) {
    auto seed = random_search(eval, cfg, parents, rng);
    result.random_iterations += seed.found ? seed.iteration + 1 : seed.iteration;
    if (!seed.found) {
      throw NotFound("evolutionary search: random search could not fill the population (" +
                     std::to_string(population.size()) + " of " +
                     std::to_string(cfg.population_size) + ")");
    }
    parents.insert(seed.found->arch);
    consider(*seed.found);
    population.push_back(std::move(*seed.found));
  }

  std::vector<std::size_t> order(population.size());
  std::vector<std::size_t> picks(cfg.tournament_size);
  for (std::size_t g = 0; g < cfg.generations; ++g) {
    // Partial Fisher-Yates: tournament members without replacement.
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t t = 0; t < cfg.tournament_size; ++t) {
      std::swap(order[t], order[t + uniform_index(rng, order.size() - t)]);
      picks[t] = order[t];
    }
    const Candidate& parent = tournament_winner(population, picks, constraint);
    Candidate child = eval.evaluate(mutate(eval.space, parent.arch, cfg.mutation_prob, rng));
    consider(child);
    population.push_back(std::move(child));
    population.pop_front();
  }

  if (!best) {
    throw NotFound("evolutionary search: no evaluated candidate met latency <= " +
                   std::to_string(constraint.max_lat) + " ms");
  }
  result.best = *best;
  return result;
}

EvolutionResult evolutionary_search(const Evaluator& eval, const SearchConfig& cfg,
                                    const SearchConstraint& constraint) {
  Rng rng(cfg.seed);
  ArchitectureSet parents;
  return evolutionary_search(eval, cfg, constraint, parents, rng);
}

bool ParetoFamily::is_strictly_ordered() const {
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i - 1].lat < levels[i].lat && levels[i - 1].acc < levels[i].acc)) return false;
  }
  return true;
}

ParetoFamily pareto_front(const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw EmptyInput("pareto_front: no candidates");
  std::vector<const Candidate*> sorted;
  sorted.reserve(candidates.size());
  for (const auto& c : candidates) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const Candidate* a, const Candidate* b) {
    if (a->lat != b->lat) return a->lat < b->lat;
    return better_candidate(*a, *b);
  });
  ParetoFamily front;
  for (const Candidate* c : sorted) {
    if (front.levels.empty() || c->acc > front.levels.back().acc) front.levels.push_back(*c);
  }
  return front;
}

ParetoFamily select_levels(const ParetoFamily& front, double spacing, double acc_lo,
                           double acc_hi, double tolerance) {
  if (!(spacing > 0.0)) throw InvalidInput("select_levels: spacing must be > 0");
  if (!(acc_lo < acc_hi)) throw InvalidInput("select_levels: need acc_lo < acc_hi");
  std::vector<const Candidate*> window;
  for (const auto& c : front.levels) {
    if (c.acc >= acc_lo && c.acc <= acc_hi) window.push_back(&c);
  }
  if (window.empty()) throw EmptyInput("select_levels: no front member inside the window");

  const double min_gap = spacing * (1.0 - tolerance);
  std::vector<const Candidate*> kept{window.front()};
  for (std::size_t i = 1; i + 1 < window.size(); ++i) {
    if (window[i]->acc >= kept.back()->acc + min_gap) kept.push_back(window[i]);
  }
  if (window.size() > 1) {
    const Candidate* top = window.back();
    if (kept.size() == 1 || top->acc >= kept.back()->acc + min_gap) {
      kept.push_back(top);
    } else {
      kept.back() = top;
    }
  }

  ParetoFamily out;
  out.device_id = front.device_id;
  out.spacing = spacing;
  out.acc_lo = acc_lo;
  out.acc_hi = acc_hi;
  for (const Candidate* c : kept) out.levels.push_back(*c);
  return out;
}

SearchReport search_family(const Evaluator& eval, const FamilySearchConfig& cfg) {
  cfg.search.check();
  if (!(cfg.spacing > 0.0) || !(cfg.acc_lo < cfg.acc_hi)) {
    throw InvalidInput("family search: need spacing > 0 and acc_lo < acc_hi");
  }
  SearchReport report;
  report.config = cfg;
  report.device_id = eval.table.device_id;

  Rng rng(cfg.search.seed);
  ArchitectureSet parents;
  for (std::size_t j = 0;; ++j) {
    const double floor = cfg.acc_lo + static_cast<double>(j) * cfg.spacing;
    if (floor >= cfg.acc_hi) break;
    SearchConfig band_cfg = cfg.search;
    band_cfg.acc_max = floor + cfg.spacing;
    band_cfg.acc_r = cfg.spacing;

    BandResult band;
    band.acc_floor = floor;
    auto first = random_search(eval, band_cfg, parents, rng);
    band.iterations = first.found ? first.iteration + 1 : first.iteration;
    if (!first.found) {
      // Higher bands are only harder to hit by sampling.
      report.iterations_used += band.iterations;
      report.bands.push_back(std::move(band));
      break;
    }
    band.found = true;
    band.latency_target = first.found->lat;
    parents.insert(first.found->arch);
    report.evaluated.push_back(*first.found);
    band.best = *first.found;

    const SearchConstraint constraint{first.found->lat, floor, cfg.acc_hi};
    try {
      auto evo = evolutionary_search(eval, band_cfg, constraint, parents, rng);
      band.iterations += evo.random_iterations;
      band.best = evo.best;
      report.evaluated.insert(report.evaluated.end(), evo.evaluated.begin(), evo.evaluated.end());
    } catch (const NotFound&) {
      // Keep the random-search result for this band.
    }
    report.iterations_used += band.iterations;
    report.bands.push_back(std::move(band));
  }

  if (!report.evaluated.empty()) {
    report.front = pareto_front(report.evaluated);
    report.front.device_id = report.device_id;
    try {
      report.levels = select_levels(report.front, cfg.spacing, cfg.acc_lo, cfg.acc_hi,
                                    cfg.tolerance);
    } catch (const EmptyInput&) {
      report.levels = ParetoFamily{};
    }
  }
  report.levels.device_id = report.device_id;
  report.levels.spacing = cfg.spacing;
  report.levels.acc_lo = cfg.acc_lo;
  report.levels.acc_hi = cfg.acc_hi;
  for (auto& level : report.levels.levels) {
    level.measured = measure_oracle(eval.table, eval.model, level.arch, cfg.measure_bias);
  }
  report.feasible = !report.levels.levels.empty() && report.levels.levels.size() >= cfg.min_levels;
  return report;
}

void to_json(nlohmann::json& j, const SearchConfig& cfg) {
  j = nlohmann::json{{"acc_max", cfg.acc_max},
                     {"acc_r", cfg.acc_r},
                     {"lat_init", cfg.lat_init},
                     {"lat_add", cfg.lat_add},
                     {"lat_max", cfg.lat_max},
                     {"itr_n", cfg.itr_n},
                     {"itr_max", cfg.itr_max},
                     {"population_size", cfg.population_size},
                     {"generations", cfg.generations},
                     {"tournament_size", cfg.tournament_size},
                     {"mutation_prob", cfg.mutation_prob},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, SearchConfig& cfg) {
  SearchConfig c;
  c.acc_max = j.value("acc_max", c.acc_max);
  c.acc_r = j.value("acc_r", c.acc_r);
  c.lat_init = j.value("lat_init", c.lat_init);
  c.lat_add = j.value("lat_add", c.lat_add);
  c.lat_max = j.value("lat_max", c.lat_max);
  c.itr_n = j.value("itr_n", c.itr_n);
  c.itr_max = j.value("itr_max", c.itr_max);
  c.population_size = j.value("population_size", c.population_size);
  c.generations = j.value("generations", c.generations);
  c.tournament_size = j.value("tournament_size", c.tournament_size);
  c.mutation_prob = j.value("mutation_prob", c.mutation_prob);
  c.seed = j.value("seed", c.seed);
  cfg = c;
}

void to_json(nlohmann::json& j, const FamilySearchConfig& cfg) {
  j = nlohmann::json{{"search", cfg.search},
                     {"acc_lo", cfg.acc_lo},
                     {"acc_hi", cfg.acc_hi},
                     {"spacing", cfg.spacing},
                     {"tolerance", cfg.tolerance},
                     {"measure_bias", cfg.measure_bias},
                     {"min_levels", cfg.min_levels}};
}

void from_json(const nlohmann::json& j, FamilySearchConfig& cfg) {
  FamilySearchConfig c;
  if (j.contains("search")) j.at("search").get_to(c.search);
  c.acc_lo = j.value("acc_lo", c.acc_lo);
  c.acc_hi = j.value("acc_hi", c.acc_hi);
  c.spacing = j.value("spacing", c.spacing);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.measure_bias = j.value("measure_bias", c.measure_bias);
  c.min_levels = j.value("min_levels", c.min_levels);
  cfg = c;
}

void to_json(nlohmann::json& j, const Candidate& c) {
  j = nlohmann::json{{"arch", c.arch}, {"acc", c.acc}, {"lat", c.lat}};
  if (c.measured) j["measured"] = {{"acc", c.measured->accuracy}, {"lat", c.measured->latency_ms}};
}

void from_json(const nlohmann::json& j, Candidate& c) {
  j.at("arch").get_to(c.arch);
  j.at("acc").get_to(c.acc);
  j.at("lat").get_to(c.lat);
  c.measured.reset();
  if (j.contains("measured")) {
    c.measured = Measurement{j.at("measured").at("lat").get<double>(),
                             j.at("measured").at("acc").get<double>()};
  }
}

void to_json(nlohmann::json& j, const ParetoFamily& f) {
  j = nlohmann::json{{"device_id", f.device_id},
                     {"spacing", f.spacing},
                     {"acc_lo", f.acc_lo},
                     {"acc_hi", f.acc_hi},
                     {"levels", f.levels}};
}

void from_json(const nlohmann::json& j, ParetoFamily& f) {
  f.device_id = j.value("device_id", std::string{});
  f.spacing = j.value("spacing", 0.0);
  f.acc_lo = j.value("acc_lo", 0.0);
  f.acc_hi = j.value("acc_hi", 100.0);
  j.at("levels").get_to(f.levels);
}

void to_json(nlohmann::json& j, const SearchReport& r) {
  auto bands = nlohmann::json::array();
  for (const auto& b : r.bands) {
    nlohmann::json jb{{"acc_floor", b.acc_floor},
                      {"found", b.found},
                      {"iterations", b.iterations},
                      {"latency_target", b.latency_target}};
    if (b.best) jb["best"] = *b.best;
    bands.push_back(std::move(jb));
  }
  j = nlohmann::json{{"device_id", r.device_id},
                     {"config", r.config},
                     {"feasible", r.feasible},
                     {"iterations_used", r.iterations_used},
                     {"bands", bands},
                     {"evaluated", r.evaluated},
                     {"front", r.front},
                     {"levels", r.levels}};
}

}  // namespace dynnet
