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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "dynnet/errors.hpp"
#include "dynnet/search.hpp"
#include "oracles.hpp"

namespace dynnet {
namespace {

Candidate point(double lat, double acc, int res = 128) {
  Candidate c;
  c.arch = minimal_arch(SearchSpace{});
  c.arch.resolution = res;
  c.lat = lat;
  c.acc = acc;
  return c;
}

std::vector<double> accs(const ParetoFamily& f) {
  std::vector<double> out;
  for (const auto& c : f.levels) out.push_back(c.acc);
  return out;
}

struct Rigged {
  SearchSpace space = oracle::small_space();
  LatencyTable table = oracle::rigged_table(space, 1);
  AccuracyModel model = oracle::rigged_accuracy(space, 2, 60.0, 90.0);
  Evaluator eval{space, table, model};
};

TEST(SearchConfig, Validation) {
  SearchConfig c;
  EXPECT_TRUE(c.valid());
  c.acc_r = 0.0;
  EXPECT_THROW(c.check(), InvalidInput);
  c = SearchConfig{};
  c.lat_init = 500.0;
  EXPECT_FALSE(c.valid());
  c = SearchConfig{};
  c.tournament_size = c.population_size + 1;
  EXPECT_FALSE(c.valid());
  c = SearchConfig{};
  c.itr_n = 0;
  EXPECT_FALSE(c.valid());
}

TEST(RelaxedBound, MatchesClosedForm) {
  SearchConfig c;
  c.lat_init = 10.0;
  c.lat_add = 3.0;
  c.lat_max = 20.0;
  c.itr_n = 7;
  const double steps_cap = std::ceil((c.lat_max - c.lat_init) / c.lat_add);
  for (std::size_t i = 0; i < 200; ++i) {
    const double expected =
        c.lat_init + c.lat_add * std::min(std::floor(static_cast<double>(i) / c.itr_n), steps_cap);
    ASSERT_DOUBLE_EQ(relaxed_latency_bound(c, i), expected) << i;
    ASSERT_LT(relaxed_latency_bound(c, i), c.lat_max + c.lat_add);
  }
  EXPECT_DOUBLE_EQ(relaxed_latency_bound(c, 6), 10.0);
  EXPECT_DOUBLE_EQ(relaxed_latency_bound(c, 7), 13.0);
}

TEST(RandomSearch, VacuousConstraintsAcceptFirstSample) {
  Rigged r;
  SearchConfig c;
  c.lat_init = c.lat_max = 1e9;
  c.seed = 4;
  const auto out = random_search(r.eval, c, {});
  ASSERT_TRUE(out.found);
  EXPECT_EQ(out.iteration, 0u);
  EXPECT_EQ(out.found->arch, random_arch(r.space, 4));
}

TEST(RandomSearch, InfeasibleAccuracyExhaustsBudget) {
  Rigged r;
  SearchConfig c;
  c.acc_max = 95.0;
  c.acc_r = 1.0;
  c.itr_max = 300;
  const auto out = random_search(r.eval, c, {});
  EXPECT_FALSE(out.found);
  EXPECT_EQ(out.iteration, 300u);
}

TEST(RandomSearch, MatchesReferenceTranscription) {
  Rigged r;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SearchConfig c;
    c.acc_max = 80.0 + static_cast<double>(seed % 5);
    c.acc_r = 4.0;
    c.lat_init = 2.0 + static_cast<double>(seed % 3);
    c.lat_add = 0.5;
    c.lat_max = c.lat_init + 4.0;
    c.itr_n = 5 + seed % 4;
    c.itr_max = 400;
    ArchitectureSet parents;
    for (std::uint64_t p = 0; p < seed % 3; ++p) parents.insert(random_arch(r.space, 100 + p));
    Rng a(seed), b(seed);
    const auto got = random_search(r.eval, c, parents, a);
    const auto want = oracle::reference_random_search(r.space, r.table, r.model, c.acc_max, c.acc_r,
                                         c.lat_init, c.lat_add, c.lat_max, c.itr_n, c.itr_max,
                                         parents, b);
    ASSERT_EQ(got.found.has_value(), want.arch.has_value()) << seed;
    EXPECT_EQ(got.iteration, want.iteration) << seed;
    if (got.found) {
      EXPECT_EQ(got.found->arch, *want.arch);
      EXPECT_GT(got.found->acc, c.acc_max - c.acc_r);
      EXPECT_LT(got.found->lat, got.latency_bound);
      EXPECT_FALSE(parents.contains(got.found->arch));
    }
  }
}

TEST(RandomSearch, RelaxationReachesLateBound) {
  // Nothing is faster than L0 + 2d, so acceptance needs two relaxations.
  Rigged r;
  double fastest = 1e18;
  for (const auto& a : oracle::enumerate(r.space)) {
    fastest = std::min(fastest, predict_latency(r.table, a));
  }
  SearchConfig c;
  c.lat_add = 1.0;
  c.lat_init = fastest - 2.0 + 1e-6;
  c.lat_max = c.lat_init + 3.0;
  c.itr_n = 10;
  c.itr_max = 100000;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto out = random_search(r.eval, c, {}, rng);
    ASSERT_TRUE(out.found);
    EXPECT_GE(out.iteration, 2 * c.itr_n);
    EXPECT_LT(out.found->lat, c.lat_init + 3.0 * c.lat_add);
  }
}

TEST(Evolution, ZeroGenerationsReturnsBestSeed) {
  Rigged r;
  SearchConfig c;
  c.population_size = 20;
  c.tournament_size = 5;
  c.generations = 0;
  c.seed = 3;
  const SearchConstraint k{1e9, 0.0, 100.0};
  const auto res = evolutionary_search(r.eval, c, k);
  ASSERT_EQ(res.evaluated.size(), 20u);
  double best = 0.0;
  for (const auto& e : res.evaluated) best = std::max(best, e.acc);
  EXPECT_EQ(res.best.acc, best);
}

TEST(Evolution, DeterministicAndFeasible) {
  Rigged r;
  SearchConfig c;
  c.population_size = 30;
  c.tournament_size = 8;
  c.generations = 200;
  c.seed = 12;
  std::vector<double> lats;
  for (const auto& arch : oracle::enumerate(r.space)) lats.push_back(predict_latency(r.table, arch));
  std::sort(lats.begin(), lats.end());
  const double bound = lats[lats.size() / 4];
  c.lat_init = bound;
  c.lat_max = bound;
  const SearchConstraint k{bound, 0.0, 100.0};
  const auto a = evolutionary_search(r.eval, c, k);
  const auto b = evolutionary_search(r.eval, c, k);
  EXPECT_EQ(a.best.arch, b.best.arch);
  EXPECT_EQ(a.evaluated.size(), b.evaluated.size());
  EXPECT_LE(a.best.lat, bound);
  for (std::size_t i = 0; i < a.evaluated.size(); ++i) {
    ASSERT_EQ(a.evaluated[i].arch, b.evaluated[i].arch);
  }
}

TEST(Evolution, SeedingFailureIsNotFound) {
  Rigged r;
  SearchConfig c;
  c.population_size = 10;
  c.tournament_size = 2;
  c.lat_init = c.lat_max = 0.01;
  c.itr_max = 100;
  EXPECT_THROW(evolutionary_search(r.eval, c, SearchConstraint{1.0, 0.0, 100.0}), NotFound);
}

TEST(Pareto, HandExamples) {
  EXPECT_EQ(accs(pareto_front({point(30, 75)})), std::vector<double>{75});
  const auto f = pareto_front({point(30, 75), point(40, 74), point(50, 77)});
  EXPECT_EQ(accs(f), (std::vector<double>{75, 77}));
  EXPECT_EQ(accs(pareto_front({point(30, 75), point(30, 76)})), std::vector<double>{76});
  EXPECT_THROW(pareto_front({}), EmptyInput);
}

TEST(Pareto, MatchesBruteForceAndIsIdempotent) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> lat(10.0, 100.0), acc(70.0, 85.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + gen() % 500;
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so that ties occur.
      cands.push_back(point(std::round(lat(gen)), std::round(acc(gen) * 4.0) / 4.0,
                            128 + 4 * static_cast<int>(i % 25)));
    }
    const auto front = pareto_front(cands);
    const auto want = oracle::pareto_brute_force(cands);
    ASSERT_EQ(front.levels.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(front.levels[i].lat, want[i].first);
      EXPECT_EQ(front.levels[i].acc, want[i].second);
    }
    EXPECT_TRUE(front.is_strictly_ordered());
    EXPECT_EQ(accs(pareto_front(front.levels)), accs(front));
  }
}

TEST(SelectLevels, GreedyHandTrace) {
  ParetoFamily f;
  f.levels = {point(20, 70.2), point(22, 70.6), point(25, 71.3), point(30, 72.4),
              point(35, 73.3)};
  const auto out = select_levels(f, 1.0, 70.0, 85.0);
  EXPECT_EQ(accs(out), (std::vector<double>{70.2, 71.3, 72.4, 73.3}));
  EXPECT_TRUE(out.is_strictly_ordered());
}

TEST(SelectLevels, BoundaryBehaviour) {
  ParetoFamily f;
  f.levels = {point(20, 70.2), point(22, 70.6), point(25, 71.3)};
  EXPECT_EQ(accs(select_levels(f, 50.0, 70.0, 85.0)), (std::vector<double>{70.2, 71.3}));
  ParetoFamily one;
  one.levels = {point(20, 71.0)};
  EXPECT_EQ(accs(select_levels(one, 50.0, 70.0, 85.0)), std::vector<double>{71.0});
  EXPECT_THROW(select_levels(f, 1.0, 80.0, 85.0), EmptyInput);
  EXPECT_THROW(select_levels(f, 0.0, 70.0, 85.0), InvalidInput);
  EXPECT_THROW(select_levels(f, 1.0, 85.0, 70.0), InvalidInput);
}

TEST(SelectLevels, TopReplacesCloseLastLevel) {
  ParetoFamily f;
  f.levels = {point(20, 70.0), point(25, 71.0), point(30, 72.0), point(32, 72.3)};
  EXPECT_EQ(accs(select_levels(f, 1.0, 70.0, 85.0)), (std::vector<double>{70.0, 71.0, 72.3}));
}

TEST(SelectLevels, DenseFrontGapsStayInBand) {
  ParetoFamily f;
  for (int i = 0; i <= 600; ++i) f.levels.push_back(point(20 + i, 70.0 + 0.025 * i));
  const auto out = select_levels(f, 1.0, 70.0, 85.0);
  for (std::size_t i = 1; i < out.levels.size(); ++i) {
    const double gap = out.levels[i].acc - out.levels[i - 1].acc;
    EXPECT_GE(gap, 0.75 - 1e-9);
    EXPECT_LE(gap, 3.0);
  }
}

TEST(Flops, HandComputedValue) {
  SearchSpace s;
  const auto a = minimal_arch(s);
  // Per unit two layers of 3x3, expand 3; side = 128 / cumulative stride.
  const double sides[] = {64.0, 32.0, 16.0, 16.0, 8.0};
  double want = 0.0;
  for (double side : sides) want += 2.0 * 9.0 * 3.0 * side * side;
  EXPECT_DOUBLE_EQ(estimate_flops(a), want / 1e6);
  EXPECT_LT(estimate_flops(a), estimate_flops(maximal_arch(s)));
}

TEST(Flops, QuadraticInResolution) {
  SearchSpace s;
  auto a = random_arch(s, 5);
  a.resolution = 100;
  const double base = estimate_flops(a);
  a.resolution = 200;
  EXPECT_DOUBLE_EQ(estimate_flops(a), 4.0 * base);
}

TEST(BetterCandidate, TotalOrder) {
  auto a = point(30, 75.0, 128);
  auto b = point(30, 75.0, 160);
  EXPECT_TRUE(better_candidate(a, b));
  EXPECT_FALSE(better_candidate(b, a));
  b.acc = 75.1;
  EXPECT_TRUE(better_candidate(b, a));
  EXPECT_FALSE(better_candidate(a, a));
}

TEST(SearchFamily, SmallSpacePipeline) {
  const SearchSpace s = oracle::small_space();
  const auto table = generate_synthetic_profile(s, DeviceKind::gpu_like, 1.0, 1);
  const auto model = AccuracyModel::make_analytic(s);
  FamilySearchConfig cfg;
  cfg.acc_lo = 72.0;
  cfg.acc_hi = 90.0;
  cfg.spacing = 2.0;
  cfg.search.lat_init = 2.0;
  cfg.search.lat_add = 0.5;
  cfg.search.lat_max = 40.0;
  cfg.search.population_size = 20;
  cfg.search.tournament_size = 5;
  cfg.search.generations = 50;
  cfg.search.itr_max = 3000;
  const Evaluator eval{s, table, model};
  const auto a = search_family(eval, cfg);
  const auto b = search_family(eval, cfg);
  EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
  ASSERT_TRUE(a.feasible);
  EXPECT_GE(a.levels.levels.size(), 2u);
  EXPECT_TRUE(a.levels.is_strictly_ordered());
  for (const auto& l : a.levels.levels) {
    ASSERT_TRUE(l.measured.has_value());
    EXPECT_EQ(l.measured->latency_ms, l.lat);
  }
}

TEST(Json, ConfigRoundTrip) {
  FamilySearchConfig c;
  c.search.lat_init = 15.0;
  c.min_levels = 4;
  const nlohmann::json j = c;
  const auto back = j.get<FamilySearchConfig>();
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
  const nlohmann::json cand = point(30, 75);
  EXPECT_EQ(cand.get<Candidate>().acc, 75.0);
}

}  // namespace
}  // namespace dynnet
