#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "volseg/decoding_error.hpp"
#include "volseg/model_selection.hpp"
#include "volseg/simulation.hpp"

using namespace volseg;

namespace {

Bits random_bits(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  Bits b(n);
  for (auto& x : b) x = coin(rng);
  return b;
}

}  // namespace

TEST(EstimateEmission, CountRatio) {
  const Bits bits{0, 0, 1, 0, 1};
  const std::vector<Interval> all{{0, 5}};
  EXPECT_DOUBLE_EQ(estimate_emission(bits, all), 0.4);
  const Bits ones{1, 1, 1};
  EXPECT_DOUBLE_EQ(estimate_emission(ones, std::vector<Interval>{{0, 3}}), 1.0);
  EXPECT_THROW(estimate_emission(bits, std::vector<Interval>{}), Error);
  const std::vector<std::size_t> idx{2, 3, 4};
  EXPECT_DOUBLE_EQ(estimate_emission(bits, idx), 2.0 / 3.0);
}

TEST(EstimateEmission, MatchesCountOracleOnEverySegment) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const Bits bits = random_bits(60, 0.3, rng);
    const StateAssignment a = search_segments(ExcursionProcess{bits}, {{2, 5}, 2});
    for (int s = 0; s < a.num_states; ++s) {
      std::vector<std::size_t> idx;
      for (std::size_t t = 0; t < bits.size(); ++t)
        if (a.labels[t] == s + 1) idx.push_back(t);
      if (idx.empty()) continue;
      double ones = 0;
      for (auto t : idx) ones += bits[t];
      EXPECT_DOUBLE_EQ(estimate_emission(bits, idx), ones / static_cast<double>(idx.size()));
      EXPECT_DOUBLE_EQ(a.emissions[static_cast<std::size_t>(s)], ones / static_cast<double>(idx.size()));
    }
  }
}

TEST(Loss, SingleSegmentHandValue) {
  const Bits bits{1, 0, 1, 0};
  StateAssignment a;
  a.num_states = 1;
  a.labels = {1, 1, 1, 1};
  summarize(a, bits);
  const double want = -2.0 * 4.0 * std::log(0.5) + 2.0;
  EXPECT_NEAR(loss(ExcursionProcess{bits}, a, 2.0), want, 1e-12);
  EXPECT_NEAR(want, 7.545, 1e-3);
}

TEST(Loss, MatchesOracleAndClamps) {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 200; ++rep) {
    const Bits bits = random_bits(50, rep % 2 ? 0.5 : 0.05, rng);
    const SearchParams p{{1, 3}, 2};
    const StateAssignment a = search_segments(ExcursionProcess{bits}, p);
    const double k = rep % 3 == 0 ? std::log(50.0) : 2.0;
    if (std::none_of(bits.begin(), bits.end(), [](auto b) { return b != 0; })) continue;
    const auto labels = oracle::naive_labels(bits, p.thresholds, p.t_star);
    EXPECT_NEAR(loss(ExcursionProcess{bits}, a, k), oracle::naive_loss(bits, labels, k), 1e-9);
  }
  const Bits ones{1, 1, 1, 1};
  StateAssignment a;
  a.num_states = 1;
  a.labels = {1, 1, 1, 1};
  summarize(a, ones);
  EXPECT_TRUE(std::isfinite(loss(ExcursionProcess{ones}, a, 2.0)));
  EXPECT_NEAR(loss(ExcursionProcess{ones}, a, 2.0), -8.0 * std::log(1.0 - 1.0 / 8.0) + 2.0, 1e-12);
}

TEST(Penalty, AicAndBic) {
  EXPECT_DOUBLE_EQ(penalty_coefficient(Criterion::aic, 1000), 2.0);
  EXPECT_DOUBLE_EQ(penalty_coefficient(Criterion::bic, 1000), std::log(1000.0));
}

TEST(OptimizeTheta, EqualsExhaustiveGridArgmin) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> len(20, 150);
  for (int rep = 0; rep < 120; ++rep) {
    const Bits bits = random_bits(static_cast<std::size_t>(len(rng)), rep % 2 ? 0.15 : 0.4, rng);
    if (std::none_of(bits.begin(), bits.end(), [](auto b) { return b != 0; })) continue;
    LossConfig cfg;
    cfg.m = 2 + rep % 2;
    cfg.k = rep % 3 == 0 ? std::log(static_cast<double>(bits.size())) : 2.0;
    cfg.threshold_grid = {1, 2, 3, 5, 8};
    cfg.tstar_grid = {1, 2, 3, 4, 6};
    cfg.budget = 1000;
    const DecodeResult got = optimize_theta(bits, cfg);
    const auto want = oracle::exhaustive_optimum(bits, cfg.m, cfg.threshold_grid, cfg.tstar_grid, cfg.k);
    EXPECT_EQ(got.best_params.thresholds, want.thresholds) << "rep " << rep;
    EXPECT_EQ(got.best_params.t_star, want.t_star) << "rep " << rep;
    EXPECT_NEAR(got.best_loss, want.loss, 1e-9);
  }
}

TEST(OptimizeTheta, TraceMinimumIsBest) {
  std::mt19937_64 rng(29);
  const Bits bits = random_bits(400, 0.2, rng);
  LossConfig cfg;
  cfg.keep_trace = true;
  const DecodeResult r = optimize_theta(bits, cfg);
  ASSERT_FALSE(r.trace.empty());
  double lo = r.trace.front().loss;
  for (const auto& c : r.trace) lo = std::min(lo, c.loss);
  EXPECT_DOUBLE_EQ(lo, r.best_loss);
  EXPECT_EQ(r.evaluated, r.trace.size());
}

TEST(OptimizeTheta, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(31);
  const Bits bits = random_bits(1500, 0.2, rng);
  LossConfig cfg;
  cfg.m = 3;
  cfg.budget = 50;  // forces the sampled search
  cfg.seed = 99;
  cfg.keep_trace = true;
  const DecodeResult a = optimize_theta(bits, cfg);
  cfg.threads = 4;
  const DecodeResult b = optimize_theta(bits, cfg);
  EXPECT_EQ(a.best_params, b.best_params);
  EXPECT_EQ(a.best_assignment.labels, b.best_assignment.labels);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  EXPECT_EQ(a.trace.size(), 50u);
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].params, b.trace[i].params);
}

TEST(OptimizeTheta, NoAdmissibleCombinationIsNoModel) {
  const Bits bits{1, 0, 1, 0, 0, 1};
  LossConfig cfg;
  cfg.m = 3;
  cfg.threshold_grid = {2};
  cfg.tstar_grid = {2};
  try {
    optimize_theta(bits, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_model);
  }
}

TEST(OptimizeTheta, RejectsBadConfig) {
  const Bits bits{1, 0};
  LossConfig cfg;
  cfg.k = 0.0;
  EXPECT_THROW(optimize_theta(bits, cfg), Error);
  cfg.k = 2.0;
  cfg.budget = 0;
  EXPECT_THROW(optimize_theta(bits, cfg), Error);
}

TEST(OptimizeTheta, ConstantRateMostlySelectsOneSegment) {
  int single = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    std::mt19937_64 rng(1000 + r);
    const Bits bits = random_bits(1000, 0.2, rng);
    LossConfig cfg;
    cfg.k = std::log(1000.0);
    cfg.seed = r;
    single += optimize_theta(bits, cfg).best_assignment.num_alternations == 1;
  }
  EXPECT_GE(single, reps * 9 / 10);
}

TEST(OptimizeTheta, FindsPlantedChangepoints) {
  SimSpec s;
  s.n = 2000;
  s.p2 = 0.5;
  s.seed = 7;
  const SimResult sim = generate(s);
  Bits bits;
  for (double v : sim.values) bits.push_back(v > 0.5);
  LossConfig cfg;
  cfg.k = std::log(2000.0);
  const DecodeResult r = optimize_theta(bits, cfg);
  EXPECT_LT(decoding_error_rate(sim.truth, r.best_assignment.labels), 0.08);
  EXPECT_LT(r.best_assignment.emissions[0], r.best_assignment.emissions[1]);
}

TEST(DefaultGrid, QuantileThresholdsAndGeometricTStar) {
  RecurrenceSequence r;
  for (int i = 0; i < 100; ++i) r.gaps.push_back(i % 20);
  LossConfig cfg;
  fill_default_grid(cfg, r);
  EXPECT_TRUE(std::is_sorted(cfg.threshold_grid.begin(), cfg.threshold_grid.end()));
  EXPECT_GE(cfg.threshold_grid.front(), 1);
  EXPECT_LE(cfg.tstar_grid.size(), 12u);
  EXPECT_EQ(cfg.tstar_grid.front(), 2);
  EXPECT_EQ(cfg.tstar_grid.back(), 25);  // ceil(100 / 4)
}

TEST(MaxMinThreshold, PicksLargestSeparation) {
  // two logistic CDFs, shifted; |F1 - F2| peaks midway between the centres
  auto f = [](double x, double c) { return 1.0 / (1.0 + std::exp(-(x - c))); };
  std::vector<double> cand;
  for (int i = -30; i <= 30; ++i) cand.push_back(0.25 * i);
  const ThresholdChoice c =
      max_min_threshold(cand, [&](double x) { return std::vector<double>{f(x, -1.0), f(x, 1.0)}; });
  EXPECT_TRUE(c.separated);
  EXPECT_NEAR(c.threshold, 0.0, 1e-12);
  EXPECT_NEAR(c.separation, f(0, -1) - f(0, 1), 1e-12);
}

TEST(MaxMinThreshold, IdenticalStatesSignalNoSeparation) {
  const std::vector<double> cand{1, 2, 3};
  const ThresholdChoice same = max_min_threshold(cand, [](double) { return std::vector<double>{0.3, 0.3}; });
  EXPECT_FALSE(same.separated);
  const ThresholdChoice single = max_min_threshold(cand, [](double) { return std::vector<double>{0.3}; });
  EXPECT_FALSE(single.separated);
}
