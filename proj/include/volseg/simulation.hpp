#pragma once

// Seeded generators for the benchmark designs. Every generator returns the
// observations together with the 1-based true state path.

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "volseg/common.hpp"

namespace volseg {

enum class SimKind {
  bernoulli_changepoints,  // fixed proportional breakpoints, alternating states
  bernoulli_hmm,
  gaussian_hmm,
  gmm_hmm,
  regime_gaussian,  // 8-segment layout, state order 1,2,3,2,1,3,2,1
  regime_t,
};

inline const char* to_string(SimKind k) {
  switch (k) {
    case SimKind::bernoulli_changepoints: return "bernoulli_changepoints";
    case SimKind::bernoulli_hmm: return "bernoulli_hmm";
    case SimKind::gaussian_hmm: return "gaussian_hmm";
    case SimKind::gmm_hmm: return "gmm_hmm";
    case SimKind::regime_gaussian: return "regime_gaussian";
    case SimKind::regime_t: return "regime_t";
  }
  return "unknown";
}

inline SimKind parse_sim_kind(const std::string& s) {
  for (SimKind k : {SimKind::bernoulli_changepoints, SimKind::bernoulli_hmm, SimKind::gaussian_hmm,
                    SimKind::gmm_hmm, SimKind::regime_gaussian, SimKind::regime_t})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::invalid_argument, "unknown simulation kind: " + s);
}

struct SimSpec {
  SimKind kind = SimKind::bernoulli_changepoints;
  std::size_t n = 1000;
  // Bernoulli emissions
  double p1 = 0.1;
  double p2 = 0.5;
  // symmetric two-state transition matrix, off-diagonal p12
  double p12 = 0.01;
  // gaussian_hmm variances per state
  std::array<double, 2> variance{1.0, 3.0};
  // gmm_hmm: component weights and per-state component variances
  double weight_a = 0.5;
  double weight_b = 0.5;
  std::array<double, 2> variance_a{0.1, 1.0};
  std::array<double, 2> variance_b{0.5, 1.5};
  // regime designs
  std::array<double, 3> sigma{1.0, 2.0, 3.0};
  std::array<double, 3> df{1.0, 2.0, 5.0};
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

struct SimResult {
  std::vector<double> values;
  std::vector<int> truth;
};

inline void validate(const SimSpec& s) {
  require(s.n >= 2, "simulation length must be >= 2");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(s.p1) && prob(s.p2) && prob(s.p12), "probabilities must lie in [0,1]");
  require(s.variance[0] > 0 && s.variance[1] > 0, "variances must be positive");
  require(s.variance_a[0] > 0 && s.variance_a[1] > 0 && s.variance_b[0] > 0 && s.variance_b[1] > 0,
          "mixture variances must be positive");
  require(s.weight_a >= 0 && s.weight_b >= 0 && std::abs(s.weight_a + s.weight_b - 1.0) < 1e-9,
          "mixture weights must be nonnegative and sum to 1");
  for (double v : s.sigma) require(v > 0, "standard deviations must be positive");
  for (double v : s.df) require(v > 0, "degrees of freedom must be positive");
}

/// Start indices of the segments after the first: 0.1n, 0.2n, 0.4n, 0.7n, 0.9n.
inline std::vector<std::size_t> changepoint_breaks(std::size_t n) {
  std::vector<std::size_t> out;
  for (double f : {0.1, 0.2, 0.4, 0.7, 0.9})
    out.push_back(static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
  return out;
}

inline std::vector<int> changepoint_path(std::size_t n) {
  std::vector<int> path(n);
  const auto breaks = changepoint_breaks(n);
  int state = 1;
  std::size_t b = 0;
  for (std::size_t t = 0; t < n; ++t) {
    while (b < breaks.size() && t == breaks[b]) {
      state = 3 - state;
      ++b;
    }
    path[t] = state;
  }
  return path;
}

/// Eight equal blocks with states 1,2,3,2,1,3,2,1 (8000 points gives blocks
/// of 1000).
inline std::vector<int> regime_path(std::size_t n) {
  static constexpr std::array<int, 8> order{1, 2, 3, 2, 1, 3, 2, 1};
  std::vector<int> path(n);
  for (std::size_t t = 0; t < n; ++t) path[t] = order[std::min<std::size_t>(7, t * 8 / n)];
  return path;
}

/// Two-state Markov path with symmetric switching probability, uniform start.
inline std::vector<int> markov_path(std::size_t n, double p12, Rng& rng) {
  std::vector<int> path(n);
  std::bernoulli_distribution start(0.5), flip(p12);
  int state = start(rng) ? 2 : 1;
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0 && flip(rng)) state = 3 - state;
    path[t] = state;
  }
  return path;
}

inline SimResult generate(const SimSpec& spec) {
  validate(spec);
  Rng rng = make_rng(spec.seed, spec.replicate);
  SimResult out;
  const std::size_t n = spec.n;
  out.values.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (spec.kind) {
    case SimKind::bernoulli_changepoints:
    case SimKind::bernoulli_hmm: {
      out.truth = spec.kind == SimKind::bernoulli_changepoints ? changepoint_path(n)
                                                               : markov_path(n, spec.p12, rng);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double p = out.truth[t] == 1 ? spec.p1 : spec.p2;
        out.values[t] = u(rng) < p ? 1.0 : 0.0;
      }
      break;
    }
    case SimKind::gaussian_hmm: {
      out.truth = markov_path(n, spec.p12, rng);
      for (std::size_t t = 0; t < n; ++t)
        out.values[t] = std::sqrt(spec.variance[static_cast<std::size_t>(out.truth[t] - 1)]) * normal(rng);
      break;
    }
    case SimKind::gmm_hmm: {
      out.truth = markov_path(n, spec.p12, rng);
      std::bernoulli_distribution pick_a(spec.weight_a);
      for (std::size_t t = 0; t < n; ++t) {
        const auto s = static_cast<std::size_t>(out.truth[t] - 1);
        const double var = pick_a(rng) ? spec.variance_a[s] : spec.variance_b[s];
        out.values[t] = std::sqrt(var) * normal(rng);
      }
      break;
    }
    case SimKind::regime_gaussian: {
      out.truth = regime_path(n);
      for (std::size_t t = 0; t < n; ++t)
        out.values[t] = spec.sigma[static_cast<std::size_t>(out.truth[t] - 1)] * normal(rng);
      break;
    }
    case SimKind::regime_t: {
      out.truth = regime_path(n);
      std::array<std::student_t_distribution<double>, 3> t_dist{
          std::student_t_distribution<double>(spec.df[0]), std::student_t_distribution<double>(spec.df[1]),
          std::student_t_distribution<double>(spec.df[2])};
      for (std::size_t t = 0; t < n; ++t) out.values[t] = t_dist[static_cast<std::size_t>(out.truth[t] - 1)](rng);
      break;
    }
  }
  return out;
}

}  // namespace volseg
