#pragma once

// Penalized Bernoulli likelihood over candidate segmentations and the search
// for the best tuning parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "volseg/common.hpp"
#include "volseg/encoding.hpp"
#include "volseg/segmentation.hpp"

namespace volseg {

enum class Criterion { aic, bic };

inline double penalty_coefficient(Criterion c, std::size_t n) {
  return c == Criterion::aic ? 2.0 : std::log(static_cast<double>(n));
}

struct LossConfig {
  double k = 2.0;                  // 2 = AIC, ln(n) = BIC
  int m = 2;
  std::vector<int> threshold_grid; // empty: derived from the recurrence times
  std::vector<int> tstar_grid;     // empty: derived from the recurrence times
  std::size_t budget = 2000;
  std::uint64_t seed = 0;
  bool keep_trace = false;
  unsigned threads = 1;
};

struct Candidate {
  SearchParams params;
  double loss = 0.0;
  int alternations = 0;
};

struct DecodeResult {
  SearchParams best_params;
  StateAssignment best_assignment;  // ordered by ascending emission
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Candidate> trace;
  std::size_t evaluated = 0;
};

/// Count ratio of 1s over the segment.
inline double estimate_emission(std::span<const std::uint8_t> bits, std::span<const Interval> segment) {
  std::size_t ones = 0, len = 0;
  for (const Interval& iv : segment) {
    require(iv.end <= bits.size() && iv.begin <= iv.end, "segment outside the process");
    len += iv.size();
    for (std::size_t t = iv.begin; t < iv.end; ++t) ones += bits[t];
  }
  require(len > 0, "undefined estimate: empty segment", ErrorCode::insufficient_data);
  return static_cast<double>(ones) / static_cast<double>(len);
}

inline double estimate_emission(std::span<const std::uint8_t> bits, std::span<const std::size_t> indices) {
  require(!indices.empty(), "undefined estimate: empty segment", ErrorCode::insufficient_data);
  std::size_t ones = 0;
  for (std::size_t t : indices) {
    require(t < bits.size(), "segment outside the process");
    ones += bits[t];
  }
  return static_cast<double>(ones) / static_cast<double>(indices.size());
}

/// -2 log-likelihood of the state-wise Bernoulli fit (p clamped to
/// [1/(2n), 1-1/(2n)]). Empty states contribute nothing.
inline double data_term(const StateAssignment& a, std::size_t n) {
  const double eps = 1.0 / (2.0 * static_cast<double>(n));
  double ll = 0.0;
  bool any = false;
  for (std::size_t s = 0; s < a.support.size(); ++s) {
    if (a.support[s] == 0) continue;
    any = true;
    const double ones = static_cast<double>(a.events[s]);
    const double zeros = static_cast<double>(a.support[s] - a.events[s]);
    const double p = std::clamp(ones / static_cast<double>(a.support[s]), eps, 1.0 - eps);
    ll += ones * std::log(p) + zeros * std::log1p(-p);
  }
  return any ? -2.0 * ll : std::numeric_limits<double>::infinity();
}

inline double loss(std::size_t n, const StateAssignment& a, double k) {
  return data_term(a, n) + k * static_cast<double>(a.num_alternations);
}

inline double loss(const ExcursionProcess& x, const StateAssignment& a, double k) {
  require(a.labels.size() == x.size(), "assignment does not match the process");
  return loss(x.size(), a, k);
}

/// Integer thresholds from the {0.50, 0.55, ..., 0.95} quantiles of the
/// recurrence times (>= 1, unique); T_star from about a dozen geometrically
/// spaced values in [2, ceil(n*/4)].
inline void fill_default_grid(LossConfig& cfg, const RecurrenceSequence& r) {
  if (cfg.threshold_grid.empty()) {
    std::vector<double> gaps(r.gaps.begin(), r.gaps.end());
    std::sort(gaps.begin(), gaps.end());
    std::set<int> uniq;
    for (int i = 0; i < 10; ++i) {
      const double q = 0.5 + 0.05 * i;
      uniq.insert(std::max(1, static_cast<int>(std::lround(quantile_sorted(gaps, q)))));
    }
    cfg.threshold_grid.assign(uniq.begin(), uniq.end());
  }
  if (cfg.tstar_grid.empty()) {
    const double hi = std::max(2.0, std::ceil(static_cast<double>(r.gaps.size()) / 4.0));
    constexpr int steps = 12;
    std::set<int> uniq;
    for (int i = 0; i < steps; ++i) {
      const double v = 2.0 * std::pow(hi / 2.0, static_cast<double>(i) / (steps - 1));
      uniq.insert(static_cast<int>(std::lround(v)));
    }
    cfg.tstar_grid.assign(uniq.begin(), uniq.end());
  }
}

/// Every strictly increasing (m-1)-subset of the threshold grid paired with
/// every T_star, in lexicographic order.
inline std::vector<SearchParams> enumerate_grid(const LossConfig& cfg) {
  std::vector<int> grid = cfg.threshold_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<int> tstars = cfg.tstar_grid;
  std::sort(tstars.begin(), tstars.end());
  tstars.erase(std::unique(tstars.begin(), tstars.end()), tstars.end());
  const auto k = static_cast<std::size_t>(cfg.m - 1);
  std::vector<SearchParams> out;
  if (k == 0 || grid.size() < k) return out;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<int> t(k);
    for (std::size_t i = 0; i < k; ++i) t[i] = grid[idx[i]];
    for (int ts : tstars)
      if (ts >= 1) out.push_back({t, ts});
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == grid.size() - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

/// Total order used to pick the optimum: loss, then N, then parameters.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  if (a.alternations != b.alternations) return a.alternations < b.alternations;
  return a.params < b.params;
}

inline DecodeResult optimize_theta(std::span<const std::uint8_t> bits, LossConfig cfg) {
  require(cfg.k > 0.0, "penalty coefficient must be positive");
  require(cfg.budget >= 1, "search budget must be >= 1");
  require(cfg.m >= 2, "state count must be >= 2");
  require(!bits.empty(), "empty process", ErrorCode::insufficient_data);
  const RecurrenceSequence r = recurrence_times(bits);
  fill_default_grid(cfg, r);
  std::vector<SearchParams> candidates = enumerate_grid(cfg);
  require(!candidates.empty(), "no model: grid yields no admissible parameter combination",
          ErrorCode::no_model);
  if (candidates.size() > cfg.budget) {
    std::vector<SearchParams> picked;
    picked.reserve(cfg.budget);
    Rng rng = make_rng(cfg.seed, 0x5eed);
    std::sample(candidates.begin(), candidates.end(), std::back_inserter(picked), cfg.budget, rng);
    candidates = std::move(picked);
  }

  std::vector<Candidate> scored(candidates.size());
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t i) {
    const StateAssignment a = search_segments(bits, r, candidates[i]);
    scored[i] = {candidates[i], loss(bits.size(), a, cfg.k), a.num_alternations};
  });

  const Candidate* best = nullptr;
  for (const Candidate& c : scored)
    if (std::isfinite(c.loss) && (best == nullptr || better(c, *best))) best = &c;
  require(best != nullptr, "no model: every candidate was rejected", ErrorCode::no_model);

  DecodeResult out;
  out.best_params = best->params;
  out.best_loss = best->loss;
  out.best_assignment = order_by_emission(search_segments(bits, r, best->params), bits);
  out.evaluated = scored.size();
  if (cfg.keep_trace) out.trace = std::move(scored);
  return out;
}

inline DecodeResult optimize_theta(const ExcursionProcess& x, const LossConfig& cfg) {
  return optimize_theta(std::span<const std::uint8_t>(x.bits), cfg);
}

struct ThresholdChoice {
  bool separated = false;
  double threshold = 0.0;
  double separation = 0.0;
  std::vector<double> separations;  // per candidate; NaN when a single state was decoded
};

/// Picks the threshold whose decoded states are furthest apart in their
/// closest pair of emission estimates. `decode` returns the emission estimate
/// of every decoded (nonempty) state for a threshold.
inline ThresholdChoice max_min_threshold(std::span<const double> candidates,
                                         const std::function<std::vector<double>(double)>& decode) {
  ThresholdChoice out;
  out.separations.assign(candidates.size(), std::numeric_limits<double>::quiet_NaN());
  bool found = false;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::vector<double> p = decode(candidates[c]);
    if (p.size() < 2) continue;
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = i + 1; j < p.size(); ++j) closest = std::min(closest, std::abs(p[i] - p[j]));
    out.separations[c] = closest;
    if (!found || closest > out.separation) {
      found = true;
      out.separation = closest;
      out.threshold = candidates[c];
    }
  }
  out.separated = found && out.separation > 0.0;
  return out;
}

}  // namespace volseg
