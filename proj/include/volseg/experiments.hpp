#pragma once

// Replicated simulation studies: decoding error on the Bernoulli designs,
// emission recovery, clustering recovery on the regime designs, and the
// synthetic forecasting and network pipelines. Every replicate is keyed by
// (seed, replicate id), so results do not depend on the thread count.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "volseg/aggregation.hpp"
#include "volseg/decoding_error.hpp"
#include "volseg/forecasting.hpp"
#include "volseg/hmm.hpp"
#include "volseg/model_selection.hpp"
#include "volseg/network.hpp"
#include "volseg/simulation.hpp"

namespace volseg {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(std::span<const double> v) { return {mean(v), stddev(v)}; }

inline Bits to_bits(std::span<const double> values) {
  Bits b;
  b.reserve(values.size());
  for (double v : values) b.push_back(v > 0.5 ? 1 : 0);
  return b;
}

// ------------------------------------------------- change-point designs

struct ChangepointOptions {
  std::size_t reps = 100;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  double p1 = 0.1;
  std::vector<double> p2s{0.05, 0.2, 0.3, 0.5};
  std::vector<std::size_t> ns{1000, 2000, 3000};
  std::vector<Criterion> criteria{Criterion::aic, Criterion::bic};
};

struct ChangepointCell {
  double p2 = 0.0;
  std::size_t n = 0;
  Criterion criterion = Criterion::aic;
  MeanSd error;
  double mean_alternations = 0.0;
};

inline std::vector<ChangepointCell> run_changepoint_study(const ChangepointOptions& opt) {
  std::vector<ChangepointCell> cells;
  for (double p2 : opt.p2s)
    for (std::size_t n : opt.ns)
      for (Criterion c : opt.criteria) {
        std::vector<double> errs(opt.reps), alts(opt.reps);
        parallel_for(opt.reps, opt.threads, [&](std::size_t r) {
          SimSpec s;
          s.kind = SimKind::bernoulli_changepoints;
          s.n = n;
          s.p1 = opt.p1;
          s.p2 = p2;
          s.seed = opt.seed;
          s.replicate = r;
          const SimResult sim = generate(s);
          LossConfig cfg;
          cfg.m = 2;
          cfg.k = penalty_coefficient(c, n);
          cfg.seed = opt.seed + r;
          const DecodeResult res = optimize_theta(to_bits(sim.values), cfg);
          errs[r] = decoding_error_rate(sim.truth, res.best_assignment.labels);
          alts[r] = res.best_assignment.num_alternations;
        });
        cells.push_back({p2, n, c, mean_sd(errs), mean(alts)});
      }
  return cells;
}

// ----------------------------------------------------- Bernoulli HMM designs

struct BernoulliHmmOptions {
  std::size_t reps = 100;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::size_t n = 1000;
  double p1 = 0.1;
  std::vector<double> p12s{0.1, 0.05, 0.01, 0.005};
  std::vector<double> p2s{0.05, 0.2, 0.3, 0.5};
  int restarts = 10;
};

struct BernoulliHmmCell {
  double p12 = 0.0;
  double p2 = 0.0;
  std::vector<double> truth_error, hmm_error, ours_error;
  std::vector<double> ours_distance, hmm_distance;  // Euclidean, sorted emissions vs truth
};

inline double emission_distance(std::vector<double> est, double a, double b) {
  std::sort(est.begin(), est.end());
  if (est.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double lo = est.front(), hi = est.back();
  return std::hypot(lo - std::min(a, b), hi - std::max(a, b));
}

inline BernoulliHmmCell run_bernoulli_hmm_cell(const BernoulliHmmOptions& opt, double p12, double p2) {
  BernoulliHmmCell cell;
  cell.p12 = p12;
  cell.p2 = p2;
  const std::size_t reps = opt.reps;
  cell.truth_error.resize(reps);
  cell.hmm_error.resize(reps);
  cell.ours_error.resize(reps);
  cell.ours_distance.resize(reps);
  cell.hmm_distance.resize(reps);
  parallel_for(reps, opt.threads, [&](std::size_t r) {
    SimSpec s;
    s.kind = SimKind::bernoulli_hmm;
    s.n = opt.n;
    s.p1 = opt.p1;
    s.p2 = p2;
    s.p12 = p12;
    s.seed = opt.seed;
    s.replicate = r;
    const SimResult sim = generate(s);
    const auto truth_params = two_state(p12, BernoulliEmission{opt.p1}, BernoulliEmission{p2});
    cell.truth_error[r] = decoding_error_rate(sim.truth, viterbi(sim.values, truth_params));

    const auto fit = fit_hmm<BernoulliEmission>(sim.values, 2, {opt.restarts, opt.seed * 1000003 + r});
    cell.hmm_error[r] = decoding_error_rate(sim.truth, viterbi(sim.values, fit.params));
    cell.hmm_distance[r] = emission_distance(sorted_emission_values(fit.params), opt.p1, p2);

    LossConfig cfg;
    cfg.m = 2;
    cfg.seed = opt.seed + r;
    const DecodeResult res = optimize_theta(to_bits(sim.values), cfg);
    cell.ours_error[r] = decoding_error_rate(sim.truth, res.best_assignment.labels);
    cell.ours_distance[r] = emission_distance(res.best_assignment.emissions, opt.p1, p2);
  });
  return cell;
}

inline std::vector<BernoulliHmmCell> run_bernoulli_hmm_study(const BernoulliHmmOptions& opt) {
  std::vector<BernoulliHmmCell> cells;
  for (double p12 : opt.p12s)
    for (double p2 : opt.p2s) cells.push_back(run_bernoulli_hmm_cell(opt, p12, p2));
  return cells;
}

/// Batch means of a per-replicate series (consecutive blocks of `size`).
inline std::vector<double> batch_means(std::span<const double> v, std::size_t size) {
  std::vector<double> out;
  for (std::size_t i = 0; i + size <= v.size(); i += size) out.push_back(mean(v.subspan(i, size)));
  return out;
}

// ------------------------------------------------- continuous HMM designs

/// Continuous observations decoded with one two-sided band at the given
/// quantiles of the series, then the two-state search.
inline std::vector<int> decode_continuous(std::span<const double> values, double lower_q, double upper_q,
                                          const LossConfig& cfg) {
  const std::array<double, 2> levels{lower_q, upper_q};
  const std::vector<double> band = quantiles(values, levels);
  const ExcursionProcess x = encode_excursion(values, band[0], band[1]);
  return optimize_theta(x, cfg).best_assignment.labels;
}

struct ContinuousOptions {
  std::size_t reps = 100;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::size_t n = 1000;
  double lower_q = 0.1;
  double upper_q = 0.9;
  bool with_baseline = true;  // Gaussian HMM fit (gaussian_hmm designs only)
  int restarts = 10;
};

struct ContinuousCell {
  SimSpec spec;
  std::vector<double> ours_error;
  std::vector<double> hmm_error;  // empty without baseline
};

inline ContinuousCell run_continuous_cell(const ContinuousOptions& opt, SimSpec spec) {
  ContinuousCell cell;
  spec.n = opt.n;
  spec.seed = opt.seed;
  cell.spec = spec;
  const bool baseline = opt.with_baseline && spec.kind == SimKind::gaussian_hmm;
  cell.ours_error.resize(opt.reps);
  if (baseline) cell.hmm_error.resize(opt.reps);
  parallel_for(opt.reps, opt.threads, [&](std::size_t r) {
    SimSpec s = spec;
    s.replicate = r;
    const SimResult sim = generate(s);
    LossConfig cfg;
    cfg.m = 2;
    cfg.seed = opt.seed + r;
    cell.ours_error[r] = decoding_error_rate(sim.truth, decode_continuous(sim.values, opt.lower_q, opt.upper_q, cfg));
    if (baseline) {
      const auto fit = fit_hmm<GaussianEmission>(sim.values, 2, {opt.restarts, opt.seed * 1000003 + r});
      cell.hmm_error[r] = decoding_error_rate(sim.truth, viterbi(sim.values, fit.params));
    }
  });
  return cell;
}

inline SimSpec gaussian_hmm_design(double p12, double var1, double var2) {
  SimSpec s;
  s.kind = SimKind::gaussian_hmm;
  s.p12 = p12;
  s.variance = {var1, var2};
  return s;
}

/// variance_set 0: (0.1, 0.5 | 1, 1.5); 1: (0.1, 0.8 | 0.5, 1.5), as
/// (state 1 components a, b | state 2 components a, b).
inline SimSpec gmm_hmm_design(double p12, int variance_set, double weight_a) {
  SimSpec s;
  s.kind = SimKind::gmm_hmm;
  s.p12 = p12;
  s.weight_a = weight_a;
  s.weight_b = 1.0 - weight_a;
  if (variance_set == 0) {
    s.variance_a = {0.1, 1.0};
    s.variance_b = {0.5, 1.5};
  } else {
    s.variance_a = {0.1, 0.5};
    s.variance_b = {0.8, 1.5};
  }
  return s;
}

// ------------------------------------------------- regime designs (m = 3)

struct RegimeEmissionOptions {
  std::size_t reps = 50;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::size_t n = 8000;
  Criterion criterion = Criterion::aic;
};

struct RegimeEmissionResult {
  SimKind kind = SimKind::regime_gaussian;
  double band = 0.0;
  std::vector<std::vector<double>> emissions;  // per replicate, ascending (3 when three states survive)
  std::vector<double> error;
  std::array<double, 3> mean_emission{};       // over replicates with three states
  std::size_t three_state_reps = 0;
};

/// Symmetric band |l| = |u| = band, three-state search.
inline RegimeEmissionResult run_regime_emission(const RegimeEmissionOptions& opt, SimKind kind, double band) {
  RegimeEmissionResult out;
  out.kind = kind;
  out.band = band;
  out.emissions.resize(opt.reps);
  out.error.resize(opt.reps);
  parallel_for(opt.reps, opt.threads, [&](std::size_t r) {
    SimSpec s;
    s.kind = kind;
    s.n = opt.n;
    s.seed = opt.seed;
    s.replicate = r;
    const SimResult sim = generate(s);
    const ExcursionProcess x = encode_excursion(sim.values, -band, band);
    LossConfig cfg;
    cfg.m = 3;
    cfg.k = penalty_coefficient(opt.criterion, opt.n);
    cfg.seed = opt.seed + r;
    const DecodeResult res = optimize_theta(x, cfg);
    out.emissions[r] = res.best_assignment.emissions;
    out.error[r] = decoding_error_rate(sim.truth, res.best_assignment.labels);
  });
  for (const auto& e : out.emissions) {
    if (e.size() != 3) continue;
    for (std::size_t i = 0; i < 3; ++i) out.mean_emission[i] += e[i];
    ++out.three_state_reps;
  }
  if (out.three_state_reps > 0)
    for (double& v : out.mean_emission) v /= static_cast<double>(out.three_state_reps);
  return out;
}

/// True P(|Y| >= band) per state of a regime design.
inline std::array<double, 3> regime_tail_probabilities(SimKind kind, double band, const SimSpec& spec = {}) {
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (kind == SimKind::regime_gaussian) {
      out[i] = std::erfc(band / (spec.sigma[i] * std::sqrt(2.0)));
    } else {
      // 1 - 2 * integral of the t density over [0, band], midpoint rule
      const double v = spec.df[i];
      const double c = std::exp(std::lgamma((v + 1) / 2) - std::lgamma(v / 2)) / std::sqrt(v * std::numbers::pi);
      constexpr int steps = 100000;
      const double h = band / steps;
      double acc = 0.0;
      for (int k = 0; k < steps; ++k) {
        const double t = h * (k + 0.5);
        acc += std::pow(1.0 + t * t / v, -(v + 1) / 2);
      }
      out[i] = 1.0 - 2.0 * c * acc * h;
    }
  }
  return out;
}

struct ClusteringOptions {
  std::size_t reps = 10;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::size_t n = 8000;
  SimKind kind = SimKind::regime_t;
  int row_states = 3;
  int clusters = 3;
  std::size_t margin = 25;  // points excluded on each side of a true change point
};

struct ClusteringResult {
  std::vector<double> error;           // whole path
  std::vector<double> interior_error;  // away from change points
};

/// Permutation-minimal error restricted to points farther than `margin`
/// from every change of the true path.
inline double interior_error(std::span<const int> truth, std::span<const int> decoded, std::size_t margin) {
  const std::size_t n = truth.size();
  std::vector<char> keep(n, 1);
  for (std::size_t t = 1; t < n; ++t)
    if (truth[t] != truth[t - 1]) {
      const std::size_t lo = t > margin ? t - margin : 0;
      const std::size_t hi = std::min(n, t + margin);
      for (std::size_t i = lo; i < hi; ++i) keep[i] = 0;
    }
  std::vector<int> a, b;
  for (std::size_t t = 0; t < n; ++t)
    if (keep[t]) {
      a.push_back(truth[t]);
      b.push_back(decoded[t]);
    }
  return decoding_error_rate(a, b);
}

inline ClusteringResult run_clustering_recovery(const ClusteringOptions& opt) {
  ClusteringResult out;
  out.error.resize(opt.reps);
  out.interior_error.resize(opt.reps);
  parallel_for(opt.reps, opt.threads, [&](std::size_t r) {
    SimSpec s;
    s.kind = opt.kind;
    s.n = opt.n;
    s.seed = opt.seed;
    s.replicate = r;
    const SimResult sim = generate(s);
    const ThresholdLadder ladder = ladder_from_quantiles(sim.values, default_ladder_levels());
    LossConfig cfg;
    cfg.m = opt.row_states;
    cfg.seed = opt.seed + r;
    const EmissionMatrix em = encode_decode(sim.values, ladder, cfg, 1);
    std::vector<int> labels;
    try {
      labels = cluster_states(em, opt.clusters).labels;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::insufficient_data) throw;
      labels = cluster_states(em, std::nullopt).labels;
    }
    out.error[r] = decoding_error_rate(sim.truth, labels);
    out.interior_error[r] = interior_error(sim.truth, labels, opt.margin);
  });
  return out;
}

// ------------------------------------------------------------ forecasting

struct ForecastStudyOptions {
  std::size_t runs = 10;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::size_t n = 600;        // series length per run
  std::size_t horizon = 40;   // forecast origins at the end of each series
  ForecastConfig forecast{};
};

struct ForecastStudyResult {
  std::vector<ForecastErrors> ours;
  std::vector<ForecastErrors> frozen;  // predict the last observed value
  std::size_t wins = 0;                // runs where our RMSE is below the frozen RMSE
  bool finite = true;
};

/// Regime-switching Gaussian returns (8 blocks, sigma 1/2/3) scaled to a
/// daily-like magnitude.
inline ForecastStudyResult run_forecast_study(const ForecastStudyOptions& opt) {
  ForecastStudyResult out;
  out.ours.resize(opt.runs);
  out.frozen.resize(opt.runs);
  parallel_for(opt.runs, opt.threads, [&](std::size_t r) {
    SimSpec s;
    s.kind = SimKind::regime_gaussian;
    s.n = opt.n;
    s.seed = opt.seed;
    s.replicate = r;
    SimResult sim = generate(s);
    for (double& v : sim.values) v *= 0.01;
    ForecastConfig cfg = opt.forecast;
    cfg.decode.seed = opt.seed + r;
    cfg.restarts.seed = opt.seed + r;
    cfg.threads = 1;
    const RollingForecast rf = rolling_forecast(sim.values, opt.n - opt.horizon, cfg);
    std::vector<double> frozen;
    for (std::size_t t : rf.origins) frozen.push_back(sim.values[t - 1]);
    out.ours[r] = forecast_errors(rf.predicted, rf.actual);
    out.frozen[r] = forecast_errors(frozen, rf.actual);
  });
  for (std::size_t r = 0; r < opt.runs; ++r) {
    if (out.ours[r].rmse < out.frozen[r].rmse) ++out.wins;
    out.finite = out.finite && std::isfinite(out.ours[r].rmse) && std::isfinite(out.ours[r].mae);
  }
  return out;
}

// ---------------------------------------------------------------- network

struct NetworkStudyOptions {
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::size_t groups = 2;
  std::size_t per_group = 3;
  std::size_t n = 6000;        // clock units
  double trade_prob = 0.8;     // chance that a unit holds a transaction
  std::size_t block = 5;       // block-max width
  std::size_t segment = 250;   // mean regime length of each group's driver
  Criterion criterion = Criterion::bic;  // per-row search criterion of the decode
};

struct NetworkStudyResult {
  TEMatrix matrix;
  std::vector<std::vector<double>> dissimilarity;
  DissimilarityClustering clustering;
  std::vector<int> planted;    // group per node
  std::vector<int> recovered;  // two-way cut of the tree
  bool blocks_contiguous = false;
  double error = 1.0;          // permutation-minimal disagreement of the cut
};

/// Instruments in a group share a three-level volatility driver; groups are
/// independent. Each instrument trades at random clock units, is decoded on
/// its own transaction-time returns, then put back on the shared clock.
inline NetworkStudyResult run_network_study(const NetworkStudyOptions& opt) {
  const std::size_t p = opt.groups * opt.per_group;
  std::vector<std::vector<int>> drivers(opt.groups);
  for (std::size_t g = 0; g < opt.groups; ++g) {
    Rng rng = make_rng(opt.seed, 1000 + g);
    std::bernoulli_distribution flip(1.0 / static_cast<double>(opt.segment));
    std::uniform_int_distribution<int> level(1, 3);
    int state = level(rng);
    for (std::size_t t = 0; t < opt.n; ++t) {
      if (flip(rng)) state = level(rng);
      drivers[g].push_back(state);
    }
  }
  NetworkStudyResult out;
  std::vector<std::vector<int>> symbols(p);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < p; ++i) {
    names.push_back("S" + std::to_string(i + 1));
    out.planted.push_back(static_cast<int>(i / opt.per_group) + 1);
  }
  parallel_for(p, opt.threads, [&](std::size_t i) {
    const auto& driver = drivers[i / opt.per_group];
    Rng rng = make_rng(opt.seed, i);
    std::bernoulli_distribution trades(opt.trade_prob);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> stamps, values;
    for (std::size_t t = 0; t < opt.n; ++t) {
      if (!trades(rng)) continue;
      stamps.push_back(static_cast<double>(t));
      values.push_back(static_cast<double>(driver[t]) * normal(rng));
    }
    const ThresholdLadder ladder = ladder_from_quantiles(values, default_ladder_levels());
    LossConfig cfg;
    cfg.m = 3;
    cfg.k = penalty_coefficient(opt.criterion, values.size());
    cfg.seed = opt.seed + i;
    const EmissionMatrix em = encode_decode(values, ladder, cfg, 1);
    std::vector<int> labels;
    try {
      labels = cluster_states(em, 3).labels;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::insufficient_data) throw;
      labels = cluster_states(em, std::nullopt).labels;
    }
    const SymbolSeries clock = to_clock_symbols(labels, stamps, 1.0, 0.0, opt.n);
    symbols[i] = block_max_summarize(clock, opt.block).symbols;
  });
  out.matrix = te_matrix(names, symbols, [](std::span<const int> x, std::span<const int> y) {
    return te_lag_lead(x, y);
  }, opt.threads);
  out.dissimilarity = dissimilarity(out.matrix);
  out.clustering = cluster_dissimilarity(out.dissimilarity);
  const std::vector<int> cut = cut_tree(out.clustering.tree, opt.groups);
  for (int c : cut) out.recovered.push_back(c + 1);
  out.error = decoding_error_rate(out.planted, out.recovered);
  // planted groups appear as contiguous runs of the heatmap order
  std::vector<int> seq;
  for (std::size_t leaf : out.clustering.order) seq.push_back(out.planted[leaf]);
  out.blocks_contiguous = count_alternations(seq) == static_cast<int>(opt.groups);
  return out;
}

}  // namespace volseg
