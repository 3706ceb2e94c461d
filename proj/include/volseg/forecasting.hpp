#pragma once

// One-step-ahead forecasting by matching the latest window against earlier
// windows of the same length. Windows are scored either by a Gaussian HMM
// fitted on the latest window or by the decoded cluster CDFs (a bin
// probability per observation, state taken from a full-history decode).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "volseg/aggregation.hpp"
#include "volseg/common.hpp"
#include "volseg/hmm.hpp"

namespace volseg {

enum class ForecastEngine { gaussian_hmm, nonparametric };

inline const char* to_string(ForecastEngine e) {
  return e == ForecastEngine::gaussian_hmm ? "gaussian_hmm" : "nonparametric";
}

inline ForecastEngine parse_forecast_engine(const std::string& s) {
  if (s == "gaussian_hmm" || s == "hmm") return ForecastEngine::gaussian_hmm;
  if (s == "nonparametric" || s == "np") return ForecastEngine::nonparametric;
  throw Error(ErrorCode::invalid_argument, "unknown forecast engine: " + s);
}

inline constexpr double kMassFloor = 1e-12;

struct ForecastConfig {
  std::size_t window = 100;  // D
  ForecastEngine engine = ForecastEngine::nonparametric;
  std::vector<double> ladder_levels = default_ladder_levels();
  std::optional<int> clusters;  // nonparametric engine; silhouette choice when empty
  LossConfig decode;            // per-row search settings
  std::size_t hmm_states = 4;
  RandomRestarts restarts{};
  int hmm_max_iters = 500;
  unsigned threads = 1;
};

inline void validate(const ForecastConfig& cfg) {
  require(cfg.window >= 10, "training window must be >= 10");
  require(cfg.hmm_states >= 1, "HMM needs at least one state");
}

/// Probability of each of the V+1 bins cut by ascending thresholds, given
/// the lower-tail CDF at those thresholds.
inline std::vector<double> bin_masses(std::span<const double> cdf) {
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    require(cdf[i] >= 0.0 && cdf[i] <= 1.0, "CDF value outside [0,1]");
    if (i > 0) require(cdf[i] >= cdf[i - 1], "CDF is not monotone over the sorted ladder");
  }
  std::vector<double> out;
  double prev = 0.0;
  for (double f : cdf) {
    out.push_back(f - prev);
    prev = f;
  }
  out.push_back(1.0 - prev);
  return out;
}

/// Mass of the bin containing y. Bins are (-inf, p_1], (p_1, p_2], ...,
/// (p_V, inf) for ascending thresholds p.
inline double obs_prob_nonparam(double y, std::span<const double> cdf, std::span<const double> sorted_thresholds) {
  require(cdf.size() == sorted_thresholds.size() && !cdf.empty(), "CDF does not match the ladder");
  require(std::is_sorted(sorted_thresholds.begin(), sorted_thresholds.end()), "ladder thresholds must be ascending");
  const std::vector<double> masses = bin_masses(cdf);
  const auto bin = static_cast<std::size_t>(
      std::lower_bound(sorted_thresholds.begin(), sorted_thresholds.end(), y) - sorted_thresholds.begin());
  return masses[bin];
}

/// Decoded view of one history: state per time point and per-state CDFs.
struct NonparametricModel {
  std::vector<int> labels;                 // 1..k
  std::vector<double> sorted_thresholds;
  std::vector<std::vector<double>> cdf;    // per state, monotone
  std::vector<std::vector<double>> masses; // per state, V+1 bins
};

inline NonparametricModel fit_nonparametric(std::span<const double> history, const ForecastConfig& cfg) {
  const ThresholdLadder ladder = ladder_from_quantiles(history, cfg.ladder_levels);
  const EmissionMatrix em = encode_decode(history, ladder, cfg.decode, cfg.threads);
  ClusterResult cr;
  try {
    cr = cluster_states(em, cfg.clusters);
  } catch (const Error& e) {
    // too few distinct emission vectors for the requested k
    if (e.code() != ErrorCode::insufficient_data || !cfg.clusters) throw;
    cr = cluster_states(em, std::nullopt);
  }
  NonparametricModel model;
  model.labels = std::move(cr.labels);
  model.sorted_thresholds = std::move(cr.sorted_thresholds);
  model.cdf = std::move(cr.cdf);
  for (const auto& f : model.cdf) model.masses.push_back(bin_masses(f));
  return model;
}

struct WindowScore {
  double log_prob = 0.0;
  std::size_t floored = 0;  // observations whose bin mass hit the floor
};

/// Sum of log bin masses over history[begin, begin + len), each observation
/// scored under its decoded state.
inline WindowScore window_log_prob(std::span<const double> history, std::size_t begin, std::size_t len,
                                   const NonparametricModel& model) {
  require(begin + len <= history.size() && begin + len <= model.labels.size(), "window outside the history");
  WindowScore out;
  for (std::size_t t = begin; t < begin + len; ++t) {
    const auto& masses = model.masses[static_cast<std::size_t>(model.labels[t] - 1)];
    const auto bin = static_cast<std::size_t>(
        std::lower_bound(model.sorted_thresholds.begin(), model.sorted_thresholds.end(), history[t]) -
        model.sorted_thresholds.begin());
    double p = masses[bin];
    if (p < kMassFloor) {
      p = kMassFloor;
      ++out.floored;
    }
    out.log_prob += std::log(p);
  }
  return out;
}

inline WindowScore window_log_prob(std::span<const double> window, const HmmParams<GaussianEmission>& params) {
  return {log_likelihood(window, params), 0};
}

struct Forecast {
  double prediction = 0.0;
  std::size_t matched_offset = 0;  // k*
  double train_log_prob = 0.0;
  double matched_log_prob = 0.0;
  std::size_t floored = 0;
};

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// Forecast of the value following `history` (length T). The training window
/// is the last D values; candidates are the windows ending k steps earlier,
/// k = 1..T-D. The closest log-probability wins, ties toward smaller k.
inline Forecast match_and_forecast(std::span<const double> history, const ForecastConfig& cfg) {
  validate(cfg);
  const std::size_t T = history.size();
  const std::size_t D = cfg.window;
  require(T >= 2 * D, "history must hold at least two training windows", ErrorCode::insufficient_data);
  const std::size_t candidates = T - D;
  std::vector<double> scores(candidates + 1);  // index k; 0 is the training window
  std::size_t floored = 0;

  if (cfg.engine == ForecastEngine::nonparametric) {
    const NonparametricModel model = fit_nonparametric(history, cfg);
    std::vector<std::size_t> floor_counts(candidates + 1, 0);
    parallel_for(candidates + 1, cfg.threads, [&](std::size_t k) {
      const WindowScore s = window_log_prob(history, T - D - k, D, model);
      scores[k] = s.log_prob;
      floor_counts[k] = s.floored;
    });
    for (std::size_t c : floor_counts) floored += c;
  } else {
    const std::span<const double> train = history.subspan(T - D, D);
    const HmmFit<GaussianEmission> fit =
        fit_hmm<GaussianEmission>(train, cfg.hmm_states, cfg.restarts, cfg.hmm_max_iters, 1e-6, cfg.threads);
    parallel_for(candidates + 1, cfg.threads, [&](std::size_t k) {
      try {
        scores[k] = log_likelihood(history.subspan(T - D - k, D), fit.params);
      } catch (const Error& e) {
        // impossible under the fitted model: never the closest match
        if (e.code() != ErrorCode::numerical) throw;
        scores[k] = -std::numeric_limits<double>::infinity();
      }
    });
  }

  std::size_t best = 1;
  for (std::size_t k = 2; k <= candidates; ++k)
    if (std::abs(scores[0] - scores[k]) < std::abs(scores[0] - scores[best])) best = k;
  Forecast out;
  out.matched_offset = best;
  out.train_log_prob = scores[0];
  out.matched_log_prob = scores[best];
  out.floored = floored;
  const double step = history[T - best] - history[T - best - 1];
  out.prediction = history[T - 1] + step * detail::sign(scores[0] - scores[best]);
  return out;
}

struct ForecastErrors {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;            // percent, over nonzero actuals
  std::size_t mape_excluded = 0;  // zero actuals left out of MAPE
};

inline ForecastErrors forecast_errors(std::span<const double> predicted, std::span<const double> actual) {
  require(predicted.size() == actual.size(), "prediction and actual series differ in length");
  require(!actual.empty(), "no predictions to score", ErrorCode::insufficient_data);
  ForecastErrors e;
  std::size_t used = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = predicted[i] - actual[i];
    e.rmse += d * d;
    e.mae += std::abs(d);
    if (actual[i] == 0.0) {
      ++e.mape_excluded;
    } else {
      e.mape += std::abs(d / actual[i]);
      ++used;
    }
  }
  const auto n = static_cast<double>(actual.size());
  e.rmse = std::sqrt(e.rmse / n);
  e.mae /= n;
  e.mape = used > 0 ? 100.0 * e.mape / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
  return e;
}

struct RollingForecast {
  std::vector<std::size_t> origins;  // index of the forecast target
  std::vector<double> predicted;
  std::vector<double> actual;
  std::vector<std::size_t> offsets;
};

/// Forecasts series[t] from series[0, t) for every t in [first, series.size()).
inline RollingForecast rolling_forecast(std::span<const double> series, std::size_t first,
                                        const ForecastConfig& cfg) {
  require(first >= 2 * cfg.window, "first forecast origin leaves too little history",
          ErrorCode::insufficient_data);
  RollingForecast out;
  for (std::size_t t = first; t < series.size(); ++t) {
    const Forecast f = match_and_forecast(series.first(t), cfg);
    out.origins.push_back(t);
    out.predicted.push_back(f.prediction);
    out.actual.push_back(series[t]);
    out.offsets.push_back(f.matched_offset);
  }
  return out;
}

}  // namespace volseg
