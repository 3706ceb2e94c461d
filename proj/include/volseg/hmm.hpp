#pragma once

// Reference hidden Markov models with Bernoulli or Gaussian emissions:
// Viterbi decoding, scaled forward-backward and Baum-Welch fitting.
//
// State indices are 0-based. Observations are doubles (0/1 for Bernoulli).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "volseg/common.hpp"

namespace volseg {

struct BernoulliEmission {
  double p = 0.5;

  double log_density(double obs) const {
    if (obs > 0.5) return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    return p < 1.0 ? std::log1p(-p) : -std::numeric_limits<double>::infinity();
  }
  void validate() const { require(p >= 0.0 && p <= 1.0, "Bernoulli emission outside [0,1]"); }
  friend bool operator==(const BernoulliEmission&, const BernoulliEmission&) = default;
};

struct GaussianEmission {
  double mean = 0.0;
  double var = 1.0;

  double log_density(double obs) const {
    const double d = obs - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
  }
  void validate() const { require(var > 0.0 && std::isfinite(mean), "Gaussian emission needs variance > 0"); }
  friend bool operator==(const GaussianEmission&, const GaussianEmission&) = default;
};

template <class Emission>
struct HmmParams {
  std::vector<double> init;
  std::vector<std::vector<double>> trans;
  std::vector<Emission> emissions;

  std::size_t states() const { return init.size(); }

  void validate() const {
    const std::size_t m = init.size();
    require(m >= 1, "HMM needs at least one state");
    require(trans.size() == m && emissions.size() == m, "HMM parameter shapes disagree");
    auto check_row = [](std::span<const double> row, const char* what) {
      double s = 0.0;
      for (double v : row) {
        require(v >= 0.0 && v <= 1.0, std::string(what) + " entry outside [0,1]");
        s += v;
      }
      require(std::abs(s - 1.0) <= 1e-12, std::string(what) + " does not sum to 1");
    };
    check_row(init, "initial distribution");
    for (const auto& row : trans) {
      require(row.size() == m, "transition matrix is not square");
      check_row(row, "transition row");
    }
    for (const auto& e : emissions) e.validate();
  }
};

/// Symmetric two-state chain with off-diagonal p12 and uniform start.
template <class Emission>
HmmParams<Emission> two_state(double p12, Emission e1, Emission e2) {
  return {{0.5, 0.5}, {{1.0 - p12, p12}, {p12, 1.0 - p12}}, {e1, e2}};
}

namespace detail {

template <class Emission>
std::vector<double> log_emissions(std::span<const double> obs, const HmmParams<Emission>& params) {
  const std::size_t m = params.states();
  std::vector<double> out(obs.size() * m);
  for (std::size_t t = 0; t < obs.size(); ++t) {
    bool possible = false;
    for (std::size_t s = 0; s < m; ++s) {
      out[t * m + s] = params.emissions[s].log_density(obs[t]);
      possible = possible || out[t * m + s] > -std::numeric_limits<double>::infinity();
    }
    require(possible, "impossible observation at t=" + std::to_string(t), ErrorCode::numerical);
  }
  return out;
}

inline double safe_log(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Most probable state path; ties go to the lower state index.
template <class Emission>
std::vector<int> viterbi(std::span<const double> obs, const HmmParams<Emission>& params) {
  params.validate();
  const std::size_t m = params.states();
  const std::size_t n = obs.size();
  if (n == 0) return {};
  const std::vector<double> logb = detail::log_emissions(obs, params);
  std::vector<std::vector<double>> logA(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) logA[i][j] = detail::safe_log(params.trans[i][j]);

  std::vector<double> delta(m), next(m);
  std::vector<int> back(n * m, 0);
  for (std::size_t s = 0; s < m; ++s) delta[s] = detail::safe_log(params.init[s]) + logb[s];
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < m; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const double v = delta[i] + logA[i][j];
        if (v > best) {
          best = v;
          arg = static_cast<int>(i);
        }
      }
      next[j] = best + logb[t * m + j];
      back[t * m + j] = arg;
    }
    std::swap(delta, next);
  }
  std::vector<int> path(n);
  int state = 0;
  for (std::size_t s = 1; s < m; ++s)
    if (delta[s] > delta[static_cast<std::size_t>(state)]) state = static_cast<int>(s);
  require(delta[static_cast<std::size_t>(state)] > -std::numeric_limits<double>::infinity(),
          "observation sequence has zero probability", ErrorCode::numerical);
  for (std::size_t t = n; t-- > 0;) {
    path[t] = state;
    if (t > 0) state = back[t * m + static_cast<std::size_t>(state)];
  }
  return path;
}

struct Posteriors {
  std::vector<std::vector<double>> gamma;  // gamma[t][s]
  double log_likelihood = 0.0;
};

namespace detail {

/// Scaled forward pass. alpha rows are normalized; returns the log-likelihood.
template <class Emission>
double forward(std::span<const double> obs, const HmmParams<Emission>& params, std::vector<double>& b,
               std::vector<double>& alpha, std::vector<double>& scale) {
  const std::size_t m = params.states();
  const std::size_t n = obs.size();
  b.assign(n * m, 0.0);
  alpha.assign(n * m, 0.0);
  scale.assign(n, 0.0);
  std::vector<double> offset(n, 0.0);  // b rows are stored as exp(log b - offset)
  if constexpr (std::is_same_v<Emission, BernoulliEmission>) {
    // two possible rows only; no logs needed
    for (std::size_t t = 0; t < n; ++t) {
      bool possible = false;
      for (std::size_t s = 0; s < m; ++s) {
        const double p = params.emissions[s].p;
        b[t * m + s] = obs[t] > 0.5 ? p : 1.0 - p;
        possible = possible || b[t * m + s] > 0.0;
      }
      require(possible, "impossible observation at t=" + std::to_string(t), ErrorCode::numerical);
    }
  } else {
    const std::vector<double> logb = log_emissions(obs, params);
    for (std::size_t t = 0; t < n; ++t) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < m; ++s) mx = std::max(mx, logb[t * m + s]);
      for (std::size_t s = 0; s < m; ++s) b[t * m + s] = std::exp(logb[t * m + s] - mx);
      offset[t] = mx;
    }
  }
  double ll = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double c = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double a = 0.0;
      if (t == 0) {
        a = params.init[j];
      } else {
        for (std::size_t i = 0; i < m; ++i) a += alpha[(t - 1) * m + i] * params.trans[i][j];
      }
      alpha[t * m + j] = a * b[t * m + j];
      c += alpha[t * m + j];
    }
    require(c > 0.0, "observation sequence has zero probability", ErrorCode::numerical);
    for (std::size_t j = 0; j < m; ++j) alpha[t * m + j] /= c;
    scale[t] = c;
    ll += std::log(c) + offset[t];
  }
  return ll;
}

}  // namespace detail

template <class Emission>
double log_likelihood(std::span<const double> obs, const HmmParams<Emission>& params) {
  params.validate();
  if (obs.empty()) return 0.0;
  std::vector<double> b, alpha, scale;
  return detail::forward(obs, params, b, alpha, scale);
}

template <class Emission>
Posteriors forward_backward(std::span<const double> obs, const HmmParams<Emission>& params) {
  params.validate();
  const std::size_t m = params.states();
  const std::size_t n = obs.size();
  Posteriors out;
  if (n == 0) return out;
  std::vector<double> b, alpha, scale;
  out.log_likelihood = detail::forward(obs, params, b, alpha, scale);
  std::vector<double> beta(n * m, 1.0);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < m; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < m; ++j) v += params.trans[i][j] * b[(t + 1) * m + j] * beta[(t + 1) * m + j];
      beta[t * m + i] = v / scale[t + 1];
    }
  }
  out.gamma.assign(n, std::vector<double>(m));
  for (std::size_t t = 0; t < n; ++t) {
    double z = 0.0;
    for (std::size_t s = 0; s < m; ++s) z += alpha[t * m + s] * beta[t * m + s];
    for (std::size_t s = 0; s < m; ++s) out.gamma[t][s] = alpha[t * m + s] * beta[t * m + s] / z;
  }
  return out;
}

template <class Emission>
struct HmmFit {
  HmmParams<Emission> params;
  std::vector<double> loglik_trace;  // log-likelihood of the parameters entering each iteration
  int iterations = 0;
  bool converged = false;
  bool variance_floored = false;
  int restart = -1;

  double log_likelihood() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

struct RandomRestarts {
  int count = 10;
  std::uint64_t seed = 0;
};

inline constexpr double kVarianceFloor = 1e-6;

namespace detail {

inline void m_step_emissions(std::vector<BernoulliEmission>& em, std::span<const double> obs,
                             const std::vector<double>& gamma_sum, const std::vector<double>& weighted_obs,
                             const std::vector<double>&, bool&) {
  for (std::size_t s = 0; s < em.size(); ++s)
    if (gamma_sum[s] > 0.0) em[s].p = std::clamp(weighted_obs[s] / gamma_sum[s], 0.0, 1.0);
  (void)obs;
}

inline void m_step_emissions(std::vector<GaussianEmission>& em, std::span<const double>,
                             const std::vector<double>& gamma_sum, const std::vector<double>& weighted_obs,
                             const std::vector<double>& weighted_sq, bool& floored) {
  for (std::size_t s = 0; s < em.size(); ++s) {
    if (gamma_sum[s] <= 0.0) continue;
    const double mu = weighted_obs[s] / gamma_sum[s];
    double var = weighted_sq[s] / gamma_sum[s] - mu * mu;
    if (!(var >= kVarianceFloor)) {
      var = kVarianceFloor;
      floored = true;
    }
    em[s] = {mu, var};
  }
}

}  // namespace detail

/// Baum-Welch from the given starting point. Stops when the log-likelihood
/// improves by less than `tol` or after `max_iters` updates; the returned
/// parameters are the ones whose log-likelihood ends the trace.
template <class Emission>
HmmFit<Emission> baum_welch(std::span<const double> obs, HmmParams<Emission> params, int max_iters = 500,
                            double tol = 1e-6) {
  params.validate();
  require(obs.size() >= 2, "Baum-Welch needs at least two observations", ErrorCode::insufficient_data);
  const std::size_t m = params.states();
  const std::size_t n = obs.size();
  HmmFit<Emission> fit;
  std::vector<double> b, alpha, scale, beta(n * m);
  for (int iter = 0;; ++iter) {
    const double ll = detail::forward(obs, params, b, alpha, scale);
    fit.loglik_trace.push_back(ll);
    const std::size_t k = fit.loglik_trace.size();
    if (k >= 2 && std::abs(ll - fit.loglik_trace[k - 2]) < tol) {
      fit.converged = true;
      break;
    }
    if (iter >= max_iters) break;
    // backward
    std::fill(beta.end() - static_cast<std::ptrdiff_t>(m), beta.end(), 1.0);
    for (std::size_t t = n - 1; t-- > 0;)
      for (std::size_t i = 0; i < m; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < m; ++j) v += params.trans[i][j] * b[(t + 1) * m + j] * beta[(t + 1) * m + j];
        beta[t * m + i] = v / scale[t + 1];
      }
    std::vector<double> gamma_sum(m, 0.0), gamma_head(m, 0.0), wobs(m, 0.0), wsq(m, 0.0), init(m, 0.0);
    std::vector<std::vector<double>> xi(m, std::vector<double>(m, 0.0));
    for (std::size_t t = 0; t < n; ++t) {
      double z = 0.0;
      for (std::size_t s = 0; s < m; ++s) z += alpha[t * m + s] * beta[t * m + s];
      for (std::size_t s = 0; s < m; ++s) {
        const double g = alpha[t * m + s] * beta[t * m + s] / z;
        gamma_sum[s] += g;
        if (t + 1 < n) gamma_head[s] += g;
        if (t == 0) init[s] = g;
        wobs[s] += g * obs[t];
        wsq[s] += g * obs[t] * obs[t];
      }
      if (t + 1 < n)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j)
            xi[i][j] += alpha[t * m + i] * params.trans[i][j] * b[(t + 1) * m + j] * beta[(t + 1) * m + j] /
                        scale[t + 1];
    }
    double init_sum = 0.0;
    for (double v : init) init_sum += v;
    for (std::size_t s = 0; s < m; ++s) params.init[s] = init[s] / init_sum;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) row += xi[i][j];
      if (row > 0.0)
        for (std::size_t j = 0; j < m; ++j) params.trans[i][j] = xi[i][j] / row;
    }
    detail::m_step_emissions(params.emissions, obs, gamma_sum, wobs, wsq, fit.variance_floored);
    fit.iterations = iter + 1;
  }
  fit.params = std::move(params);
  return fit;
}

namespace detail {

inline std::vector<double> dirichlet_ones(std::size_t m, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(m);
  double s = 0.0;
  for (auto& x : v) s += (x = e(rng));
  for (auto& x : v) x /= s;
  return v;
}

inline BernoulliEmission random_emission(const BernoulliEmission&, std::span<const double>, Rng& rng) {
  return {std::uniform_real_distribution<double>(0.01, 0.99)(rng)};
}

inline GaussianEmission random_emission(const GaussianEmission&, std::span<const double> obs, Rng& rng) {
  const double mu = mean(obs);
  double var = 0.0;
  for (double x : obs) var += (x - mu) * (x - mu);
  var = std::max(var / static_cast<double>(obs.size()), kVarianceFloor);
  std::uniform_int_distribution<std::size_t> pick(0, obs.size() - 1);
  std::uniform_real_distribution<double> scale(0.25, 4.0);
  return {obs[pick(rng)], var * scale(rng)};
}

}  // namespace detail

template <class Emission>
HmmParams<Emission> random_params(std::size_t m, std::span<const double> obs, Rng& rng) {
  HmmParams<Emission> p;
  p.init = detail::dirichlet_ones(m, rng);
  for (std::size_t i = 0; i < m; ++i) p.trans.push_back(detail::dirichlet_ones(m, rng));
  for (std::size_t i = 0; i < m; ++i) p.emissions.push_back(detail::random_emission(Emission{}, obs, rng));
  return p;
}

/// Random restarts (seeded per restart); keeps the best final log-likelihood.
template <class Emission>
HmmFit<Emission> fit_hmm(std::span<const double> obs, std::size_t m, RandomRestarts restarts = {},
                         int max_iters = 500, double tol = 1e-6, unsigned threads = 1) {
  require(m >= 1, "state count must be >= 1");
  require(restarts.count >= 1, "need at least one restart");
  std::vector<HmmFit<Emission>> fits(static_cast<std::size_t>(restarts.count));
  parallel_for(fits.size(), threads, [&](std::size_t r) {
    Rng rng = make_rng(restarts.seed, r);
    fits[r] = baum_welch(obs, random_params<Emission>(m, obs, rng), max_iters, tol);
    fits[r].restart = static_cast<int>(r);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < fits.size(); ++r)
    if (fits[r].log_likelihood() > fits[best].log_likelihood()) best = r;
  return fits[best];
}

/// Sorts states by ascending emission parameter (p or variance).
inline std::vector<double> sorted_emission_values(const HmmParams<BernoulliEmission>& p) {
  std::vector<double> v;
  for (const auto& e : p.emissions) v.push_back(e.p);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace volseg
