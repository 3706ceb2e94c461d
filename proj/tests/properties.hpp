#pragma once

// Randomized invariant checks shared by the unit tests and the acceptance
// runner. Each returns a verdict with a short note on the first violation.

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "volseg/encoding.hpp"
#include "volseg/forecasting.hpp"
#include "volseg/hmm.hpp"
#include "volseg/network.hpp"
#include "volseg/simulation.hpp"

namespace props {

struct Verdict {
  bool ok = true;
  std::string note;

  void fail(const std::string& what) {
    if (ok) note = what;
    ok = false;
  }
};

inline constexpr double kEmSlack = 1e-9;
inline constexpr double kMassSlack = 1e-12;

inline Verdict em_monotone(int fits = 12) {
  Verdict v;
  for (int f = 0; f < fits; ++f) {
    volseg::SimSpec s;
    s.kind = f % 2 ? volseg::SimKind::gaussian_hmm : volseg::SimKind::bernoulli_hmm;
    s.n = 400;
    s.p12 = 0.02;
    s.seed = 500 + static_cast<std::uint64_t>(f);
    const volseg::SimResult sim = volseg::generate(s);
    volseg::Rng rng = volseg::make_rng(s.seed, 77);
    std::vector<double> trace;
    const std::size_t m = 2 + static_cast<std::size_t>(f % 3);
    if (s.kind == volseg::SimKind::gaussian_hmm)
      trace = volseg::baum_welch(std::span<const double>(sim.values),
                                 volseg::random_params<volseg::GaussianEmission>(m, sim.values, rng), 100, 0.0)
                  .loglik_trace;
    else
      trace = volseg::baum_welch(std::span<const double>(sim.values),
                                 volseg::random_params<volseg::BernoulliEmission>(m, sim.values, rng), 100, 0.0)
                  .loglik_trace;
    for (std::size_t i = 1; i < trace.size(); ++i)
      if (trace[i] < trace[i - 1] - kEmSlack) {
        std::ostringstream o;
        o << "fit " << f << " iteration " << i << " dropped by " << trace[i - 1] - trace[i];
        v.fail(o.str());
      }
  }
  return v;
}

inline Verdict recurrence_conservation(int strings = 10000) {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(0, 200);
  std::uniform_real_distribution<double> rate(0.0, 1.0);
  for (int i = 0; i < strings; ++i) {
    std::bernoulli_distribution coin(rate(rng));
    volseg::Bits bits(static_cast<std::size_t>(len(rng)));
    std::size_t ones = 0;
    for (auto& b : bits) ones += (b = coin(rng));
    const volseg::RecurrenceSequence r = volseg::recurrence_times(bits);
    long total = 0;
    for (int g : r.gaps) total += g;
    if (static_cast<std::size_t>(total) + ones != bits.size() || r.gaps.size() != ones + 1)
      v.fail("string " + std::to_string(i) + " breaks sum(gaps) + n' = n");
  }
  return v;
}

inline Verdict bin_masses_sum_to_one(int ladders = 2000) {
  Verdict v;
  std::mt19937_64 rng(2025);
  std::uniform_int_distribution<int> size(1, 15);
  std::uniform_real_distribution<double> u(0.0, 1.0), x(-5.0, 5.0);
  for (int i = 0; i < ladders; ++i) {
    std::vector<double> cdf(static_cast<std::size_t>(size(rng))), th(cdf.size());
    for (auto& c : cdf) c = u(rng);
    for (auto& t : th) t = x(rng);
    std::sort(cdf.begin(), cdf.end());
    std::sort(th.begin(), th.end());
    const std::vector<double> m = volseg::bin_masses(cdf);
    double s = 0.0;
    for (double p : m) {
      s += p;
      if (p < 0.0) v.fail("negative bin mass on ladder " + std::to_string(i));
    }
    if (std::abs(s - 1.0) > kMassSlack) v.fail("masses sum to " + std::to_string(s));
    // every observation lands in exactly one bin, and that bin's mass is what we report
    const double y = x(rng);
    const double p = volseg::obs_prob_nonparam(y, cdf, th);
    const auto bin = static_cast<std::size_t>(std::lower_bound(th.begin(), th.end(), y) - th.begin());
    if (p != m[bin]) v.fail("obs_prob disagrees with its bin on ladder " + std::to_string(i));
  }
  return v;
}

inline Verdict te_nonnegative_and_zero_on_products(int pairs = 1000) {
  Verdict v;
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> len(5, 300), alpha(2, 5);
  for (int i = 0; i < pairs; ++i) {
    const int ax = alpha(rng), ay = alpha(rng);
    std::uniform_int_distribution<int> sx(0, ax - 1), sy(1, ay);
    std::vector<int> x(static_cast<std::size_t>(len(rng))), y(x.size());
    for (auto& s : x) s = sx(rng);
    for (auto& s : y) s = sy(rng);
    const double lag_lead = volseg::te_lag_lead(x, y);
    const double classic = volseg::te_classic(x, y, 1 + static_cast<std::size_t>(i % 2));
    if (lag_lead < -1e-12 || classic < -1e-12)
      v.fail("negative flow on pair " + std::to_string(i) + ": " + std::to_string(std::min(lag_lead, classic)));
  }
  // exact product tables: every x symbol paired with every y symbol r times
  for (int ax = 1; ax <= 4; ++ax)
    for (int ay = 1; ay <= 4; ++ay)
      for (int r = 1; r <= 3; ++r) {
        std::vector<int> x, y;
        for (int a = 0; a < ax; ++a)
          for (int b = 1; b <= ay; ++b)
            for (int k = 0; k < r; ++k) {
              x.push_back(a);
              y.push_back(b);
            }
        if (std::abs(volseg::te_lag_lead(x, y)) > 1e-15) v.fail("lag-lead flow nonzero on a product table");
      }
  // classic flow: x constant, so the joint factorizes given y's history
  for (int i = 0; i < 50; ++i) {
    std::uniform_int_distribution<int> s(1, 3);
    std::vector<int> y(100), x(100, 2);
    for (auto& t : y) t = s(rng);
    if (std::abs(volseg::te_classic(x, y, 2)) > 1e-15) v.fail("classic flow nonzero with a constant source");
  }
  return v;
}

inline volseg::TEMatrix random_matrix(std::size_t p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 0.2);
  volseg::TEMatrix m;
  for (std::size_t i = 0; i < p; ++i) m.nodes.push_back("n" + std::to_string(i));
  m.values.assign(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (i != j) m.values[i][j] = u(rng);
  return m;
}

inline Verdict dissimilarity_shape(int matrices = 500) {
  Verdict v;
  std::mt19937_64 rng(2027);
  std::uniform_int_distribution<int> size(3, 12);
  for (int i = 0; i < matrices; ++i) {
    const auto d = volseg::dissimilarity(random_matrix(static_cast<std::size_t>(size(rng)), rng));
    double lo = 1.0, hi = 0.0;
    for (std::size_t a = 0; a < d.size(); ++a)
      for (std::size_t b = 0; b < d.size(); ++b) {
        if (d[a][b] != d[b][a]) v.fail("asymmetric dissimilarity");
        if (a == b) {
          if (d[a][b] != 0.0) v.fail("nonzero diagonal");
          continue;
        }
        lo = std::min(lo, d[a][b]);
        hi = std::max(hi, d[a][b]);
      }
    if (lo != 0.0 || hi != 1.0) v.fail("off-diagonal range is not exactly [0, 1]");
  }
  return v;
}

inline Verdict reorder_sorted(int matrices = 500) {
  Verdict v;
  std::mt19937_64 rng(2028);
  std::uniform_int_distribution<int> size(2, 15);
  for (int i = 0; i < matrices; ++i) {
    const volseg::TEMatrix m = random_matrix(static_cast<std::size_t>(size(rng)), rng);
    const auto r = volseg::reorder_matrix(m);
    const auto s = volseg::node_strengths(m);
    for (std::size_t k = 1; k < m.size(); ++k) {
      if (s.out[r.rows[k]] < s.out[r.rows[k - 1]]) v.fail("row sums decrease");
      if (s.in[r.cols[k]] < s.in[r.cols[k - 1]]) v.fail("column sums decrease");
    }
  }
  return v;
}

}  // namespace props
