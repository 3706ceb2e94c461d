#pragma once

// Information flow between decoded volatility trajectories: clock-time
// symbolization, block-max summarization, lag-and-lead and classic plug-in
// transfer entropy, and summaries of the resulting asymmetric matrix.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volseg/common.hpp"
#include "volseg/hierarchical.hpp"

namespace volseg {

struct SymbolSeries {
  std::vector<int> symbols;  // 0 = no transaction, 1.. = volatility state
  double unit = 1.0;
  double origin = 0.0;
  bool collided = false;  // several transactions fell into one unit (max kept)
};

/// Places transaction-time states on a uniform clock grid starting at
/// `origin` with `cells` units (derived from the data when not given), so
/// several instruments can share one grid.
inline SymbolSeries to_clock_symbols(std::span<const int> states, std::span<const double> timestamps, double unit,
                                     std::optional<double> origin = std::nullopt,
                                     std::optional<std::size_t> cells = std::nullopt) {
  require(states.size() == timestamps.size(), "states and timestamps differ in length");
  require(unit > 0.0, "clock unit must be positive");
  require(std::is_sorted(timestamps.begin(), timestamps.end()), "timestamps are not sorted",
          ErrorCode::malformed_input);
  SymbolSeries out;
  out.unit = unit;
  out.origin = origin.value_or(timestamps.empty() ? 0.0 : timestamps.front());
  std::size_t count = 0;
  if (cells) {
    count = *cells;
  } else if (!timestamps.empty()) {
    require(timestamps.front() >= out.origin, "timestamps precede the grid origin");
    count = static_cast<std::size_t>(std::floor((timestamps.back() - out.origin) / unit)) + 1;
  }
  out.symbols.assign(count, 0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    require(states[i] >= 1, "states must be >= 1 (0 is reserved for no transaction)");
    const double pos = std::floor((timestamps[i] - out.origin) / unit);
    if (pos < 0.0 || pos >= static_cast<double>(count)) continue;
    int& cell = out.symbols[static_cast<std::size_t>(pos)];
    if (cell != 0) out.collided = true;
    cell = std::max(cell, states[i]);
  }
  return out;
}

/// Centered sliding maximum of width w (odd). Output position j corresponds
/// to input position j + w/2, so the length is n - w + 1.
inline SymbolSeries block_max_summarize(const SymbolSeries& s, std::size_t w) {
  require(w >= 1 && w % 2 == 1, "block width must be a positive odd integer");
  require(w <= s.symbols.size(), "block width exceeds the series length", ErrorCode::insufficient_data);
  SymbolSeries out = s;
  out.origin = s.origin + static_cast<double>(w / 2) * s.unit;
  const std::size_t n = s.symbols.size() - w + 1;
  out.symbols.assign(n, 0);
  for (std::size_t j = 0; j < n; ++j)
    out.symbols[j] = *std::max_element(s.symbols.begin() + static_cast<std::ptrdiff_t>(j),
                                       s.symbols.begin() + static_cast<std::ptrdiff_t>(j + w));
  return out;
}

/// sum_a P(Y = target, X = a) ln[P(Y = target | X = a) / P(Y = target)]
/// with empirical frequencies. Zero when the target never occurs in y.
inline double te_lag_lead(std::span<const int> x, std::span<const int> y, int target) {
  require(x.size() == y.size(), "symbol series differ in length");
  if (x.empty()) return 0.0;
  std::map<int, std::pair<std::size_t, std::size_t>> by_source;  // a -> (count of a, count of a with y = target)
  std::size_t hits = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    auto& c = by_source[x[t]];
    ++c.first;
    if (y[t] == target) {
      ++c.second;
      ++hits;
    }
  }
  if (hits == 0) return 0.0;
  const auto n = static_cast<double>(x.size());
  const double p_target = static_cast<double>(hits) / n;
  double te = 0.0;
  for (const auto& [a, c] : by_source) {
    if (c.second == 0) continue;
    const double joint = static_cast<double>(c.second) / n;
    const double cond = static_cast<double>(c.second) / static_cast<double>(c.first);
    te += joint * std::log(cond / p_target);
  }
  return te;
}

/// Lag-and-lead flow with the target set to the highest symbol seen in y.
inline double te_lag_lead(std::span<const int> x, std::span<const int> y) {
  if (y.empty()) return 0.0;
  return te_lag_lead(x, y, *std::max_element(y.begin(), y.end()));
}

inline constexpr std::size_t kDefaultHistoryCap = 1u << 16;

/// Plug-in transfer entropy X -> Y with l lags:
/// sum P(y_t, y_hist, x_hist) ln[P(y_t | y_hist, x_hist) / P(y_t | y_hist)].
inline double te_classic(std::span<const int> x, std::span<const int> y, std::size_t lags,
                         std::size_t history_cap = kDefaultHistoryCap) {
  require(x.size() == y.size(), "symbol series differ in length");
  require(lags >= 1, "lag count must be >= 1");
  require(y.size() > lags, "series shorter than the lag count", ErrorCode::insufficient_data);
  using Key = std::vector<int>;
  std::map<Key, std::size_t> full, hist_xy, with_y, hist_y;
  for (std::size_t t = lags; t < y.size(); ++t) {
    Key yh(y.begin() + static_cast<std::ptrdiff_t>(t - lags), y.begin() + static_cast<std::ptrdiff_t>(t));
    Key xy = yh;
    xy.insert(xy.end(), x.begin() + static_cast<std::ptrdiff_t>(t - lags), x.begin() + static_cast<std::ptrdiff_t>(t));
    ++hist_xy[xy];
    require(hist_xy.size() <= history_cap,
            "too many distinct history patterns; use fewer lags or a coarser alphabet");
    ++hist_y[yh];
    xy.push_back(y[t]);
    ++full[xy];
    yh.push_back(y[t]);
    ++with_y[yh];
  }
  const auto n = static_cast<double>(y.size() - lags);
  double te = 0.0;
  for (const auto& [key, c] : full) {
    const Key xy(key.begin(), key.end() - 1);
    Key yh(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(lags));
    const std::size_t c_hist = hist_y[yh];
    yh.push_back(key.back());
    const std::size_t c_with_y = with_y[yh];
    const double ratio = (static_cast<double>(c) * static_cast<double>(c_hist)) /
                         (static_cast<double>(hist_xy[xy]) * static_cast<double>(c_with_y));
    te += static_cast<double>(c) / n * std::log(ratio);
  }
  return te;
}

struct BinnedSeries {
  std::vector<int> symbols;  // 1..q
  std::vector<double> cuts;
  bool constant = false;
};

/// Symbol 1 + (number of q-quantile cut points strictly below the value).
inline BinnedSeries simple_binning(std::span<const double> values, int q) {
  require(q >= 2, "need at least two bins");
  require(!values.empty(), "cannot bin an empty series", ErrorCode::insufficient_data);
  BinnedSeries out;
  std::vector<double> levels;
  for (int i = 1; i < q; ++i) levels.push_back(static_cast<double>(i) / q);
  out.cuts = quantiles(values, levels);
  out.constant = std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  out.symbols.reserve(values.size());
  for (double v : values)
    out.symbols.push_back(
        1 + static_cast<int>(std::lower_bound(out.cuts.begin(), out.cuts.end(), v) - out.cuts.begin()));
  return out;
}

/// values[i][j] is the flow from node i to node j; the diagonal is ignored.
struct TEMatrix {
  std::vector<std::string> nodes;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return nodes.size(); }
};

inline void validate(const TEMatrix& m) {
  require(m.values.size() == m.nodes.size(), "matrix rows do not match the node list");
  for (const auto& row : m.values) {
    require(row.size() == m.nodes.size(), "matrix is not square");
    for (double v : row) require(std::isfinite(v), "matrix has a non-finite entry", ErrorCode::numerical);
  }
}

/// Pairwise matrix over all ordered pairs, filled in parallel.
template <class Flow>
TEMatrix te_matrix(const std::vector<std::string>& nodes, const std::vector<std::vector<int>>& series, Flow&& flow,
                   unsigned threads = 1) {
  require(nodes.size() == series.size(), "node names do not match the series");
  const std::size_t p = nodes.size();
  TEMatrix m{nodes, std::vector<std::vector<double>>(p, std::vector<double>(p, 0.0))};
  parallel_for(p * p, threads, [&](std::size_t idx) {
    const std::size_t i = idx / p, j = idx % p;
    if (i != j) m.values[i][j] = flow(series[i], series[j]);
  });
  return m;
}

struct NodeStrengths {
  std::vector<double> in;   // column sums
  std::vector<double> out;  // row sums
};

inline NodeStrengths node_strengths(const TEMatrix& m) {
  validate(m);
  const std::size_t p = m.size();
  NodeStrengths s{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      if (i == j) continue;
      s.out[i] += m.values[i][j];
      s.in[j] += m.values[i][j];
    }
  return s;
}

struct Reordering {
  std::vector<std::size_t> rows;  // by outgoing strength, ascending
  std::vector<std::size_t> cols;  // by incoming strength, ascending
};

inline Reordering reorder_matrix(const TEMatrix& m) {
  const NodeStrengths s = node_strengths(m);
  Reordering r{std::vector<std::size_t>(m.size()), std::vector<std::size_t>(m.size())};
  std::iota(r.rows.begin(), r.rows.end(), 0);
  std::iota(r.cols.begin(), r.cols.end(), 0);
  std::stable_sort(r.rows.begin(), r.rows.end(), [&](std::size_t a, std::size_t b) { return s.out[a] < s.out[b]; });
  std::stable_sort(r.cols.begin(), r.cols.end(), [&](std::size_t a, std::size_t b) { return s.in[a] < s.in[b]; });
  return r;
}

inline std::vector<std::vector<double>> apply_reordering(const TEMatrix& m, const Reordering& r) {
  std::vector<std::vector<double>> out(m.size(), std::vector<double>(m.size(), 0.0));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      out[i][j] = r.rows[i] == r.cols[j] ? 0.0 : m.values[r.rows[i]][r.cols[j]];
  return out;
}

/// Symmetric average of the two directed flows, min-max rescaled so the most
/// similar pair gets 0 and the least similar gets 1. Diagonal is 0.
inline std::vector<std::vector<double>> dissimilarity(const TEMatrix& m) {
  validate(m);
  const std::size_t p = m.size();
  require(p >= 2, "dissimilarity needs at least two nodes", ErrorCode::insufficient_data);
  std::vector<std::vector<double>> sim(p, std::vector<double>(p, 0.0));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      sim[i][j] = sim[j][i] = 0.5 * (m.values[i][j] + m.values[j][i]);
      lo = std::min(lo, sim[i][j]);
      hi = std::max(hi, sim[i][j]);
    }
  require(hi > lo, "all pairwise similarities are equal; rescaling is undefined", ErrorCode::numerical);
  std::vector<std::vector<double>> dis(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (i != j) dis[i][j] = (hi - sim[i][j]) / (hi - lo);
  return dis;
}

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct EdgeFilter {
  std::optional<std::size_t> top_k;
  std::optional<double> min_weight;
};

struct Network {
  std::vector<Edge> edges;         // strongest first
  std::vector<std::size_t> nodes;  // nodes touched by an edge, ascending
  bool empty_warning = false;
};

/// Keeps edges with weight >= min_weight and/or the top_k strongest
/// (ties by (src, dst)); nodes without a kept edge are dropped.
inline Network build_network(const TEMatrix& m, const EdgeFilter& filter) {
  validate(m);
  require(filter.top_k || filter.min_weight, "network filter needs top_k or min_weight");
  std::vector<Edge> all;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (i != j) all.push_back({i, j, m.values[i][j]});
  std::stable_sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) { return a.weight > b.weight; });
  Network net;
  for (const Edge& e : all) {
    if (filter.min_weight && e.weight < *filter.min_weight) break;
    if (filter.top_k && net.edges.size() >= *filter.top_k) break;
    net.edges.push_back(e);
  }
  std::vector<char> seen(m.size(), 0);
  for (const Edge& e : net.edges) seen[e.src] = seen[e.dst] = 1;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (seen[i]) net.nodes.push_back(i);
  net.empty_warning = net.edges.empty();
  return net;
}

struct DissimilarityClustering {
  Dendrogram tree;
  std::vector<std::size_t> order;  // heatmap row/column order
};

inline DissimilarityClustering cluster_dissimilarity(const std::vector<std::vector<double>>& d) {
  const std::size_t p = d.size();
  std::vector<double> flat(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    require(d[i].size() == p, "dissimilarity matrix is not square");
    for (std::size_t j = 0; j < p; ++j) {
      require(std::abs(d[i][j] - d[j][i]) <= 1e-12, "dissimilarity matrix is not symmetric");
      flat[i * p + j] = i == j ? 0.0 : d[i][j];
    }
  }
  DissimilarityClustering out;
  out.tree = average_linkage(flat, p);
  out.order = leaf_order(out.tree);
  return out;
}

}  // namespace volseg
