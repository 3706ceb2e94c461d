#pragma once

// Multi-threshold encoding and decoding: every threshold of a quantile ladder
// yields a one-sided excursion process that is segmented independently. The
// per-time emission estimates are stacked into vectors and time points with
// similar vectors are merged by Ward clustering.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "volseg/common.hpp"
#include "volseg/encoding.hpp"
#include "volseg/hierarchical.hpp"
#include "volseg/model_selection.hpp"
#include "volseg/segmentation.hpp"

namespace volseg {

struct ThresholdLadder {
  std::vector<double> levels;      // quantile levels, empty when thresholds were given directly
  std::vector<double> thresholds;  // signed one-sided thresholds

  std::size_t size() const { return thresholds.size(); }
};

inline std::vector<double> default_ladder_levels() {
  return {0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
}

inline void validate(const ThresholdLadder& ladder) {
  require(!ladder.thresholds.empty(), "threshold ladder is empty");
  std::vector<double> sorted = ladder.thresholds;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "threshold ladder has duplicates");
  for (double t : sorted) require(t != 0.0, "threshold ladder contains 0 (ambiguous tail)");
}

inline ThresholdLadder ladder_from_quantiles(std::span<const double> returns, std::span<const double> levels) {
  ThresholdLadder ladder;
  ladder.levels.assign(levels.begin(), levels.end());
  ladder.thresholds = quantiles(returns, levels);
  validate(ladder);
  return ladder;
}

struct RowDecode {
  SearchParams params;
  double loss = 0.0;
  int alternations = 1;
  int states = 1;
  bool constant = false;  // no events, or a single decoded state
};

struct EmissionMatrix {
  ThresholdLadder ladder;
  std::vector<std::vector<double>> rows;  // rows[i][t] = p-hat at threshold i, time t
  std::vector<RowDecode> decodes;

  std::size_t length() const { return rows.empty() ? 0 : rows.front().size(); }
  std::vector<double> column(std::size_t t) const {
    std::vector<double> v(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) v[i] = rows[i][t];
    return v;
  }
};

/// Decodes one row per ladder threshold. Rows are independent; `threads`
/// workers share them. Each row's search grid is derived from its own
/// recurrence times unless `base` fixes one.
inline EmissionMatrix encode_decode(std::span<const double> returns, const ThresholdLadder& ladder,
                                    const LossConfig& base, unsigned threads = 1) {
  validate(ladder);
  require(returns.size() >= 2, "return series too short to decode", ErrorCode::insufficient_data);
  EmissionMatrix em;
  em.ladder = ladder;
  em.rows.assign(ladder.size(), std::vector<double>(returns.size(), 0.0));
  em.decodes.resize(ladder.size());
  parallel_for(ladder.size(), threads, [&](std::size_t i) {
    const ExcursionProcess x = encode_one_sided(returns, ladder.thresholds[i]);
    RowDecode& info = em.decodes[i];
    if (std::none_of(x.bits.begin(), x.bits.end(), [](std::uint8_t b) { return b != 0; })) {
      info.constant = true;
      return;
    }
    LossConfig cfg = base;
    cfg.threads = 1;
    cfg.keep_trace = false;
    cfg.seed = base.seed + i;
    const DecodeResult res = optimize_theta(x, cfg);
    em.rows[i] = emission_path(res.best_assignment);
    info.params = res.best_params;
    info.loss = res.best_loss;
    info.alternations = res.best_assignment.num_alternations;
    info.states = res.best_assignment.num_states;
    info.constant = info.states < 2;
  });
  return em;
}

/// Pool-adjacent-violators fit of a nondecreasing sequence (equal weights).
inline std::vector<double> isotonic_nondecreasing(std::span<const double> v) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double x : v) {
    blocks.push_back({x, 1});
    while (blocks.size() >= 2) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / static_cast<double>(a.count) <= b.sum / static_cast<double>(b.count)) break;
      const Block merged{a.sum + b.sum, a.count + b.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.sum / static_cast<double>(b.count));
  return out;
}

struct ClusterResult {
  std::vector<int> labels;  // 1..k per time point, ordered by ascending mean emission
  int k = 1;
  Dendrogram tree;          // over the distinct emission vectors
  std::vector<std::vector<double>> distinct;  // distinct column vectors (tree leaves)
  std::vector<double> multiplicity;           // time points per distinct vector
  std::vector<std::size_t> column_leaf;       // time point -> tree leaf
  std::vector<int> leaf_cluster;              // tree leaf -> cluster 1..k
  std::vector<double> sorted_thresholds;      // ascending
  std::vector<std::vector<double>> cdf;       // per cluster, lower-tail CDF at sorted_thresholds (monotone)
  std::vector<std::vector<double>> raw_cdf;   // before isotonic repair
  std::vector<double> silhouettes;            // mean silhouette for k = 2.. when k was chosen
  bool degenerate = false;                    // all columns identical
  bool cdf_repaired = false;
};

/// Lower-tail CDF value implied by a one-sided emission estimate.
inline double lower_tail(double threshold, double p_hat) { return threshold < 0.0 ? p_hat : 1.0 - p_hat; }

inline ClusterResult cluster_states(const EmissionMatrix& em, std::optional<int> k = std::nullopt) {
  const std::size_t n = em.length();
  require(n > 0, "empty emission matrix", ErrorCode::insufficient_data);
  if (k) require(*k >= 1 && static_cast<std::size_t>(*k) <= n, "cluster count must lie in [1, n]");
  ClusterResult out;

  std::map<std::vector<double>, std::size_t> index;
  out.column_leaf.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> col = em.column(t);
    auto [it, inserted] = index.try_emplace(col, out.distinct.size());
    if (inserted) {
      out.distinct.push_back(std::move(col));
      out.multiplicity.push_back(0.0);
    }
    out.multiplicity[it->second] += 1.0;
    out.column_leaf[t] = it->second;
  }
  const std::size_t d = out.distinct.size();
  out.tree = ward_linkage(out.distinct, out.multiplicity);

  if (k)
    require(static_cast<std::size_t>(*k) <= d, "fewer distinct emission vectors than requested clusters",
            ErrorCode::insufficient_data);
  std::vector<int> leaf_labels(d, 0);
  if (d == 1) {
    out.degenerate = true;
    out.k = 1;
  } else if (k) {
    out.k = *k;
    leaf_labels = cut_tree(out.tree, static_cast<std::size_t>(out.k));
  } else {
    std::vector<double> dist(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        dist[i * d + j] = dist[j * d + i] = std::sqrt(squared_distance(out.distinct[i], out.distinct[j]));
    double best = -2.0;
    for (std::size_t c = 2; c <= std::min<std::size_t>(6, d); ++c) {
      const std::vector<int> lab = cut_tree(out.tree, c);
      const double s = mean_silhouette(dist, out.multiplicity, lab);
      out.silhouettes.push_back(s);
      if (s > best) {
        best = s;
        out.k = static_cast<int>(c);
        leaf_labels = lab;
      }
    }
  }

  // Order clusters by ascending mean emission.
  const auto kk = static_cast<std::size_t>(out.k);
  const std::size_t v = em.rows.size();
  std::vector<std::vector<double>> centroid(kk, std::vector<double>(v, 0.0));
  std::vector<double> weight(kk, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const auto c = static_cast<std::size_t>(leaf_labels[i]);
    weight[c] += out.multiplicity[i];
    for (std::size_t r = 0; r < v; ++r) centroid[c][r] += out.multiplicity[i] * out.distinct[i][r];
  }
  for (std::size_t c = 0; c < kk; ++c)
    for (double& x : centroid[c]) x /= weight[c];
  std::vector<std::size_t> order(kk);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mean(centroid[a]) < mean(centroid[b]);
  });
  std::vector<int> rank(kk);
  for (std::size_t r = 0; r < kk; ++r) rank[order[r]] = static_cast<int>(r) + 1;
  out.leaf_cluster.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.leaf_cluster[i] = rank[static_cast<std::size_t>(leaf_labels[i])];
  out.labels.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.labels[t] = out.leaf_cluster[out.column_leaf[t]];

  std::vector<std::size_t> by_value(v);
  std::iota(by_value.begin(), by_value.end(), 0);
  std::sort(by_value.begin(), by_value.end(), [&](std::size_t a, std::size_t b) {
    return em.ladder.thresholds[a] < em.ladder.thresholds[b];
  });
  for (std::size_t r : by_value) out.sorted_thresholds.push_back(em.ladder.thresholds[r]);
  for (std::size_t pos = 0; pos < kk; ++pos) {
    const std::vector<double>& c = centroid[order[pos]];
    std::vector<double> f;
    for (std::size_t r : by_value) f.push_back(lower_tail(em.ladder.thresholds[r], c[r]));
    std::vector<double> repaired = isotonic_nondecreasing(f);
    if (repaired != f) out.cdf_repaired = true;
    out.raw_cdf.push_back(std::move(f));
    out.cdf.push_back(std::move(repaired));
  }
  return out;
}

}  // namespace volseg
