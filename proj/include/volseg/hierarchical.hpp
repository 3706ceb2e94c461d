#pragma once

// Agglomerative clustering (Ward and average linkage) via the
// nearest-neighbour chain, with weighted points so that duplicate
// observations can be collapsed before clustering.
//
// Node ids follow the usual convention: leaves are 0..n-1 and the k-th merge
// (in height order) creates node n+k.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "volseg/common.hpp"

namespace volseg {

enum class Linkage { ward, average };

struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  double size = 0.0;  // total weight under the new node
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;  // nondecreasing height
};

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};

}  // namespace detail

/// `dist` is a full row-major n x n matrix of linkage distances: squared
/// Ward costs 2 w_i w_j / (w_i + w_j) |x_i - x_j|^2 for Ward, plain
/// dissimilarities for average linkage. Ward heights are reported as the
/// square root of the merge cost.
inline Dendrogram agglomerate(std::vector<double> dist, std::span<const double> weights, Linkage linkage) {
  const std::size_t n = weights.size();
  require(dist.size() == n * n, "distance matrix does not match the weights");
  Dendrogram out;
  out.leaves = n;
  if (n < 2) return out;
  std::vector<double> size(weights.begin(), weights.end());
  std::vector<char> active(n, 1);
  struct RawMerge {
    std::size_t a, b;
    double cost;
  };
  std::vector<RawMerge> raw;
  raw.reserve(n - 1);
  std::vector<std::size_t> chain;
  std::size_t remaining = n;
  auto d = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };

  while (remaining > 1) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        if (active[i]) {
          chain.push_back(i);
          break;
        }
    }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
    std::size_t b = n;
    double best = std::numeric_limits<double>::infinity();
    if (prev != n) {
      b = prev;
      best = d(a, prev);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      if (d(a, j) < best) {
        best = d(a, j);
        b = j;
      }
    }
    if (b == prev) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t keep = std::min(a, b), drop = std::max(a, b);
      raw.push_back({a, b, best});
      const double ni = size[keep], nj = size[drop];
      for (std::size_t k = 0; k < n; ++k) {
        if (!active[k] || k == keep || k == drop) continue;
        const double nk = size[k];
        double v;
        if (linkage == Linkage::ward) {
          v = ((ni + nk) * d(k, keep) + (nj + nk) * d(k, drop) - nk * best) / (ni + nj + nk);
        } else {
          v = (ni * d(k, keep) + nj * d(k, drop)) / (ni + nj);
        }
        d(k, keep) = d(keep, k) = v;
      }
      size[keep] = ni + nj;
      active[drop] = 0;
      --remaining;
    } else {
      chain.push_back(b);
    }
  }

  std::stable_sort(raw.begin(), raw.end(), [](const RawMerge& x, const RawMerge& y) { return x.cost < y.cost; });
  detail::UnionFind uf(n);
  std::vector<std::size_t> node_of(n);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<double> weight(weights.begin(), weights.end());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const std::size_t ra = uf.find(raw[k].a), rb = uf.find(raw[k].b);
    Merge mg;
    mg.left = std::min(node_of[ra], node_of[rb]);
    mg.right = std::max(node_of[ra], node_of[rb]);
    const double cost = std::max(0.0, raw[k].cost);
    mg.height = linkage == Linkage::ward ? std::sqrt(cost) : cost;
    mg.size = weight[ra] + weight[rb];
    uf.parent[rb] = ra;
    weight[ra] = mg.size;
    node_of[ra] = n + k;
    out.merges.push_back(mg);
  }
  return out;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline Dendrogram ward_linkage(const std::vector<std::vector<double>>& points, std::span<const double> weights) {
  const std::size_t n = points.size();
  require(weights.size() == n, "weights do not match the points");
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = 2.0 * weights[i] * weights[j] / (weights[i] + weights[j]);
      dist[i * n + j] = dist[j * n + i] = w * squared_distance(points[i], points[j]);
    }
  return agglomerate(std::move(dist), weights, Linkage::ward);
}

inline Dendrogram ward_linkage(const std::vector<std::vector<double>>& points) {
  const std::vector<double> ones(points.size(), 1.0);
  return ward_linkage(points, ones);
}

inline Dendrogram average_linkage(const std::vector<double>& dist, std::size_t n) {
  const std::vector<double> ones(n, 1.0);
  return agglomerate(dist, ones, Linkage::average);
}

/// Flat clusters after undoing the last k-1 merges. Labels are 0..k-1 in
/// order of the first leaf of each cluster.
inline std::vector<int> cut_tree(const Dendrogram& tree, std::size_t k) {
  const std::size_t n = tree.leaves;
  require(k >= 1 && k <= std::max<std::size_t>(n, 1), "cluster count outside [1, n]");
  detail::UnionFind uf(n + tree.merges.size());
  for (std::size_t i = 0; i + k < n; ++i) {
    uf.parent[uf.find(tree.merges[i].left)] = n + i;
    uf.parent[uf.find(tree.merges[i].right)] = n + i;
  }
  std::vector<int> labels(n, -1);
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    auto it = std::find(roots.begin(), roots.end(), r);
    if (it == roots.end()) {
      roots.push_back(r);
      labels[i] = static_cast<int>(roots.size() - 1);
    } else {
      labels[i] = static_cast<int>(it - roots.begin());
    }
  }
  return labels;
}

/// Leaves in dendrogram drawing order (left subtree first).
inline std::vector<std::size_t> leaf_order(const Dendrogram& tree) {
  const std::size_t n = tree.leaves;
  std::vector<std::size_t> out;
  if (n == 0) return out;
  if (tree.merges.empty()) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> stack{n + tree.merges.size() - 1};
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (node < n) {
      out.push_back(node);
    } else {
      const Merge& mg = tree.merges[node - n];
      stack.push_back(mg.right);
      stack.push_back(mg.left);
    }
  }
  return out;
}

/// Weighted mean silhouette. `dist` is the full n x n matrix of plain
/// distances; a point of weight w stands for w identical observations.
inline double mean_silhouette(const std::vector<double>& dist, std::span<const double> weights,
                              std::span<const int> labels) {
  const std::size_t n = weights.size();
  require(dist.size() == n * n && labels.size() == n, "silhouette inputs disagree in size");
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2) return 0.0;
  std::vector<double> cluster_weight(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i) cluster_weight[static_cast<std::size_t>(labels[i])] += weights[i];
  double total = 0.0, total_weight = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sums[static_cast<std::size_t>(labels[j])] += weights[j] * dist[i * n + j];
    const auto own = static_cast<std::size_t>(labels[i]);
    double s = 0.0;
    if (cluster_weight[own] > 1.0) {
      const double a = sums[own] / (cluster_weight[own] - 1.0);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < sums.size(); ++c)
        if (c != own && cluster_weight[c] > 0.0) b = std::min(b, sums[c] / cluster_weight[c]);
      const double denom = std::max(a, b);
      s = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    total += weights[i] * s;
    total_weight += weights[i];
  }
  return total / total_weight;
}

}  // namespace volseg
