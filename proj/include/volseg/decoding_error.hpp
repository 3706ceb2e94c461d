#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "volseg/common.hpp"

namespace volseg {

/// Mismatch fraction between two state paths, minimized over one-to-one
/// relabelings of the decoded labels. Label sets may differ in size; unmatched
/// labels count as errors.
inline double decoding_error_rate(std::span<const int> truth, std::span<const int> decoded) {
  require(truth.size() == decoded.size(), "state paths differ in length");
  if (truth.empty()) return 0.0;
  std::map<int, std::size_t> ti, di;
  for (int v : truth) ti.emplace(v, 0);
  for (int v : decoded) di.emplace(v, 0);
  std::size_t k = 0;
  for (auto& [_, idx] : ti) idx = k++;
  k = 0;
  for (auto& [_, idx] : di) idx = k++;
  const std::size_t size = std::max(ti.size(), di.size());
  require(size <= 9, "too many distinct labels for exact relabeling");
  std::vector<std::size_t> confusion(size * size, 0);
  for (std::size_t t = 0; t < truth.size(); ++t) ++confusion[di[decoded[t]] * size + ti[truth[t]]];
  std::vector<std::size_t> perm(size);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t d = 0; d < size; ++d) hits += confusion[d * size + perm[d]];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 1.0 - static_cast<double>(best) / static_cast<double>(truth.size());
}

}  // namespace volseg
