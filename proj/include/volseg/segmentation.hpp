#pragma once

// Two-level recurrence coding that partitions a binary excursion process into
// m event-intensity states.
//
// First level: a recurrence time is "long" when it reaches threshold T_i.
// Second level: the recurrence times of those long gaps count how many short
// gaps occur back to back. A stretch of at least T_star consecutive short gaps
// is a dense segment and is recorded in Seg_i. Smaller T_i admits fewer short
// gaps, so Seg_i grows with i. States are S_1 = Seg_1,
// S_i = Seg_i \ (Seg_1 u ... u Seg_{i-1}) and S_m = everything else.
//
// Recurrence time j owns the original positions (e_j, e_{j+1}]: the 0s after
// event j plus the event that closes it. A run of gaps a..b therefore maps to
// (e_a, e_{b+1}], with virtual events at -1 and n-1 for the open ends.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "volseg/common.hpp"
#include "volseg/encoding.hpp"

namespace volseg {

struct SearchParams {
  std::vector<int> thresholds;  // T_1 < ... < T_{m-1}
  int t_star = 1;

  int states() const { return static_cast<int>(thresholds.size()) + 1; }
  friend bool operator==(const SearchParams&, const SearchParams&) = default;
  friend auto operator<=>(const SearchParams&, const SearchParams&) = default;
};

inline void validate(const SearchParams& p) {
  require(!p.thresholds.empty(), "need at least one first-level threshold (m >= 2)");
  require(p.t_star >= 1, "second-level threshold must be >= 1");
  for (std::size_t i = 0; i < p.thresholds.size(); ++i) {
    require(p.thresholds[i] >= 1, "first-level thresholds must be >= 1");
    if (i > 0) require(p.thresholds[i - 1] < p.thresholds[i], "first-level thresholds must increase");
  }
}

/// Half-open [begin, end) over 0-based time.
struct Interval {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct StateAssignment {
  std::vector<int> labels;                   // 1..num_states per time point
  std::vector<std::vector<Interval>> seg_sets;  // Seg_1..Seg_{m-1}
  std::vector<double> emissions;             // per state; NaN when the state is empty
  std::vector<std::size_t> support;          // points per state
  std::vector<std::size_t> events;           // 1s per state
  int num_states = 0;
  int num_alternations = 0;                  // N: maximal constant-label runs
  bool degenerate = false;                   // no events: single state

  std::size_t size() const { return labels.size(); }
};

/// bit_t = 1 iff gaps[t] >= threshold.
inline Bits second_level_code(std::span<const int> gaps, int threshold) {
  Bits out(gaps.size());
  for (std::size_t t = 0; t < gaps.size(); ++t) out[t] = gaps[t] >= threshold ? 1 : 0;
  return out;
}

inline int count_alternations(std::span<const int> labels) {
  if (labels.empty()) return 0;
  int runs = 1;
  for (std::size_t t = 1; t < labels.size(); ++t)
    if (labels[t] != labels[t - 1]) ++runs;
  return runs;
}

/// Fills support, events, emissions and N from labels.
inline void summarize(StateAssignment& a, std::span<const std::uint8_t> bits) {
  const auto m = static_cast<std::size_t>(a.num_states);
  a.support.assign(m, 0);
  a.events.assign(m, 0);
  for (std::size_t t = 0; t < a.labels.size(); ++t) {
    const auto s = static_cast<std::size_t>(a.labels[t] - 1);
    ++a.support[s];
    a.events[s] += bits[t];
  }
  a.emissions.assign(m, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < m; ++s)
    if (a.support[s] > 0)
      a.emissions[s] = static_cast<double>(a.events[s]) / static_cast<double>(a.support[s]);
  a.num_alternations = count_alternations(a.labels);
}

/// Dense segments for one first-level threshold.
inline std::vector<Interval> dense_segments(const RecurrenceSequence& r, int threshold, int t_star) {
  std::vector<Interval> out;
  const std::size_t n = r.length;
  const std::size_t num_gaps = r.gaps.size();
  const std::size_t num_events = r.event_positions.size();
  if (n == 0) return out;
  // pos(j): original position of event j (1-based); pos(0) = -1, pos(n'+1) = n-1.
  auto open_after = [&](std::size_t j) -> std::size_t {  // pos(j) + 1
    return j == 0 ? 0 : r.event_positions[j - 1] + 1;
  };
  auto close_end = [&](std::size_t j) -> std::size_t {  // pos(j) + 1
    return j > num_events ? n : r.event_positions[j - 1] + 1;
  };
  std::size_t run_start = 0;
  std::size_t run_len = 0;
  auto flush = [&](std::size_t last) {
    if (run_len >= static_cast<std::size_t>(t_star)) {
      const std::size_t begin = open_after(run_start);
      const std::size_t end = std::min(close_end(last + 1), n);
      if (begin < end) {
        if (!out.empty() && out.back().end >= begin)
          out.back().end = std::max(out.back().end, end);
        else
          out.push_back({begin, end});
      }
    }
    run_len = 0;
  };
  for (std::size_t j = 0; j < num_gaps; ++j) {
    if (r.gaps[j] >= threshold) {
      if (run_len > 0) flush(j - 1);
    } else {
      if (run_len == 0) run_start = j;
      ++run_len;
    }
  }
  if (run_len > 0) flush(num_gaps - 1);
  return out;
}

/// Labels follow the set-difference rule literally: state i for the first
/// Seg_i containing t, state m otherwise. Use order_by_emission to make labels
/// intensity-ordered.
inline StateAssignment search_segments(std::span<const std::uint8_t> bits, const RecurrenceSequence& r,
                                       const SearchParams& params) {
  validate(params);
  require(r.length == bits.size(), "recurrence sequence does not match the process");
  const int m = params.states();
  StateAssignment a;
  a.num_states = m;
  a.labels.assign(bits.size(), m);
  a.seg_sets.resize(static_cast<std::size_t>(m - 1));
  if (r.event_positions.empty()) {
    a.degenerate = true;
    summarize(a, bits);
    return a;
  }
  for (int i = 0; i < m - 1; ++i)
    a.seg_sets[static_cast<std::size_t>(i)] =
        dense_segments(r, params.thresholds[static_cast<std::size_t>(i)], params.t_star);
  for (int i = m - 2; i >= 0; --i)
    for (const Interval& iv : a.seg_sets[static_cast<std::size_t>(i)])
      std::fill(a.labels.begin() + static_cast<std::ptrdiff_t>(iv.begin),
                a.labels.begin() + static_cast<std::ptrdiff_t>(iv.end), i + 1);
  summarize(a, bits);
  return a;
}

inline StateAssignment search_segments(const ExcursionProcess& x, const SearchParams& params) {
  return search_segments(x.bits, recurrence_times(x), params);
}

/// Drops empty states and renumbers the rest by ascending emission, so state 1
/// is the least intense and the highest label the most intense. Ties keep the
/// original order.
inline StateAssignment order_by_emission(const StateAssignment& a, std::span<const std::uint8_t> bits) {
  std::vector<int> used;
  for (int s = 0; s < a.num_states; ++s)
    if (a.support[static_cast<std::size_t>(s)] > 0) used.push_back(s);
  std::stable_sort(used.begin(), used.end(), [&](int x, int y) {
    return a.emissions[static_cast<std::size_t>(x)] < a.emissions[static_cast<std::size_t>(y)];
  });
  std::vector<int> relabel(static_cast<std::size_t>(a.num_states), 0);
  for (std::size_t i = 0; i < used.size(); ++i) relabel[static_cast<std::size_t>(used[i])] = static_cast<int>(i) + 1;
  StateAssignment out;
  out.seg_sets = a.seg_sets;
  out.degenerate = a.degenerate;
  out.num_states = static_cast<int>(used.size());
  out.labels.reserve(a.labels.size());
  for (int l : a.labels) out.labels.push_back(relabel[static_cast<std::size_t>(l - 1)]);
  summarize(out, bits);
  return out;
}

/// Per-time emission estimate p-hat of the state each point belongs to.
inline std::vector<double> emission_path(const StateAssignment& a) {
  std::vector<double> out(a.labels.size());
  for (std::size_t t = 0; t < a.labels.size(); ++t)
    out[t] = a.emissions[static_cast<std::size_t>(a.labels[t] - 1)];
  return out;
}

}  // namespace volseg
