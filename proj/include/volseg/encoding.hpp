#pragma once

// Excursion coding of return series and recurrence-time extraction.
//
// An excursion process marks every return that falls in a chosen tail with 1
// and everything else with 0. Recurrence times are the run lengths of 0s
// between consecutive 1s, including the open stretch before the first event
// and the open stretch after the last one, so a process with n' events has
// n' + 1 recurrence times.

#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "volseg/common.hpp"

namespace volseg {

using Bits = std::vector<std::uint8_t>;

struct ReturnSeries {
  std::vector<double> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Two-sided band: events are returns <= lower or >= upper.
struct TwoSided {
  double lower;
  double upper;
};

/// One-sided tail: threshold < 0 marks returns <= threshold, threshold > 0
/// marks returns >= threshold.
struct OneSided {
  double threshold;
};

using ThresholdSpec = std::variant<TwoSided, OneSided>;

struct ExcursionProcess {
  Bits bits;
  ThresholdSpec spec{OneSided{0.0}};

  std::size_t size() const { return bits.size(); }
};

struct RecurrenceSequence {
  std::vector<int> gaps;
  std::vector<std::size_t> event_positions;  // 0-based original-time index of each 1
  std::size_t length = 0;                    // n of the source process
};

inline void validate(const ReturnSeries& r) {
  require(r.timestamps.empty() || r.timestamps.size() == r.values.size(),
          "timestamps and values differ in length", ErrorCode::malformed_input);
  for (double v : r.values) require(std::isfinite(v), "non-finite return", ErrorCode::malformed_input);
  for (std::size_t i = 1; i < r.timestamps.size(); ++i)
    require(r.timestamps[i - 1] <= r.timestamps[i], "timestamps not sorted", ErrorCode::malformed_input);
}

/// value_t = ln(price_t / price_{t-1}); timestamps follow the later price.
inline ReturnSeries log_returns(std::span<const double> prices,
                                std::span<const double> timestamps = {}) {
  require(prices.size() >= 2, "need at least two prices", ErrorCode::insufficient_data);
  require(timestamps.empty() || timestamps.size() == prices.size(),
          "timestamps and prices differ in length", ErrorCode::malformed_input);
  for (double p : prices)
    require(std::isfinite(p) && p > 0.0, "prices must be positive", ErrorCode::malformed_input);
  ReturnSeries out;
  out.values.reserve(prices.size() - 1);
  for (std::size_t i = 1; i < prices.size(); ++i) {
    out.values.push_back(std::log(prices[i] / prices[i - 1]));
    out.timestamps.push_back(timestamps.empty() ? static_cast<double>(i) : timestamps[i]);
  }
  return out;
}

inline ExcursionProcess encode_excursion(std::span<const double> returns, double lower, double upper) {
  require(lower < upper, "invalid threshold pair: lower must be < upper");
  ExcursionProcess x;
  x.spec = TwoSided{lower, upper};
  x.bits.reserve(returns.size());
  for (double r : returns) x.bits.push_back((r <= lower || r >= upper) ? 1 : 0);
  return x;
}

inline ExcursionProcess encode_one_sided(std::span<const double> returns, double threshold) {
  require(threshold != 0.0, "ambiguous tail: one-sided threshold must be nonzero");
  ExcursionProcess x;
  x.spec = OneSided{threshold};
  x.bits.reserve(returns.size());
  if (threshold < 0.0) {
    for (double r : returns) x.bits.push_back(r <= threshold ? 1 : 0);
  } else {
    for (double r : returns) x.bits.push_back(r >= threshold ? 1 : 0);
  }
  return x;
}

inline RecurrenceSequence recurrence_times(std::span<const std::uint8_t> bits) {
  RecurrenceSequence r;
  r.length = bits.size();
  int run = 0;
  for (std::size_t t = 0; t < bits.size(); ++t) {
    if (bits[t]) {
      r.gaps.push_back(run);
      r.event_positions.push_back(t);
      run = 0;
    } else {
      ++run;
    }
  }
  r.gaps.push_back(run);
  return r;
}

inline RecurrenceSequence recurrence_times(const ExcursionProcess& x) { return recurrence_times(x.bits); }

/// Inverse of recurrence_times.
inline Bits reconstruct_bits(const RecurrenceSequence& r) {
  Bits bits;
  bits.reserve(r.length);
  for (std::size_t i = 0; i < r.gaps.size(); ++i) {
    bits.insert(bits.end(), static_cast<std::size_t>(r.gaps[i]), 0);
    if (i + 1 < r.gaps.size()) bits.push_back(1);
  }
  return bits;
}

}  // namespace volseg
