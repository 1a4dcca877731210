#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wismc/errors.hpp"

namespace wismc {

// 1-based state label in {1..s}
using State = int;

enum class Sign : int { minus = -1, zero = 0, plus = 1 };

struct Tick {
  std::int64_t timestamp = 0;  // epoch seconds
  double price = 0.0;
};

struct TickSeries {
  std::string symbol;
  std::vector<Tick> records;

  void validate() const {
    for (std::size_t k = 0; k < records.size(); ++k) {
      if (!(records[k].price > 0.0))
        throw Error("tick series '" + symbol + "': non-positive price at record " +
                    std::to_string(k));
      if (k > 0 && records[k].timestamp < records[k - 1].timestamp)
        throw UnsortedInput("tick series '" + symbol + "': timestamps decrease at record " +
                            std::to_string(k));
    }
  }
};

struct PriceSeries {
  std::int64_t t0 = 0;        // grid origin (epoch seconds)
  std::int64_t interval = 60; // slot width in seconds
  std::vector<double> prices; // one per slot, no gaps
};

struct ReturnSeries {
  std::vector<double> values;
};

namespace detail {

// Cut points between adjacent distinct sorted values, approximating target
// cumulative mass fractions. Cuts are midpoints, so tied values never
// straddle a boundary. Returns empty if there are not enough distinct
// values to honour all targets (targets must be ascending).
inline std::vector<double> equal_mass_cuts(std::vector<double> vals,
                                           const std::vector<double>& targets) {
  std::sort(vals.begin(), vals.end());
  std::vector<double> cand_frac, cand_cut;
  const double n = double(vals.size());
  for (std::size_t k = 1; k < vals.size(); ++k) {
    if (vals[k] > vals[k - 1]) {
      cand_frac.push_back(double(k) / n);
      cand_cut.push_back(0.5 * (vals[k - 1] + vals[k]));
    }
  }
  if (cand_cut.size() < targets.size()) return {};
  std::vector<double> cuts;
  cuts.reserve(targets.size());
  std::size_t lo = 0;
  for (std::size_t m = 0; m < targets.size(); ++m) {
    // leave room for the targets still to come
    const std::size_t hi = cand_cut.size() - (targets.size() - m);
    std::size_t best = lo;
    for (std::size_t j = lo; j <= hi; ++j)
      if (std::abs(cand_frac[j] - targets[m]) < std::abs(cand_frac[best] - targets[m])) best = j;
    cuts.push_back(cand_cut[best]);
    lo = best + 1;
  }
  return cuts;
}

}  // namespace detail

// Symmetric return bins: boundaries b_0 < ... < b_s with b_k = -b_{s-k},
// odd state count, centre bin straddling zero. Representatives are the
// per-bin conditional mean returns.
struct BinSpec {
  std::vector<double> boundaries;       // size s+1
  std::vector<double> representatives;  // size s

  int states() const { return int(representatives.size()); }
  State center() const { return (states() + 1) / 2; }
  double representative(State k) const { return representatives[std::size_t(k - 1)]; }

  bool contains(double r) const { return r >= boundaries.front() && r <= boundaries.back(); }

  // bin k = (b_{k-1}, b_k]; values outside [b_0, b_s] clamp to the extremes
  State bin_of(double r) const {
    const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), r);
    if (it == boundaries.end()) return states();
    auto k = State(it - boundaries.begin());
    return k < 1 ? 1 : k;
  }

  void validate(double symmetry_tol = 1e-15) const {
    const int s = states();
    if (s < 3 || s % 2 == 0) throw Error("bin spec: state count must be odd and >= 3");
    if (boundaries.size() != std::size_t(s) + 1) throw Error("bin spec: boundary count mismatch");
    for (int k = 0; k < s; ++k)
      if (!(boundaries[k] < boundaries[k + 1])) throw Error("bin spec: boundaries not increasing");
    for (int k = 0; k <= s; ++k) {
      const double mirror = -boundaries[std::size_t(s - k)];
      const double scale = std::max(1.0, std::abs(boundaries[k]));
      if (std::abs(boundaries[k] - mirror) > symmetry_tol * scale)
        throw Error("bin spec: boundaries not symmetric about zero");
    }
    if (!(boundaries[std::size_t(center() - 1)] < 0.0 && boundaries[std::size_t(center())] >= 0.0))
      throw Error("bin spec: centre bin does not contain zero");
    for (int k = 1; k < s; ++k)
      if (!(representatives[k - 1] < representatives[k]))
        throw Error("bin spec: representatives not increasing");
    const State c = center();
    for (State k = 1; k <= s; ++k) {
      const double r = representative(k);
      if (k < c && !(r < 0.0)) throw Error("bin spec: sub-centre representative not negative");
      if (k > c && !(r > 0.0)) throw Error("bin spec: super-centre representative not positive");
    }
  }
};

inline Sign state_sign(State k, int s) {
  const State c = (s + 1) / 2;
  return k < c ? Sign::minus : (k == c ? Sign::zero : Sign::plus);
}

inline Sign state_sign(State k, const BinSpec& bins) { return state_sign(k, bins.states()); }

struct Transition {
  State state = 0;        // J_n
  std::int64_t time = 0;  // T_n (minute index), T_0 = 0
};

// Per-minute state labels plus the derived change records (J_n, T_n).
struct StatePath {
  std::vector<State> states;
  std::vector<Transition> transitions;

  static StatePath from_states(std::vector<State> z) {
    if (z.empty()) throw EmptySeries("state path: no minutes");
    StatePath p;
    p.transitions.push_back({z[0], 0});
    for (std::size_t t = 1; t < z.size(); ++t)
      if (z[t] != z[t - 1]) p.transitions.push_back({z[t], std::int64_t(t)});
    p.states = std::move(z);
    return p;
  }

  std::int64_t minutes() const { return std::int64_t(states.size()); }

  // N(t): index of the last transition with T_n <= t
  std::size_t n_at(std::int64_t t) const {
    const auto it = std::upper_bound(
        transitions.begin(), transitions.end(), t,
        [](std::int64_t lhs, const Transition& tr) { return lhs < tr.time; });
    return std::size_t(it - transitions.begin()) - 1;
  }

  // B(t) = t - T_{N(t)}
  std::int64_t backward_at(std::int64_t t) const {
    return t - transitions[n_at(t)].time;
  }

  void validate() const {
    if (states.empty()) throw EmptySeries("state path: no minutes");
    if (transitions.empty() || transitions[0].time != 0)
      throw Error("state path: first transition must be at time 0");
    for (std::size_t n = 1; n < transitions.size(); ++n) {
      if (transitions[n].time <= transitions[n - 1].time)
        throw Error("state path: transition times not increasing");
      if (transitions[n].state == transitions[n - 1].state)
        throw Error("state path: consecutive transitions to the same state");
    }
    std::size_t n = 0;
    for (std::int64_t t = 0; t < minutes(); ++t) {
      while (n + 1 < transitions.size() && transitions[n + 1].time <= t) ++n;
      if (states[std::size_t(t)] != transitions[n].state)
        throw Error("state path: states disagree with transitions at minute " + std::to_string(t));
    }
  }
};

// Last price at or before each slot end; interior gaps carry the previous
// slot forward. Slots before the first tick do not exist.
inline PriceSeries resample_to_grid(const TickSeries& ticks, std::int64_t interval = 60) {
  if (ticks.records.empty()) throw EmptySeries("resample: no ticks for '" + ticks.symbol + "'");
  if (interval <= 0) throw Error("resample: interval must be positive");
  ticks.validate();

  const auto slot_of = [&](std::int64_t ts) {
    return ts >= 0 ? ts / interval : (ts - interval + 1) / interval;
  };
  const std::int64_t first_slot = slot_of(ticks.records.front().timestamp);
  const std::int64_t last_slot = slot_of(ticks.records.back().timestamp);

  PriceSeries out;
  out.t0 = first_slot * interval;
  out.interval = interval;
  out.prices.reserve(std::size_t(last_slot - first_slot + 1));

  std::size_t k = 0;
  double last_price = ticks.records.front().price;
  for (std::int64_t slot = first_slot; slot <= last_slot; ++slot) {
    while (k < ticks.records.size() && slot_of(ticks.records[k].timestamp) <= slot) {
      last_price = ticks.records[k].price;
      ++k;
    }
    out.prices.push_back(last_price);
  }
  return out;
}

inline ReturnSeries compute_returns(const PriceSeries& prices) {
  if (prices.prices.size() < 2)
    throw TooShort("returns: need at least 2 prices, got " + std::to_string(prices.prices.size()));
  ReturnSeries out;
  out.values.resize(prices.prices.size() - 1);
  for (std::size_t t = 0; t + 1 < prices.prices.size(); ++t) {
    if (!(prices.prices[t] > 0.0)) throw Error("returns: non-positive price at slot " + std::to_string(t));
    out.values[t] = (prices.prices[t + 1] - prices.prices[t]) / prices.prices[t];
  }
  return out;
}

// Boundaries are symmetrised cuts of |returns|: the centre bin holds
// center_mass of the sample, the remaining mass splits equally across the
// tail bins. Cuts sit between distinct magnitudes so ties stay together.
inline BinSpec fit_return_bins(const ReturnSeries& returns, int s = 5, double center_mass = 0.25) {
  if (s < 3 || s % 2 == 0) throw Error("fit bins: state count must be odd and >= 3");
  if (!(center_mass > 0.0 && center_mass < 1.0)) throw Error("fit bins: centre mass must be in (0,1)");
  const auto& r = returns.values;
  if (r.size() < std::size_t(s))
    throw DegenerateDistribution("fit bins: only " + std::to_string(r.size()) + " returns");
  if (std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; }))
    throw DegenerateDistribution("fit bins: all returns equal");

  std::vector<double> mag(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) mag[k] = std::abs(r[k]);

  const int half = (s - 1) / 2;
  std::vector<double> targets(std::size_t(half), 0.0);
  for (int m = 0; m < half; ++m)
    targets[std::size_t(m)] = center_mass + (1.0 - center_mass) * double(m) / double(half);

  const std::vector<double> cuts = detail::equal_mass_cuts(mag, targets);
  if (cuts.empty())
    throw DegenerateDistribution("fit bins: too few distinct return magnitudes for " +
                                 std::to_string(s) + " states");
  const double top = *std::max_element(mag.begin(), mag.end());

  BinSpec bins;
  bins.boundaries.resize(std::size_t(s) + 1);
  bins.boundaries[0] = -top;
  bins.boundaries[std::size_t(s)] = top;
  for (int m = 0; m < half; ++m) {
    bins.boundaries[std::size_t(half + 1 + m)] = cuts[std::size_t(m)];
    bins.boundaries[std::size_t(half - m)] = -cuts[std::size_t(m)];
  }

  std::vector<double> sum(std::size_t(s), 0.0);
  std::vector<std::size_t> cnt(std::size_t(s), 0);
  for (double x : r) {
    const auto k = std::size_t(bins.bin_of(x) - 1);
    sum[k] += x;
    ++cnt[k];
  }
  bins.representatives.assign(std::size_t(s), 0.0);
  for (int k = 0; k < s; ++k)
    if (cnt[std::size_t(k)] > 0)
      bins.representatives[std::size_t(k)] = sum[std::size_t(k)] / double(cnt[std::size_t(k)]);
  for (int k = 0; k < s; ++k) {
    if (cnt[std::size_t(k)] > 0) continue;
    // one-sided data: mirror the opposite bin, else fall back to the midpoint
    const int mirror = s - 1 - k;
    double rep = cnt[std::size_t(mirror)] > 0
                     ? -bins.representatives[std::size_t(mirror)]
                     : 0.5 * (bins.boundaries[std::size_t(k)] + bins.boundaries[std::size_t(k) + 1]);
    const double lo = bins.boundaries[std::size_t(k)];
    if (rep <= lo) rep = std::nextafter(lo, std::numeric_limits<double>::infinity());
    bins.representatives[std::size_t(k)] = rep;
  }

  bins.validate();
  return bins;
}

// Map each return to its bin; out-of-range values clamp to the extreme bins
// (count reported via `clamped`, never an error).
inline StatePath discretize(const ReturnSeries& returns, const BinSpec& bins,
                            std::size_t* clamped = nullptr) {
  if (returns.values.empty()) throw EmptySeries("discretize: no returns");
  std::size_t n_clamped = 0;
  std::vector<State> z(returns.values.size());
  for (std::size_t t = 0; t < returns.values.size(); ++t) {
    const double x = returns.values[t];
    if (!bins.contains(x)) ++n_clamped;
    z[t] = bins.bin_of(x);
  }
  if (clamped) *clamped = n_clamped;
  return StatePath::from_states(std::move(z));
}

}  // namespace wismc
