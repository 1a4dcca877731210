#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "wismc/market_data.hpp"

namespace wismc {

// EWMA weighting of squared representative returns. u0 is the (non-random)
// initial index value; truncation_eps bounds the history window of the
// windowed evaluators (weights below it are dropped from numerator and
// denominator alike).
struct IndexSpec {
  double lambda = 0.97;
  double truncation_eps = 1e-12;
  double u0 = 0.0;
  std::vector<double> squared_rep;  // r_k^2, index [k-1]

  double r2(State k) const { return squared_rep[std::size_t(k - 1)]; }

  void validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("index spec: lambda must be in (0,1]");
    if (!(truncation_eps >= 0.0 && truncation_eps < 1.0))
      throw Error("index spec: truncation_eps must be in [0,1)");
    if (squared_rep.empty()) throw Error("index spec: no squared representatives");
    for (double v : squared_rep)
      if (!(v >= 0.0)) throw Error("index spec: negative squared representative");
  }
};

inline IndexSpec make_index_spec(const BinSpec& bins, double lambda,
                                 double truncation_eps = 1e-12) {
  IndexSpec spec;
  spec.lambda = lambda;
  spec.truncation_eps = truncation_eps;
  spec.squared_rep.resize(bins.representatives.size());
  for (std::size_t k = 0; k < bins.representatives.size(); ++k)
    spec.squared_rep[k] = bins.representatives[k] * bins.representatives[k];
  std::vector<double> sorted = spec.squared_rep;
  std::sort(sorted.begin(), sorted.end());
  spec.u0 = sorted[sorted.size() / 2];  // scale-matched neutral start
  spec.validate();
  return spec;
}

// U evaluated both at transition epochs and on the full minute grid.
// at_minutes has L+1 entries (t = 0..L); at_minutes[T_n] == at_transitions[n].
struct IndexPath {
  std::vector<double> at_transitions;
  std::vector<double> at_minutes;
};

// Un-normalised EWMA weight of one historical minute.
inline double ewma_f(State state, std::int64_t elapsed, const IndexSpec& spec) {
  return std::pow(spec.lambda, double(elapsed)) * spec.r2(state);
}

// Minutes further back than this carry weight < truncation_eps.
inline std::int64_t history_window(const IndexSpec& spec) {
  if (spec.lambda >= 1.0 || spec.truncation_eps <= 0.0)
    return std::numeric_limits<std::int64_t>::max();
  return std::int64_t(std::ceil(std::log(spec.truncation_eps) / std::log(spec.lambda)));
}

// Forward recurrence over the whole path: S_t = lambda (S_{t-1} + r2(z(t-1))),
// W_t likewise with unit values, U(t) = S_t / W_t. Exact and O(1) per minute.
inline IndexPath compute_index_path(const StatePath& path, const IndexSpec& spec) {
  spec.validate();
  const std::int64_t L = path.minutes();
  IndexPath out;
  out.at_minutes.resize(std::size_t(L) + 1);
  out.at_transitions.resize(path.transitions.size());
  out.at_minutes[0] = spec.u0;
  out.at_transitions[0] = spec.u0;
  double S = 0.0, W = 0.0;
  std::size_t n = 1;
  for (std::int64_t t = 1; t <= L; ++t) {
    S = spec.lambda * (S + spec.r2(path.states[std::size_t(t - 1)]));
    W = spec.lambda * (W + 1.0);
    const double u = S / W;
    out.at_minutes[std::size_t(t)] = u;
    if (n < path.transitions.size() && path.transitions[n].time == t) {
      out.at_transitions[n] = u;
      ++n;
    }
  }
  return out;
}

inline std::vector<double> index_at_transitions(const StatePath& path, const IndexSpec& spec) {
  return compute_index_path(path, spec).at_transitions;
}

inline std::vector<double> index_at_minutes(const StatePath& path, const IndexSpec& spec) {
  return compute_index_path(path, spec).at_minutes;
}

// Windowed from-scratch evaluation of U(t); the independent route used by
// delta_u and by tests against the recurrence.
inline double index_value_at(const StatePath& path, const IndexSpec& spec, std::int64_t t) {
  if (t == 0) return spec.u0;
  const std::int64_t w = history_window(spec);
  const std::int64_t lo = t > w ? t - w : 0;
  double S = 0.0, W = 0.0, weight = 1.0;
  for (std::int64_t a = t - 1; a >= lo; --a) {
    weight *= spec.lambda;  // lambda^{t-a}
    S += weight * spec.r2(path.states[std::size_t(a)]);
    W += weight;
  }
  return S / W;
}

// Delta U(N(n), n) = U_{N(n)} - U(n) via the reweighting decomposition:
// remove the running sojourn's contribution from the time-n sums and shift
// the remaining history from lambda^{n-a} to lambda^{T-a} weights.
inline double delta_u(const StatePath& path, const IndexSpec& spec, std::int64_t n) {
  if (n < 0 || n > path.minutes()) throw Error("delta_u: minute out of range");
  if (n == 0) return 0.0;
  const std::size_t N = path.n_at(n);
  const std::int64_t T = path.transitions[N].time;
  const std::int64_t u = n - T;
  if (u == 0) return 0.0;

  const double lam = spec.lambda;
  const std::int64_t w = history_window(spec);

  double Sn = 0.0, Wn = 0.0;
  {
    const std::int64_t lo = n > w ? n - w : 0;
    double weight = 1.0;
    for (std::int64_t a = n - 1; a >= lo; --a) {
      weight *= lam;
      Sn += weight * spec.r2(path.states[std::size_t(a)]);
      Wn += weight;
    }
  }

  const double r2_cur = spec.r2(path.transitions[N].state);
  double Cs = 0.0, Cw = 0.0;
  {
    double weight = 1.0;
    for (std::int64_t a = n - 1; a >= T; --a) {
      weight *= lam;
      Cs += weight * r2_cur;
      Cw += weight;
    }
  }

  double Ds = 0.0, Dw = 0.0;
  {
    const std::int64_t lo = T > w ? T - w : 0;
    const double lam_u = std::pow(lam, double(u));
    double wT = 1.0;
    for (std::int64_t a = T - 1; a >= lo; --a) {
      wT *= lam;                        // lambda^{T-a}
      const double d = wT - wT * lam_u; // lambda^{T-a} - lambda^{n-a}
      Ds += d * spec.r2(path.states[std::size_t(a)]);
      Dw += d;
    }
  }

  const double St = Sn - Cs + Ds;
  const double Wt = Wn - Cw + Dw;
  const double u_at_transition = T == 0 ? spec.u0 : St / Wt;
  return u_at_transition - Sn / Wn;
}

// Un-normalised index over an arbitrary weight function f(state, elapsed).
template <class F>
inline double history_sum(const StatePath& path, F&& f, std::int64_t t) {
  double s = 0.0;
  for (std::int64_t a = 0; a < t; ++a) s += f(path.states[std::size_t(a)], t - a);
  return s;
}

// Same decomposition as delta_u but on the raw sums, for general f.
template <class F>
inline double delta_u_general(const StatePath& path, F&& f, std::int64_t n) {
  if (n <= 0) return 0.0;
  const std::size_t N = path.n_at(n);
  const std::int64_t T = path.transitions[N].time;
  if (n == T) return 0.0;
  const State i = path.transitions[N].state;
  double d = 0.0;
  for (std::int64_t a = T; a < n; ++a) d -= f(i, n - a);
  for (std::int64_t a = 0; a < T; ++a) d += f(path.states[std::size_t(a)], T - a) - f(path.states[std::size_t(a)], n - a);
  return d;
}

// Ordinal volatility levels: level k = (c_{k-1}, c_k] over index values,
// with levels = boundaries.size() + 1. A single level means the index is
// ignored and the model degenerates to a plain semi-Markov chain.
struct IndexBins {
  std::vector<double> boundaries;

  int levels() const { return int(boundaries.size()) + 1; }

  int level_of(double x) const {
    const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), x);
    return int(it - boundaries.begin()) + 1;
  }

  void validate() const {
    for (std::size_t k = 1; k < boundaries.size(); ++k)
      if (!(boundaries[k - 1] < boundaries[k]))
        throw Error("index bins: boundaries not increasing");
  }
};

inline IndexBins fit_index_bins(const std::vector<double>& index_values, int levels = 5) {
  if (levels < 1) throw Error("index bins: levels must be >= 1");
  if (levels == 1) return IndexBins{};
  if (index_values.size() < std::size_t(levels))
    throw DegenerateIndex("index bins: fewer values than levels");
  std::vector<double> targets(std::size_t(levels - 1), 0.0);
  for (int m = 1; m < levels; ++m)
    targets[std::size_t(m - 1)] = double(m) / double(levels);
  IndexBins bins;
  bins.boundaries = detail::equal_mass_cuts(index_values, targets);
  if (bins.boundaries.empty())
    throw DegenerateIndex("index bins: fewer than " + std::to_string(levels) +
                          " distinct index values");
  return bins;
}

}  // namespace wismc
