#pragma once

// Shared fixtures and independent reference implementations used by the
// unit and acceptance suites. Everything here deliberately avoids the
// library's own sampling / evaluation paths where it acts as an oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "wismc/wismc.hpp"

namespace testsupport {

using namespace wismc;

// --- kernel constructions --------------------------------------------------

// geometric(p) sojourn conditioned on T <= t_max (mass rescaled), next state
// uniform over j != i, identical across index levels
inline IndexedKernel geometric_kernel_rescaled(int s, double p, std::int64_t t_max,
                                               int levels = 1) {
  IndexedKernel k;
  k.s = s;
  k.levels = levels;
  k.t_max = t_max;
  if (levels > 1) {
    for (int v = 1; v < levels; ++v) k.index_bins.boundaries.push_back(double(v));
  }
  k.q_cum.assign(k.size(), 0.0);
  const double norm = 1.0 - std::pow(1.0 - p, double(t_max));
  for (State i = 1; i <= s; ++i)
    for (int v = 1; v <= levels; ++v)
      for (State j = 1; j <= s; ++j) {
        if (j == i) continue;
        double cum = 0.0;
        for (std::int64_t t = 1; t <= t_max; ++t) {
          cum += p * std::pow(1.0 - p, double(t - 1)) / norm / double(s - 1);
          k.q_cum[k.idx(i, v, j, t)] = cum;
        }
      }
  k.validate();
  return k;
}

// geometric(p) sojourn with the tail mass beyond t_max lumped into t_max
inline IndexedKernel geometric_kernel_lumped(int s, double p, std::int64_t t_max,
                                             int levels = 1) {
  IndexedKernel k;
  k.s = s;
  k.levels = levels;
  k.t_max = t_max;
  if (levels > 1)
    for (int v = 1; v < levels; ++v) k.index_bins.boundaries.push_back(double(v));
  k.q_cum.assign(k.size(), 0.0);
  for (State i = 1; i <= s; ++i)
    for (int v = 1; v <= levels; ++v)
      for (State j = 1; j <= s; ++j) {
        if (j == i) continue;
        for (std::int64_t t = 1; t <= t_max; ++t) {
          const double cdf = t == t_max ? 1.0 : 1.0 - std::pow(1.0 - p, double(t));
          k.q_cum[k.idx(i, v, j, t)] = cdf / double(s - 1);
        }
      }
  k.validate();
  return k;
}

// all mass on outcome (j_star, t_star)
inline IndexedKernel deterministic_kernel(int s, State j_star_offset, std::int64_t t_star,
                                          std::int64_t t_max, int levels = 1) {
  IndexedKernel k;
  k.s = s;
  k.levels = levels;
  k.t_max = t_max;
  if (levels > 1)
    for (int v = 1; v < levels; ++v) k.index_bins.boundaries.push_back(double(v));
  k.q_cum.assign(k.size(), 0.0);
  for (State i = 1; i <= s; ++i)
    for (int v = 1; v <= levels; ++v) {
      State j = State((i - 1 + j_star_offset) % s) + 1;
      if (j == i) j = j % s + 1;
      for (std::int64_t t = t_star; t <= t_max; ++t) k.q_cum[k.idx(i, v, j, t)] = 1.0;
    }
  k.validate();
  return k;
}

// EWMA-indexed 5-state kernel with volatility feedback: hotter index levels
// make the magnitude states (reps -2r, -r, 0, r, 2r) more frequent. Each
// row's own-state weight is reassigned to the same-sign partner scaled by
// the representative ratio, so every jump has conditional mean zero: raw
// returns form a martingale difference while squared returns inherit the
// regime persistence. Magnitude states hold for one minute; the centre
// state has a geometric sojourn whose exit rate grows with the level.
struct ClusterParams {
  double outer0 = 0.05, outer_slope = 0.25;   // combined weight of states 1,5
  double inner0 = 0.22, inner_slope = 0.30;   // combined weight of states 2,4
  double exit0 = 0.35, exit_slope = 0.30;     // centre-state exit probability
};

inline IndexedKernel clustered_kernel(const IndexBins& bins, std::int64_t t_max,
                                      const ClusterParams& par = {}) {
  IndexedKernel k;
  k.s = 5;
  k.levels = bins.levels();
  k.t_max = t_max;
  k.index_bins = bins;
  k.q_cum.assign(k.size(), 0.0);
  for (int v = 1; v <= k.levels; ++v) {
    const double hot = k.levels == 1 ? 0.5 : double(v - 1) / double(k.levels - 1);
    const double outer = par.outer0 + par.outer_slope * hot;
    const double inner = par.inner0 + par.inner_slope * hot;
    const double centre = 1.0 - outer - inner;
    const double centre_exit = par.exit0 + par.exit_slope * hot;
    for (State i = 1; i <= 5; ++i) {
      // own-state mass moves to the mirror (same magnitude), and the inner
      // or outer pair is skewed to cancel the sign drift exactly
      std::vector<double> w(5, 0.0);
      switch (i) {
        case 3: w = {outer / 2, inner / 2, 0.0, inner / 2, outer / 2}; break;
        case 5: w = {outer, inner / 2, centre, inner / 2 + 2.0 * outer, 0.0}; break;
        case 1: w = {0.0, inner / 2 + 2.0 * outer, centre, inner / 2, outer}; break;
        case 4: w = {outer / 2, inner, centre, 0.0, outer / 2 + inner / 2}; break;
        case 2: w = {outer / 2 + inner / 2, 0.0, centre, inner, outer / 2}; break;
      }
      double total = 0.0;
      for (double x : w) total += x;
      if (i == 3) {
        const double norm = 1.0 - std::pow(1.0 - centre_exit, double(t_max));
        for (State j = 1; j <= 5; ++j) {
          if (w[std::size_t(j - 1)] == 0.0) continue;
          double cum = 0.0;
          for (std::int64_t t = 1; t <= t_max; ++t) {
            cum += (w[std::size_t(j - 1)] / total) * centre_exit *
                   std::pow(1.0 - centre_exit, double(t - 1)) / norm;
            k.q_cum[k.idx(i, v, j, t)] = cum;
          }
        }
      } else {
        for (State j = 1; j <= 5; ++j) {
          if (w[std::size_t(j - 1)] == 0.0) continue;
          for (std::int64_t t = 1; t <= t_max; ++t)
            k.q_cum[k.idx(i, v, j, t)] = w[std::size_t(j - 1)] / total;
        }
      }
    }
  }
  k.validate();
  return k;
}

// follower table whose next state depends only on the leader sign: with
// probability `match` pick uniformly among the states of that sign, else
// uniformly among all states. Encoded as synthetic counts.
inline FollowerKernel sign_match_follower(int s, double match, std::int64_t t_max,
                                          std::int64_t scale = 1000000) {
  FollowerKernel fk;
  fk.s = s;
  fk.levels = 1;
  fk.t_max = t_max;
  fk.min_count = 1;
  fk.counts.assign(fk.n_rows() * std::size_t(s + 1), 0);
  for (State i = 1; i <= s; ++i)
    for (std::int64_t u = 0; u < t_max; ++u)
      for (int sg = -1; sg <= 1; ++sg) {
        std::vector<double> w(std::size_t(s), 0.0);
        std::vector<State> same;
        for (State j = 1; j <= s; ++j)
          if (state_sign(j, s) == Sign(sg)) same.push_back(j);
        for (State j : same) w[std::size_t(j - 1)] += match / double(same.size());
        for (State j = 1; j <= s; ++j) w[std::size_t(j - 1)] += (1.0 - match) / double(s);
        const std::size_t r = fk.row(i, u, 1, Sign(sg));
        for (State j = 1; j <= s; ++j) {
          const auto n = std::int64_t(std::llround(w[std::size_t(j - 1)] * double(scale)));
          if (j == i)
            fk.counts[r] += n;  // landing on the current state is a stay
          else
            fk.counts[r + std::size_t(j)] += n;
          fk.total += n;
        }
      }
  return fk;
}

// 3-state kernel with uniform jumps and a geometric sojourn whose exit rate
// rises with the index level; mixes fast across levels
inline IndexedKernel vdep_geometric_kernel(const IndexBins& bins, std::int64_t t_max) {
  IndexedKernel k;
  k.s = 3;
  k.levels = bins.levels();
  k.t_max = t_max;
  k.index_bins = bins;
  k.q_cum.assign(k.size(), 0.0);
  for (int v = 1; v <= k.levels; ++v) {
    const double p = 0.25 + 0.20 * double(v - 1);
    const double norm = 1.0 - std::pow(1.0 - p, double(t_max));
    for (State i = 1; i <= 3; ++i)
      for (State j = 1; j <= 3; ++j) {
        if (j == i) continue;
        double cum = 0.0;
        for (std::int64_t t = 1; t <= t_max; ++t) {
          cum += 0.5 * p * std::pow(1.0 - p, double(t - 1)) / norm;
          k.q_cum[k.idx(i, v, j, t)] = cum;
        }
      }
  }
  k.validate();
  return k;
}

// --- independent references -------------------------------------------------

// plain semi-Markov sampler that knows nothing about the library's
// simulation code: samples (j, t) rows by inverse CDF with its own loop
struct PlainSmcReference {
  int s;
  std::int64_t t_max;
  std::vector<double> q;  // (i, j, t) increments, t fastest

  static PlainSmcReference from_kernel(const IndexedKernel& k, int v) {
    PlainSmcReference r;
    r.s = k.s;
    r.t_max = k.t_max;
    r.q.assign(std::size_t(k.s) * std::size_t(k.s) * std::size_t(k.t_max), 0.0);
    for (State i = 1; i <= k.s; ++i)
      for (State j = 1; j <= k.s; ++j)
        for (std::int64_t t = 1; t <= k.t_max; ++t)
          r.q[((std::size_t(i - 1) * std::size_t(k.s)) + std::size_t(j - 1)) * std::size_t(k.t_max) +
              std::size_t(t - 1)] = k.increment(i, v, j, t);
    return r;
  }

  std::vector<State> simulate(State initial, std::int64_t minutes, SplitMix64& rng) const {
    std::vector<State> z;
    z.reserve(std::size_t(minutes));
    State state = initial;
    while (std::int64_t(z.size()) < minutes) {
      const double x = rng.uniform();
      double acc = 0.0;
      State j = state;
      std::int64_t tau = 1;
      bool hit = false;
      for (State jj = 1; jj <= s && !hit; ++jj) {
        if (jj == state) continue;
        for (std::int64_t t = 1; t <= t_max && !hit; ++t) {
          acc += q[((std::size_t(state - 1) * std::size_t(s)) + std::size_t(jj - 1)) * std::size_t(t_max) +
                   std::size_t(t - 1)];
          if (x < acc) {
            j = jj;
            tau = t;
            hit = true;
          }
        }
      }
      if (!hit) {
        j = state == s ? 1 : s;
        tau = t_max;
      }
      for (std::int64_t m = 0; m < tau && std::int64_t(z.size()) < minutes; ++m)
        z.push_back(state);
      state = j;
    }
    return z;
  }
};

// --- metrics -----------------------------------------------------------------

inline double tv_distance(const std::map<std::int64_t, double>& a,
                          const std::map<std::int64_t, double>& b) {
  double d = 0.0;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    d += std::abs(v - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : b)
    if (a.find(k) == a.end()) d += v;
  return 0.5 * d;
}

inline std::map<std::int64_t, double> sojourn_law(const StatePath& path) {
  std::map<std::int64_t, double> law;
  double n = 0.0;
  for (std::size_t k = 0; k + 1 < path.transitions.size(); ++k) {
    law[path.transitions[k + 1].time - path.transitions[k].time] += 1.0;
    n += 1.0;
  }
  for (auto& [k, v] : law) v /= n;
  return law;
}

inline std::map<std::int64_t, double> state_law(const StatePath& path) {
  std::map<std::int64_t, double> law;
  for (State z : path.states) law[z] += 1.0;
  for (auto& [k, v] : law) v /= double(path.states.size());
  return law;
}

// Mann-Kendall trend test; returns the one-sided p-value for a decreasing
// trend (normal approximation with tie correction).
inline double mann_kendall_decreasing_p(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t a = 0; a + 1 < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      s += x[b] > x[a] ? 1.0 : (x[b] < x[a] ? -1.0 : 0.0);
  std::map<double, std::int64_t> ties;
  for (double v : x) ++ties[v];
  double var = double(n) * double(n - 1) * double(2 * n + 5) / 18.0;
  for (const auto& [v, c] : ties)
    if (c > 1) var -= double(c) * double(c - 1) * double(2 * c + 5) / 18.0;
  if (var <= 0.0) return 1.0;
  const double z = s < 0.0 ? (s + 1.0) / std::sqrt(var) : (s - 1.0) / std::sqrt(var);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));  // Phi(z): small when s << 0
}

// --- random inputs ------------------------------------------------------------

inline double normal_draw(SplitMix64& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// random state path with geometric-ish sojourns, for index-process tests
inline StatePath random_path(SplitMix64& rng, int s, std::int64_t minutes,
                             double change_prob = 0.3) {
  std::vector<State> z;
  z.reserve(std::size_t(minutes));
  State state = 1 + State(rng.next() % std::uint64_t(s));
  z.push_back(state);
  while (std::int64_t(z.size()) < minutes) {
    if (rng.uniform() < change_prob) {
      State next = 1 + State(rng.next() % std::uint64_t(s - 1));
      if (next >= state) ++next;
      state = next;
    }
    z.push_back(state);
  }
  return StatePath::from_states(std::move(z));
}

inline IndexSpec test_index_spec(int s, double lambda, double scale = 0.01) {
  IndexSpec spec;
  spec.lambda = lambda;
  spec.squared_rep.resize(std::size_t(s));
  for (int k = 0; k < s; ++k) {
    const double r = scale * (double(k) - double(s - 1) / 2.0);
    spec.squared_rep[std::size_t(k)] = r * r;
  }
  spec.u0 = spec.squared_rep[std::size_t(s / 2)];
  return spec;
}

}  // namespace testsupport
