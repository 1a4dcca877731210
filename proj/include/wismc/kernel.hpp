#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "wismc/index_process.hpp"

namespace wismc {

// Extended state (Z(n), B(n)) of the minute-level Markov description, with
// v the ordinal level of the index AT THE LAST TRANSITION (U_{N(n)}).
struct BackwardState {
  State i = 0;
  std::int64_t u = 0;
  int v = 1;
};

// One-minute law from (i, u): either remain in i with backward time u+1 or
// jump to some j != i with backward time 0.
struct OneStepDist {
  double stay_prob = 0.0;
  std::vector<double> change_probs;  // [j-1]; the j == i slot is 0

  double total() const {
    double s = stay_prob;
    for (double p : change_probs) s += p;
    return s;
  }
};

// Cumulative kernel Q_ij(v;t) on a dense (i, v, j, t) grid, t = 1..t_max,
// t fastest. Sojourns are censored at t_max, so populated rows satisfy
// sum_j Q_ij(v; t_max) = 1. context_counts (when present) carry the number
// of completed sojourns behind each (i, v) row; an empty vector means the
// kernel was built by hand and every row is trusted.
struct IndexedKernel {
  int s = 0;
  int levels = 1;
  std::int64_t t_max = 0;
  IndexBins index_bins;
  std::vector<double> q_cum;
  std::vector<std::int64_t> context_counts;
  int min_count = 5;

  std::size_t size() const { return std::size_t(s) * std::size_t(levels) * std::size_t(s) * std::size_t(t_max); }

  std::size_t idx(State i, int v, State j, std::int64_t t) const {
    return ((std::size_t(i - 1) * std::size_t(levels) + std::size_t(v - 1)) * std::size_t(s) +
            std::size_t(j - 1)) * std::size_t(t_max) + std::size_t(t - 1);
  }

  double cum(State i, int v, State j, std::int64_t t) const {
    return t <= 0 ? 0.0 : q_cum[idx(i, v, j, t)];
  }

  double increment(State i, int v, State j, std::int64_t t) const {
    return cum(i, v, j, t) - cum(i, v, j, t - 1);
  }

  std::int64_t context_count(State i, int v) const {
    if (context_counts.empty()) return std::numeric_limits<std::int64_t>::max();
    return context_counts[std::size_t(i - 1) * std::size_t(levels) + std::size_t(v - 1)];
  }

  void validate(double tol = 1e-9) const {
    if (s < 2) throw Error("kernel: need at least 2 states");
    if (levels < 1) throw Error("kernel: need at least 1 index level");
    if (t_max < 1) throw Error("kernel: t_max must be >= 1");
    if (q_cum.size() != size()) throw Error("kernel: payload size mismatch");
    if (index_bins.levels() != levels) throw Error("kernel: index bin count mismatch");
    index_bins.validate();
    if (!context_counts.empty() &&
        context_counts.size() != std::size_t(s) * std::size_t(levels))
      throw Error("kernel: context count table size mismatch");
    for (State i = 1; i <= s; ++i) {
      for (int v = 1; v <= levels; ++v) {
        double row_total = 0.0;
        for (State j = 1; j <= s; ++j) {
          double prev = 0.0;
          for (std::int64_t t = 1; t <= t_max; ++t) {
            const double q = cum(i, v, j, t);
            if (i == j && q != 0.0) throw Error("kernel: Q_ii must be zero");
            if (q < -tol || q > 1.0 + tol) throw Error("kernel: entry outside [0,1]");
            if (q < prev - tol) throw Error("kernel: Q not monotone in t");
            prev = q;
          }
          row_total += prev;
        }
        if (row_total > tol && std::abs(row_total - 1.0) > tol)
          throw Error("kernel: row (" + std::to_string(i) + "," + std::to_string(v) +
                      ") sums to " + std::to_string(row_total) + " at t_max");
      }
    }
  }
};

// p_ij(v) = Q_ij(v; t_max), laid out (i, v, j)
inline std::vector<double> embedded_p(const IndexedKernel& k) {
  std::vector<double> p(std::size_t(k.s) * std::size_t(k.levels) * std::size_t(k.s));
  std::size_t w = 0;
  for (State i = 1; i <= k.s; ++i)
    for (int v = 1; v <= k.levels; ++v)
      for (State j = 1; j <= k.s; ++j) p[w++] = k.cum(i, v, j, k.t_max);
  return p;
}

// H_i(v;t) = sum_j Q_ij(v;t), laid out (i, v, t)
inline std::vector<double> sojourn_cdf(const IndexedKernel& k) {
  std::vector<double> h(std::size_t(k.s) * std::size_t(k.levels) * std::size_t(k.t_max));
  std::size_t w = 0;
  for (State i = 1; i <= k.s; ++i)
    for (int v = 1; v <= k.levels; ++v)
      for (std::int64_t t = 1; t <= k.t_max; ++t) {
        double sum = 0.0;
        for (State j = 1; j <= k.s; ++j) sum += k.cum(i, v, j, t);
        h[w++] = sum;
      }
  return h;
}

// G_ij(v;t) = Q_ij(v;t) / p_ij(v), defined as 1 when p_ij(v) = 0;
// laid out like q_cum
inline std::vector<double> conditional_g(const IndexedKernel& k) {
  std::vector<double> g(k.size());
  for (State i = 1; i <= k.s; ++i)
    for (int v = 1; v <= k.levels; ++v)
      for (State j = 1; j <= k.s; ++j) {
        const double p = k.cum(i, v, j, k.t_max);
        for (std::int64_t t = 1; t <= k.t_max; ++t)
          g[k.idx(i, v, j, t)] = p == 0.0 ? 1.0 : k.cum(i, v, j, t) / p;
      }
  return g;
}

inline double kernel_increment(const IndexedKernel& k, State i, int v, State j, std::int64_t t) {
  if (t < 1 || t > k.t_max) throw Error("kernel increment: t out of range");
  return k.increment(i, v, j, t);
}

// One (i, v) row of a kernel, resolved to an explicit sojourn/next-state
// law. This is what simulation consumes: the event sampler draws (j, t)
// from q, the stepwise sampler walks one_step(u).
struct KernelRow {
  int s = 0;
  std::int64_t t_max = 0;
  std::vector<double> q;     // (j, t) increments, t fastest
  std::vector<double> surv;  // surv[u] = 1 - H(u), u = 0..t_max

  static KernelRow from_kernel(const IndexedKernel& k, State i, int v) {
    KernelRow row;
    row.s = k.s;
    row.t_max = k.t_max;
    row.q.resize(std::size_t(k.s) * std::size_t(k.t_max));
    std::size_t w = 0;
    for (State j = 1; j <= k.s; ++j)
      for (std::int64_t t = 1; t <= k.t_max; ++t) row.q[w++] = k.increment(i, v, j, t);
    row.build_survival();
    return row;
  }

  double q_at(State j, std::int64_t t) const {
    return q[std::size_t(j - 1) * std::size_t(t_max) + std::size_t(t - 1)];
  }

  double mass() const {
    double m = 0.0;
    for (double x : q) m += x;
    return m;
  }

  // survival accumulated backward over the increments themselves, so
  // surv[u] = surv[u+1] + sum_j q(j, u+1) holds exactly in floating point
  // and states past the row's support are exactly unreachable
  void build_survival() {
    surv.assign(std::size_t(t_max) + 1, 0.0);
    for (std::int64_t t = t_max; t >= 1; --t) {
      double h_inc = 0.0;
      for (State j = 1; j <= s; ++j) h_inc += q_at(j, t);
      surv[std::size_t(t - 1)] = surv[std::size_t(t)] + h_inc;
    }
  }

  OneStepDist one_step(State i, std::int64_t u) const {
    if (u < 0 || u >= t_max)
      throw UnreachableBackwardState("one step: backward time " + std::to_string(u) +
                                     " outside [0," + std::to_string(t_max) + ")");
    const double surv_u = surv[std::size_t(u)];
    if (!(surv_u > 0.0))
      throw UnreachableBackwardState("one step: state unreachable, survival(" +
                                     std::to_string(u) + ") = 0");
    OneStepDist d;
    d.change_probs.assign(std::size_t(s), 0.0);
    d.stay_prob = surv[std::size_t(u + 1)] / surv_u;
    for (State j = 1; j <= s; ++j) {
      if (j == i) continue;
      d.change_probs[std::size_t(j - 1)] = q_at(j, u + 1) / surv_u;
    }
    return d;
  }
};

// One-step law of the pair (state, backward time) read off the kernel:
// stay with (1-H(v;1+u))/(1-H(v;u)), jump to (j,0) with q_ij(v;1+u)/(1-H(v;u)).
inline OneStepDist one_step_probs(const IndexedKernel& k, const BackwardState& b) {
  if (b.i < 1 || b.i > k.s) throw Error("one step: state out of range");
  if (b.v < 1 || b.v > k.levels) throw Error("one step: index level out of range");
  return KernelRow::from_kernel(k, b.i, b.v).one_step(b.i, b.u);
}

}  // namespace wismc
