#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "wismc/kernel.hpp"

namespace wismc {

// Raw sojourn counts behind a kernel estimate. n_context(i,v) is the number
// of completed sojourns observed from that context; the final (censored)
// sojourn of a path is dropped and tallied separately.
struct KernelCounts {
  int s = 0;
  int levels = 1;
  std::int64_t t_max = 0;
  std::vector<std::int64_t> n_transition;  // (i, v, j, t), t fastest
  std::vector<std::int64_t> n_context;     // (i, v)
  std::int64_t censored = 0;

  std::size_t tidx(State i, int v, State j, std::int64_t t) const {
    return ((std::size_t(i - 1) * std::size_t(levels) + std::size_t(v - 1)) * std::size_t(s) +
            std::size_t(j - 1)) * std::size_t(t_max) + std::size_t(t - 1);
  }
  std::size_t cidx(State i, int v) const {
    return std::size_t(i - 1) * std::size_t(levels) + std::size_t(v - 1);
  }

  void validate() const {
    std::vector<std::int64_t> sums(n_context.size(), 0);
    for (State i = 1; i <= s; ++i)
      for (int v = 1; v <= levels; ++v)
        for (State j = 1; j <= s; ++j)
          for (std::int64_t t = 1; t <= t_max; ++t) sums[cidx(i, v)] += n_transition[tidx(i, v, j, t)];
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (sums[c] != n_context[c]) throw Error("kernel counts: context totals inconsistent");
  }
};

// One count per completed sojourn: context (J_n, level(U_n)), outcome
// (J_{n+1}, min(T_{n+1}-T_n, t_max)).
inline KernelCounts count_transitions(const StatePath& path, int s, const IndexPath& index,
                                      const IndexBins& bins, std::int64_t t_max) {
  if (path.transitions.size() < 2)
    throw InsufficientData("estimate: need at least 2 transitions, got " +
                           std::to_string(path.transitions.size()));
  if (index.at_transitions.size() != path.transitions.size())
    throw GridMismatch("estimate: index path does not match state path");
  KernelCounts counts;
  counts.s = s;
  counts.levels = bins.levels();
  counts.t_max = t_max;
  counts.n_transition.assign(std::size_t(s) * std::size_t(bins.levels()) * std::size_t(s) *
                                 std::size_t(t_max),
                             0);
  counts.n_context.assign(std::size_t(s) * std::size_t(bins.levels()), 0);
  for (std::size_t n = 0; n + 1 < path.transitions.size(); ++n) {
    const State i = path.transitions[n].state;
    const State j = path.transitions[n + 1].state;
    if (i < 1 || i > s || j < 1 || j > s)
      throw Error("estimate: state label outside 1.." + std::to_string(s));
    const int v = bins.level_of(index.at_transitions[n]);
    const std::int64_t t =
        std::min<std::int64_t>(path.transitions[n + 1].time - path.transitions[n].time, t_max);
    ++counts.n_transition[counts.tidx(i, v, j, t)];
    ++counts.n_context[counts.cidx(i, v)];
  }
  counts.censored = 1;
  return counts;
}

inline IndexedKernel kernel_from_counts(const KernelCounts& counts, const IndexBins& bins,
                                        int min_count = 5) {
  IndexedKernel k;
  k.s = counts.s;
  k.levels = counts.levels;
  k.t_max = counts.t_max;
  k.index_bins = bins;
  k.min_count = min_count;
  k.context_counts = counts.n_context;
  k.q_cum.assign(counts.n_transition.size(), 0.0);
  for (State i = 1; i <= k.s; ++i)
    for (int v = 1; v <= k.levels; ++v) {
      const std::int64_t total = counts.n_context[counts.cidx(i, v)];
      if (total == 0) continue;
      for (State j = 1; j <= k.s; ++j) {
        double cum = 0.0;
        for (std::int64_t t = 1; t <= k.t_max; ++t) {
          cum += double(counts.n_transition[counts.tidx(i, v, j, t)]) / double(total);
          k.q_cum[k.idx(i, v, j, t)] = cum;
        }
      }
    }
  return k;
}

inline IndexedKernel estimate_kernel(const StatePath& path, int s, const IndexPath& index,
                                     const IndexBins& bins, std::int64_t t_max,
                                     int min_count = 5) {
  return kernel_from_counts(count_transitions(path, s, index, bins, t_max), bins, min_count);
}

// ---------------------------------------------------------------------------
// Follower model: minute-level one-step counts conditioned on the sign of
// the leader's contemporaneous state.

inline int sign_slot(Sign s) { return int(s) + 1; }  // -,0,+ -> 0,1,2

struct FollowerKernel {
  enum class IndexAt { transition, minute };

  int s = 0;                // follower state count
  int levels = 1;
  std::int64_t t_max = 0;   // backward-time contexts saturate at t_max-1
  IndexBins index_bins;
  int min_count = 5;
  IndexAt index_at = IndexAt::transition;
  // counts[(i, u, v, sign)] -> s+1 slots: [stay, change->1, ..., change->s]
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;

  std::size_t row(State i, std::int64_t u, int v, Sign sg) const {
    return (((std::size_t(i - 1) * std::size_t(t_max) + std::size_t(u)) * std::size_t(levels) +
             std::size_t(v - 1)) * 3 + std::size_t(sign_slot(sg))) * std::size_t(s + 1);
  }

  std::size_t n_rows() const {
    return std::size_t(s) * std::size_t(t_max) * std::size_t(levels) * 3;
  }

  std::int64_t row_total(std::size_t r) const {
    std::int64_t sum = 0;
    for (int c = 0; c <= s; ++c) sum += counts[r + std::size_t(c)];
    return sum;
  }

  void validate() const {
    if (counts.size() != n_rows() * std::size_t(s + 1))
      throw Error("follower kernel: count table size mismatch");
    std::int64_t sum = 0;
    for (std::int64_t c : counts) {
      if (c < 0) throw Error("follower kernel: negative count");
      sum += c;
    }
    if (sum != total) throw Error("follower kernel: total inconsistent");
  }
};

struct FollowerContext {
  State i = 0;
  std::int64_t u = 0;
  int v = 1;
  Sign leader_sign = Sign::zero;
};

inline FollowerKernel estimate_follower(const StatePath& leader, int leader_s,
                                        const StatePath& follower, int follower_s,
                                        const IndexPath& follower_index, const IndexBins& bins,
                                        std::int64_t t_max,
                                        FollowerKernel::IndexAt index_at =
                                            FollowerKernel::IndexAt::transition,
                                        int min_count = 5) {
  if (leader.minutes() != follower.minutes())
    throw GridMismatch("follower estimate: leader has " + std::to_string(leader.minutes()) +
                       " minutes, follower " + std::to_string(follower.minutes()));
  FollowerKernel fk;
  fk.s = follower_s;
  fk.levels = bins.levels();
  fk.t_max = t_max;
  fk.index_bins = bins;
  fk.min_count = min_count;
  fk.index_at = index_at;
  fk.counts.assign(fk.n_rows() * std::size_t(follower_s + 1), 0);

  std::size_t n = 0;  // follower transition index at t-1
  for (std::int64_t t = 1; t < follower.minutes(); ++t) {
    while (n + 1 < follower.transitions.size() && follower.transitions[n + 1].time <= t - 1) ++n;
    const State i = follower.states[std::size_t(t - 1)];
    const State j = follower.states[std::size_t(t)];
    if (i < 1 || i > follower_s || j < 1 || j > follower_s)
      throw Error("follower estimate: state label outside 1.." + std::to_string(follower_s));
    const std::int64_t u =
        std::min<std::int64_t>(t - 1 - follower.transitions[n].time, t_max - 1);
    const double idx_val = index_at == FollowerKernel::IndexAt::transition
                               ? follower_index.at_transitions[n]
                               : follower_index.at_minutes[std::size_t(t - 1)];
    const int v = bins.level_of(idx_val);
    const Sign sg = state_sign(leader.states[std::size_t(t)], leader_s);
    const std::size_t r = fk.row(i, u, v, sg);
    if (j == i)
      ++fk.counts[r];  // stay slot
    else
      ++fk.counts[r + std::size_t(j)];
    ++fk.total;
  }
  if (fk.total == 0) throw InsufficientData("follower estimate: no observations");
  return fk;
}

// ---------------------------------------------------------------------------
// Tiered fallback. Tier ids: 0 exact context, 1 sign pooled (follower only),
// 2 index level pooled, 3 backward time pooled, 4 global.

struct QueryResult {
  OneStepDist dist;
  int tier = 0;
};

namespace detail {

inline OneStepDist dist_from_counts(const std::vector<std::int64_t>& slots) {
  std::int64_t total = 0;
  for (std::int64_t c : slots) total += c;
  OneStepDist d;
  d.change_probs.assign(slots.size() - 1, 0.0);
  d.stay_prob = double(slots[0]) / double(total);
  for (std::size_t j = 1; j < slots.size(); ++j)
    d.change_probs[j - 1] = double(slots[j]) / double(total);
  return d;
}

}  // namespace detail

inline QueryResult query_with_fallback(const FollowerKernel& fk, const FollowerContext& ctx) {
  if (fk.total == 0) throw InsufficientData("follower query: empty model");
  const State i = ctx.i;
  const std::int64_t u = std::min<std::int64_t>(ctx.u, fk.t_max - 1);
  std::vector<std::int64_t> slots(std::size_t(fk.s + 1), 0);
  const auto add_row = [&](std::size_t r) {
    for (int c = 0; c <= fk.s; ++c) slots[std::size_t(c)] += fk.counts[r + std::size_t(c)];
  };
  const auto total = [&] {
    std::int64_t sum = 0;
    for (std::int64_t c : slots) sum += c;
    return sum;
  };

  // tier 0: exact (i, u, v, sign)
  add_row(fk.row(i, u, ctx.v, ctx.leader_sign));
  if (total() >= fk.min_count) return {detail::dist_from_counts(slots), 0};

  // tier 1: pool the leader sign
  std::fill(slots.begin(), slots.end(), 0);
  for (int sg = -1; sg <= 1; ++sg) add_row(fk.row(i, u, ctx.v, Sign(sg)));
  if (total() >= fk.min_count) return {detail::dist_from_counts(slots), 1};

  // tier 2: pool the index level as well
  std::fill(slots.begin(), slots.end(), 0);
  for (int v = 1; v <= fk.levels; ++v)
    for (int sg = -1; sg <= 1; ++sg) add_row(fk.row(i, u, v, Sign(sg)));
  if (total() >= fk.min_count) return {detail::dist_from_counts(slots), 2};

  // tier 3: pool the backward time: every observed minute spent in state i
  std::fill(slots.begin(), slots.end(), 0);
  for (std::int64_t uu = 0; uu < fk.t_max; ++uu)
    for (int v = 1; v <= fk.levels; ++v)
      for (int sg = -1; sg <= 1; ++sg) add_row(fk.row(i, uu, v, Sign(sg)));
  if (total() >= fk.min_count) return {detail::dist_from_counts(slots), 3};

  // tier 4: global one-step law; jumps into i are re-pointed away from it
  std::fill(slots.begin(), slots.end(), 0);
  for (std::size_t r = 0; r < fk.n_rows(); ++r)
    for (int c = 0; c <= fk.s; ++c) slots[std::size_t(c)] += fk.counts[r * std::size_t(fk.s + 1) + std::size_t(c)];
  const std::int64_t into_i = slots[std::size_t(i)];
  slots[std::size_t(i)] = 0;
  std::int64_t change_total = 0;
  for (int j = 1; j <= fk.s; ++j) change_total += slots[std::size_t(j)];
  OneStepDist d;
  d.change_probs.assign(std::size_t(fk.s), 0.0);
  const double grand = double(total() + into_i);
  d.stay_prob = double(slots[0]) / grand;
  const double change_mass = double(change_total + into_i);
  if (change_total > 0)
    for (int j = 1; j <= fk.s; ++j)
      d.change_probs[std::size_t(j - 1)] =
          (double(slots[std::size_t(j)]) / double(change_total)) * (change_mass / grand);
  else
    d.stay_prob = 1.0;
  return {d, 4};
}

// Resolved (j, t) law for a kernel context. Tier 0 uses the exact (i, v)
// row, tier 2 pools index levels by their context counts, tier 3 replaces
// the sojourn law with the pooled-hazard geometric (used when even the
// pooled row cannot support the queried backward time), tier 4 falls back
// to the whole kernel.
struct ResolvedRow {
  KernelRow row;
  int tier = 0;
};

namespace detail {

inline KernelRow pooled_row(const IndexedKernel& k, State i, std::int64_t* pooled_count) {
  KernelRow row;
  row.s = k.s;
  row.t_max = k.t_max;
  row.q.assign(std::size_t(k.s) * std::size_t(k.t_max), 0.0);
  std::int64_t total = 0;
  for (int v = 1; v <= k.levels; ++v) total += k.context_count(i, v) == std::numeric_limits<std::int64_t>::max()
                                                    ? 1
                                                    : k.context_count(i, v);
  if (k.context_counts.empty()) {
    // hand-built kernel: plain average over levels
    for (int v = 1; v <= k.levels; ++v)
      for (State j = 1; j <= k.s; ++j)
        for (std::int64_t t = 1; t <= k.t_max; ++t)
          row.q[std::size_t(j - 1) * std::size_t(k.t_max) + std::size_t(t - 1)] +=
              k.increment(i, v, j, t) / double(k.levels);
    *pooled_count = std::numeric_limits<std::int64_t>::max();
  } else {
    for (int v = 1; v <= k.levels; ++v) {
      const std::int64_t c = k.context_count(i, v);
      if (c == 0) continue;
      for (State j = 1; j <= k.s; ++j)
        for (std::int64_t t = 1; t <= k.t_max; ++t)
          row.q[std::size_t(j - 1) * std::size_t(k.t_max) + std::size_t(t - 1)] +=
              double(c) / double(total) * k.increment(i, v, j, t);
    }
    *pooled_count = total;
  }
  row.build_survival();
  return row;
}

}  // namespace detail

inline ResolvedRow resolve_kernel_row(const IndexedKernel& k, State i, int v) {
  if (i < 1 || i > k.s) throw Error("resolve: state out of range");
  if (v < 1 || v > k.levels) throw Error("resolve: index level out of range");

  if (k.context_count(i, v) >= k.min_count) {
    KernelRow row = KernelRow::from_kernel(k, i, v);
    if (row.mass() > 0.0) return {std::move(row), 0};
  }

  std::int64_t pooled_count = 0;
  KernelRow pooled = detail::pooled_row(k, i, &pooled_count);
  if (pooled_count >= k.min_count && pooled.mass() > 0.0) return {std::move(pooled), 2};

  // tier 4: global law over every context; jumps into i are re-pointed
  KernelRow global;
  global.s = k.s;
  global.t_max = k.t_max;
  global.q.assign(std::size_t(k.s) * std::size_t(k.t_max), 0.0);
  double mass = 0.0;
  for (State ii = 1; ii <= k.s; ++ii) {
    std::int64_t cnt_total = 0;
    for (int vv = 1; vv <= k.levels; ++vv) {
      std::int64_t c = k.context_count(ii, vv);
      if (c == std::numeric_limits<std::int64_t>::max()) c = 1;
      cnt_total += c;
    }
    if (cnt_total == 0) continue;
    for (int vv = 1; vv <= k.levels; ++vv) {
      std::int64_t c = k.context_count(ii, vv);
      if (c == std::numeric_limits<std::int64_t>::max()) c = 1;
      if (c == 0) continue;
      for (State j = 1; j <= k.s; ++j) {
        if (j == i) continue;  // cannot jump to the queried state itself
        for (std::int64_t t = 1; t <= k.t_max; ++t) {
          const double w = double(c) * k.increment(ii, vv, j, t);
          global.q[std::size_t(j - 1) * std::size_t(k.t_max) + std::size_t(t - 1)] += w;
          mass += w;
        }
      }
    }
  }
  if (!(mass > 0.0)) throw InsufficientData("resolve: kernel has no usable transitions");
  for (double& x : global.q) x /= mass;
  global.build_survival();
  return {std::move(global), 4};
}

// Kernel-flavoured query: resolve the row, then read the one-step law at u.
// If the resolved row cannot support u, fall through to the pooled-hazard
// geometric (tier 3) built from the row's own mean sojourn.
inline QueryResult query_with_fallback(const IndexedKernel& k, const BackwardState& b) {
  ResolvedRow rr = resolve_kernel_row(k, b.i, b.v);
  if (b.u >= 0 && b.u < k.t_max && rr.row.surv[std::size_t(b.u)] > 0.0)
    return {rr.row.one_step(b.i, b.u), rr.tier};

  double mean_sojourn = 0.0;
  std::vector<double> p_next(std::size_t(k.s), 0.0);
  for (State j = 1; j <= k.s; ++j)
    for (std::int64_t t = 1; t <= k.t_max; ++t) {
      mean_sojourn += double(t) * rr.row.q_at(j, t);
      p_next[std::size_t(j - 1)] += rr.row.q_at(j, t);
    }
  const double hazard = mean_sojourn > 0.0 ? std::min(1.0, 1.0 / mean_sojourn) : 1.0;
  OneStepDist d;
  d.change_probs.assign(std::size_t(k.s), 0.0);
  d.stay_prob = 1.0 - hazard;
  for (State j = 1; j <= k.s; ++j)
    d.change_probs[std::size_t(j - 1)] = hazard * p_next[std::size_t(j - 1)];
  return {d, 3};
}

}  // namespace wismc
