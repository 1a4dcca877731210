#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "wismc/estimation.hpp"
#include "wismc/rng.hpp"

namespace wismc {

struct SimConfig {
  std::int64_t horizon = 0;
  std::uint64_t seed = 1;
  State initial_state = 0;  // 0 -> centre state
  double initial_index = std::numeric_limits<double>::quiet_NaN();  // NaN -> spec.u0
  std::int64_t warmup = -1;  // -1 -> 10/(1-lambda), 0 -> none
  std::int64_t reporting_stride = 0;
  std::function<void(std::int64_t, std::int64_t)> on_progress;  // (done, total)

  void validate() const {
    if (horizon < 1) throw Error("sim config: horizon must be >= 1");
  }
};

struct SimOutput {
  StatePath path;
  std::vector<std::int64_t> tier_use = std::vector<std::int64_t>(5, 0);
  // the simulator's own running index at each emitted transition; recorded
  // only when warmup == 0 so it stays aligned with `path`
  std::vector<double> index_at_transitions;
};

namespace detail {

inline std::int64_t resolve_warmup(const SimConfig& cfg, const IndexSpec& spec) {
  if (cfg.warmup >= 0) return cfg.warmup;
  if (spec.lambda >= 1.0) return 0;
  const double w = 10.0 / (1.0 - spec.lambda);
  return std::min<std::int64_t>(std::int64_t(std::ceil(w)), 200000);
}

inline State resolve_initial(const SimConfig& cfg, int s) {
  if (cfg.initial_state == 0) return (s + 1) / 2;
  if (cfg.initial_state < 1 || cfg.initial_state > s)
    throw Error("sim config: initial state out of range");
  return cfg.initial_state;
}

// Cache of fallback-resolved rows, one per (i, v) context.
class RowCache {
 public:
  explicit RowCache(const IndexedKernel& k) : k_(&k), rows_(std::size_t(k.s) * std::size_t(k.levels)) {}

  const ResolvedRow& get(State i, int v) {
    auto& slot = rows_[std::size_t(i - 1) * std::size_t(k_->levels) + std::size_t(v - 1)];
    if (!slot) slot = resolve_kernel_row(*k_, i, v);
    return *slot;
  }

 private:
  const IndexedKernel* k_;
  std::vector<std::optional<ResolvedRow>> rows_;
};

// Minute-stepping univariate engine; also drives the leader inside the
// bivariate simulator so that the leader's draws are identical either way.
class StepwiseEngine {
 public:
  StepwiseEngine(const IndexedKernel& k, const IndexSpec& spec, State initial, double u0)
      : k_(&k), spec_(&spec), cache_(k), state_(initial), v_(k.index_bins.level_of(u0)) {
    states_.push_back(initial);
    index_at_transitions_.push_back(u0);
  }

  void reserve(std::size_t n) { states_.reserve(n); }

  // decide the state of minute t (t = current length of states_)
  void advance(SplitMix64& rng, std::vector<std::int64_t>* tier_use) {
    S_ = spec_->lambda * (S_ + spec_->r2(state_));
    W_ = spec_->lambda * (W_ + 1.0);
    const ResolvedRow& rr = cache_.get(state_, v_);
    if (tier_use) ++(*tier_use)[std::size_t(rr.tier)];
    const OneStepDist d = rr.row.one_step(state_, u_);
    const double x = rng.uniform();
    if (x < d.stay_prob) {
      ++u_;
    } else {
      const std::size_t j =
          sample_discrete(d.change_probs.data(), d.change_probs.size(),
                          x - d.stay_prob);
      state_ = State(j) + 1;
      u_ = 0;
      v_ = k_->index_bins.level_of(S_ / W_);
      index_at_transitions_.push_back(S_ / W_);
    }
    states_.push_back(state_);
  }

  State state() const { return state_; }
  const std::vector<State>& states() const { return states_; }
  std::vector<State>&& take_states() { return std::move(states_); }
  std::vector<double>&& take_index_at_transitions() { return std::move(index_at_transitions_); }

 private:
  const IndexedKernel* k_;
  const IndexSpec* spec_;
  RowCache cache_;
  State state_;
  std::int64_t u_ = 0;
  int v_;
  double S_ = 0.0, W_ = 0.0;
  std::vector<State> states_;
  std::vector<double> index_at_transitions_;
};

inline StatePath strip_warmup(std::vector<State> states, std::int64_t warmup) {
  if (warmup > 0)
    states.erase(states.begin(), states.begin() + std::min<std::size_t>(std::size_t(warmup), states.size() - 1));
  return StatePath::from_states(std::move(states));
}

inline void report_progress(const SimConfig& cfg, std::int64_t done, std::int64_t total) {
  if (cfg.on_progress && cfg.reporting_stride > 0 && done % cfg.reporting_stride == 0)
    cfg.on_progress(done, total);
}

}  // namespace detail

// Sojourn-by-sojourn sampling from the resolved (j, t) law; the index is
// advanced minute by minute inside each sojourn.
inline SimOutput simulate_event(const IndexedKernel& k, const IndexSpec& spec,
                                const SimConfig& cfg) {
  cfg.validate();
  spec.validate();
  SplitMix64 rng = SplitMix64::stream(cfg.seed, 0);
  const std::int64_t warmup = detail::resolve_warmup(cfg, spec);
  const std::int64_t total = warmup + cfg.horizon;
  const double u0 = std::isnan(cfg.initial_index) ? spec.u0 : cfg.initial_index;

  detail::RowCache cache(k);
  SimOutput out;
  State state = detail::resolve_initial(cfg, k.s);
  int v = k.index_bins.level_of(u0);
  double S = 0.0, W = 0.0;
  std::vector<State> states;
  states.reserve(std::size_t(total));
  std::vector<double> idx_at_tr;
  idx_at_tr.push_back(u0);

  std::int64_t t = 0;
  while (t < total) {
    const ResolvedRow& rr = cache.get(state, v);
    ++out.tier_use[std::size_t(rr.tier)];
    const double x = rng.uniform();
    const std::size_t cell = sample_discrete(rr.row.q.data(), rr.row.q.size(), x);
    const State j = State(cell / std::size_t(k.t_max)) + 1;
    const std::int64_t tau = std::int64_t(cell % std::size_t(k.t_max)) + 1;
    for (std::int64_t m = 0; m < tau && t < total; ++m, ++t) {
      states.push_back(state);
      S = spec.lambda * (S + spec.r2(state));
      W = spec.lambda * (W + 1.0);
    }
    state = j;
    v = k.index_bins.level_of(S / W);
    if (t < total) idx_at_tr.push_back(S / W);
    detail::report_progress(cfg, t, total);
  }

  out.path = detail::strip_warmup(std::move(states), warmup);
  if (warmup == 0) out.index_at_transitions = std::move(idx_at_tr);
  return out;
}

// Minute-by-minute sampling from the one-step law; law-equivalent to
// simulate_event.
inline SimOutput simulate_stepwise(const IndexedKernel& k, const IndexSpec& spec,
                                   const SimConfig& cfg) {
  cfg.validate();
  spec.validate();
  SplitMix64 rng = SplitMix64::stream(cfg.seed, 0);
  const std::int64_t warmup = detail::resolve_warmup(cfg, spec);
  const std::int64_t total = warmup + cfg.horizon;
  const double u0 = std::isnan(cfg.initial_index) ? spec.u0 : cfg.initial_index;

  SimOutput out;
  detail::StepwiseEngine engine(k, spec, detail::resolve_initial(cfg, k.s), u0);
  engine.reserve(std::size_t(total));
  for (std::int64_t t = 1; t < total; ++t) {
    engine.advance(rng, &out.tier_use);
    detail::report_progress(cfg, t, total);
  }
  std::vector<double> idx_at_tr = engine.take_index_at_transitions();
  out.path = detail::strip_warmup(engine.take_states(), warmup);
  if (warmup == 0) out.index_at_transitions = std::move(idx_at_tr);
  return out;
}

struct BivariatePath {
  StatePath leader;
  StatePath follower;
};

struct BivariateOutput {
  BivariatePath paths;
  std::vector<std::int64_t> leader_tier_use = std::vector<std::int64_t>(5, 0);
  std::vector<std::int64_t> follower_tier_use = std::vector<std::int64_t>(5, 0);
};

// Leader advances by its own one-step law on stream 0; the follower reads
// the sign of the leader's new state and samples its own move on stream 1.
inline BivariateOutput simulate_bivariate(const IndexedKernel& leader_kernel,
                                          const IndexSpec& leader_spec,
                                          const FollowerKernel& follower_kernel,
                                          const IndexSpec& follower_spec, const SimConfig& cfg) {
  cfg.validate();
  leader_spec.validate();
  follower_spec.validate();
  if (follower_kernel.total == 0)
    throw InsufficientData("bivariate: follower kernel is empty");
  SplitMix64 rng_leader = SplitMix64::stream(cfg.seed, 0);
  SplitMix64 rng_follower = SplitMix64::stream(cfg.seed, 1);
  const std::int64_t warmup = detail::resolve_warmup(cfg, leader_spec);
  const std::int64_t total = warmup + cfg.horizon;
  const double u0_leader =
      std::isnan(cfg.initial_index) ? leader_spec.u0 : cfg.initial_index;

  BivariateOutput out;
  detail::StepwiseEngine leader(leader_kernel, leader_spec,
                                detail::resolve_initial(cfg, leader_kernel.s), u0_leader);
  leader.reserve(std::size_t(total));

  const bool minute_mode = follower_kernel.index_at == FollowerKernel::IndexAt::minute;
  State f_state = (follower_kernel.s + 1) / 2;
  std::int64_t f_u = 0;
  double f_S = 0.0, f_W = 0.0;
  int f_v = follower_kernel.index_bins.level_of(follower_spec.u0);
  std::vector<State> f_states;
  f_states.reserve(std::size_t(total));
  f_states.push_back(f_state);

  for (std::int64_t t = 1; t < total; ++t) {
    leader.advance(rng_leader, &out.leader_tier_use);
    const Sign sg = state_sign(leader.states().back(), leader_kernel.s);

    const int v_ctx = minute_mode && f_W > 0.0
                          ? follower_kernel.index_bins.level_of(f_S / f_W)
                          : (minute_mode ? follower_kernel.index_bins.level_of(follower_spec.u0)
                                         : f_v);
    f_S = follower_spec.lambda * (f_S + follower_spec.r2(f_state));
    f_W = follower_spec.lambda * (f_W + 1.0);

    const QueryResult q = query_with_fallback(
        follower_kernel,
        FollowerContext{f_state, std::min<std::int64_t>(f_u, follower_kernel.t_max - 1), v_ctx, sg});
    ++out.follower_tier_use[std::size_t(q.tier)];
    const double x = rng_follower.uniform();
    if (x < q.dist.stay_prob) {
      ++f_u;
    } else {
      const std::size_t j = sample_discrete(q.dist.change_probs.data(),
                                            q.dist.change_probs.size(), x - q.dist.stay_prob);
      f_state = State(j) + 1;
      f_u = 0;
      f_v = follower_kernel.index_bins.level_of(f_S / f_W);
    }
    f_states.push_back(f_state);
    detail::report_progress(cfg, t, total);
  }

  out.paths.leader = detail::strip_warmup(leader.take_states(), warmup);
  out.paths.follower = detail::strip_warmup(std::move(f_states), warmup);
  return out;
}

// Minute t emits the representative return of its state.
inline ReturnSeries paths_to_returns(const StatePath& path, const BinSpec& bins) {
  ReturnSeries out;
  out.values.resize(path.states.size());
  for (std::size_t t = 0; t < path.states.size(); ++t)
    out.values[t] = bins.representative(path.states[t]);
  return out;
}

}  // namespace wismc
