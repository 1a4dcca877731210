// wismc: estimate weighted-indexed semi-Markov models from tick data,
// simulate synthetic return series, and compare their statistics.
//
// Subcommands: ingest, estimate, simulate, analyze, compare.
// All options can come from a JSON config file; flags override it.
// Exit codes: 0 ok, 1 data/validation error, 2 I/O or config error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wismc/wismc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wismc;

namespace {

struct SymbolConfig {
  std::string name;
  std::string ticks;
};

struct RunConfig {
  std::vector<SymbolConfig> symbols;
  int states = 5;
  int index_levels = 5;
  std::vector<double> lambda_grid;  // single entry unless a grid is given
  double truncation_eps = 1e-12;
  std::int64_t t_max = 1000;
  std::int64_t interval_seconds = 60;
  double center_mass = 0.25;
  int min_count = 5;
  std::int64_t horizon = 0;  // 0: use the estimation sample length
  std::uint64_t seed = 1;
  std::int64_t warmup = -1;
  std::string leader, follower;
  std::string follower_index_at = "transition";
  int max_lag = 100;
  std::string out_dir = "out";
  int jobs = 1;
  bool force = false;

  void validate() const {
    if (symbols.empty()) throw Error("config: no symbols");
    if (states < 3 || states % 2 == 0) throw Error("config: states must be odd and >= 3");
    if (index_levels < 1) throw Error("config: index_levels must be >= 1");
    if (lambda_grid.empty()) throw Error("config: no lambda");
    for (double l : lambda_grid)
      if (!(l > 0.0 && l <= 1.0)) throw Error("config: lambda must be in (0,1]");
    if (t_max < 1) throw Error("config: t_max must be >= 1");
    if (!leader.empty() && leader == follower)
      throw Error("config: leader and follower must differ");
    for (const std::string& role : {leader, follower}) {
      if (role.empty()) continue;
      const bool known = std::any_of(symbols.begin(), symbols.end(),
                                     [&](const SymbolConfig& s) { return s.name == role; });
      if (!known) throw Error("config: unknown symbol '" + role + "'");
    }
    if (follower_index_at != "transition" && follower_index_at != "minute")
      throw Error("config: follower_index_at must be 'transition' or 'minute'");
  }

  // hash of everything that shapes the estimated model, so later commands
  // can refuse to mix artifacts from different configurations
  std::uint64_t hash() const {
    json j;
    j["states"] = states;
    j["index_levels"] = index_levels;
    j["lambda_grid"] = lambda_grid;
    j["truncation_eps"] = truncation_eps;
    j["t_max"] = t_max;
    j["interval_seconds"] = interval_seconds;
    j["center_mass"] = center_mass;
    j["min_count"] = min_count;
    j["leader"] = leader;
    j["follower"] = follower;
    j["follower_index_at"] = follower_index_at;
    std::vector<std::string> names;
    for (const auto& s : symbols) names.push_back(s.name);
    std::sort(names.begin(), names.end());
    j["symbols"] = names;
    return fnv1a64(j.dump());
  }
};

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  RunConfig cfg;
  try {
    for (const auto& s : j.at("symbols"))
      cfg.symbols.push_back({s.at("name").get<std::string>(), s.value("ticks", "")});
    cfg.states = j.value("states", cfg.states);
    cfg.index_levels = j.value("index_levels", cfg.index_levels);
    if (j.contains("lambda_grid"))
      cfg.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    else
      cfg.lambda_grid = {j.value("lambda", 0.97)};
    cfg.truncation_eps = j.value("truncation_eps", cfg.truncation_eps);
    cfg.t_max = j.value("t_max", cfg.t_max);
    cfg.interval_seconds = j.value("interval_seconds", cfg.interval_seconds);
    cfg.center_mass = j.value("center_mass", cfg.center_mass);
    cfg.min_count = j.value("min_count", cfg.min_count);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.warmup = j.value("warmup", cfg.warmup);
    cfg.leader = j.value("leader", cfg.leader);
    cfg.follower = j.value("follower", cfg.follower);
    cfg.follower_index_at = j.value("follower_index_at", cfg.follower_index_at);
    cfg.max_lag = j.value("max_lag", cfg.max_lag);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  return cfg;
}

fs::path grid_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "grid"; }
fs::path models_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "models"; }
fs::path synth_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "synth"; }
fs::path reports_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "reports"; }

fs::path returns_path(const RunConfig& cfg, const std::string& sym) {
  return grid_dir(cfg) / (sym + ".returns.csv");
}
fs::path kernel_path(const RunConfig& cfg, const std::string& sym) {
  return models_dir(cfg) / (sym + ".kernel.wismc");
}
fs::path follower_path(const RunConfig& cfg) {
  return models_dir(cfg) / (cfg.leader + "_" + cfg.follower + ".follower.wismc");
}
fs::path synth_path(const RunConfig& cfg, const std::string& sym) {
  return synth_dir(cfg) / (sym + ".synth.csv");
}

std::uint64_t symbol_seed(const RunConfig& cfg, const std::string& sym) {
  // the leader/follower pair shares the master seed so the bivariate run
  // reproduces the leader of a univariate run with the same seed
  if (sym == cfg.leader || sym == cfg.follower) return cfg.seed;
  return cfg.seed ^ fnv1a64(sym);
}

std::int64_t resolved_warmup(const RunConfig& cfg, double lambda) {
  if (cfg.warmup >= 0) return cfg.warmup;
  if (lambda >= 1.0) return 0;
  return std::min<std::int64_t>(std::int64_t(std::ceil(10.0 / (1.0 - lambda))), 200000);
}

void check_hash(const RunConfig& cfg, std::uint64_t artifact_hash, const std::string& what) {
  if (artifact_hash == cfg.hash() || cfg.force) return;
  throw Error(what + " was built from a different configuration (hash mismatch); "
                     "re-run estimate or pass --force");
}

// ---------------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg) {
  fs::create_directories(grid_dir(cfg));
  for (const auto& sym : cfg.symbols) {
    if (sym.ticks.empty()) throw Error("config: symbol '" + sym.name + "' has no ticks path");
    const TickSeries ticks = read_ticks_csv(sym.ticks, sym.name);
    const PriceSeries prices = resample_to_grid(ticks, cfg.interval_seconds);
    const ReturnSeries returns = compute_returns(prices);
    write_prices_csv((grid_dir(cfg) / (sym.name + ".prices.csv")).string(), prices);
    write_returns_csv(returns_path(cfg, sym.name).string(), returns);
    std::printf("%s: %zu ticks -> %zu slots, %zu returns\n", sym.name.c_str(),
                ticks.records.size(), prices.prices.size(), returns.values.size());
  }
  return 0;
}

struct EstimationProduct {
  std::string log;
  KernelArtifact artifact;
  StatePath path;
  IndexPath index;
  std::string lambda_report;  // csv rows when a grid was searched
};

EstimationProduct estimate_symbol(const RunConfig& cfg, const std::string& sym) {
  EstimationProduct product;
  const ReturnSeries returns = read_returns_csv(returns_path(cfg, sym).string());
  const BinSpec bins = fit_return_bins(returns, cfg.states, cfg.center_mass);
  std::size_t clamped = 0;
  const StatePath path = discretize(returns, bins, &clamped);

  double best_lambda = cfg.lambda_grid.front();
  double best_distance = std::numeric_limits<double>::infinity();
  const std::optional<AcfReport> real_acf =
      cfg.lambda_grid.size() > 1 ? std::optional<AcfReport>(acf_squared(returns, cfg.max_lag))
                                 : std::nullopt;
  char line[320];
  for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
    const double lambda = cfg.lambda_grid[li];
    const IndexSpec spec = make_index_spec(bins, lambda, cfg.truncation_eps);
    const IndexPath idx = compute_index_path(path, spec);
    std::vector<double> at_tr = idx.at_transitions;
    const IndexBins index_bins = fit_index_bins(at_tr, cfg.index_levels);
    const IndexedKernel kernel =
        estimate_kernel(path, cfg.states, idx, index_bins, cfg.t_max, cfg.min_count);

    KernelArtifact artifact;
    artifact.kernel = kernel;
    artifact.index_spec = spec;
    artifact.return_bins = bins;
    artifact.meta.config_hash = cfg.hash();
    artifact.meta.sample_minutes = path.minutes();
    artifact.meta.censored = 1;

    if (cfg.lambda_grid.size() == 1) {
      product.artifact = artifact;
      product.index = idx;
      break;
    }

    // grid search: L2 distance between real and synthetic squared-return
    // autocorrelation over lags 1..max_lag
    SimConfig sim_cfg;
    sim_cfg.horizon = path.minutes();
    sim_cfg.seed = symbol_seed(cfg, sym) + li;
    sim_cfg.warmup = cfg.warmup;
    const SimOutput sim = simulate_stepwise(kernel, spec, sim_cfg);
    const ReturnSeries synth = paths_to_returns(sim.path, bins);
    const AcfReport synth_acf = acf_squared(synth, cfg.max_lag);
    double l2 = 0.0;
    for (int tau = 1; tau <= cfg.max_lag; ++tau) {
      const double d = real_acf->values[std::size_t(tau)] - synth_acf.values[std::size_t(tau)];
      l2 += d * d;
    }
    l2 = std::sqrt(l2);
    std::snprintf(line, sizeof line, "%s,%.6g,%.8f\n", sym.c_str(), lambda, l2);
    product.lambda_report += line;
    char name[128];
    std::snprintf(name, sizeof name, "%s.lambda%.6g.kernel.wismc", sym.c_str(), lambda);
    save_kernel((models_dir(cfg) / name).string(), artifact);
    if (l2 < best_distance) {
      best_distance = l2;
      best_lambda = lambda;
      product.artifact = artifact;
      product.index = idx;
    }
  }

  product.path = path;

  // tier-0 coverage of the estimated contexts
  const IndexedKernel& kernel = product.artifact.kernel;
  int contexts = 0, covered = 0;
  for (State i = 1; i <= kernel.s; ++i)
    for (int v = 1; v <= kernel.levels; ++v) {
      ++contexts;
      if (kernel.context_count(i, v) >= kernel.min_count) ++covered;
    }
  std::snprintf(line, sizeof line,
                "%s: %lld minutes, %zu transitions, %zu clamped returns, lambda %.6g, "
                "%d/%d contexts at tier 0\n",
                sym.c_str(), (long long)path.minutes(), path.transitions.size(), clamped,
                best_lambda, covered, contexts);
  product.log += line;
  return product;
}

int cmd_estimate(const RunConfig& cfg) {
  fs::create_directories(models_dir(cfg));

  std::vector<std::string> names;
  for (const auto& s : cfg.symbols) names.push_back(s.name);

  std::vector<EstimationProduct> products(names.size());
  const int jobs = std::max(1, cfg.jobs);
  for (std::size_t base = 0; base < names.size(); base += std::size_t(jobs)) {
    std::vector<std::future<EstimationProduct>> batch;
    const std::size_t end = std::min(names.size(), base + std::size_t(jobs));
    for (std::size_t k = base; k < end; ++k)
      batch.push_back(std::async(std::launch::async, estimate_symbol, std::cref(cfg),
                                 names[k]));
    for (std::size_t k = base; k < end; ++k) products[k] = batch[k - base].get();
  }

  std::string lambda_rows;
  for (std::size_t k = 0; k < names.size(); ++k) {
    save_kernel(kernel_path(cfg, names[k]).string(), products[k].artifact);
    {
      std::ofstream bins_out(models_dir(cfg) / (names[k] + ".bins.json"));
      json bj{{"s", products[k].artifact.return_bins.states()},
              {"boundaries", products[k].artifact.return_bins.boundaries},
              {"representatives", products[k].artifact.return_bins.representatives}};
      bins_out << bj.dump(2) << "\n";
    }
    std::fputs(products[k].log.c_str(), stdout);
    lambda_rows += products[k].lambda_report;
  }
  if (!lambda_rows.empty()) {
    std::ofstream sel(models_dir(cfg) / "lambda_selection.csv");
    sel << "symbol,lambda,acf_l2\n" << lambda_rows;
    std::printf("lambda selection written to %s\n",
                (models_dir(cfg) / "lambda_selection.csv").string().c_str());
  }

  if (!cfg.leader.empty() && !cfg.follower.empty()) {
    const auto find = [&](const std::string& n) {
      return std::size_t(std::find(names.begin(), names.end(), n) - names.begin());
    };
    const EstimationProduct& lead = products[find(cfg.leader)];
    const EstimationProduct& foll = products[find(cfg.follower)];
    if (lead.path.minutes() != foll.path.minutes())
      throw GridMismatch("estimate: leader and follower grids differ (" +
                         std::to_string(lead.path.minutes()) + " vs " +
                         std::to_string(foll.path.minutes()) + " minutes); align the tick data");
    FollowerArtifact fa;
    fa.kernel = estimate_follower(
        lead.path, cfg.states, foll.path, cfg.states, foll.index,
        foll.artifact.kernel.index_bins, cfg.t_max,
        cfg.follower_index_at == "minute" ? FollowerKernel::IndexAt::minute
                                          : FollowerKernel::IndexAt::transition,
        cfg.min_count);
    fa.index_spec = foll.artifact.index_spec;
    fa.return_bins = foll.artifact.return_bins;
    fa.meta.config_hash = cfg.hash();
    fa.meta.sample_minutes = foll.path.minutes();
    save_follower(follower_path(cfg).string(), fa);
    std::int64_t populated = 0;
    for (std::size_t r = 0; r < fa.kernel.n_rows(); ++r)
      if (fa.kernel.row_total(r * std::size_t(fa.kernel.s + 1)) > 0) ++populated;
    std::printf("%s->%s follower: %lld observations, %lld populated contexts\n",
                cfg.leader.c_str(), cfg.follower.c_str(), (long long)fa.kernel.total,
                (long long)populated);
  }
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  fs::create_directories(synth_dir(cfg));
  json manifest;
  manifest["generator"] = SplitMix64::name();
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = cfg.hash();
  json per_symbol = json::object();

  const bool bivariate = !cfg.leader.empty() && !cfg.follower.empty();

  // runs on a worker; writes only its own synthetic file
  const auto simulate_one = [&cfg](const std::string& sym) {
    const KernelArtifact artifact = load_kernel(kernel_path(cfg, sym).string());
    check_hash(cfg, artifact.meta.config_hash, "kernel for " + sym);
    SimConfig sim_cfg;
    sim_cfg.horizon = cfg.horizon > 0 ? cfg.horizon : artifact.meta.sample_minutes;
    sim_cfg.seed = symbol_seed(cfg, sym);
    sim_cfg.warmup = cfg.warmup;
    const SimOutput sim = simulate_stepwise(artifact.kernel, artifact.index_spec, sim_cfg);
    const ReturnSeries synth = paths_to_returns(sim.path, artifact.return_bins);
    write_synthetic_csv(synth_path(cfg, sym).string(), sim.path, synth);
    json entry;
    entry["lambda"] = artifact.index_spec.lambda;
    entry["horizon"] = sim_cfg.horizon;
    entry["warmup"] = resolved_warmup(cfg, artifact.index_spec.lambda);
    entry["model_hash"] = file_hash(kernel_path(cfg, sym).string());
    entry["tier_use"] = sim.tier_use;
    return entry;
  };

  const auto simulate_batch = [&](const std::vector<std::string>& names) {
    const int jobs = std::max(1, cfg.jobs);
    for (std::size_t base = 0; base < names.size(); base += std::size_t(jobs)) {
      std::vector<std::future<json>> batch;
      const std::size_t end = std::min(names.size(), base + std::size_t(jobs));
      for (std::size_t k = base; k < end; ++k)
        batch.push_back(std::async(std::launch::async, simulate_one, names[k]));
      for (std::size_t k = base; k < end; ++k) {
        per_symbol[names[k]] = batch[k - base].get();
        std::printf("%s: simulated %lld minutes\n", names[k].c_str(),
                    per_symbol[names[k]]["horizon"].get<long long>());
      }
    }
  };

  if (bivariate) {
    const KernelArtifact lead = load_kernel(kernel_path(cfg, cfg.leader).string());
    const FollowerArtifact foll = load_follower(follower_path(cfg).string());
    check_hash(cfg, lead.meta.config_hash, "kernel for " + cfg.leader);
    check_hash(cfg, foll.meta.config_hash, "follower model");
    SimConfig sim_cfg;
    sim_cfg.horizon = cfg.horizon > 0 ? cfg.horizon : lead.meta.sample_minutes;
    sim_cfg.seed = cfg.seed;
    sim_cfg.warmup = cfg.warmup;
    const BivariateOutput biv =
        simulate_bivariate(lead.kernel, lead.index_spec, foll.kernel, foll.index_spec, sim_cfg);
    write_synthetic_csv(synth_path(cfg, cfg.leader).string(), biv.paths.leader,
                        paths_to_returns(biv.paths.leader, lead.return_bins));
    write_synthetic_csv(synth_path(cfg, cfg.follower).string(), biv.paths.follower,
                        paths_to_returns(biv.paths.follower, foll.return_bins));
    json entry;
    entry["leader"] = cfg.leader;
    entry["lambda_leader"] = lead.index_spec.lambda;
    entry["lambda_follower"] = foll.index_spec.lambda;
    entry["horizon"] = sim_cfg.horizon;
    entry["warmup"] = resolved_warmup(cfg, lead.index_spec.lambda);
    entry["leader_model_hash"] = file_hash(kernel_path(cfg, cfg.leader).string());
    entry["follower_model_hash"] = file_hash(follower_path(cfg).string());
    entry["leader_tier_use"] = biv.leader_tier_use;
    entry["follower_tier_use"] = biv.follower_tier_use;
    per_symbol[cfg.leader + "_" + cfg.follower] = entry;
    std::printf("%s+%s: simulated %lld bivariate minutes\n", cfg.leader.c_str(),
                cfg.follower.c_str(), (long long)sim_cfg.horizon);
    std::vector<std::string> rest;
    for (const auto& sym : cfg.symbols)
      if (sym.name != cfg.leader && sym.name != cfg.follower) rest.push_back(sym.name);
    simulate_batch(rest);
  } else {
    std::vector<std::string> all;
    for (const auto& sym : cfg.symbols) all.push_back(sym.name);
    simulate_batch(all);
  }

  manifest["series"] = per_symbol;
  std::ofstream mf(synth_dir(cfg) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  return 0;
}

std::vector<std::pair<std::string, ReturnSeries>> load_real(const RunConfig& cfg) {
  std::vector<std::pair<std::string, ReturnSeries>> out;
  for (const auto& sym : cfg.symbols)
    out.emplace_back(sym.name, read_returns_csv(returns_path(cfg, sym.name).string()));
  return out;
}

std::vector<std::pair<std::string, ReturnSeries>> load_synth(const RunConfig& cfg) {
  std::vector<std::pair<std::string, ReturnSeries>> out;
  for (const auto& sym : cfg.symbols)
    out.emplace_back(sym.name, read_synthetic_returns_csv(synth_path(cfg, sym.name).string()));
  return out;
}

int cmd_analyze(const RunConfig& cfg) {
  fs::create_directories(reports_dir(cfg));
  const auto real = load_real(cfg);
  if (real.size() >= 2) {
    const CrossCorrMatrix m = corr_matrix(real);
    std::ofstream csv(reports_dir(cfg) / "crosscorr_real.csv");
    csv << "symbol_a,symbol_b,value\n";
    for (std::size_t r = 1; r < m.symbols.size(); ++r)
      for (std::size_t c = 0; c < r; ++c)
        csv << m.symbols[r] << "," << m.symbols[c] << "," << m.at(r, c) << "\n";
    std::ofstream txt(reports_dir(cfg) / "crosscorr_real.txt");
    txt << render_matrix_table(m);
    std::printf("cross-correlation matrix over %zu symbols written\n", m.symbols.size());
  }
  for (const auto& [name, returns] : real) {
    const AcfReport sq = acf_squared(returns, cfg.max_lag);
    const AcfReport raw = acf_returns(returns, cfg.max_lag);
    std::ofstream acf(reports_dir(cfg) / ("acf_real_" + name + ".csv"));
    acf << "lag,acf_squared,acf_returns\n";
    for (int tau = 0; tau <= cfg.max_lag; ++tau)
      acf << tau << "," << sq.values[std::size_t(tau)] << "," << raw.values[std::size_t(tau)]
          << "\n";
  }
  std::printf("ACF reports for %zu symbols written to %s\n", real.size(),
              reports_dir(cfg).string().c_str());
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  fs::create_directories(reports_dir(cfg));
  const auto real = load_real(cfg);
  const auto synth = load_synth(cfg);

  for (std::size_t k = 0; k < real.size(); ++k) {
    const AcfReport r = acf_squared(real[k].second, cfg.max_lag);
    const AcfReport s = acf_squared(synth[k].second, cfg.max_lag);
    std::ofstream acf(reports_dir(cfg) / ("acf_" + real[k].first + ".csv"));
    acf << "lag,real,synth\n";
    for (int tau = 0; tau <= cfg.max_lag; ++tau)
      acf << tau << "," << r.values[std::size_t(tau)] << "," << s.values[std::size_t(tau)]
          << "\n";
  }

  if (real.size() >= 2) {
    const CrossCorrMatrix mr = corr_matrix(real);
    const CrossCorrMatrix ms = corr_matrix(synth);
    {
      std::ofstream txt(reports_dir(cfg) / "crosscorr_real.txt");
      txt << render_matrix_table(mr);
    }
    {
      std::ofstream txt(reports_dir(cfg) / "crosscorr_synth.txt");
      txt << render_matrix_table(ms);
    }
    const RatioReport ratios = reproduction_ratio(mr, ms);
    std::ofstream csv(reports_dir(cfg) / "ratios.csv");
    csv << ratio_report_csv(ratios);
    if (ratios.median_ratio)
      std::printf("median reproduction ratio: %.2f\n", *ratios.median_ratio);
    else
      std::printf("median reproduction ratio: n/a (all pairs below the noise floor)\n");
  }
  std::printf("comparison reports written to %s\n", reports_dir(cfg).string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted-indexed semi-Markov models of high-frequency returns"};
  app.require_subcommand(1);

  std::string config_path;
  RunConfig overrides;
  bool have_horizon = false, have_seed = false, have_jobs = false, have_out = false,
       have_max_lag = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", overrides.out_dir, "output directory (overrides config)")
        ->each([&](const std::string&) { have_out = true; });
    sub->add_option("--seed", overrides.seed, "random seed (overrides config)")
        ->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--horizon", overrides.horizon, "simulation horizon in minutes")
        ->each([&](const std::string&) { have_horizon = true; });
    sub->add_option("--max-lag", overrides.max_lag, "maximum autocorrelation lag")
        ->each([&](const std::string&) { have_max_lag = true; });
    sub->add_option("--jobs", overrides.jobs, "worker count (or WISMC_JOBS)")
        ->each([&](const std::string&) { have_jobs = true; });
    sub->add_flag("--force", overrides.force, "ignore artifact config-hash mismatches");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "resample tick CSVs to minute returns");
  CLI::App* estimate = app.add_subcommand("estimate", "estimate model artifacts");
  CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic series");
  CLI::App* analyze = app.add_subcommand("analyze", "statistics of the real series");
  CLI::App* compare = app.add_subcommand("compare", "real-vs-synthetic comparison reports");
  for (CLI::App* sub : {ingest, estimate, simulate, analyze, compare}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (have_out) cfg.out_dir = overrides.out_dir;
    if (have_seed) cfg.seed = overrides.seed;
    if (have_horizon) cfg.horizon = overrides.horizon;
    if (have_max_lag) cfg.max_lag = overrides.max_lag;
    cfg.force = overrides.force;
    if (have_jobs)
      cfg.jobs = overrides.jobs;
    else if (const char* env = std::getenv("WISMC_JOBS"))
      cfg.jobs = std::max(1, std::atoi(env));
    cfg.validate();

    if (ingest->parsed()) return cmd_ingest(cfg);
    if (estimate->parsed()) return cmd_estimate(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (compare->parsed()) return cmd_compare(cfg);
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
