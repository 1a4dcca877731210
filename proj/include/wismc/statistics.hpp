#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "wismc/errors.hpp"
#include "wismc/market_data.hpp"

namespace wismc {

struct AcfReport {
  std::vector<int> lags;
  std::vector<double> values;
  std::size_t n_obs = 0;
};

namespace detail {

// shared-mean sample autocorrelation of x (biased covariance normaliser,
// so lag 0 is exactly 1 and everything stays in [-1, 1])
inline AcfReport acf_of(const std::vector<double>& x, int max_lag, const char* what) {
  if (max_lag < 0) throw Error("acf: max_lag must be >= 0");
  if (x.size() <= std::size_t(max_lag))
    throw TooShort(std::string("acf: series of length ") + std::to_string(x.size()) +
                   " cannot support lag " + std::to_string(max_lag));
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  if (!(var > 0.0)) throw DegenerateVariance(std::string(what) + ": zero variance");
  AcfReport report;
  report.n_obs = x.size();
  report.lags.resize(std::size_t(max_lag) + 1);
  report.values.resize(std::size_t(max_lag) + 1);
  for (int tau = 0; tau <= max_lag; ++tau) {
    double cov = 0.0;
    for (std::size_t t = 0; t + std::size_t(tau) < x.size(); ++t)
      cov += (x[t] - mean) * (x[t + std::size_t(tau)] - mean);
    report.lags[std::size_t(tau)] = tau;
    report.values[std::size_t(tau)] = cov / var;
  }
  return report;
}

}  // namespace detail

inline AcfReport acf_squared(const ReturnSeries& returns, int max_lag) {
  std::vector<double> sq(returns.values.size());
  for (std::size_t t = 0; t < sq.size(); ++t) sq[t] = returns.values[t] * returns.values[t];
  return detail::acf_of(sq, max_lag, "acf of squared returns");
}

inline AcfReport acf_returns(const ReturnSeries& returns, int max_lag) {
  return detail::acf_of(returns.values, max_lag, "acf of returns");
}

inline double cross_correlation(const ReturnSeries& a, const ReturnSeries& b) {
  if (a.values.size() != b.values.size())
    throw GridMismatch("cross correlation: lengths " + std::to_string(a.values.size()) + " vs " +
                       std::to_string(b.values.size()));
  if (a.values.empty()) throw EmptySeries("cross correlation: empty series");
  const std::size_t n = a.values.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    ma += a.values[t];
    mb += b.values[t];
  }
  ma /= double(n);
  mb /= double(n);
  double va = 0.0, vb = 0.0, cov = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double da = a.values[t] - ma;
    const double db = b.values[t] - mb;
    va += da * da;
    vb += db * db;
    cov += da * db;
  }
  if (!(va > 0.0) || !(vb > 0.0)) throw DegenerateVariance("cross correlation: zero variance");
  return cov / std::sqrt(va * vb);
}

// Pairwise correlations stored as the strict lower triangle, row-major:
// (1,0), (2,0), (2,1), (3,0), ...
struct CrossCorrMatrix {
  std::vector<std::string> symbols;
  std::vector<double> values;

  std::size_t pair_count() const { return symbols.size() * (symbols.size() - 1) / 2; }

  double at(std::size_t a, std::size_t b) const {
    if (a == b) return 1.0;
    const std::size_t r = std::max(a, b), c = std::min(a, b);
    return values[r * (r - 1) / 2 + c];
  }
};

inline CrossCorrMatrix corr_matrix(const std::vector<std::pair<std::string, ReturnSeries>>& series) {
  if (series.size() < 2) throw Error("corr matrix: need at least 2 series");
  CrossCorrMatrix m;
  for (const auto& s : series) m.symbols.push_back(s.first);
  m.values.reserve(series.size() * (series.size() - 1) / 2);
  for (std::size_t r = 1; r < series.size(); ++r)
    for (std::size_t c = 0; c < r; ++c) {
      try {
        m.values.push_back(cross_correlation(series[r].second, series[c].second));
      } catch (const Error& e) {
        throw Error("corr matrix: pair (" + series[r].first + "," + series[c].first +
                    "): " + e.what());
      }
    }
  return m;
}

// Per-pair synthetic/real ratios. Pairs whose real correlation sits below
// the noise floor are reported but excluded from the median.
struct RatioReport {
  struct Row {
    std::string a, b;
    double real = 0.0, synth = 0.0, ratio = 0.0;
    bool excluded = false;
  };
  std::vector<Row> rows;
  double noise_floor = 0.02;
  std::optional<double> median_ratio;
};

inline RatioReport reproduction_ratio(const CrossCorrMatrix& real, const CrossCorrMatrix& synth,
                                      double noise_floor = 0.02) {
  if (real.symbols.size() != synth.symbols.size())
    throw SymbolMismatch("ratio report: symbol counts differ");
  std::vector<std::size_t> map(real.symbols.size());
  for (std::size_t k = 0; k < real.symbols.size(); ++k) {
    const auto it = std::find(synth.symbols.begin(), synth.symbols.end(), real.symbols[k]);
    if (it == synth.symbols.end())
      throw SymbolMismatch("ratio report: symbol '" + real.symbols[k] + "' missing from synthetic");
    map[k] = std::size_t(it - synth.symbols.begin());
  }
  RatioReport report;
  report.noise_floor = noise_floor;
  std::vector<double> kept;
  for (std::size_t r = 1; r < real.symbols.size(); ++r)
    for (std::size_t c = 0; c < r; ++c) {
      RatioReport::Row row;
      row.a = real.symbols[r];
      row.b = real.symbols[c];
      row.real = real.at(r, c);
      row.synth = synth.at(map[r], map[c]);
      row.excluded = std::abs(row.real) < noise_floor;
      row.ratio = row.excluded ? 0.0 : row.synth / row.real;
      if (!row.excluded) kept.push_back(row.ratio);
      report.rows.push_back(row);
    }
  if (!kept.empty()) {
    std::sort(kept.begin(), kept.end());
    const std::size_t h = kept.size() / 2;
    report.median_ratio = kept.size() % 2 == 1 ? kept[h] : 0.5 * (kept[h - 1] + kept[h]);
  }
  return report;
}

// Lower-triangular rendering, values x100 rounded to integers, symbol
// column on the left and the remaining symbols along the bottom.
inline std::string render_matrix_table(const CrossCorrMatrix& m) {
  const std::size_t n = m.symbols.size();
  std::size_t width = 4;
  for (const auto& s : m.symbols) width = std::max(width, s.size() + 1);
  std::string out;
  char buf[64];
  for (std::size_t r = 1; r < n; ++r) {
    std::snprintf(buf, sizeof buf, "%-*s", int(width), m.symbols[r].c_str());
    out += buf;
    for (std::size_t c = 0; c < r; ++c) {
      std::snprintf(buf, sizeof buf, "%*ld", int(width), std::lround(100.0 * m.at(r, c)));
      out += buf;
    }
    out += '\n';
  }
  std::snprintf(buf, sizeof buf, "%-*s", int(width), "");
  out += buf;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    std::snprintf(buf, sizeof buf, "%*s", int(width), m.symbols[c].c_str());
    out += buf;
  }
  out += '\n';
  return out;
}

inline std::string ratio_report_csv(const RatioReport& report) {
  std::string out = "symbol_a,symbol_b,real,synth,ratio,excluded\n";
  char buf[256];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.2f,%d\n", row.a.c_str(), row.b.c_str(),
                  row.real, row.synth, row.ratio, row.excluded ? 1 : 0);
    out += buf;
  }
  if (report.median_ratio) {
    std::snprintf(buf, sizeof buf, "median,,,,%.2f,0\n", *report.median_ratio);
    out += buf;
  }
  return out;
}

}  // namespace wismc
