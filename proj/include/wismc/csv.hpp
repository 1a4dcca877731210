#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wismc/market_data.hpp"

namespace wismc {

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& file, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
}

inline std::int64_t parse_int(const std::string& s, const std::string& file, std::size_t line) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

// `timestamp,price` rows; timestamps in epoch seconds or milliseconds,
// detected by magnitude and normalised to seconds.
inline TickSeries read_ticks_csv(const std::string& path, const std::string& symbol) {
  auto in = detail::open_for_read(path);
  TickSeries ticks;
  ticks.symbol = symbol;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::int64_t max_ts = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() >= 2 && fields[0] == "timestamp" && fields[1] == "price") continue;
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected header 'timestamp,price'");
    }
    if (fields.size() != 2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 fields, got " +
                       std::to_string(fields.size()));
    Tick tick;
    tick.timestamp = detail::parse_int(fields[0], path, lineno);
    tick.price = detail::parse_double(fields[1], path, lineno);
    if (!(tick.price > 0.0))
      throw ParseError(path + ":" + std::to_string(lineno) + ": non-positive price");
    max_ts = std::max(max_ts, tick.timestamp);
    ticks.records.push_back(tick);
  }
  if (ticks.records.empty()) throw EmptySeries("tick file '" + path + "' has no data rows");
  if (max_ts >= 100000000000LL)  // beyond year 5138 in seconds: treat as milliseconds
    for (auto& t : ticks.records) t.timestamp /= 1000;
  ticks.validate();
  return ticks;
}

inline void write_prices_csv(const std::string& path, const PriceSeries& prices) {
  auto out = detail::open_for_write(path);
  out << "# t0=" << prices.t0 << ",interval=" << prices.interval << "\n";
  out << "minute,price\n";
  for (std::size_t t = 0; t < prices.prices.size(); ++t)
    out << t << "," << detail::fmt_double(prices.prices[t]) << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline PriceSeries read_prices_csv(const std::string& path) {
  auto in = detail::open_for_read(path);
  PriceSeries prices;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::sscanf(line.c_str(), "# t0=%ld,interval=%ld", &prices.t0, &prices.interval);
      continue;
    }
    if (line == "minute,price") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    prices.prices.push_back(detail::parse_double(fields[1], path, lineno));
  }
  if (prices.prices.empty()) throw EmptySeries("price file '" + path + "' has no data rows");
  return prices;
}

inline void write_returns_csv(const std::string& path, const ReturnSeries& returns) {
  auto out = detail::open_for_write(path);
  out << "minute,return\n";
  for (std::size_t t = 0; t < returns.values.size(); ++t)
    out << t << "," << detail::fmt_double(returns.values[t]) << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline ReturnSeries read_returns_csv(const std::string& path) {
  auto in = detail::open_for_read(path);
  ReturnSeries returns;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#' || line == "minute,return") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    returns.values.push_back(detail::parse_double(fields[1], path, lineno));
  }
  if (returns.values.empty()) throw EmptySeries("return file '" + path + "' has no data rows");
  return returns;
}

// `minute,state,return` for synthetic output
inline void write_synthetic_csv(const std::string& path, const StatePath& states,
                                const ReturnSeries& returns) {
  if (states.states.size() != returns.values.size())
    throw GridMismatch("synthetic csv: state/return length mismatch");
  auto out = detail::open_for_write(path);
  out << "minute,state,return\n";
  for (std::size_t t = 0; t < states.states.size(); ++t)
    out << t << "," << states.states[t] << "," << detail::fmt_double(returns.values[t]) << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline ReturnSeries read_synthetic_returns_csv(const std::string& path) {
  auto in = detail::open_for_read(path);
  ReturnSeries returns;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#' || line == "minute,state,return") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
    returns.values.push_back(detail::parse_double(fields[2], path, lineno));
  }
  if (returns.values.empty()) throw EmptySeries("synthetic file '" + path + "' has no data rows");
  return returns;
}

}  // namespace wismc
