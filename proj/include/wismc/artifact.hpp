#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wismc/estimation.hpp"

namespace wismc {

using nlohmann::json;

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const auto n = std::size_t(in.gcount());
    for (std::size_t k = 0; k < n; ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

namespace detail {

inline void write_doubles_le(std::ofstream& out, const std::vector<double>& values) {
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = (unsigned char)((bits >> (8 * b)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

inline std::vector<double> read_doubles_le(std::ifstream& in, std::size_t count,
                                           const std::string& path) {
  std::vector<double> values(count);
  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (std::size_t(in.gcount()) != raw.size())
    throw ParseError("artifact '" + path + "': truncated payload");
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(raw[k * 8 + std::size_t(b)]) << (8 * b);
    values[k] = std::bit_cast<double>(bits);
  }
  return values;
}

inline json bins_to_json(const BinSpec& bins) {
  return json{{"s", bins.states()},
              {"boundaries", bins.boundaries},
              {"representatives", bins.representatives}};
}

inline BinSpec bins_from_json(const json& j) {
  BinSpec bins;
  bins.boundaries = j.at("boundaries").get<std::vector<double>>();
  bins.representatives = j.at("representatives").get<std::vector<double>>();
  bins.validate();
  return bins;
}

inline json index_bins_to_json(const IndexBins& bins) {
  return json{{"levels", bins.levels()}, {"boundaries", bins.boundaries}};
}

inline IndexBins index_bins_from_json(const json& j) {
  IndexBins bins;
  bins.boundaries = j.at("boundaries").get<std::vector<double>>();
  bins.validate();
  return bins;
}

inline json index_spec_to_json(const IndexSpec& spec) {
  return json{{"lambda", spec.lambda},
              {"truncation_eps", spec.truncation_eps},
              {"u0", spec.u0},
              {"squared_rep", spec.squared_rep}};
}

inline IndexSpec index_spec_from_json(const json& j) {
  IndexSpec spec;
  spec.lambda = j.at("lambda").get<double>();
  spec.truncation_eps = j.at("truncation_eps").get<double>();
  spec.u0 = j.at("u0").get<double>();
  spec.squared_rep = j.at("squared_rep").get<std::vector<double>>();
  spec.validate();
  return spec;
}

inline json read_envelope(std::ifstream& in, const std::string& path, const char* format) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("artifact '" + path + "': missing envelope");
  json env;
  try {
    env = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("artifact '" + path + "': bad envelope: " + e.what());
  }
  if (env.value("format", "") != format)
    throw ParseError("artifact '" + path + "': expected format '" + format + "', got '" +
                     env.value("format", "") + "'");
  return env;
}

}  // namespace detail

struct ArtifactMeta {
  std::uint64_t config_hash = 0;
  std::int64_t sample_minutes = 0;
  std::int64_t censored = 0;
};

struct KernelArtifact {
  IndexedKernel kernel;
  IndexSpec index_spec;
  BinSpec return_bins;
  ArtifactMeta meta;
};

struct FollowerArtifact {
  FollowerKernel kernel;
  IndexSpec index_spec;
  BinSpec return_bins;
  ArtifactMeta meta;
};

// Container layout: one-line JSON envelope, '\n', then the binary payload
// of 64-bit little-endian doubles. The kernel payload is Q laid out
// (i, v, j, t) with t fastest.
inline void save_kernel(const std::string& path, const KernelArtifact& artifact) {
  artifact.kernel.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  json env{{"format", "wismc-kernel"},
           {"version", 1},
           {"s", artifact.kernel.s},
           {"levels", artifact.kernel.levels},
           {"t_max", artifact.kernel.t_max},
           {"min_count", artifact.kernel.min_count},
           {"context_counts", artifact.kernel.context_counts},
           {"index_bins", detail::index_bins_to_json(artifact.kernel.index_bins)},
           {"index_spec", detail::index_spec_to_json(artifact.index_spec)},
           {"return_bins", detail::bins_to_json(artifact.return_bins)},
           {"config_hash", artifact.meta.config_hash},
           {"sample_minutes", artifact.meta.sample_minutes},
           {"censored", artifact.meta.censored},
           {"payload_count", artifact.kernel.q_cum.size()}};
  out << env.dump() << "\n";
  detail::write_doubles_le(out, artifact.kernel.q_cum);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline KernelArtifact load_kernel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const json env = detail::read_envelope(in, path, "wismc-kernel");
  KernelArtifact artifact;
  try {
    artifact.kernel.s = env.at("s").get<int>();
    artifact.kernel.levels = env.at("levels").get<int>();
    artifact.kernel.t_max = env.at("t_max").get<std::int64_t>();
    artifact.kernel.min_count = env.at("min_count").get<int>();
    artifact.kernel.context_counts = env.at("context_counts").get<std::vector<std::int64_t>>();
    artifact.kernel.index_bins = detail::index_bins_from_json(env.at("index_bins"));
    artifact.index_spec = detail::index_spec_from_json(env.at("index_spec"));
    artifact.return_bins = detail::bins_from_json(env.at("return_bins"));
    artifact.meta.config_hash = env.at("config_hash").get<std::uint64_t>();
    artifact.meta.sample_minutes = env.at("sample_minutes").get<std::int64_t>();
    artifact.meta.censored = env.at("censored").get<std::int64_t>();
    const auto count = env.at("payload_count").get<std::size_t>();
    artifact.kernel.q_cum = detail::read_doubles_le(in, count, path);
  } catch (const json::exception& e) {
    throw ParseError("artifact '" + path + "': " + e.what());
  }
  artifact.kernel.validate();
  return artifact;
}

// Follower container: the envelope indexes the populated contexts in a
// fixed order; the payload holds one probability row per context
// ([stay, change->1, ..., change->s]) plus its support count.
inline void save_follower(const std::string& path, const FollowerArtifact& artifact) {
  artifact.kernel.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const FollowerKernel& fk = artifact.kernel;
  json contexts = json::array();
  std::vector<double> payload;
  for (State i = 1; i <= fk.s; ++i)
    for (std::int64_t u = 0; u < fk.t_max; ++u)
      for (int v = 1; v <= fk.levels; ++v)
        for (int sg = -1; sg <= 1; ++sg) {
          const std::size_t r = fk.row(i, u, v, Sign(sg));
          const std::int64_t total = fk.row_total(r);
          if (total == 0) continue;
          contexts.push_back(json::array({i, u, v, sg, total}));
          for (int c = 0; c <= fk.s; ++c)
            payload.push_back(double(fk.counts[r + std::size_t(c)]) / double(total));
        }
  json env{{"format", "wismc-follower"},
           {"version", 1},
           {"s", fk.s},
           {"levels", fk.levels},
           {"t_max", fk.t_max},
           {"min_count", fk.min_count},
           {"index_at", fk.index_at == FollowerKernel::IndexAt::transition ? "transition" : "minute"},
           {"index_bins", detail::index_bins_to_json(fk.index_bins)},
           {"index_spec", detail::index_spec_to_json(artifact.index_spec)},
           {"return_bins", detail::bins_to_json(artifact.return_bins)},
           {"config_hash", artifact.meta.config_hash},
           {"sample_minutes", artifact.meta.sample_minutes},
           {"contexts", contexts},
           {"payload_count", payload.size()}};
  out << env.dump() << "\n";
  detail::write_doubles_le(out, payload);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline FollowerArtifact load_follower(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const json env = detail::read_envelope(in, path, "wismc-follower");
  FollowerArtifact artifact;
  FollowerKernel& fk = artifact.kernel;
  try {
    fk.s = env.at("s").get<int>();
    fk.levels = env.at("levels").get<int>();
    fk.t_max = env.at("t_max").get<std::int64_t>();
    fk.min_count = env.at("min_count").get<int>();
    fk.index_at = env.at("index_at").get<std::string>() == "minute"
                      ? FollowerKernel::IndexAt::minute
                      : FollowerKernel::IndexAt::transition;
    fk.index_bins = detail::index_bins_from_json(env.at("index_bins"));
    artifact.index_spec = detail::index_spec_from_json(env.at("index_spec"));
    artifact.return_bins = detail::bins_from_json(env.at("return_bins"));
    artifact.meta.config_hash = env.at("config_hash").get<std::uint64_t>();
    artifact.meta.sample_minutes = env.at("sample_minutes").get<std::int64_t>();
    const auto count = env.at("payload_count").get<std::size_t>();
    const std::vector<double> payload = detail::read_doubles_le(in, count, path);
    fk.counts.assign(fk.n_rows() * std::size_t(fk.s + 1), 0);
    fk.total = 0;
    const auto& contexts = env.at("contexts");
    if (contexts.size() * std::size_t(fk.s + 1) != payload.size())
      throw ParseError("artifact '" + path + "': context/payload mismatch");
    for (std::size_t c = 0; c < contexts.size(); ++c) {
      const auto& ctx = contexts[c];
      const State i = ctx.at(0).get<State>();
      const std::int64_t u = ctx.at(1).get<std::int64_t>();
      const int v = ctx.at(2).get<int>();
      const int sg = ctx.at(3).get<int>();
      const auto total = double(ctx.at(4).get<std::int64_t>());
      const std::size_t r = fk.row(i, u, v, Sign(sg));
      for (int slot = 0; slot <= fk.s; ++slot) {
        const double p = payload[c * std::size_t(fk.s + 1) + std::size_t(slot)];
        const auto n = std::int64_t(std::llround(p * total));
        fk.counts[r + std::size_t(slot)] = n;
        fk.total += n;
      }
    }
  } catch (const json::exception& e) {
    throw ParseError("artifact '" + path + "': " + e.what());
  }
  fk.validate();
  return artifact;
}

}  // namespace wismc
