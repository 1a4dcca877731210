#pragma once

#include <cstddef>
#include <cstdint>

namespace wismc {

// splitmix64 (Steele/Lea/Flood): counter-based, period exactly 2^64.
// Separate streams are derived by remixing the seed with a stream id, so
// e.g. leader and follower draws never share state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr const char* name() { return "splitmix64"; }

  static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id) {
    return SplitMix64(mix(seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1)));
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix_out(z);
  }

  // uniform in [0,1) from the top 53 bits; bit-stable across platforms
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix_out(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t mix(std::uint64_t z) { return mix_out(z + 0x9e3779b97f4a7c15ULL); }

  std::uint64_t state_;
};

// Inverse-CDF draw over a weight row that sums to ~1. Rounding can push u a
// hair past the accumulated total; the last positive cell absorbs it.
inline std::size_t sample_discrete(const double* w, std::size_t n, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  bool seen = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (w[k] <= 0.0) continue;
    acc += w[k];
    last_positive = k;
    seen = true;
    if (u < acc) return k;
  }
  (void)seen;
  return last_positive;
}

}  // namespace wismc
