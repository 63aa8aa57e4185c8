#pragma once
#include <cstdint>
#include <cmath>

namespace ssep {

// Counter-based 64-bit generator (splitmix finalizer applied to a keyed
// counter).  Streams for parallel trajectories are derived from
// (seed, stream index), so a run is reproducible under any thread layout.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ 0x9e3779b97f4a7c15ull) ^ mix(stream + 0x714cf0d1c221a7c3ull)),
        ctr_(0) {}

  std::uint64_t next_u64() {
    std::uint64_t z = key_ + (ctr_ += 0x9e3779b97f4a7c15ull);
    return mix(z);
  }

  // uniform in (0,1): never returns 0 or 1
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // multiply-shift; bias is negligible for n << 2^64
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double normal() {
    // polar Marsaglia, deterministic given the stream
    for (;;) {
      double u = 2.0 * uniform() - 1.0;
      double v = 2.0 * uniform() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }
  std::uint64_t key_;
  std::uint64_t ctr_;
};

}  // namespace ssep
