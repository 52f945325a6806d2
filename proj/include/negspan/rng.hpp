#ifndef NEGSPAN_RNG_HPP
#define NEGSPAN_RNG_HPP

#include <cstdint>
#include <random>

namespace negspan {

// splitmix64; used to derive independent stream seeds from one user seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// mt19937_64 plus deterministic draw helpers. std::uniform_*_distribution is
// implementation-defined, so all draws go through these instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // uniform integer in [0, n); n must be positive
  std::uint64_t index(std::uint64_t n) { return engine_() % n; }

  // uniform integer in [lo, hi] inclusive
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
    return lo + index(hi - lo + 1);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace negspan

#endif  // NEGSPAN_RNG_HPP
