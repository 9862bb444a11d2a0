#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace bidopt {

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Derives an independent stream seed from a run seed and a tag path,
/// e.g. (seed, {WORLD, replicate, campaign}). Streams keyed on distinct
/// paths are decorrelated, which is what makes replicate execution order
/// irrelevant to the results.
inline std::uint64_t substream_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = detail::mix64(seed + detail::kGolden);
  for (std::uint64_t t : tags) h = detail::mix64(h ^ (t + detail::kGolden));
  return h;
}

/// Small deterministic generator (splitmix64). Self-contained so output
/// does not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the polar method; the spare of each pair is kept.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags used across the project.
namespace stream {
inline constexpr std::uint64_t world = 1;
inline constexpr std::uint64_t sampler = 2;
inline constexpr std::uint64_t truth = 3;
inline constexpr std::uint64_t setting = 4;
}  // namespace stream

}  // namespace bidopt
