#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "oegd/error.hpp"

// Deterministic randomness.
//
// Every random choice in the library flows from one master seed through named
// substreams, so results are byte-identical across platforms and independent
// of thread scheduling.  Two rules make that portable:
//   1. only the raw 64-bit output of std::mt19937_64 is consumed (its output
//      sequence is fixed by the C++ standard; std::*_distribution is not), and
//   2. all distribution transforms are written out here by hand.

namespace oegd {

inline constexpr uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named substream tags. Values are arbitrary but frozen: changing them changes
// every seeded artifact.
namespace stream {
inline constexpr uint64_t kWorkload = 1;
inline constexpr uint64_t kRepetition = 2;
inline constexpr uint64_t kRound = 3;
inline constexpr uint64_t kSample = 4;
inline constexpr uint64_t kSelect = 5;   // exponential-mechanism draws
inline constexpr uint64_t kPool = 6;     // dual-engine pool construction
inline constexpr uint64_t kInit = 7;     // initial uniform query
inline constexpr uint64_t kData = 8;     // synthetic CSV generation
inline constexpr uint64_t kRestart = 9;  // local-search restarts
}  // namespace stream

// Mixes (master, path...) into an independent child seed.
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> path) {
  uint64_t s = master ^ 0x6a09e667f3bcc909ULL;
  uint64_t out = splitmix64_next(s);
  for (uint64_t p : path) {
    s = out ^ (p + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2));
    out = splitmix64_next(s);
  }
  return out;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Uniform integer in [0, n) by rejection (no modulo bias).
  uint64_t below(uint64_t n) {
    if (n == 0) raise(Errc::InvalidParam, "below(0)");
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // One-sided exponential with *mean* (scale) eta: density (1/eta) e^{-z/eta}.
  double exponential(double eta) { return -eta * std::log(uniform_pos()); }

  // Laplace with mean 0 and scale eta.
  double laplace(double eta) {
    double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
    return u < 0.5 ? eta * std::log(2.0 * u) : -eta * std::log(2.0 * (1.0 - u));
  }

  // Index draw from cumulative weights (nondecreasing, cum.back() = total mass).
  size_t categorical_from_cumulative(std::span<const double> cum) {
    if (cum.empty()) raise(Errc::EmptyCandidates, "categorical over empty support");
    double u = uniform() * cum.back();
    size_t lo = 0, hi = cum.size() - 1;
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] > u) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

 private:
  std::mt19937_64 eng_;
};

inline std::vector<double> sample_exponential_vector(double eta, size_t d, Rng& rng) {
  if (!(eta > 0)) raise(Errc::InvalidParam, "exponential scale must be positive");
  std::vector<double> v(d);
  for (size_t i = 0; i < d; ++i) v[i] = rng.exponential(eta);
  return v;
}

inline std::vector<double> sample_laplace_vector(double eta, size_t d, Rng& rng) {
  if (!(eta > 0)) raise(Errc::InvalidParam, "laplace scale must be positive");
  std::vector<double> v(d);
  for (size_t i = 0; i < d; ++i) v[i] = rng.laplace(eta);
  return v;
}

}  // namespace oegd
