#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dpl {

// All randomness in a run flows from one user seed. Sub-streams are derived
// with fixed offsets through splitmix64 so that modules draw from independent,
// reproducible sequences. Distributions are hand-rolled on top of mt19937_64
// (whose raw output is pinned by the standard); std::*_distribution is
// implementation-defined and would break byte-stable outputs.
namespace seed_stream {
constexpr std::uint64_t kSynth = 1;
constexpr std::uint64_t kSplit = 2;
constexpr std::uint64_t kClassifierInit = 3;
constexpr std::uint64_t kTrainShuffle = 4;
constexpr std::uint64_t kSamplePrecision = 5;
}  // namespace seed_stream

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free modulo bias is irrelevant here;
  // determinism is what matters, so keep the draw count fixed at one.
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; caches the second variate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Geometric on {0,1,2,...} with success probability p.
  int geometric(double p) {
    if (p >= 1.0) return 0;
    int k = 0;
    while (!bernoulli(p) && k < 1000) ++k;
    return k;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpl
