#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "masklab/error.hpp"

namespace masklab {

// All randomness in the project flows through this wrapper. std::mt19937_64 is
// seeded directly, but the distribution functions are written out here because
// the standard leaves <random> distributions implementation-defined and output
// files must be byte-stable for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, n). Unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    check(n > 0, "Rng::below: n must be positive");
    const std::uint64_t t = (-n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= t) return r % n;
    }
  }

  // Uniform integer in [lo, hi], inclusive.
  int range(int lo, int hi) {
    check(lo <= hi, "Rng::range: empty interval");
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double real() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return real() < p; }

  // Standard normal via Box-Muller; one value per call, no cached state, so
  // serialization of the engine captures the full generator state.
  double normal() {
    double u1 = real();
    while (u1 == 0.0) u1 = real();
    const double u2 = real();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Normal(0, sigma) truncated to +/- 2 sigma by rejection.
  double trunc_normal(double sigma) {
    for (;;) {
      const double z = normal();
      if (z >= -2.0 && z <= 2.0) return z * sigma;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  std::string save() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void load(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    check(!is.fail(), "Rng::load: malformed state string");
  }

 private:
  std::mt19937_64 gen_;
};

// Stateless 64-bit mix (splitmix64 finalizer). Used to derive independent
// per-item seeds from a base seed so generation order never matters.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream));
}

}  // namespace masklab
