#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace doppler {

// splitmix64; used to derive independent child seeds from (seed, label).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = mix64(seed ^ 0x6f7261636c65ull);
  for (unsigned char c : label) h = mix64(h ^ c);
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x51ed2701u));
}

// Deterministic random source. mt19937_64 is pinned by the standard, and the
// distribution transforms are written out here because the standard library's
// distribution objects are allowed to differ between implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform in [0, 1): 53-bit mantissa.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n) by rejection; exact for any n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= lim);
    return v % n;
  }

  // Box-Muller, pair cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  double rayleigh() {
    const double a = normal();
    const double b = normal();
    return std::sqrt(a * a + b * b);
  }

  // Exact Poisson by product-of-uniforms, chunked so exp(-lambda) never
  // underflows for large means.
  std::uint64_t poisson(double lambda) {
    std::uint64_t count = 0;
    while (lambda > 0.0) {
      const double chunk = lambda > 256.0 ? 256.0 : lambda;
      lambda -= chunk;
      const double threshold = std::exp(-chunk);
      double p = 1.0;
      for (;;) {
        p *= uniform_pos();
        if (p <= threshold) break;
        ++count;
      }
    }
    return count;
  }

  Rng child(std::string_view label) {
    return Rng(derive_seed(gen_(), label));
  }

 private:
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace doppler
