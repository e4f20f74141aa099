#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace natvol {

// xoshiro256++ with splitmix64 seeding. Fully specified so that streams are
// bit-identical across platforms and standard-library versions (std::
// distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) {
    std::uint64_t x = seed;
    for (auto& si : s_) {
      x += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      si = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  // Box-Muller; one value per call, the pair is not cached so the stream
  // stays position-independent.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::vector<double> unit_vector(int dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        v[i] = normal();
        norm2 += v[i] * v[i];
      }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& vi : v) vi *= inv;
    return v;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace natvol
