#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace certirl {

// Deterministic, stream-splittable RNG. Every stochastic site in the library
// derives its own stream from (seed, fixed site tag, loop indices), so results
// are independent of thread count and scheduling. xoshiro256** core seeded
// through splitmix64, both with their reference constants.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    for (auto& w : s_) w = splitmix(x);
  }

  // combine loop indices into a stream tag without collisions in practice
  static std::uint64_t tag(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    for (std::uint64_t v : {a, b, c}) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
      h ^= h >> 33;
    }
    return h;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (the cached second value is dropped so the
  // consumption pattern stays trivially reproducible)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // uniform on the solid ball { ||x - center|| <= radius }
  std::vector<double> ball(const std::vector<double>& center, double radius) {
    const std::size_t n = center.size();
    std::vector<double> x(n);
    double nrm2 = 0.0;
    for (auto& xi : x) {
      xi = normal();
      nrm2 += xi * xi;
    }
    const double nrm = std::sqrt(nrm2);
    const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) x[i] = center[i] + (nrm > 0 ? r * x[i] / nrm : 0.0);
    return x;
  }

  std::vector<double> box(const std::vector<double>& lo, const std::vector<double>& hi) {
    std::vector<double> x(lo.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(lo[i], hi[i]);
    return x;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  static std::uint64_t splitmix(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4];
};

}  // namespace certirl
