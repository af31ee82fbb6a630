#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "palmsim/vec.hpp"

namespace palmsim {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. Derived streams (per sample, per permutation, ...)
/// depend only on (seed, index), not on the parent's draw position, which
/// keeps ensemble maps deterministic under any processing order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t s = seed;
    eng_.seed(splitmix64(s));
  }

  uint64_t seed() const { return seed_; }

  /// Independent child stream identified by an index.
  Rng derive(uint64_t index) const {
    uint64_t s = seed_ ^ (0x632be59bd9b4e019ULL + index * 0x9e3779b97f4a7c15ULL);
    return Rng(splitmix64(s));
  }

  uint64_t next_u64() { return eng_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0,1).
  double uniform_open01() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  /// Uniform integer in {0,...,n-1}.
  uint64_t uniform_index(uint64_t n) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;  // rejection avoids modulo bias
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  Vec uniform_vec(int dim, double side) {
    Vec v(dim);
    for (int k = 0; k < dim; ++k) v[k] = uniform(0.0, side);
    return v;
  }

  double exponential(double rate) { return -std::log(uniform_open01()) / rate; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Poisson count by Knuth's product method, chunked so that large means
  /// never underflow exp(-mean).
  int64_t poisson(double mean) {
    int64_t total = 0;
    while (mean > 32.0) {
      total += poisson_small(32.0);
      mean -= 32.0;
    }
    total += poisson_small(mean);
    return total;
  }

 private:
  int64_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    double prod = 1.0;
    int64_t n = -1;
    do {
      prod *= uniform01();
      ++n;
    } while (prod > limit);
    return n;
  }

  uint64_t seed_ = 0;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace palmsim
