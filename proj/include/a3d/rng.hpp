#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace a3d {

// mt19937_64 with hand-pinned output transforms. The standard pins the
// engine's bit stream but not the distributions, so the transforms live
// here to keep generated datasets identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // [0, 1)
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    return (std::uint64_t)(((__uint128_t)eng_() * n) >> 64);
  }

  // [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + (int)uniform_index((std::uint64_t)(hi - lo + 1));
  }

  // Standard normal via Box-Muller; one value cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // Shift u1 away from zero so log stays finite.
    double u1 = ((eng_() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates over [0, n); returns the permuted index array.
  template <typename Index = std::size_t>
  std::vector<Index> permutation(std::size_t n) {
    std::vector<Index> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = (Index)i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = (std::size_t)uniform_index(i);
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  }

 private:
  std::mt19937_64 eng_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace a3d
