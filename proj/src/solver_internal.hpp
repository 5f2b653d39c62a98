#pragma once

#include <chrono>

#include "deflation/solvers.hpp"

namespace deflation::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline Vec project(const Vec& x, const Vec* lower, const Vec* upper) {
  Vec p = x;
  if (lower) p = p.cwiseMax(*lower);
  if (upper) p = p.cwiseMin(*upper);
  return p;
}

// ||P(x - g) - x||_inf, the first-order measure for box-constrained problems.
inline double projected_gradient_norm(const Vec& x, const Vec& g, const Vec* lower,
                                      const Vec* upper) {
  return inf_norm(project(x - g, lower, upper) - x);
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

// splitmix64 step; decorrelates per-iteration sample seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t t) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (t + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace deflation::detail
