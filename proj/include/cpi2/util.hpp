#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace cpi2 {

using Vec = std::vector<double>;

inline double clip(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

inline Vec clip(Vec v, double lo, double hi) {
  for (double& x : v) x = clip(x, lo, hi);
  return v;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline Vec to_vec(std::span<const double> s) { return Vec(s.begin(), s.end()); }

}  // namespace cpi2
