#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace vcrank {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

/// Scales `v` to unit length in place. Returns false (and leaves `v` alone)
/// when the norm is zero or not finite.
inline bool normalize_in_place(std::span<double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) return false;
  for (double& x : v) x /= n;
  return true;
}

}  // namespace vcrank
