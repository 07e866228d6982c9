#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace nonmarkov::numerics {

inline double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
  return acc * h;
}

/// Composite Simpson rule on a uniform grid. For an even number of samples
/// the last three intervals use the 3/8 rule, so the result stays exact for
/// cubics either way.
inline double simpson(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 3) throw std::invalid_argument("simpson: need at least 3 samples");
  auto simpson_odd = [h](std::span<const double> g) {
    double acc = g.front() + g.back();
    for (std::size_t i = 1; i + 1 < g.size(); ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g[i];
    return acc * h / 3.0;
  };
  if (n % 2 == 1) return simpson_odd(f);
  const std::size_t m = n - 4;  // samples [0, m] by Simpson (m + 1 is odd), [m, n) by 3/8
  const double tail = 3.0 * h / 8.0 * (f[m] + 3.0 * f[m + 1] + 3.0 * f[m + 2] + f[m + 3]);
  return (m >= 2 ? simpson_odd(f.first(m + 1)) : 0.0) + tail;
}

}  // namespace nonmarkov::numerics
