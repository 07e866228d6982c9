#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>

namespace nonmarkov::numerics {

/// Derivative of uniformly sampled data at `index`: central difference in the
/// interior, second-order one-sided stencils at the two ends.
inline double central_diff(std::span<const double> f, double h, std::size_t index) {
  const std::size_t n = f.size();
  if (n < 3) throw std::invalid_argument("central_diff: need at least 3 samples");
  if (index >= n) throw std::out_of_range("central_diff: index out of range");
  if (index == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  if (index == n - 1) return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return (f[index + 1] - f[index - 1]) / (2.0 * h);
}

struct OneSidedDerivatives {
  std::optional<double> backward;
  std::optional<double> forward;
};

/// Second-order backward and forward differences at `index`, each present
/// when two samples exist on that side. At a kink the two differ.
inline OneSidedDerivatives one_sided_diff(std::span<const double> f, double h, std::size_t index) {
  if (index >= f.size()) throw std::out_of_range("one_sided_diff: index out of range");
  OneSidedDerivatives d;
  if (index >= 2) d.backward = (3.0 * f[index] - 4.0 * f[index - 1] + f[index - 2]) / (2.0 * h);
  if (index + 2 < f.size()) d.forward = (-3.0 * f[index] + 4.0 * f[index + 1] - f[index + 2]) / (2.0 * h);
  return d;
}

}  // namespace nonmarkov::numerics
