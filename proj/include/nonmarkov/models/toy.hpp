#pragma once

// Two-state classical toy model. The transition functions are
// f0(t) = kappa sin t and f1(t) = 0 on [0, pi], -kappa sin t after pi, with
// closed-form integrals x0 = kappa (1 - cos t) and x1 = kappa (1 + cos t) for
// t >= pi. Lambda(t) = [[1 - x0, x1], [x0, 1 - x1]].

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nonmarkov/errors.hpp"
#include "nonmarkov/operators.hpp"
#include "nonmarkov/trajectory.hpp"

namespace nonmarkov::models {

struct ToyModelParams {
  double kappa = 0.4;

  void validate() const {
    if (!(kappa > 0.0 && kappa < 0.5)) {
      throw InvalidModel("toy model: kappa must lie in (0, 1/2), got " + std::to_string(kappa));
    }
  }
};

struct ToyFunctions {
  double x0, x1, dx0, dx1;
};

inline ToyFunctions toy_functions(const ToyModelParams& p, double t) {
  const double k = p.kappa;
  ToyFunctions f{k * (1.0 - std::cos(t)), 0.0, k * std::sin(t), 0.0};
  if (t >= std::numbers::pi) {
    f.x1 = k * (1.0 + std::cos(t));
    f.dx1 = -k * std::sin(t);
  }
  return f;
}

inline StochasticMatrix toy_map(const ToyModelParams& p, double t) {
  p.validate();
  const auto f = toy_functions(p, t);
  RealMatrix m(2, 2);
  m << 1.0 - f.x0, f.x1, f.x0, 1.0 - f.x1;
  return StochasticMatrix(m);
}

inline RealMatrix toy_map_derivative(const ToyModelParams& p, double t) {
  const auto f = toy_functions(p, t);
  RealMatrix m(2, 2);
  m << -f.dx0, f.dx1, f.dx0, -f.dx1;
  return m;
}

struct ToyRates {
  double a0;  // rate 0 -> 1
  double a1;  // rate 1 -> 0
};

/// Rates of the generator [[-a0, a1], [a0, -a1]].
inline ToyRates toy_rates(const ToyModelParams& p, double t) {
  p.validate();
  const auto f = toy_functions(p, t);
  const double den = 1.0 - f.x0 - f.x1;
  if (!(std::abs(den) > 1e-10)) throw SingularMapError(t, std::abs(den));
  return {(f.dx0 * (1.0 - f.x1) + f.dx1 * f.x0) / den, (f.dx0 * f.x1 + f.dx1 * (1.0 - f.x0)) / den};
}

inline MapTrajectory toy_trajectory(const ToyModelParams& p, const TimeGrid& grid) {
  p.validate();
  return MapTrajectory::classical_from_function(
      grid, [p](double t) { return toy_map(p, t).matrix(); },
      [p](double t) { return toy_map_derivative(p, t); });
}

}  // namespace nonmarkov::models
