#pragma once

// Qubit memory-kernel master equation
//   d rho/dt = int_0^t k(s) L rho(t - s) ds,   k(s) = gamma exp(-gamma s),
//   L = gamma0 (nbar + 1) L0 + gamma0 nbar L1.
// For an exponential kernel the convolution u(t) = int_0^t k(s) L rho(t - s) ds
// obeys u' = gamma L rho - gamma u, u(0) = 0, so the equation is integrated
// exactly as a local ODE for (Lambda, U) at the superoperator level.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonmarkov/errors.hpp"
#include "nonmarkov/numerics/ode.hpp"
#include "nonmarkov/operators.hpp"
#include "nonmarkov/trajectory.hpp"

namespace nonmarkov::models {

/// Defaults: an overdamped regime (gamma = 10 gamma0) with thermal
/// occupation 0.5. The map is then completely positive and shows no
/// trace-distance backflow for qubit pairs, yet it is not divisible; gamma0
/// fixes the time unit.
struct IntegroDiffParams {
  double gamma = 0.014;
  double gamma0 = 0.0014;
  double nbar = 0.5;

  void validate() const {
    if (!(gamma >= 0.0) || !(gamma0 >= 0.0) || !(nbar >= 0.0) || !std::isfinite(gamma) ||
        !std::isfinite(gamma0) || !std::isfinite(nbar)) {
      throw InvalidModel("integro-differential model: gamma, gamma0 and nbar must be finite and >= 0");
    }
  }
};

inline Superoperator integro_diff_lindbladian(const IntegroDiffParams& p) {
  p.validate();
  return (p.gamma0 * (p.nbar + 1.0)) * dissipator(pauli::plus()) +
         (p.gamma0 * p.nbar) * dissipator(pauli::minus());
}

/// Population of level 0 in the stationary state of L.
inline double integro_diff_stationary_population(const IntegroDiffParams& p) {
  return (p.nbar + 1.0) / (2.0 * p.nbar + 1.0);
}

inline MapTrajectory integro_diff_trajectory(const IntegroDiffParams& p, const TimeGrid& grid,
                                             double rtol = 1e-10, double atol = 1e-12) {
  p.validate();
  const ComplexMatrix l = integro_diff_lindbladian(p).matrix();
  constexpr Index n = 4;  // superoperator size for a qubit
  constexpr Index block = n * n;

  numerics::OdeProblem<Complex> problem;
  problem.initial = ComplexVector::Zero(2 * block);
  for (Index i = 0; i < n; ++i) problem.initial(i + n * i) = 1.0;
  problem.t0 = 0.0;
  problem.t1 = grid.t_max();
  problem.rtol = rtol;
  problem.atol = atol;
  const double g = p.gamma;
  problem.rhs = [l, g](double, const ComplexVector& y) {
    const Eigen::Map<const ComplexMatrix> lam(y.data(), n, n);
    const Eigen::Map<const ComplexMatrix> u(y.data() + block, n, n);
    ComplexVector dy(2 * block);
    Eigen::Map<ComplexMatrix>(dy.data(), n, n) = u;
    Eigen::Map<ComplexMatrix>(dy.data() + block, n, n) = g * (l * lam) - g * u;
    return dy;
  };

  const auto states = numerics::integrate_ode(problem, grid.times());
  std::vector<ComplexMatrix> maps(grid.size()), derivs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    maps[i] = Eigen::Map<const ComplexMatrix>(states[i].data(), n, n);
    derivs[i] = Eigen::Map<const ComplexMatrix>(states[i].data() + block, n, n);
  }
  return MapTrajectory::from_samples(grid, std::move(maps), std::move(derivs),
                                     Provenance::integrated);
}

/// The two-qubit states defining the Helstrom matrix 0.93 rho1 - 0.07 rho2
/// used with this model (ancilla first, system second).
struct ReferenceStates {
  DensityMatrix rho1;
  DensityMatrix rho2;
  double p;
};

inline ReferenceStates reference_helstrom_states() {
  ComplexMatrix r1 = ComplexMatrix::Zero(4, 4);
  r1(0, 0) = 0.5;
  r1(1, 1) = 0.001;
  r1(2, 2) = 0.019;
  r1(3, 3) = 0.48;
  r1(0, 3) = 0.48;
  r1(3, 0) = 0.48;
  ComplexMatrix r2 = ComplexMatrix::Zero(4, 4);
  r2(0, 0) = 0.25;
  r2(1, 1) = 0.25;
  r2(2, 2) = 0.5;
  return {DensityMatrix(r1), DensityMatrix(r2), 0.07};
}

}  // namespace nonmarkov::models
