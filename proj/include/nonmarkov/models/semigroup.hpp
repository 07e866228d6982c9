#pragma once

// Divisible baselines: Lambda(t) = exp(t L) for a fixed generator.

#include <cstdint>
#include <vector>

#include "nonmarkov/numerics/expm.hpp"
#include "nonmarkov/numerics/random.hpp"
#include "nonmarkov/operators.hpp"
#include "nonmarkov/trajectory.hpp"

namespace nonmarkov::models {

/// Samples exp(t_i L) with exact derivative samples L exp(t_i L).
inline MapTrajectory semigroup_trajectory(const Superoperator& l, const TimeGrid& grid) {
  std::vector<ComplexMatrix> maps(grid.size()), derivs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    maps[i] = numerics::expm(grid[i] * l.matrix());
    derivs[i] = l.matrix() * maps[i];
  }
  return MapTrajectory::from_samples(grid, std::move(maps), std::move(derivs), Provenance::analytic);
}

inline MapTrajectory classical_semigroup_trajectory(const RealMatrix& rates, const TimeGrid& grid) {
  std::vector<RealMatrix> maps(grid.size()), derivs(grid.size());
  const ComplexMatrix lc = rates.cast<Complex>();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    maps[i] = numerics::expm(grid[i] * lc).real();
    derivs[i] = rates * maps[i];
  }
  return MapTrajectory::classical_from_samples(grid, maps, derivs, Provenance::analytic);
}

/// Random GKSL generator: -i[H, .] plus `jumps` dissipators with Ginibre
/// jump operators, scaled by `rate`.
inline Superoperator random_lindblad_generator(numerics::Rng& rng, Index d, int jumps = 2,
                                               double rate = 1.0) {
  Superoperator l = commutator_generator(numerics::random_hermitian(rng, d).matrix());
  for (int j = 0; j < jumps; ++j) {
    const ComplexMatrix c = numerics::random_ginibre(rng, d, d) * std::sqrt(rate / d);
    l = l + dissipator(c);
  }
  return l;
}

/// Random classical Kolmogorov generator with off-diagonal rates in [0, rate].
inline RealMatrix random_kolmogorov_generator(numerics::Rng& rng, Index d, double rate = 1.0) {
  RealMatrix m = RealMatrix::Zero(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) {
      if (i != j) m(i, j) = rng.uniform(0.0, rate);
    }
    m(j, j) = -m.col(j).sum();
  }
  return m;
}

}  // namespace nonmarkov::models
