#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include "nonmarkov/divisibility.hpp"
#include "nonmarkov/measures.hpp"
#include "nonmarkov/trajectory.hpp"

namespace nonmarkov {

enum class Classification { divisible, bound_non_markovian, backflow_non_markovian };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::divisible: return "divisible";
    case Classification::bound_non_markovian: return "bound-non-Markovian";
    case Classification::backflow_non_markovian: return "backflow-non-Markovian";
  }
  return "?";
}

struct ClassifyOptions {
  /// g at or below this value counts as zero.
  double g_tolerance = 1e-8;
  /// Random bases per node for the quantum P-divisibility check.
  std::size_t dissipativity_bases = 4;
  SearchOptions search;
};

struct DivisibilityReport {
  GTrace g;
  double max_g = 0.0;
  bool cp_divisible = true;
  /// Classical: Kolmogorov conditions at every node. Quantum: sampled
  /// dissipativity condition at every node (evidence, not proof).
  bool p_divisible = true;
  MeasureResult rhp;
  MeasureResult blp;
  Classification label = Classification::divisible;
};

/// divisible: g ~ 0 everywhere. backflow-non-Markovian: the BLP search found
/// sigma > 0. bound-non-Markovian: indivisible but no sigma > 0 found under
/// the search budget.
inline DivisibilityReport classify(const MapTrajectory& traj, const ClassifyOptions& opt = {}) {
  DivisibilityReport rep;
  rep.g = g_trace(traj);
  rep.max_g = *std::max_element(rep.g.g.begin(), rep.g.g.end());
  rep.cp_divisible = rep.max_g <= opt.g_tolerance;
  rep.rhp = n_rhp_from_trace(rep.g, traj.grid().step());

  const TimeGrid& grid = traj.grid();
  for (std::size_t i = 0; i < grid.size() && rep.p_divisible; ++i) {
    GeneratorSample gen;
    try {
      gen = local_generator(traj, grid[i]);
    } catch (const SingularMapError&) {
      continue;
    }
    if (traj.is_classical()) {
      rep.p_divisible = kolmogorov_check(*gen.rates).ok;
    } else {
      rep.p_divisible =
          dissipativity_check(gen.generator, opt.dissipativity_bases,
                              numerics::derive_seed(opt.search.seed, "classify-dissipativity", i))
              .ok;
    }
  }

  rep.blp = n_blp(traj, opt.search);
  if (rep.blp.value > 0.0) {
    rep.label = Classification::backflow_non_markovian;
  } else if (!rep.cp_divisible) {
    rep.label = Classification::bound_non_markovian;
  } else {
    rep.label = Classification::divisible;
  }
  return rep;
}

}  // namespace nonmarkov
