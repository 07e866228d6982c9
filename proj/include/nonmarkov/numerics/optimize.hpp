#pragma once

// Multistart Nelder-Mead maximization. Starts run sequentially in a fixed
// order and each start stops on its own convergence test or a per-start
// evaluation cap; the global budget only truncates that sequence. A larger
// budget therefore replays the same evaluations first, which makes the
// returned best value nondecreasing in the budget.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonmarkov/numerics/random.hpp"

namespace nonmarkov::numerics {

struct OptimizerConfig {
  std::size_t dimension = 1;
  std::size_t budget = 4000;
  std::size_t starts = 32;
  std::uint64_t seed = 0;
  double simplex_scale = 0.5;
  /// Random starts are drawn uniformly from [-start_box, start_box]^n.
  double start_box = 1.0;
  /// 0 selects 200 * (dimension + 1).
  std::size_t max_evals_per_start = 0;
  double ftol = 1e-13;
  double xtol = 1e-10;
  /// Deterministic starting points tried before the random ones; they count
  /// toward `starts`.
  std::vector<Eigen::VectorXd> initial_points;

  void validate() const {
    if (dimension == 0) throw std::invalid_argument("OptimizerConfig: dimension must be >= 1");
    if (starts == 0) throw std::invalid_argument("OptimizerConfig: need at least one start");
    if (budget < starts * (dimension + 1)) {
      throw std::invalid_argument("OptimizerConfig: budget " + std::to_string(budget) +
                                  " is below (dimension + 1) per start = " +
                                  std::to_string(starts * (dimension + 1)));
    }
    if (!(simplex_scale > 0.0)) throw std::invalid_argument("OptimizerConfig: simplex_scale must be > 0");
    for (const auto& p : initial_points) {
      if (static_cast<std::size_t>(p.size()) != dimension) {
        throw std::invalid_argument("OptimizerConfig: initial point has wrong dimension");
      }
    }
  }
};

struct TraceEntry {
  std::size_t evaluation;
  std::size_t start;
  double value;
};

struct OptimizerResult {
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd point;
  std::vector<TraceEntry> trace;  // every improvement of the running best
  std::size_t evaluations = 0;
  std::size_t discarded = 0;      // non-finite objective values
  std::size_t starts_completed = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

inline OptimizerResult maximize(const Objective& objective, const OptimizerConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.dimension);
  const std::size_t per_start =
      config.max_evals_per_start ? config.max_evals_per_start : 200 * (config.dimension + 1);

  OptimizerResult result;
  result.point = Eigen::VectorXd::Zero(n);

  std::size_t start_index = 0;
  // Returns -f so that the simplex logic below is a minimization.
  auto eval = [&](const Eigen::VectorXd& x) -> double {
    ++result.evaluations;
    const double v = objective(x);
    if (!std::isfinite(v)) {
      ++result.discarded;
      return std::numeric_limits<double>::infinity();
    }
    if (v > result.value) {
      result.value = v;
      result.point = x;
      result.trace.push_back({result.evaluations, start_index, v});
    }
    return -v;
  };

  for (; start_index < config.starts; ++start_index) {
    if (result.evaluations + static_cast<std::size_t>(n) + 1 > config.budget) break;

    Eigen::VectorXd x0(n);
    if (start_index < config.initial_points.size()) {
      x0 = config.initial_points[start_index];
    } else {
      Rng rng(derive_seed(config.seed, "nelder-mead-start", start_index));
      for (Eigen::Index i = 0; i < n; ++i) x0(i) = rng.uniform(-config.start_box, config.start_box);
    }

    const std::size_t cap = std::min(per_start, config.budget - result.evaluations);
    std::size_t used = 0;
    auto f = [&](const Eigen::VectorXd& x) {
      ++used;
      return eval(x);
    };

    std::vector<Eigen::VectorXd> simplex(n + 1, x0);
    std::vector<double> values(n + 1);
    values[0] = f(x0);
    for (Eigen::Index i = 0; i < n; ++i) {
      simplex[i + 1](i) += config.simplex_scale;
      values[i + 1] = f(simplex[i + 1]);
    }
    std::vector<std::size_t> order(n + 1);

    while (used + 2 <= cap) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

      const double fspread = values[worst] - values[best];
      double diameter = 0.0;
      for (Eigen::Index i = 0; i <= n; ++i) {
        diameter = std::max(diameter, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
      }
      const bool flat = std::isfinite(fspread) &&
                        fspread <= config.ftol * (1.0 + std::abs(values[best]));
      if (flat || diameter <= config.xtol) break;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i <= n; ++i) {
        if (static_cast<std::size_t>(i) != worst) centroid += simplex[i];
      }
      centroid /= static_cast<double>(n);

      const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
      const double fr = f(reflected);
      if (fr < values[best]) {
        const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
        const double fe = f(expanded);
        if (fe < fr) {
          simplex[worst] = expanded, values[worst] = fe;
        } else {
          simplex[worst] = reflected, values[worst] = fr;
        }
        continue;
      }
      if (fr < values[second]) {
        simplex[worst] = reflected, values[worst] = fr;
        continue;
      }
      const bool outside = fr < values[worst];
      const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                                 : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = f(contracted);
      if (fc < (outside ? fr : values[worst])) {
        simplex[worst] = contracted, values[worst] = fc;
        continue;
      }
      // Shrink toward the best vertex.
      if (used + static_cast<std::size_t>(n) > cap) break;
      for (Eigen::Index i = 0; i <= n; ++i) {
        if (static_cast<std::size_t>(i) == best) continue;
        simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
        values[i] = f(simplex[i]);
      }
    }
    ++result.starts_completed;
  }
  return result;
}

}  // namespace nonmarkov::numerics
