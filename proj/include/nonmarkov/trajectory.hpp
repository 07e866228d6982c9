#pragma once

// Time-gridded dynamical maps Lambda(t, 0).
//
// A trajectory stores its maps on a uniform grid t_i = i*h, i = 0..N, in a
// "native" representation: the d^2 x d^2 superoperator matrix for quantum
// maps, the d x d column-stochastic matrix for classical ones. Off-grid
// values come from the analytic functions when the model supplies them,
// otherwise from piecewise cubic Hermite interpolation (when derivative
// samples exist) or four-point Lagrange interpolation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nonmarkov/errors.hpp"
#include "nonmarkov/operators.hpp"

namespace nonmarkov {

/// Uniform grid on [0, t_max]. The number of steps is ceil(t_max / h) and the
/// step is then shrunk so that the last node lands exactly on t_max.
class TimeGrid {
 public:
  TimeGrid() = default;

  TimeGrid(double t_max, double h_requested) {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
      throw std::invalid_argument("TimeGrid: t_max must be positive and finite");
    }
    if (!(h_requested > 0.0) || h_requested > t_max) {
      throw std::invalid_argument("TimeGrid: step must lie in (0, t_max]");
    }
    steps_ = static_cast<std::size_t>(std::ceil(t_max / h_requested - 1e-9));
    steps_ = std::max<std::size_t>(steps_, 1);
    t_max_ = t_max;
    h_ = t_max / static_cast<double>(steps_);
  }

  double t_max() const { return t_max_; }
  double step() const { return h_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double operator[](std::size_t i) const {
    return i == steps_ ? t_max_ : static_cast<double>(i) * h_;
  }
  std::vector<double> times() const {
    std::vector<double> t(size());
    for (std::size_t i = 0; i < size(); ++i) t[i] = (*this)[i];
    return t;
  }

  /// Index of the node at t, if t is a node up to 1e-9 relative to h.
  std::optional<std::size_t> node(double t) const {
    const double x = t / h_;
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9 && r >= 0.0 && r <= static_cast<double>(steps_)) {
      return static_cast<std::size_t>(r);
    }
    return std::nullopt;
  }

  bool contains(double t) const { return t >= -1e-12 * t_max_ && t <= t_max_ * (1.0 + 1e-12); }

 private:
  double t_max_ = 1.0;
  double h_ = 1.0;
  std::size_t steps_ = 1;
};

enum class MapKind { quantum, classical };
enum class Provenance { analytic, integrated };

inline const char* to_string(MapKind k) { return k == MapKind::quantum ? "quantum" : "classical"; }
inline const char* to_string(Provenance p) {
  return p == Provenance::analytic ? "analytic" : "integrated";
}

/// Smallest singular value below which a map counts as non-invertible.
inline constexpr double kInvertibilityThreshold = 1e-10;

class MapTrajectory {
 public:
  /// Native-representation matrix as a function of time.
  using MatrixFunction = std::function<ComplexMatrix(double)>;

  MapTrajectory() = default;

  /// Quantum trajectory from superoperator samples. `derivatives`, if given,
  /// holds exact d/dt samples on the same grid.
  static MapTrajectory from_samples(const TimeGrid& grid, std::vector<ComplexMatrix> maps,
                                    std::vector<ComplexMatrix> derivatives = {},
                                    Provenance provenance = Provenance::integrated) {
    return MapTrajectory(MapKind::quantum, provenance, grid, std::move(maps),
                         std::move(derivatives), {}, {});
  }

  /// Quantum trajectory from a closed-form map and its exact time derivative.
  static MapTrajectory from_function(const TimeGrid& grid, MatrixFunction map,
                                     MatrixFunction derivative) {
    std::vector<ComplexMatrix> maps(grid.size()), derivs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      maps[i] = map(grid[i]);
      derivs[i] = derivative(grid[i]);
    }
    return MapTrajectory(MapKind::quantum, Provenance::analytic, grid, std::move(maps),
                         std::move(derivs), std::move(map), std::move(derivative));
  }

  static MapTrajectory classical_from_samples(const TimeGrid& grid,
                                              const std::vector<RealMatrix>& maps,
                                              const std::vector<RealMatrix>& derivatives = {},
                                              Provenance provenance = Provenance::integrated) {
    std::vector<ComplexMatrix> m, dm;
    for (const auto& x : maps) m.emplace_back(x.cast<Complex>());
    for (const auto& x : derivatives) dm.emplace_back(x.cast<Complex>());
    return MapTrajectory(MapKind::classical, provenance, grid, std::move(m), std::move(dm), {}, {});
  }

  static MapTrajectory classical_from_function(const TimeGrid& grid,
                                               std::function<RealMatrix(double)> map,
                                               std::function<RealMatrix(double)> derivative) {
    MatrixFunction m = [map](double t) { return ComplexMatrix(map(t).cast<Complex>()); };
    MatrixFunction dm = [derivative](double t) {
      return ComplexMatrix(derivative(t).cast<Complex>());
    };
    std::vector<ComplexMatrix> maps(grid.size()), derivs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      maps[i] = m(grid[i]);
      derivs[i] = dm(grid[i]);
    }
    return MapTrajectory(MapKind::classical, Provenance::analytic, grid, std::move(maps),
                         std::move(derivs), std::move(m), std::move(dm));
  }

  MapKind kind() const { return kind_; }
  Provenance provenance() const { return provenance_; }
  bool is_classical() const { return kind_ == MapKind::classical; }
  /// System (Hilbert-space or state-space) dimension d.
  Index dim() const { return dim_; }
  const TimeGrid& grid() const { return grid_; }
  bool has_exact_derivatives() const { return !derivatives_.empty(); }

  /// Native sample at node i (superoperator matrix or stochastic matrix).
  const ComplexMatrix& native_sample(std::size_t i) const { return maps_.at(i); }

  /// Native representation at time t.
  ComplexMatrix native_at(double t) const {
    check_time(t);
    if (auto i = grid_.node(t)) return maps_[*i];
    if (map_fn_) return map_fn_(t);
    return interpolate(t, false);
  }

  /// d/dt of the native representation at time t.
  ComplexMatrix native_derivative_at(double t) const {
    check_time(t);
    const auto node = grid_.node(t);
    if (node && !derivatives_.empty()) return derivatives_[*node];
    if (derivative_fn_) return derivative_fn_(t);
    if (node) return grid_difference(*node);
    return interpolate(t, true);
  }

  /// Superoperator matrix of Lambda(t, 0); classical maps are embedded.
  ComplexMatrix map_at(double t) const { return to_superoperator(native_at(t)); }
  ComplexMatrix derivative_at(double t) const { return to_superoperator(native_derivative_at(t)); }
  ComplexMatrix superoperator_sample(std::size_t i) const { return to_superoperator(maps_.at(i)); }

  Superoperator map(double t) const { return Superoperator(map_at(t)); }

  RealMatrix stochastic_at(double t) const {
    require_classical("stochastic_at");
    return native_at(t).real();
  }
  RealMatrix stochastic_derivative_at(double t) const {
    require_classical("stochastic_derivative_at");
    return native_derivative_at(t).real();
  }

  /// Inverse of the native representation; throws SingularMapError when the
  /// smallest singular value is below kInvertibilityThreshold.
  ComplexMatrix native_inverse(const ComplexMatrix& m, double t) const {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues().minCoeff();
    if (!(smin > kInvertibilityThreshold)) throw SingularMapError(t, smin);
    return svd.matrixV() * svd.singularValues().cwiseInverse().asDiagonal() *
           svd.matrixU().adjoint();
  }

  double smallest_singular_value(double t) const {
    Eigen::JacobiSVD<ComplexMatrix> svd(native_at(t));
    return svd.singularValues().minCoeff();
  }

  ComplexMatrix to_superoperator(const ComplexMatrix& native) const {
    if (kind_ == MapKind::quantum) return native;
    return classical_embedding(native.real()).matrix();
  }

 private:
  MapTrajectory(MapKind kind, Provenance provenance, const TimeGrid& grid,
                std::vector<ComplexMatrix> maps, std::vector<ComplexMatrix> derivatives,
                MatrixFunction map_fn, MatrixFunction derivative_fn)
      : kind_(kind),
        provenance_(provenance),
        grid_(grid),
        maps_(std::move(maps)),
        derivatives_(std::move(derivatives)),
        map_fn_(std::move(map_fn)),
        derivative_fn_(std::move(derivative_fn)) {
    validate();
  }

  void validate() {
    if (maps_.size() != grid_.size()) {
      throw std::invalid_argument("MapTrajectory: " + std::to_string(maps_.size()) +
                                  " samples for a grid of " + std::to_string(grid_.size()));
    }
    if (grid_.size() < 4) throw std::invalid_argument("MapTrajectory: grid needs at least 4 nodes");
    if (!derivatives_.empty() && derivatives_.size() != maps_.size()) {
      throw std::invalid_argument("MapTrajectory: derivative table length differs from samples");
    }
    const Index n = maps_.front().rows();
    if (n == 0 || maps_.front().cols() != n) {
      throw std::invalid_argument("MapTrajectory: samples must be square");
    }
    dim_ = kind_ == MapKind::quantum ? detail::checked_sqrt(n) : n;
    constexpr double tol = 1e-8;
    for (std::size_t i = 0; i < maps_.size(); ++i) {
      const auto& m = maps_[i];
      if (m.rows() != n || m.cols() != n) {
        throw std::invalid_argument("MapTrajectory: inconsistent sample dimensions");
      }
      if (!m.allFinite()) {
        throw NumericalError("MapTrajectory: non-finite sample at t = " + std::to_string(grid_[i]));
      }
      if (kind_ == MapKind::quantum) {
        const double defect = Superoperator(m).trace_defect();
        if (defect > tol) {
          throw InvalidModel("MapTrajectory: map at t = " + std::to_string(grid_[i]) +
                             " is not trace preserving (defect " + std::to_string(defect) + ")");
        }
      } else {
        if (m.imag().cwiseAbs().maxCoeff() > tol) {
          throw InvalidModel("MapTrajectory: classical sample has imaginary entries");
        }
        const RealMatrix r = m.real();
        const double col = (r.colwise().sum().array() - 1.0).abs().maxCoeff();
        if (col > tol || r.minCoeff() < -tol) {
          throw InvalidModel("MapTrajectory: classical map at t = " + std::to_string(grid_[i]) +
                             " is not stochastic");
        }
      }
    }
    const double id_err = (maps_.front() - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (id_err > tol) {
      throw InvalidModel("MapTrajectory: Lambda(0,0) differs from the identity by " +
                         std::to_string(id_err));
    }
  }

  void check_time(double t) const {
    if (!grid_.contains(t)) {
      throw std::out_of_range("MapTrajectory: t = " + std::to_string(t) + " outside [0, " +
                              std::to_string(grid_.t_max()) + "]");
    }
  }

  void require_classical(const char* what) const {
    if (kind_ != MapKind::classical) {
      throw ContractViolation(std::string(what) + ": trajectory is not classical");
    }
  }

  ComplexMatrix grid_difference(std::size_t i) const {
    const double h = grid_.step();
    const std::size_t n = maps_.size();
    if (i == 0) return (-3.0 * maps_[0] + 4.0 * maps_[1] - maps_[2]) / (2.0 * h);
    if (i == n - 1) return (3.0 * maps_[n - 1] - 4.0 * maps_[n - 2] + maps_[n - 3]) / (2.0 * h);
    return (maps_[i + 1] - maps_[i - 1]) / (2.0 * h);
  }

  ComplexMatrix interpolate(double t, bool derivative) const {
    const double h = grid_.step();
    const std::size_t last = maps_.size() - 1;
    auto i = static_cast<std::size_t>(std::floor(t / h));
    i = std::min(i, last - 1);
    const double s = (t - grid_[i]) / h;  // in [0, 1]

    if (!derivatives_.empty()) {
      // Cubic Hermite on [t_i, t_{i+1}].
      const ComplexMatrix& p0 = maps_[i];
      const ComplexMatrix& p1 = maps_[i + 1];
      const ComplexMatrix m0 = h * derivatives_[i];
      const ComplexMatrix m1 = h * derivatives_[i + 1];
      const double s2 = s * s, s3 = s2 * s;
      if (!derivative) {
        return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 +
               (s3 - s2) * m1;
      }
      return ((6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * p1 +
              (3 * s2 - 2 * s) * m1) /
             h;
    }

    // Four-point Lagrange on nodes j0..j0+3 around t.
    std::size_t j0 = i == 0 ? 0 : i - 1;
    j0 = std::min(j0, last - 3);
    const double x = t / h - static_cast<double>(j0);  // position in node units
    ComplexMatrix out = ComplexMatrix::Zero(maps_[0].rows(), maps_[0].cols());
    for (int a = 0; a < 4; ++a) {
      double w = 0.0;
      if (!derivative) {
        w = 1.0;
        for (int b = 0; b < 4; ++b) {
          if (b != a) w *= (x - b) / static_cast<double>(a - b);
        }
      } else {
        for (int c = 0; c < 4; ++c) {
          if (c == a) continue;
          double term = 1.0 / static_cast<double>(a - c);
          for (int b = 0; b < 4; ++b) {
            if (b != a && b != c) term *= (x - b) / static_cast<double>(a - b);
          }
          w += term;
        }
        w /= h;
      }
      out += w * maps_[j0 + static_cast<std::size_t>(a)];
    }
    return out;
  }

  MapKind kind_ = MapKind::quantum;
  Provenance provenance_ = Provenance::integrated;
  TimeGrid grid_;
  std::vector<ComplexMatrix> maps_;
  std::vector<ComplexMatrix> derivatives_;
  MatrixFunction map_fn_;
  MatrixFunction derivative_fn_;
  Index dim_ = 0;
};

}  // namespace nonmarkov
