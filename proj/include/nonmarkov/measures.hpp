#pragma once

// Information-flow functionals and the measures built on them.
//
// Everything here reduces to one primitive: the trace norm of
//   Delta(t) = (1_k (x) Lambda(t, 0)) Delta
// for a Hermitian Delta on ancilla (x) system. With k = 1 and
// Delta = (rho1 - rho2)/2 this is the trace distance D(rho1(t), rho2(t));
// with a Helstrom matrix it is the generalized flow sigma~.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nonmarkov/divisibility.hpp"
#include "nonmarkov/errors.hpp"
#include "nonmarkov/numerics/differentiation.hpp"
#include "nonmarkov/numerics/optimize.hpp"
#include "nonmarkov/numerics/quadrature.hpp"
#include "nonmarkov/numerics/random.hpp"
#include "nonmarkov/operators.hpp"
#include "nonmarkov/trajectory.hpp"

namespace nonmarkov {

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("trace_distance: dimension mismatch");
  return 0.5 * trace_norm_hermitian(a.matrix() - b.matrix());
}

// ---------------------------------------------------------------------------
// Helstrom matrices and one-shot discrimination

class HelstromMatrix {
 public:
  HelstromMatrix(double p, HermitianOperator delta) : p_(p), delta_(std::move(delta)) {
    check_prior(p);
  }

  HelstromMatrix(double p, const DensityMatrix& rho1, const DensityMatrix& rho2)
      : p_(p), rho1_(rho1), rho2_(rho2) {
    check_prior(p);
    if (rho1.dim() != rho2.dim()) throw std::invalid_argument("HelstromMatrix: dimension mismatch");
    delta_ = HermitianOperator((1.0 - p) * rho1.matrix() - p * rho2.matrix());
  }

  double prior() const { return p_; }
  const HermitianOperator& delta() const { return delta_; }
  const std::optional<DensityMatrix>& rho1() const { return rho1_; }
  const std::optional<DensityMatrix>& rho2() const { return rho2_; }
  Index dim() const { return delta_.dim(); }
  double trace_norm() const { return nonmarkov::trace_norm(delta_); }

 private:
  static void check_prior(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("Helstrom matrix: prior must lie in [0, 1], got " +
                                  std::to_string(p));
    }
  }

  double p_;
  HermitianOperator delta_;
  std::optional<DensityMatrix> rho1_, rho2_;
};

inline HelstromMatrix helstrom_matrix(double p, const DensityMatrix& rho1, const DensityMatrix& rho2) {
  return HelstromMatrix(p, rho1, rho2);
}

/// Minimum error of one-shot discrimination, (1 - ||Delta||_1)/2.
inline double min_error_probability(double p, const DensityMatrix& rho1, const DensityMatrix& rho2) {
  const HelstromMatrix h(p, rho1, rho2);
  if (p == 0.0 || p == 1.0) return 0.0;
  return std::clamp(0.5 * (1.0 - h.trace_norm()), 0.0, 0.5);
}

/// min over effects 0 <= T <= I of p Tr[rho2 T] + (1 - p) Tr[rho1 (I - T)],
/// searched over all sums of eigenprojectors of Delta and `n_candidates`
/// random effects.
inline double min_error_brute_force(double p, const DensityMatrix& rho1, const DensityMatrix& rho2,
                                    std::size_t n_candidates, std::uint64_t seed) {
  const HelstromMatrix h(p, rho1, rho2);
  const Index d = h.dim();
  if (d > 16) throw std::invalid_argument("min_error_brute_force: dimension too large");
  auto objective = [&](const ComplexMatrix& t) {
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    return p * (rho2.matrix() * t).trace().real() +
           (1.0 - p) * (rho1.matrix() * (id - t)).trace().real();
  };
  double best = std::numeric_limits<double>::infinity();
  const auto eig = hermitian_eigs(h.delta());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    ComplexMatrix t = ComplexMatrix::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
      if (mask & (std::uint64_t{1} << i)) t += eig.vectors.col(i) * eig.vectors.col(i).adjoint();
    }
    best = std::min(best, objective(t));
  }
  numerics::Rng rng(numerics::derive_seed(seed, "povm-effect", 0));
  for (std::size_t c = 0; c < n_candidates; ++c) {
    const ComplexMatrix u = numerics::random_unitary(rng, d);
    RealVector lambda(d);
    for (Index i = 0; i < d; ++i) lambda(i) = rng.uniform();
    best = std::min(best, objective(u * lambda.asDiagonal() * u.adjoint()));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Trace-norm flow of (1 (x) Lambda(t)) Delta

struct NormAndRate {
  double norm;
  double rate;  // right derivative
};

/// ||X||_1 and its right derivative along Xdot. Away from zero eigenvalues
/// this is Tr[sign(X) Xdot]; on the (numerically) null space the right
/// derivative contributes the trace norm of the compressed Xdot.
inline NormAndRate norm_and_right_derivative(const ComplexMatrix& x, const ComplexMatrix& xdot) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (x + x.adjoint()));
  if (solver.info() != Eigen::Success) throw NumericalError("trace-norm flow: eigensolver failed");
  const RealVector& lam = solver.eigenvalues();
  const ComplexMatrix& v = solver.eigenvectors();
  const double zero = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  const ComplexMatrix xd = v.adjoint() * (0.5 * (xdot + xdot.adjoint())) * v;
  NormAndRate out{lam.cwiseAbs().sum(), 0.0};
  std::vector<Index> null;
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > zero) {
      out.rate += xd(i, i).real();
    } else if (lam(i) < -zero) {
      out.rate -= xd(i, i).real();
    } else {
      null.push_back(i);
    }
  }
  if (!null.empty()) {
    ComplexMatrix block(null.size(), null.size());
    for (std::size_t a = 0; a < null.size(); ++a) {
      for (std::size_t b = 0; b < null.size(); ++b) block(a, b) = xd(null[a], null[b]);
    }
    out.rate += trace_norm_hermitian(block);
  }
  return out;
}

/// Evaluates trace norms of (1_k (x) Lambda(t)) Delta on a trajectory. Holds a
/// reference to the trajectory, which must outlive the evaluator.
class FlowEvaluator {
 public:
  FlowEvaluator(const MapTrajectory& traj, Index ancilla_dim)
      : traj_(&traj), k_(ancilla_dim), d_(traj.dim()) {
    if (k_ < 1) throw std::invalid_argument("FlowEvaluator: ancilla dimension must be >= 1");
    const std::size_t n = traj.grid().size();
    if (traj.is_classical()) {
      stochastic_.reserve(n);
      for (std::size_t i = 0; i < n; ++i) stochastic_.push_back(traj.native_sample(i).real());
    }
  }

  const MapTrajectory& trajectory() const { return *traj_; }
  Index ancilla_dim() const { return k_; }
  Index system_dim() const { return d_; }
  Index total_dim() const { return k_ * d_; }
  const TimeGrid& grid() const { return traj_->grid(); }

  void check(const ComplexMatrix& delta) const {
    if (delta.rows() != total_dim() || delta.cols() != total_dim()) {
      throw std::invalid_argument("flow: operator is " + std::to_string(delta.rows()) +
                                  "-dimensional, expected ancilla x system = " +
                                  std::to_string(total_dim()));
    }
  }

  /// ||Delta(t_i)||_1 on every grid node.
  std::vector<double> node_norms(const ComplexMatrix& delta) const {
    check(delta);
    const std::size_t n = grid().size();
    std::vector<double> out(n);
    if (traj_->is_classical() && is_diagonal(delta)) {
      const RealVector x = delta.diagonal().real();
      for (std::size_t i = 0; i < n; ++i) out[i] = classical_norm(stochastic_[i], x);
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const ComplexMatrix y = apply_with_ancilla(traj_->superoperator_sample(i), d_, delta, k_);
      out[i] = trace_norm_hermitian(0.5 * (y + y.adjoint()));
    }
    return out;
  }

  ComplexMatrix evolve(const ComplexMatrix& delta, double t) const {
    check(delta);
    return apply_with_ancilla(traj_->map_at(t), d_, delta, k_);
  }

  double norm_at(const ComplexMatrix& delta, double t) const {
    const ComplexMatrix y = evolve(delta, t);
    return trace_norm_hermitian(0.5 * (y + y.adjoint()));
  }

  /// Norm and right derivative at t, using dLambda/dt from the trajectory.
  NormAndRate norm_and_rate(const ComplexMatrix& delta, double t) const {
    check(delta);
    if (traj_->is_classical() && is_diagonal(delta)) {
      const RealVector x = delta.diagonal().real();
      const RealMatrix m = traj_->stochastic_at(t);
      const RealMatrix dm = traj_->stochastic_derivative_at(t);
      NormAndRate out{0.0, 0.0};
      for (Index a = 0; a < k_; ++a) {
        const RealVector y = m * x.segment(a * d_, d_);
        const RealVector dy = dm * x.segment(a * d_, d_);
        for (Index i = 0; i < d_; ++i) {
          out.norm += std::abs(y(i));
          if (y(i) > 1e-15) {
            out.rate += dy(i);
          } else if (y(i) < -1e-15) {
            out.rate -= dy(i);
          } else {
            out.rate += std::abs(dy(i));
          }
        }
      }
      return out;
    }
    const ComplexMatrix y = apply_with_ancilla(traj_->map_at(t), d_, delta, k_);
    const ComplexMatrix dy = apply_with_ancilla(traj_->derivative_at(t), d_, delta, k_);
    return norm_and_right_derivative(y, dy);
  }

  /// Pull-back (1 (x) Lambda(t)^{-1}) of the maximally (classically)
  /// correlated state, normalized to unit trace norm. Needs k >= d; the
  /// reference state occupies the first d ancilla levels.
  std::optional<ComplexMatrix> pulled_back_reference(double t) const {
    if (k_ < d_) return std::nullopt;
    const Index n = total_dim();
    const ComplexMatrix inv = traj_->native_inverse(traj_->native_at(t), t);
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    if (traj_->is_classical()) {
      const RealMatrix rinv = inv.real();
      for (Index a = 0; a < d_; ++a) {
        const RealVector col = rinv.col(a) / static_cast<double>(d_);
        for (Index i = 0; i < d_; ++i) out(a * d_ + i, a * d_ + i) = col(i);
      }
    } else {
      ComplexMatrix ref = ComplexMatrix::Zero(n, n);
      ref.topLeftCorner(d_ * d_, d_ * d_) = max_entangled_state(d_).matrix();
      out = apply_with_ancilla(inv, d_, ref, k_);
      out = 0.5 * (out + out.adjoint());
    }
    const double norm = trace_norm_hermitian(out);
    if (!(norm > 0.0) || !std::isfinite(norm)) return std::nullopt;
    return ComplexMatrix(out / norm);
  }

 private:
  static bool is_diagonal(const ComplexMatrix& m) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) {
        if (i != j && m(i, j) != Complex(0.0)) return false;
      }
    }
    return true;
  }

  double classical_norm(const RealMatrix& m, const RealVector& x) const {
    double acc = 0.0;
    for (Index a = 0; a < k_; ++a) {
      const double* xa = x.data() + a * d_;
      for (Index i = 0; i < d_; ++i) {
        double y = 0.0;
        for (Index j = 0; j < d_; ++j) y += m(i, j) * xa[j];
        acc += std::abs(y);
      }
    }
    return acc;
  }

  const MapTrajectory* traj_;
  Index k_;
  Index d_;
  std::vector<RealMatrix> stochastic_;
};

/// Sampled flow: norms, central-difference rates, the positive-rate
/// intervals (endpoints refined by bisection), and the integral of the rate
/// over those intervals.
struct FlowTrace {
  std::vector<double> t;
  std::vector<double> values;
  std::vector<double> rates;
  std::vector<std::pair<double, double>> intervals;
  double positive_integral = 0.0;
  /// Largest grid rate and where it occurs.
  double max_rate = -std::numeric_limits<double>::infinity();
  double argmax_rate = 0.0;
};

struct FlowOptions {
  /// Rates at or below this count as non-positive (absorbs roundoff in
  /// differences of saturated norms).
  double positivity_threshold = 1e-9;
  /// Bisection tolerance on interval endpoints.
  double endpoint_tolerance = 1e-8;
  /// Skip endpoint refinement and interval integration.
  bool rates_only = false;
};

inline std::vector<double> grid_rates(std::span<const double> values, double h) {
  std::vector<double> r(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) r[i] = numerics::central_diff(values, h, i);
  return r;
}

inline FlowTrace flow_trace(const FlowEvaluator& eval, const ComplexMatrix& delta,
                            const FlowOptions& opt = {}) {
  const TimeGrid& grid = eval.grid();
  const double h = grid.step();
  FlowTrace out;
  out.t = grid.times();
  out.values = eval.node_norms(delta);
  out.rates = grid_rates(out.values, h);
  for (std::size_t i = 0; i < out.rates.size(); ++i) {
    if (out.rates[i] > out.max_rate) {
      out.max_rate = out.rates[i];
      out.argmax_rate = out.t[i];
    }
  }
  if (opt.rates_only) return out;

  const double thr = opt.positivity_threshold;
  auto positive = [&](double t) { return eval.norm_and_rate(delta, t).rate > thr; };
  // Boundary between a non-positive point lo and a positive point hi.
  auto refine = [&](double lo, double hi, bool rising) {
    const bool lo_pos = positive(lo), hi_pos = positive(hi);
    if (rising) {
      if (lo_pos) return lo;
      if (!hi_pos) return hi;
    } else {
      if (!lo_pos) return lo;
      if (hi_pos) return hi;
    }
    while (hi - lo > opt.endpoint_tolerance) {
      const double mid = 0.5 * (lo + hi);
      (positive(mid) == rising ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };

  const std::size_t n = out.t.size();
  std::size_t i = 0;
  while (i < n) {
    if (!(out.rates[i] > thr)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && out.rates[j + 1] > thr) ++j;
    const double a = i == 0 ? out.t[0] : refine(out.t[i - 1], out.t[i], true);
    const double b = j + 1 == n ? out.t[n - 1] : refine(out.t[j], out.t[j + 1], false);
    if (b > a) {
      const double gain = eval.norm_at(delta, b) - eval.norm_at(delta, a);
      out.intervals.emplace_back(a, b);
      out.positive_integral += std::max(0.0, gain);
    }
    i = j + 1;
  }
  return out;
}

/// sigma(rho1, rho2; t) = dD/dt by central difference with the grid step.
inline double sigma(const MapTrajectory& traj, const DensityMatrix& rho1, const DensityMatrix& rho2,
                    double t) {
  if (rho1.dim() != traj.dim() || rho2.dim() != traj.dim()) {
    throw std::invalid_argument("sigma: state dimension differs from the trajectory");
  }
  const double h = traj.grid().step();
  if (t - h < -1e-12 || t + h > traj.grid().t_max() * (1.0 + 1e-12)) {
    throw std::out_of_range("sigma: t must be at least one step inside the grid");
  }
  const FlowEvaluator eval(traj, 1);
  const ComplexMatrix delta = 0.5 * (rho1.matrix() - rho2.matrix());
  return (eval.norm_at(delta, t + h) - eval.norm_at(delta, t - h)) / (2.0 * h);
}

/// sigma~(Delta; t) = d/dt ||(1_k (x) Lambda(t)) Delta||_1, central difference.
inline double sigma_tilde(const MapTrajectory& traj, const HermitianOperator& delta, double t,
                          Index ancilla_dim) {
  const double h = traj.grid().step();
  if (t - h < -1e-12 || t + h > traj.grid().t_max() * (1.0 + 1e-12)) {
    throw std::out_of_range("sigma_tilde: t must be at least one step inside the grid");
  }
  const FlowEvaluator eval(traj, ancilla_dim);
  return (eval.norm_at(delta.matrix(), t + h) - eval.norm_at(delta.matrix(), t - h)) / (2.0 * h);
}

struct SidedRates {
  double central;
  std::optional<double> backward;
  std::optional<double> forward;
};

/// Central rate plus the second-order one-sided rates, which differ at kinks
/// of the trace norm (eigenvalues of Delta(t) crossing zero).
inline SidedRates sigma_tilde_sided(const MapTrajectory& traj, const HermitianOperator& delta,
                                    double t, Index ancilla_dim) {
  const double h = traj.grid().step();
  const FlowEvaluator eval(traj, ancilla_dim);
  std::vector<double> f;
  std::size_t centre = 0;
  for (int s = -2; s <= 2; ++s) {
    const double ts = t + s * h;
    if (ts < -1e-12 || ts > traj.grid().t_max() * (1.0 + 1e-12)) continue;
    if (s == 0) centre = f.size();
    f.push_back(eval.norm_at(delta.matrix(), ts));
  }
  const auto sided = numerics::one_sided_diff(f, h, centre);
  const double central = centre > 0 && centre + 1 < f.size()
                             ? (f[centre + 1] - f[centre - 1]) / (2.0 * h)
                             : sided.forward.value_or(sided.backward.value_or(0.0));
  return {central, sided.backward, sided.forward};
}

// ---------------------------------------------------------------------------
// Measures

enum class MeasureName { RHP, BLP, HELSTROM };

inline const char* to_string(MeasureName m) {
  switch (m) {
    case MeasureName::RHP: return "RHP";
    case MeasureName::BLP: return "BLP";
    case MeasureName::HELSTROM: return "HELSTROM";
  }
  return "?";
}

struct SearchOptions {
  std::size_t budget = 6400;
  std::size_t starts = 32;
  std::uint64_t seed = 0;
  /// 0 selects 200 * (dimension + 1).
  std::size_t max_evals_per_start = 0;
  double positivity_threshold = 1e-9;
};

struct MeasureResult {
  MeasureName name = MeasureName::RHP;
  double value = 0.0;
  double horizon = 0.0;
  // RHP
  double integral = 0.0;
  bool divergent = false;
  // BLP / HELSTROM
  std::size_t budget = 0;
  std::size_t evaluations = 0;
  std::size_t discarded = 0;
  std::uint64_t seed = 0;
  Index ancilla_dim = 1;
  std::optional<ComplexMatrix> rho1, rho2;
  std::optional<double> prior;
  std::optional<ComplexMatrix> delta;
  std::vector<std::pair<double, double>> intervals;
};

/// Running integral of a sampled rate is flagged as divergent when its last
/// third still contributes at least half as much as its middle third.
inline bool flags_divergence(std::span<const double> g, double h) {
  const std::size_t n = g.size();
  if (n < 10) return false;
  const std::size_t a = (n - 1) / 3, b = 2 * (n - 1) / 3;
  const double mid = numerics::trapezoid(g.subspan(a, b - a + 1), h);
  const double last = numerics::trapezoid(g.subspan(b), h);
  return last > 1e-6 && last >= 0.5 * mid;
}

/// I(T) = int_0^T g dt by composite Simpson on the grid; value I/(I + 1).
inline MeasureResult n_rhp_from_trace(const GTrace& trace, double h) {
  MeasureResult r;
  r.name = MeasureName::RHP;
  r.horizon = trace.t.back();
  r.integral = numerics::simpson(trace.g, h);
  r.value = r.integral / (r.integral + 1.0);
  r.divergent = flags_divergence(trace.g, h);
  return r;
}

inline MeasureResult n_rhp(const MapTrajectory& traj, double t_max) {
  if (t_max > traj.grid().t_max() * (1.0 + 1e-12)) {
    throw std::invalid_argument("n_rhp: horizon exceeds the trajectory");
  }
  GTrace full = g_trace(traj);
  const auto last = std::min(full.t.size() - 1,
                             static_cast<std::size_t>(std::floor(t_max / traj.grid().step() + 1e-9)));
  full.t.resize(last + 1);
  full.g.resize(last + 1);
  for (const double gi : full.g) {
    if (!std::isfinite(gi)) throw NumericalError("n_rhp: non-finite g sample");
  }
  return n_rhp_from_trace(full, traj.grid().step());
}

namespace detail {

/// rho = A A^dagger / Tr with A read column-major from (re, im) pairs, or for
/// classical states p_i = a_i^2 / sum a^2. Returns an empty matrix when the
/// normalization vanishes.
inline ComplexMatrix state_from_params(const double* x, Index n, bool classical) {
  if (classical) {
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += x[i] * x[i];
    if (!(total > 0.0)) return {};
    for (Index i = 0; i < n; ++i) rho(i, i) = x[i] * x[i] / total;
    return rho;
  }
  ComplexMatrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) a(i, j) = Complex(x[2 * (i + n * j)], x[2 * (i + n * j) + 1]);
  }
  ComplexMatrix rho = a * a.adjoint();
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) return {};
  return rho / tr;
}

inline Index state_param_count(Index n, bool classical) { return classical ? n : 2 * n * n; }

/// Inverse of state_from_params via A = sqrt(rho) (or a = sqrt(p)).
inline void params_from_state(const ComplexMatrix& rho, bool classical, double* out) {
  const Index n = rho.rows();
  if (classical) {
    for (Index i = 0; i < n; ++i) out[i] = std::sqrt(std::max(0.0, rho(i, i).real()));
    return;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (rho + rho.adjoint()));
  const ComplexMatrix a = solver.eigenvectors() *
                          solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                          solver.eigenvectors().adjoint();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      out[2 * (i + n * j)] = a(i, j).real();
      out[2 * (i + n * j) + 1] = a(i, j).imag();
    }
  }
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Splits a Hermitian Delta into (1 - p) rho1 - p rho2 (up to its trace norm).
struct HelstromSplit {
  ComplexMatrix rho1, rho2;
  double p;
};

inline HelstromSplit split_helstrom(const ComplexMatrix& delta) {
  const Index n = delta.rows();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (delta + delta.adjoint()));
  const RealVector& lam = solver.eigenvalues();
  const ComplexMatrix& v = solver.eigenvectors();
  const ComplexMatrix pos = v * lam.cwiseMax(0.0).asDiagonal() * v.adjoint();
  const ComplexMatrix neg = v * (-lam).cwiseMax(0.0).asDiagonal() * v.adjoint();
  const double tp = pos.trace().real(), tn = neg.trace().real();
  const ComplexMatrix mixed = ComplexMatrix::Identity(n, n) / static_cast<double>(n);
  HelstromSplit s;
  s.rho1 = tp > 0.0 ? ComplexMatrix(pos / tp) : mixed;
  s.rho2 = tn > 0.0 ? ComplexMatrix(neg / tn) : mixed;
  s.p = std::clamp(tn / std::max(tp + tn, 1e-300), 1e-6, 1.0 - 1e-6);
  return s;
}

inline numerics::OptimizerConfig optimizer_config(const SearchOptions& opt, std::size_t dim) {
  numerics::OptimizerConfig c;
  c.dimension = dim;
  c.budget = opt.budget;
  c.starts = opt.starts;
  c.seed = opt.seed;
  c.max_evals_per_start = opt.max_evals_per_start;
  return c;
}

/// Objective shared by the BLP and Helstrom searches: the positive-rate
/// integral when it is positive, otherwise the (non-positive) margin
/// max_t rate - threshold, which gives the simplex a slope to climb on the
/// flat zero region. Only positive values are ever reported as the measure.
inline double backflow_objective(const FlowEvaluator& eval, const ComplexMatrix& delta,
                                 double threshold, std::vector<double>* scratch_rates = nullptr) {
  const std::vector<double> norms = eval.node_norms(delta);
  std::vector<double> rates = grid_rates(norms, eval.grid().step());
  const double max_rate = *std::max_element(rates.begin(), rates.end());
  if (scratch_rates) *scratch_rates = rates;
  if (!(max_rate > threshold)) return max_rate - threshold;
  FlowOptions fo;
  fo.positivity_threshold = threshold;
  return flow_trace(eval, delta, fo).positive_integral;
}

}  // namespace detail

/// N_BLP restricted to [0, T]: sup over state pairs of the integral of sigma
/// over its positive part. Reported value is a lower bound from multistart
/// simplex search.
inline MeasureResult n_blp(const MapTrajectory& traj, const SearchOptions& opt) {
  const Index d = traj.dim();
  const bool classical = traj.is_classical();
  const FlowEvaluator eval(traj, 1);
  const Index per_state = detail::state_param_count(d, classical);

  auto make_delta = [&](const Eigen::VectorXd& x, ComplexMatrix& r1, ComplexMatrix& r2) {
    r1 = detail::state_from_params(x.data(), d, classical);
    r2 = detail::state_from_params(x.data() + per_state, d, classical);
    return r1.size() != 0 && r2.size() != 0;
  };
  auto objective = [&](const Eigen::VectorXd& x) {
    ComplexMatrix r1, r2;
    if (!make_delta(x, r1, r2)) return std::numeric_limits<double>::quiet_NaN();
    return detail::backflow_objective(eval, 0.5 * (r1 - r2), opt.positivity_threshold);
  };
  const auto res = numerics::maximize(objective, detail::optimizer_config(opt, 2 * per_state));

  MeasureResult r;
  r.name = MeasureName::BLP;
  r.horizon = traj.grid().t_max();
  r.budget = opt.budget;
  r.evaluations = res.evaluations;
  r.discarded = res.discarded;
  r.seed = opt.seed;
  r.value = std::max(0.0, res.value);
  if (r.value > 0.0) {
    ComplexMatrix r1, r2;
    make_delta(res.point, r1, r2);
    r.rho1 = r1;
    r.rho2 = r2;
    FlowOptions fo;
    fo.positivity_threshold = opt.positivity_threshold;
    r.intervals = flow_trace(eval, 0.5 * (r1 - r2), fo).intervals;
  }
  return r;
}

struct BackflowWitness {
  HermitianOperator delta;
  Index ancilla_dim = 1;
  double t = 0.0;
  double sigma_tilde = 0.0;
};

namespace detail {

/// Grid node of maximal g, restricted so that the pull-back time t - 2h and
/// the central difference at t + h stay on the grid.
inline std::optional<std::size_t> peak_g_node(const MapTrajectory& traj) {
  const GTrace g = g_trace(traj);
  const std::size_t n = g.g.size();
  if (n < 5) return std::nullopt;
  std::size_t best = 2;
  for (std::size_t i = 2; i + 1 < n; ++i) {
    if (g.g[i] > g.g[best]) best = i;
  }
  return best;
}

/// Deterministic witness candidate: the reference state pulled back from two
/// steps before the time of maximal g, so that Delta(t) restarts from P+ just
/// before the propagator fails to be CP.
inline std::optional<ComplexMatrix> pullback_seed(const FlowEvaluator& eval) {
  const auto node = peak_g_node(eval.trajectory());
  if (!node) return std::nullopt;
  try {
    return eval.pulled_back_reference(eval.grid()[*node - 2]);
  } catch (const SingularMapError&) {
    return std::nullopt;
  }
}

struct HelstromSearch {
  Index n;
  bool classical;
  Index per_state;
  std::size_t dim() const { return static_cast<std::size_t>(2 * per_state + 1); }

  ComplexMatrix delta(const Eigen::VectorXd& x) const {
    const ComplexMatrix r1 = state_from_params(x.data(), n, classical);
    const ComplexMatrix r2 = state_from_params(x.data() + per_state, n, classical);
    if (r1.size() == 0 || r2.size() == 0) return {};
    const double p = logistic(x(2 * per_state));
    return (1.0 - p) * r1 - p * r2;
  }

  Eigen::VectorXd encode(const ComplexMatrix& delta_in) const {
    const HelstromSplit s = split_helstrom(delta_in);
    Eigen::VectorXd x(static_cast<Index>(dim()));
    params_from_state(s.rho1, classical, x.data());
    params_from_state(s.rho2, classical, x.data() + per_state);
    x(2 * per_state) = std::log(s.p / (1.0 - s.p));
    return x;
  }
};

inline HelstromSearch helstrom_search(const FlowEvaluator& eval) {
  const bool classical = eval.trajectory().is_classical();
  const Index n = eval.total_dim();
  return {n, classical, state_param_count(n, classical)};
}

}  // namespace detail

/// Generalized measure: sup over Helstrom matrices (1 - p) rho1 - p rho2 on
/// ancilla (x) system of the integral of sigma~ over its positive part.
/// `seeds` are extra Hermitian starting points (normalized internally).
inline MeasureResult n_helstrom(const MapTrajectory& traj, Index ancilla_dim,
                                const SearchOptions& opt,
                                const std::vector<ComplexMatrix>& seeds = {}) {
  const FlowEvaluator eval(traj, ancilla_dim);
  const auto search = detail::helstrom_search(eval);

  numerics::OptimizerConfig cfg = detail::optimizer_config(opt, search.dim());
  if (auto s = detail::pullback_seed(eval)) cfg.initial_points.push_back(search.encode(*s));
  for (const auto& s : seeds) {
    eval.check(s);
    cfg.initial_points.push_back(search.encode(s));
  }
  if (cfg.initial_points.size() > cfg.starts) cfg.initial_points.resize(cfg.starts);

  auto objective = [&](const Eigen::VectorXd& x) {
    const ComplexMatrix delta = search.delta(x);
    if (delta.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    return detail::backflow_objective(eval, delta, opt.positivity_threshold);
  };
  const auto res = numerics::maximize(objective, cfg);

  MeasureResult r;
  r.name = MeasureName::HELSTROM;
  r.horizon = traj.grid().t_max();
  r.budget = opt.budget;
  r.evaluations = res.evaluations;
  r.discarded = res.discarded;
  r.seed = opt.seed;
  r.ancilla_dim = ancilla_dim;
  r.value = std::max(0.0, res.value);
  if (r.value > 0.0) {
    const ComplexMatrix delta = search.delta(res.point);
    r.delta = delta;
    r.prior = detail::logistic(res.point(2 * search.per_state));
    r.rho1 = detail::state_from_params(res.point.data(), search.n, search.classical);
    r.rho2 = detail::state_from_params(res.point.data() + search.per_state, search.n,
                                       search.classical);
    FlowOptions fo;
    fo.positivity_threshold = opt.positivity_threshold;
    r.intervals = flow_trace(eval, delta, fo).intervals;
  }
  return r;
}

/// Searches for a Hermitian Delta on ancilla (x) system and a grid time with
/// sigma~ > threshold. Tries the pull-back seed first, then the supplied
/// seeds, then the simplex search on max_t sigma~.
inline std::optional<BackflowWitness> find_backflow_witness(
    const MapTrajectory& traj, Index ancilla_dim, const SearchOptions& opt,
    const std::vector<ComplexMatrix>& seeds = {}, double threshold = 1e-7) {
  const FlowEvaluator eval(traj, ancilla_dim);
  const double h = eval.grid().step();
  const std::size_t n = eval.grid().size();

  // Largest interior central-difference rate of a candidate.
  auto score = [&](const ComplexMatrix& delta, std::size_t* where) {
    const std::vector<double> norms = eval.node_norms(delta);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double r = (norms[i + 1] - norms[i - 1]) / (2.0 * h);
      if (r > best) {
        best = r;
        if (where) *where = i;
      }
    }
    return best;
  };
  auto accept = [&](const ComplexMatrix& delta) -> std::optional<BackflowWitness> {
    std::size_t where = 0;
    const double s = score(delta, &where);
    if (!(s > threshold)) return std::nullopt;
    BackflowWitness w{HermitianOperator(delta, tolerance::property), ancilla_dim, eval.grid()[where], s};
    return w;
  };

  std::vector<ComplexMatrix> candidates;
  if (auto s = detail::pullback_seed(eval)) candidates.push_back(*s);
  for (const auto& s : seeds) {
    eval.check(s);
    candidates.push_back(s / std::max(trace_norm_hermitian(s), 1e-300));
  }
  for (const auto& c : candidates) {
    if (auto w = accept(c)) return w;
  }

  const auto search = detail::helstrom_search(eval);
  numerics::OptimizerConfig cfg = detail::optimizer_config(opt, search.dim());
  for (const auto& c : candidates) cfg.initial_points.push_back(search.encode(c));
  if (cfg.initial_points.size() > cfg.starts) cfg.initial_points.resize(cfg.starts);
  auto objective = [&](const Eigen::VectorXd& x) {
    const ComplexMatrix delta = search.delta(x);
    if (delta.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    return score(delta, nullptr);
  };
  const auto res = numerics::maximize(objective, cfg);
  if (!(res.value > threshold)) return std::nullopt;
  return accept(search.delta(res.point));
}

}  // namespace nonmarkov
