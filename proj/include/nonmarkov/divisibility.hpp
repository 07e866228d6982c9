#pragma once

// Divisibility diagnostics: local generators, propagators, the indivisibility
// rate g(t), Kolmogorov and dissipativity conditions, and contraction norms.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonmarkov/errors.hpp"
#include "nonmarkov/numerics/random.hpp"
#include "nonmarkov/operators.hpp"
#include "nonmarkov/trajectory.hpp"

namespace nonmarkov {

struct GeneratorSample {
  double t = 0.0;
  /// L(t) as a superoperator (the embedded rate matrix for classical maps).
  Superoperator generator;
  /// Rate matrix L_ij(t), classical trajectories only.
  std::optional<RealMatrix> rates;
  HermitianOperator choi;
};

/// L(t) = dLambda/dt(t) Lambda(t)^{-1}.
inline GeneratorSample local_generator(const MapTrajectory& traj, double t) {
  const ComplexMatrix m = traj.native_at(t);
  const ComplexMatrix dm = traj.native_derivative_at(t);
  const ComplexMatrix native = dm * traj.native_inverse(m, t);
  GeneratorSample out;
  out.t = t;
  if (traj.is_classical()) {
    out.rates = native.real();
    out.generator = classical_embedding(*out.rates);
  } else {
    // Symmetrize away roundoff that would otherwise trip the Hermiticity flag.
    const Index d = traj.dim();
    ComplexMatrix sym = native;
    for (Index j = 0; j < d; ++j) {
      for (Index k = 0; k < d; ++k) {
        sym.col(j + d * k) = 0.5 * (vec(unvec(native.col(j + d * k), d)) +
                                    vec(unvec(native.col(k + d * j), d).adjoint()));
      }
    }
    out.generator = Superoperator(sym);
  }
  out.choi = choi_matrix(out.generator);
  return out;
}

/// Lambda(t + tau, t) = Lambda(t + tau, 0) Lambda(t, 0)^{-1}.
inline Superoperator propagator(const MapTrajectory& traj, double t, double tau) {
  if (tau < 0.0) throw std::invalid_argument("propagator: tau must be >= 0");
  const ComplexMatrix m = traj.native_at(t);
  const ComplexMatrix native = traj.native_at(t + tau) * traj.native_inverse(m, t);
  return Superoperator(traj.to_superoperator(native));
}

// ---------------------------------------------------------------------------
// g(t)

enum class GRoute { closed_form, richardson };

namespace detail {

inline ComplexMatrix generator_choi(const ComplexMatrix& l, Index d) {
  ComplexMatrix c = apply_with_ancilla(l, d, max_entangled_state(d).matrix(), d);
  return 0.5 * (c + c.adjoint());
}

}  // namespace detail

/// g from the generator: 2 * sum of the negative eigenvalues of Q C_L Q with
/// Q the projector orthogonal to |Omega>.
inline double g_closed_form(const ComplexMatrix& l, Index d) {
  const ComplexMatrix c = detail::generator_choi(l, d);
  ComplexVector omega = ComplexVector::Zero(d * d);
  for (Index i = 0; i < d; ++i) omega(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
  const ComplexMatrix q = ComplexMatrix::Identity(d * d, d * d) - omega * omega.adjoint();
  const ComplexMatrix qcq = q * c * q;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (qcq + qcq.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("g_closed_form: eigensolver failed");
  double g = 0.0;
  for (Index i = 0; i < solver.eigenvalues().size(); ++i) {
    g += std::max(0.0, -solver.eigenvalues()(i));
  }
  return 2.0 * g;
}

/// (||P+ + eps C_L||_1 - 1)/eps at eps = 1e-4 and 5e-5, Richardson-extrapolated.
inline double g_richardson(const ComplexMatrix& l, Index d) {
  const ComplexMatrix p = max_entangled_state(d).matrix();
  const ComplexMatrix c = detail::generator_choi(l, d);
  auto f = [&](double eps) { return (trace_norm_hermitian(p + eps * c) - 1.0) / eps; };
  return std::max(0.0, 2.0 * f(5e-5) - f(1e-4));
}

/// (2/d) sum_{i != j} max(0, -L_ij)
inline double g_rate_classical(const RealMatrix& rates) {
  const Index d = rates.rows();
  double g = 0.0;
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      if (i != j) g += std::max(0.0, -rates(i, j));
    }
  }
  return 2.0 * g / static_cast<double>(d);
}

/// The classical limit evaluated at finite eps on P+_cl, Richardson-extrapolated.
inline double g_rate_classical_finite(const RealMatrix& rates) {
  const Index d = rates.rows();
  // (1 (x) (1 + eps L)) P+_cl is diagonal with entries (delta_ij + eps L_ij)/d.
  auto f = [&](double eps) {
    const RealMatrix m = RealMatrix::Identity(d, d) + eps * rates;
    return (m.cwiseAbs().sum() / static_cast<double>(d) - 1.0) / eps;
  };
  return std::max(0.0, 2.0 * f(5e-5) - f(1e-4));
}

inline double g_rate_classical(const MapTrajectory& traj, double t) {
  if (!traj.is_classical()) throw ContractViolation("g_rate_classical: trajectory is quantum");
  return g_rate_classical(*local_generator(traj, t).rates);
}

inline double g_rate(const MapTrajectory& traj, double t, GRoute route = GRoute::closed_form) {
  if (traj.is_classical()) {
    const RealMatrix rates = *local_generator(traj, t).rates;
    return route == GRoute::closed_form ? g_rate_classical(rates) : g_rate_classical_finite(rates);
  }
  const auto gen = local_generator(traj, t);
  return route == GRoute::closed_form ? g_closed_form(gen.generator.matrix(), traj.dim())
                                      : g_richardson(gen.generator.matrix(), traj.dim());
}

struct GTrace {
  std::vector<double> t;
  std::vector<double> g;
  /// Nodes where Lambda was singular and g came from a one-step propagator.
  std::vector<std::size_t> degraded;
};

/// g on every grid node. Where Lambda(t) is singular the rate falls back to
/// (||(1 (x) Lambda(t + h, t)) P+||_1 - 1)/h with a pseudo-inverse propagator.
inline GTrace g_trace(const MapTrajectory& traj) {
  const TimeGrid& grid = traj.grid();
  GTrace out;
  out.t = grid.times();
  out.g.resize(grid.size());
  const Index d = traj.dim();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      out.g[i] = g_rate(traj, grid[i]);
    } catch (const SingularMapError&) {
      out.degraded.push_back(i);
      const std::size_t a = i + 1 < grid.size() ? i : i - 1;
      const ComplexMatrix m0 = traj.native_sample(a);
      const ComplexMatrix pinv = m0.completeOrthogonalDecomposition().pseudoInverse();
      const ComplexMatrix step = traj.to_superoperator(traj.native_sample(a + 1) * pinv);
      const ComplexMatrix ref = traj.is_classical() ? classical_max_correlated(d).matrix()
                                                    : max_entangled_state(d).matrix();
      ComplexMatrix out_state = apply_with_ancilla(step, d, ref, d);
      out_state = 0.5 * (out_state + out_state.adjoint());
      out.g[i] = std::max(0.0, (trace_norm_hermitian(out_state) - 1.0) / grid.step());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classical and quantum generator conditions

struct KolmogorovViolation {
  Index row;  // 1-based
  Index col;  // 1-based
  double value;
};

struct KolmogorovResult {
  bool ok = true;
  std::vector<KolmogorovViolation> violations;  // off-diagonal entries below -1e-10
  double max_column_sum = 0.0;                  // max |sum_i L_ij|
};

inline KolmogorovResult kolmogorov_check(const RealMatrix& rates) {
  if (rates.rows() != rates.cols()) throw std::invalid_argument("kolmogorov_check: not square");
  KolmogorovResult r;
  for (Index j = 0; j < rates.cols(); ++j) {
    for (Index i = 0; i < rates.rows(); ++i) {
      if (i != j && rates(i, j) < -1e-10) r.violations.push_back({i + 1, j + 1, rates(i, j)});
    }
    r.max_column_sum = std::max(r.max_column_sum, std::abs(rates.col(j).sum()));
  }
  r.ok = r.violations.empty() && r.max_column_sum <= 1e-8;
  return r;
}

struct DissipativityResult {
  bool ok = true;
  /// Most negative Tr[P_i L(P_j)], i != j, over all sampled bases.
  double worst_offdiagonal = 0.0;
  /// Largest |sum_i Tr[P_i L(P_j)]|.
  double worst_column_sum = 0.0;
  std::size_t bases_checked = 0;
};

/// Sampled test of Tr[P_i L P_j] >= 0 (i != j) and sum_i Tr[P_i L P_j] = 0 on
/// the computational basis plus `n_bases` Haar-random bases. A failure
/// certifies that L generates a non-positive short-time propagator.
inline DissipativityResult dissipativity_check(const Superoperator& l, std::size_t n_bases,
                                               std::uint64_t seed) {
  const Index d = l.dim();
  DissipativityResult r;
  auto check_basis = [&](const ComplexMatrix& u) {
    for (Index j = 0; j < d; ++j) {
      const ComplexVector ej = u.col(j);
      const ComplexMatrix image = l.apply(ComplexMatrix(ej * ej.adjoint()));
      double col = 0.0;
      for (Index i = 0; i < d; ++i) {
        const double v = (u.col(i).adjoint() * image * u.col(i))(0, 0).real();
        col += v;
        if (i != j) r.worst_offdiagonal = std::min(r.worst_offdiagonal, v);
      }
      r.worst_column_sum = std::max(r.worst_column_sum, std::abs(col));
    }
    ++r.bases_checked;
  };
  check_basis(ComplexMatrix::Identity(d, d));
  for (std::size_t b = 0; b < n_bases; ++b) {
    numerics::Rng rng(numerics::derive_seed(seed, "dissipativity-basis", b));
    check_basis(numerics::random_unitary(rng, d));
  }
  r.ok = r.worst_offdiagonal >= -1e-9 && r.worst_column_sum <= 1e-9;
  return r;
}

struct CbContraction {
  bool contractive_cb = false;
  double choi_min_eig = 0.0;
  /// ||(1 (x) S) P+||_1, reported for CP maps (equals 1 for channels).
  std::optional<double> choi_trace_norm;
};

inline CbContraction cb_contraction_check(const Superoperator& s) {
  if (!s.trace_preserving()) throw ContractViolation("cb_contraction_check: map is not trace preserving");
  const HermitianOperator c = choi_matrix(s);
  const auto eig = hermitian_eigs(c);
  CbContraction r;
  r.choi_min_eig = eig.values.minCoeff();
  r.contractive_cb = r.choi_min_eig >= -1e-10;
  if (r.contractive_cb) r.choi_trace_norm = eig.values.cwiseAbs().sum();
  return r;
}

/// Lower bound on the trace-norm induced norm of 1_k (x) S by alternating
/// ascent over rank-one inputs |psi><phi|: take the polar factor W of the
/// output, then move (psi, phi) to the top singular pair of (1 (x) S)^dagger(W).
/// Each ascent step costs one unit of budget. Starts run in a fixed order with
/// at most 50 steps each, so the estimate never decreases as the budget grows.
inline double induced_norm_estimate(const Superoperator& s, Index k, std::size_t budget,
                                    std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("induced_norm_estimate: k must be >= 1");
  const Superoperator ext = embed_with_ancilla(s, k);
  const Index n = ext.dim();
  const ComplexMatrix adjoint = ext.matrix().adjoint();
  constexpr std::size_t kStepsPerStart = 50;
  double best = 0.0;
  std::size_t used = 0;
  for (std::size_t start = 0; used < budget; ++start) {
    numerics::Rng rng(numerics::derive_seed(seed, "induced-norm-start", start));
    ComplexVector psi = numerics::random_ginibre(rng, n, 1).col(0).normalized();
    ComplexVector phi = numerics::random_ginibre(rng, n, 1).col(0).normalized();
    for (std::size_t step = 0; step < kStepsPerStart && used < budget; ++step, ++used) {
      const ComplexMatrix y = ext.apply(ComplexMatrix(psi * phi.adjoint()));
      Eigen::JacobiSVD<ComplexMatrix> svd(y, Eigen::ComputeFullU | Eigen::ComputeFullV);
      best = std::max(best, svd.singularValues().sum());
      const ComplexMatrix w = svd.matrixU() * svd.matrixV().adjoint();
      const ComplexMatrix back = unvec(adjoint * vec(w), n);
      Eigen::JacobiSVD<ComplexMatrix> top(back, Eigen::ComputeFullU | Eigen::ComputeFullV);
      psi = top.matrixU().col(0);
      phi = top.matrixV().col(0);
    }
  }
  return best;
}

}  // namespace nonmarkov
