#pragma once

// Dense complex linear algebra and the operator objects shared by every other
// header: Hermitian operators, density matrices, superoperators, and the
// classical (probability vector / stochastic matrix) counterparts.
//
// Conventions used throughout the library:
//   * operators are vectorized by column stacking, vec(X)[i + d*j] = X(i, j),
//     so that vec(A X B) = (B^T (x) A) vec(X);
//   * in tensor products the ancilla factor always comes first, so an index of
//     a (k*d)-dimensional operator is a*d + i with a the ancilla index.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nonmarkov/errors.hpp"

namespace nonmarkov {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace tolerance {
inline constexpr double construction = 1e-12;
inline constexpr double property = 1e-10;
}  // namespace tolerance

namespace detail {

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Index checked_sqrt(Index n) {
  auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d * d != n) {
    throw std::invalid_argument("superoperator size " + std::to_string(n) +
                                " is not a perfect square");
  }
  return d;
}

}  // namespace detail

inline ComplexVector vec(const ComplexMatrix& x) {
  return Eigen::Map<const ComplexVector>(x.data(), x.size());
}

inline ComplexMatrix unvec(const ComplexVector& v, Index d) {
  if (v.size() != d * d) throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const ComplexMatrix>(v.data(), d, d);
}

/// Kronecker product, A's indices outer.
inline ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = tolerance::construction) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, detail::max_abs(m));
  return detail::max_abs(m - m.adjoint()) <= tol * scale;
}

/// Square Hermitian matrix; the Hermiticity check is done once, at
/// construction, and the stored matrix is exactly symmetrized.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  explicit HermitianOperator(const ComplexMatrix& m, double tol = tolerance::construction) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw std::invalid_argument("HermitianOperator: matrix must be square and non-empty");
    }
    if (!is_hermitian(m, tol)) {
      throw std::invalid_argument("HermitianOperator: matrix is not Hermitian (deviation " +
                                  std::to_string(detail::max_abs(m - m.adjoint())) + ")");
    }
    matrix_ = 0.5 * (m + m.adjoint());
  }

  Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }
  double trace() const { return matrix_.trace().real(); }

  friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator(a.matrix_ + b.matrix_);
  }
  friend HermitianOperator operator-(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator(a.matrix_ - b.matrix_);
  }
  friend HermitianOperator operator*(double s, const HermitianOperator& a) {
    return HermitianOperator(s * a.matrix_);
  }

 private:
  ComplexMatrix matrix_;
};

struct EigenDecomposition {
  RealVector values;     // ascending
  ComplexMatrix vectors;  // columns are orthonormal eigenvectors
};

inline EigenDecomposition hermitian_eigs(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_eigs: eigensolver did not converge (dim " +
                         std::to_string(h.dim()) + ", max |entry| " +
                         std::to_string(detail::max_abs(h.matrix())) + ")");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Sum of |eigenvalues| of a matrix assumed Hermitian; no validation. This is
/// the hot path used inside trajectory scans.
inline double trace_norm_hermitian(const ComplexMatrix& m) {
  if (m.rows() == 2 && m.cols() == 2) {
    const double a = m(0, 0).real(), b = m(1, 1).real();
    const double r = std::hypot(0.5 * (a - b), std::abs(m(1, 0)));
    return std::max(std::abs(0.5 * (a + b)), r) * 2.0;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("trace norm: eigensolver did not converge (dim " +
                         std::to_string(m.rows()) + ", max |entry| " +
                         std::to_string(detail::max_abs(m)) + ")");
  }
  return solver.eigenvalues().cwiseAbs().sum();
}

inline double trace_norm(const HermitianOperator& h) { return trace_norm_hermitian(h.matrix()); }

/// Trace norm of a general (non-Hermitian) matrix: sum of singular values.
inline double trace_norm(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues().sum();
}

/// Unit-trace positive semidefinite operator. Eigenvalues in [-1e-12, 0) are
/// clipped to zero; anything more negative is rejected.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(const ComplexMatrix& m) : base_(m) {
    const double tr = base_.trace();
    if (std::abs(tr - 1.0) > tolerance::construction) {
      throw std::invalid_argument("DensityMatrix: trace is " + std::to_string(tr));
    }
    const auto eig = hermitian_eigs(base_);
    const double min_eig = eig.values.minCoeff();
    if (min_eig < -tolerance::construction) {
      throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                  std::to_string(min_eig));
    }
    if (min_eig < 0.0) {
      RealVector clipped = eig.values.cwiseMax(0.0);
      base_ = HermitianOperator(eig.vectors * clipped.asDiagonal() * eig.vectors.adjoint());
    }
  }

  Index dim() const { return base_.dim(); }
  const ComplexMatrix& matrix() const { return base_.matrix(); }
  const HermitianOperator& hermitian() const { return base_; }
  operator const HermitianOperator&() const { return base_; }  // NOLINT

 private:
  HermitianOperator base_;
};

/// Pure state |psi><psi| from a (not necessarily normalized) vector.
inline DensityMatrix pure_state(const ComplexVector& psi) {
  const ComplexVector u = psi / psi.norm();
  return DensityMatrix(u * u.adjoint());
}

/// Linear map on d x d operators, stored as the d^2 x d^2 matrix acting on
/// column-stacked vectors. The trace- and Hermiticity-preservation flags are
/// computed (deterministically, on the matrix-unit basis) at construction.
class Superoperator {
 public:
  Superoperator() = default;

  explicit Superoperator(ComplexMatrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
      throw std::invalid_argument("Superoperator: matrix must be square and non-empty");
    }
    dim_ = detail::checked_sqrt(matrix_.rows());
    const double scale = std::max(1.0, detail::max_abs(matrix_));
    trace_preserving_ = trace_defect() <= tolerance::property * scale;
    hermiticity_preserving_ = hermiticity_defect() <= tolerance::property * scale;
  }

  static Superoperator identity(Index d) {
    return Superoperator(ComplexMatrix::Identity(d * d, d * d));
  }

  /// X -> A X B.
  static Superoperator sandwich(const ComplexMatrix& a, const ComplexMatrix& b) {
    return Superoperator(tensor_product(b.transpose(), a));
  }

  Index dim() const { return dim_; }
  const ComplexMatrix& matrix() const { return matrix_; }
  bool trace_preserving() const { return trace_preserving_; }
  bool hermiticity_preserving() const { return hermiticity_preserving_; }

  ComplexMatrix apply(const ComplexMatrix& x) const {
    if (x.rows() != dim_ || x.cols() != dim_) {
      throw std::invalid_argument("Superoperator::apply: operator dimension mismatch");
    }
    return unvec(matrix_ * vec(x), dim_);
  }

  HermitianOperator apply(const HermitianOperator& h) const {
    if (!hermiticity_preserving_) {
      throw ContractViolation("applying a non-Hermiticity-preserving map to a Hermitian operator");
    }
    return HermitianOperator(apply(h.matrix()), tolerance::property);
  }

  /// max over matrix units E_jk of |Tr S(E_jk) - delta_jk|.
  double trace_defect() const {
    double worst = 0.0;
    for (Index j = 0; j < dim_; ++j) {
      for (Index k = 0; k < dim_; ++k) {
        Complex tr = 0.0;
        for (Index i = 0; i < dim_; ++i) tr += matrix_(i + dim_ * i, j + dim_ * k);
        worst = std::max(worst, std::abs(tr - (j == k ? 1.0 : 0.0)));
      }
    }
    return worst;
  }

  /// max over matrix units of |S(E_kj) - S(E_jk)^dagger|.
  double hermiticity_defect() const {
    double worst = 0.0;
    for (Index j = 0; j < dim_; ++j) {
      for (Index k = 0; k < dim_; ++k) {
        const ComplexMatrix a = unvec(matrix_.col(j + dim_ * k), dim_);
        const ComplexMatrix b = unvec(matrix_.col(k + dim_ * j), dim_);
        worst = std::max(worst, detail::max_abs(b - a.adjoint()));
      }
    }
    return worst;
  }

  /// max over matrix units of |Tr S(E_jk)|; zero for generators of
  /// trace-preserving dynamics.
  double trace_annihilation_defect() const {
    double worst = 0.0;
    for (Index c = 0; c < matrix_.cols(); ++c) {
      Complex tr = 0.0;
      for (Index i = 0; i < dim_; ++i) tr += matrix_(i + dim_ * i, c);
      worst = std::max(worst, std::abs(tr));
    }
    return worst;
  }

  friend Superoperator operator*(const Superoperator& a, const Superoperator& b) {
    return Superoperator(a.matrix_ * b.matrix_);
  }
  friend Superoperator operator+(const Superoperator& a, const Superoperator& b) {
    return Superoperator(a.matrix_ + b.matrix_);
  }
  friend Superoperator operator-(const Superoperator& a, const Superoperator& b) {
    return Superoperator(a.matrix_ - b.matrix_);
  }
  friend Superoperator operator*(double s, const Superoperator& a) {
    return Superoperator(s * a.matrix_);
  }

 private:
  ComplexMatrix matrix_;
  Index dim_ = 0;
  bool trace_preserving_ = false;
  bool hermiticity_preserving_ = false;
};

inline bool is_trace_annihilating(const Superoperator& s, double tol = 1e-8) {
  return s.trace_annihilation_defect() <= tol * std::max(1.0, detail::max_abs(s.matrix()));
}

/// -i[H, .]
inline Superoperator commutator_generator(const ComplexMatrix& h) {
  const Index d = h.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const Complex i(0.0, 1.0);
  return Superoperator(-i * (tensor_product(id, h) - tensor_product(h.transpose(), id)));
}

/// rho -> J rho J^dagger - {J^dagger J, rho}/2
inline Superoperator dissipator(const ComplexMatrix& jump) {
  const Index d = jump.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const ComplexMatrix jdj = jump.adjoint() * jump;
  return Superoperator(tensor_product(jump.conjugate(), jump) -
                       0.5 * tensor_product(id, jdj) - 0.5 * tensor_product(jdj.transpose(), id));
}

/// X -> X^T, positive but not completely positive.
inline Superoperator transposition_map(Index d) {
  ComplexMatrix m = ComplexMatrix::Zero(d * d, d * d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) m(j + d * i, i + d * j) = 1.0;
  }
  return Superoperator(m);
}

/// X -> Tr(X) I/d
inline Superoperator completely_depolarizing_map(Index d) {
  ComplexMatrix m = ComplexMatrix::Zero(d * d, d * d);
  for (Index i = 0; i < d; ++i) {
    for (Index k = 0; k < d; ++k) m(k + d * k, i + d * i) = 1.0 / static_cast<double>(d);
  }
  return Superoperator(m);
}

// ---------------------------------------------------------------------------
// Classical objects

class ProbabilityVector {
 public:
  ProbabilityVector() = default;

  explicit ProbabilityVector(RealVector p) : p_(std::move(p)) {
    if (p_.size() == 0) throw std::invalid_argument("ProbabilityVector: empty");
    if (p_.minCoeff() < 0.0) throw std::invalid_argument("ProbabilityVector: negative entry");
    if (std::abs(p_.sum() - 1.0) > tolerance::construction) {
      throw std::invalid_argument("ProbabilityVector: entries sum to " + std::to_string(p_.sum()));
    }
  }

  Index dim() const { return p_.size(); }
  const RealVector& values() const { return p_; }
  double operator[](Index i) const { return p_(i); }

  DensityMatrix as_density_matrix() const {
    return DensityMatrix(p_.cast<Complex>().asDiagonal().toDenseMatrix());
  }

 private:
  RealVector p_;
};

/// Column-stochastic matrix: entries >= -1e-12 and every column sums to one
/// (within 1e-10).
class StochasticMatrix {
 public:
  StochasticMatrix() = default;

  explicit StochasticMatrix(RealMatrix m, double tol = tolerance::property) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
      throw std::invalid_argument("StochasticMatrix: must be square and non-empty");
    }
    if (m_.minCoeff() < -tolerance::construction) {
      throw std::invalid_argument("StochasticMatrix: negative entry " +
                                  std::to_string(m_.minCoeff()));
    }
    const double defect = (m_.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (defect > tol) {
      throw std::invalid_argument("StochasticMatrix: column sums deviate from 1 by " +
                                  std::to_string(defect));
    }
  }

  Index dim() const { return m_.rows(); }
  const RealMatrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  ProbabilityVector apply(const ProbabilityVector& p) const {
    return ProbabilityVector(m_ * p.values());
  }

 private:
  RealMatrix m_;
};

/// Embeds a classical d x d matrix M (p -> M p) as the superoperator
/// rho -> sum_ij M_ij |i><j| rho |j><i|, which acts as M on diagonals and
/// annihilates coherences.
inline Superoperator classical_embedding(const RealMatrix& m) {
  const Index d = m.rows();
  ComplexMatrix s = ComplexMatrix::Zero(d * d, d * d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) s(i + d * i, j + d * j) = m(i, j);
  }
  return Superoperator(s);
}

// ---------------------------------------------------------------------------
// Reference states and Choi-type constructions

/// |Omega><Omega| with |Omega> = d^{-1/2} sum_i |i>|i>.
inline DensityMatrix max_entangled_state(Index d) {
  if (d < 2) throw std::invalid_argument("max_entangled_state: d must be >= 2");
  ComplexVector omega = ComplexVector::Zero(d * d);
  for (Index i = 0; i < d; ++i) omega(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
  return DensityMatrix(omega * omega.adjoint());
}

/// (1/d) sum_i |i><i| (x) |i><i|
inline DensityMatrix classical_max_correlated(Index d) {
  if (d < 2) throw std::invalid_argument("classical_max_correlated: d must be >= 2");
  ComplexMatrix m = ComplexMatrix::Zero(d * d, d * d);
  for (Index i = 0; i < d; ++i) m(i * d + i, i * d + i) = 1.0 / static_cast<double>(d);
  return DensityMatrix(m);
}

/// (1_k (x) S) applied to a (k*d)-dimensional operator, block by block.
inline ComplexMatrix apply_with_ancilla(const ComplexMatrix& superop, Index d,
                                        const ComplexMatrix& y, Index k) {
  if (y.rows() != k * d || y.cols() != k * d) {
    throw std::invalid_argument("apply_with_ancilla: operator is " + std::to_string(y.rows()) +
                                "-dimensional, expected " + std::to_string(k * d));
  }
  ComplexMatrix out(k * d, k * d);
  ComplexVector block(d * d);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      for (Index j = 0; j < d; ++j) block.segment(j * d, d) = y.block(a * d, b * d, d, d).col(j);
      const ComplexVector mapped = superop * block;
      for (Index j = 0; j < d; ++j) out.block(a * d, b * d, d, d).col(j) = mapped.segment(j * d, d);
    }
  }
  return out;
}

inline ComplexMatrix apply_with_ancilla(const Superoperator& s, const ComplexMatrix& y, Index k) {
  return apply_with_ancilla(s.matrix(), s.dim(), y, k);
}

/// (1_d (x) S) P+_d = (1/d) sum_ij E_ij (x) S(E_ij)
inline HermitianOperator choi_matrix(const Superoperator& s) {
  if (!s.hermiticity_preserving()) {
    throw ContractViolation("choi_matrix: map is not Hermiticity-preserving");
  }
  return HermitianOperator(apply_with_ancilla(s, max_entangled_state(s.dim()).matrix(), s.dim()),
                           tolerance::property);
}

/// Superoperator of 1_k (x) S acting on (k*d)-dimensional operators.
inline Superoperator embed_with_ancilla(const Superoperator& s, Index k) {
  if (k < 1) throw std::invalid_argument("embed_with_ancilla: ancilla dimension must be >= 1");
  const Index d = s.dim();
  const Index n = k * d;
  ComplexMatrix out = ComplexMatrix::Zero(n * n, n * n);
  // Input unit E_{(a,j),(b,l)} maps to E_ab (x) S(E_jl).
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      for (Index j = 0; j < d; ++j) {
        for (Index l = 0; l < d; ++l) {
          const Index in_col = (a * d + j) + n * (b * d + l);
          for (Index i = 0; i < d; ++i) {
            for (Index m = 0; m < d; ++m) {
              const Complex v = s.matrix()(i + d * m, j + d * l);
              if (v != Complex(0.0)) out((a * d + i) + n * (b * d + m), in_col) = v;
            }
          }
        }
      }
    }
  }
  return Superoperator(out);
}

enum class Subsystem { A, B };

/// Marginal of an operator on C^{dA} (x) C^{dB}; `keep` names the factor kept.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, Index d_a, Index d_b, Subsystem keep) {
  if (m.rows() != d_a * d_b || m.cols() != d_a * d_b) {
    throw std::invalid_argument("partial_trace: operator dimension " + std::to_string(m.rows()) +
                                " != " + std::to_string(d_a) + " * " + std::to_string(d_b));
  }
  if (keep == Subsystem::B) {
    ComplexMatrix out = ComplexMatrix::Zero(d_b, d_b);
    for (Index a = 0; a < d_a; ++a) out += m.block(a * d_b, a * d_b, d_b, d_b);
    return out;
  }
  ComplexMatrix out(d_a, d_a);
  for (Index a = 0; a < d_a; ++a) {
    for (Index b = 0; b < d_a; ++b) out(a, b) = m.block(a * d_b, b * d_b, d_b, d_b).trace();
  }
  return out;
}

inline HermitianOperator partial_trace(const HermitianOperator& m, Index d_a, Index d_b,
                                       Subsystem keep) {
  return HermitianOperator(partial_trace(m.matrix(), d_a, d_b, keep));
}

// Pauli matrices in the basis {|0>, |1>} with sigma_z = diag(1, -1) and
// sigma_+ = |0><1|.
namespace pauli {
inline ComplexMatrix x() { return (ComplexMatrix(2, 2) << 0, 1, 1, 0).finished(); }
inline ComplexMatrix y() {
  return (ComplexMatrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished();
}
inline ComplexMatrix z() { return (ComplexMatrix(2, 2) << 1, 0, 0, -1).finished(); }
inline ComplexMatrix plus() { return (ComplexMatrix(2, 2) << 0, 1, 0, 0).finished(); }
inline ComplexMatrix minus() { return (ComplexMatrix(2, 2) << 0, 0, 1, 0).finished(); }
}  // namespace pauli

}  // namespace nonmarkov
