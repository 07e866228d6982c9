#pragma once

// Reference computations used only by the tests. Each one reaches its answer
// by a route that shares no code path with the library routine it checks.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "nonmarkov/nonmarkov.hpp"

namespace oracle {

using nonmarkov::Complex;
using nonmarkov::ComplexMatrix;
using nonmarkov::ComplexVector;
using nonmarkov::Index;

/// Trace norm from a full complex eigendecomposition (no Hermitian solver,
/// no 2x2 shortcut).
inline double trace_norm(const ComplexMatrix& m) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m);
  double s = 0.0;
  for (Index i = 0; i < m.rows(); ++i) s += std::abs(es.eigenvalues()(i).real());
  return s;
}

/// Applies 1_k (x) S to X using the Kraus-free definition on matrix units:
/// (1 (x) S)(|a><b| (x) Y) = |a><b| (x) S(Y).
inline ComplexMatrix apply_extended(const ComplexMatrix& superop, Index d, const ComplexMatrix& x,
                                    Index k) {
  ComplexMatrix out = ComplexMatrix::Zero(k * d, k * d);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      const ComplexMatrix block = x.block(a * d, b * d, d, d);
      ComplexVector v(d * d);
      for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) v(j * d + i) = block(i, j);
      }
      const ComplexVector w = superop * v;
      for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) out(a * d + i, b * d + j) = w(j * d + i);
      }
    }
  }
  return out;
}

/// Memory-kernel master equation rho' = int_0^t gamma e^{-gamma (t-s)} L rho(s) ds
/// integrated directly on the history: trapezoid in s, trapezoid (implicit)
/// in t. Returns Lambda(t) as a superoperator at the requested times, which
/// must be multiples of `dt`.
inline std::vector<ComplexMatrix> convolution_history(const ComplexMatrix& l, double gamma,
                                                      const std::vector<double>& times, double dt) {
  const Index n = l.rows();
  const double t_end = times.back();
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<ComplexMatrix> y(steps + 1);
  y[0] = ComplexMatrix::Identity(n, n);
  std::vector<double> kern(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) kern[i] = gamma * std::exp(-gamma * dt * double(i));

  // history(m) = trapezoid of k(t_m - s) y(s) over s in [0, t_m], excluding
  // the s = t_m endpoint (returned separately as weight * y[m]).
  auto history_without_last = [&](std::size_t m) {
    ComplexMatrix h = ComplexMatrix::Zero(n, n);
    if (m == 0) return h;
    h += 0.5 * dt * kern[m] * y[0];
    for (std::size_t j = 1; j < m; ++j) h += dt * kern[m - j] * y[j];
    return h;
  };
  const ComplexMatrix eye = ComplexMatrix::Identity(n, n);
  const double w_last = 0.5 * dt * kern[0];
  ComplexMatrix f_prev = ComplexMatrix::Zero(n, n);  // rho'(0) = 0
  for (std::size_t m = 0; m < steps; ++m) {
    // y[m+1] = y[m] + dt/2 (f_m + L (H + w_last y[m+1]))
    const ComplexMatrix hist = history_without_last(m + 1);
    const ComplexMatrix lhs = eye - 0.5 * dt * w_last * l;
    const ComplexMatrix rhs = y[m] + 0.5 * dt * (f_prev + l * hist);
    y[m + 1] = lhs.partialPivLu().solve(rhs);
    f_prev = l * (hist + w_last * y[m + 1]);
  }
  std::vector<ComplexMatrix> out;
  for (double t : times) out.push_back(y[static_cast<std::size_t>(std::llround(t / dt))]);
  return out;
}

/// Minimum one-shot error for qubit states by direct search over projective
/// measurements E = (1 + n.sigma)/2: coarse sphere scan, then a golden-section
/// polish in each angle.
inline double qubit_min_error_search(double p, const ComplexMatrix& rho1, const ComplexMatrix& rho2) {
  const ComplexMatrix sx = nonmarkov::pauli::x(), sy = nonmarkov::pauli::y(),
                      sz = nonmarkov::pauli::z();
  const ComplexMatrix eye = ComplexMatrix::Identity(2, 2);
  // Outcome E guesses rho2; 1 - E guesses rho1.
  auto err = [&](double th, double ph) {
    const ComplexMatrix e =
        0.5 * (eye + std::sin(th) * std::cos(ph) * sx + std::sin(th) * std::sin(ph) * sy +
               std::cos(th) * sz);
    return (1.0 - p) * (e * rho1).trace().real() + p * ((eye - e) * rho2).trace().real();
  };
  double best = std::min(1.0 - p, p);  // trivial measurements
  double bt = 0.0, bp = 0.0;
  const int nt = 60, np = 120;
  for (int i = 0; i <= nt; ++i) {
    for (int j = 0; j < np; ++j) {
      const double th = std::numbers::pi * i / nt, ph = 2.0 * std::numbers::pi * j / np;
      const double e = err(th, ph);
      if (e < best) best = e, bt = th, bp = ph;
    }
  }
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto golden = [&](auto f, double lo, double hi) {
    double a = lo, b = hi, c = b - g * (b - a), d = a + g * (b - a);
    for (int it = 0; it < 80; ++it) {
      if (f(c) < f(d)) b = d; else a = c;
      c = b - g * (b - a);
      d = a + g * (b - a);
    }
    return 0.5 * (a + b);
  };
  const double span_t = std::numbers::pi / nt, span_p = 2.0 * std::numbers::pi / np;
  for (int round = 0; round < 40; ++round) {
    bt = golden([&](double th) { return err(th, bp); }, bt - span_t, bt + span_t);
    bp = golden([&](double ph) { return err(bt, ph); }, bp - span_p, bp + span_p);
  }
  return std::min(best, err(bt, bp));
}

}  // namespace oracle
