#pragma once

// Qubit dynamics
//   rho00 -> x0 rho00 + (1 - x1) rho11,   rho11 -> (1 - x0) rho00 + x1 rho11,
//   rho01 -> gamma rho01,
// completely positive iff |gamma|^2 <= x0 x1. Its time-local generator is
//   +i Omega/2 [sigma_z, .] + a0 L0 + a1 L1 + (Gamma/2) Lz
// with L0 = D[sigma+] (decay 1 -> 0), L1 = D[sigma-], Lz = sigma_z . sigma_z - 1,
//   a0 = (x0'(1 - x1) + x1' x0)/(1 - x0 - x1),
//   a1 = (x0' x1 + x1'(1 - x0))/(1 - x0 - x1),
//   Gamma = -(a0 + a1)/2 - Re(gamma'/gamma),   Omega = Im(gamma'/gamma).

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nonmarkov/errors.hpp"
#include "nonmarkov/models/toy.hpp"
#include "nonmarkov/operators.hpp"
#include "nonmarkov/trajectory.hpp"

namespace nonmarkov::models {

struct QubitSample {
  double x0 = 1.0, x1 = 1.0;
  Complex gamma = 1.0;
  double dx0 = 0.0, dx1 = 0.0;
  Complex dgamma = 0.0;
};

/// Parametric or tabulated (x0, x1, gamma).
///
/// exponential: x_k = 1 - alpha_k (1 - exp(-u_k t)),
///   gamma = sqrt(x0 x1) exp(-(v + i w) t) (1 - beta (1 - cos(omega t))).
/// The modulation factor stays in [1 - 2 beta, 1], so |gamma|^2 <= x0 x1 for
/// beta in [0, 1] and gamma(0) = 1.
/// toy: the classical toy model with its levels swapped (x0 = 1 - x1_toy,
///   x1 = 1 - x0_toy) so that the qubit rates a0, a1 coincide with the toy
///   rates; gamma as in the exponential family.
/// tabulated: samples of x0, x1, gamma and their derivatives on increasing
///   times, cubic Hermite in between.
struct QubitModelParams {
  enum class Family { exponential, toy, tabulated };
  Family family = Family::exponential;

  double alpha0 = 0.5, alpha1 = 0.5, u0 = 1.0, u1 = 1.0;
  double v = 0.0, w = 0.0, beta = 0.0, omega = 0.0;
  double kappa = 0.4;

  std::vector<double> times;
  std::vector<QubitSample> table;

  void validate() const {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    switch (family) {
      case Family::exponential:
        if (!in01(alpha0) || !in01(alpha1)) throw InvalidModel("qubit model: alpha_k must lie in [0, 1]");
        if (u0 < 0.0 || u1 < 0.0) throw InvalidModel("qubit model: u_k must be >= 0");
        break;
      case Family::toy:
        ToyModelParams{kappa}.validate();
        break;
      case Family::tabulated:
        if (times.size() < 2 || times.size() != table.size()) {
          throw InvalidModel("qubit model: table needs >= 2 samples and one time per sample");
        }
        if (times.front() != 0.0) throw InvalidModel("qubit model: table must start at t = 0");
        for (std::size_t i = 1; i < times.size(); ++i) {
          if (!(times[i] > times[i - 1])) throw InvalidModel("qubit model: table times must increase");
        }
        break;
    }
    if (family != Family::tabulated) {
      if (v < 0.0) throw InvalidModel("qubit model: v must be >= 0");
      if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidModel("qubit model: beta must lie in [0, 1]");
    }
  }

  QubitSample at(double t) const {
    if (family == Family::tabulated) return interpolate_table(t);
    QubitSample s;
    if (family == Family::exponential) {
      const double e0 = std::exp(-u0 * t), e1 = std::exp(-u1 * t);
      s.x0 = 1.0 - alpha0 * (1.0 - e0);
      s.x1 = 1.0 - alpha1 * (1.0 - e1);
      s.dx0 = -alpha0 * u0 * e0;
      s.dx1 = -alpha1 * u1 * e1;
    } else {
      const auto f = toy_functions(ToyModelParams{kappa}, t);
      s.x0 = 1.0 - f.x1;
      s.x1 = 1.0 - f.x0;
      s.dx0 = -f.dx1;
      s.dx1 = -f.dx0;
    }
    const double prod = s.x0 * s.x1;
    const double root = std::sqrt(std::max(prod, 0.0));
    const double droot = root > 0.0 ? (s.dx0 * s.x1 + s.x0 * s.dx1) / (2.0 * root) : 0.0;
    const Complex rate(-v, -w);
    const Complex e = std::exp(rate * t);
    const double m = 1.0 - beta * (1.0 - std::cos(omega * t));
    const double dm = -beta * omega * std::sin(omega * t);
    s.gamma = root * e * m;
    s.dgamma = droot * e * m + root * rate * e * m + root * e * dm;
    return s;
  }

 private:
  QubitSample interpolate_table(double t) const {
    if (t < times.front() || t > times.back() * (1.0 + 1e-12)) {
      throw std::out_of_range("qubit model: t outside the tabulated range");
    }
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    i = std::min(i, times.size() - 2);
    const double h = times[i + 1] - times[i];
    const double s = (t - times[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
                 h11 = s3 - s2;
    const double g00 = (6 * s2 - 6 * s) / h, g10 = 3 * s2 - 4 * s + 1, g01 = (-6 * s2 + 6 * s) / h,
                 g11 = 3 * s2 - 2 * s;
    const QubitSample& a = table[i];
    const QubitSample& b = table[i + 1];
    QubitSample out;
    auto value = [&](auto pa, auto pb, auto da, auto db) {
      return h00 * pa + h10 * h * da + h01 * pb + h11 * h * db;
    };
    auto slope = [&](auto pa, auto pb, auto da, auto db) {
      return g00 * pa + g10 * da + g01 * pb + g11 * db;
    };
    out.x0 = value(a.x0, b.x0, a.dx0, b.dx0);
    out.x1 = value(a.x1, b.x1, a.dx1, b.dx1);
    out.gamma = value(a.gamma, b.gamma, a.dgamma, b.dgamma);
    out.dx0 = slope(a.x0, b.x0, a.dx0, b.dx0);
    out.dx1 = slope(a.x1, b.x1, a.dx1, b.dx1);
    out.dgamma = slope(a.gamma, b.gamma, a.dgamma, b.dgamma);
    return out;
  }
};

namespace detail {

inline ComplexMatrix qubit_superoperator(double x0, double x1, Complex gamma) {
  // Column-stacked indices: rho00 -> 0, rho10 -> 1, rho01 -> 2, rho11 -> 3.
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = x0;
  m(0, 3) = 1.0 - x1;
  m(3, 0) = 1.0 - x0;
  m(3, 3) = x1;
  m(2, 2) = gamma;
  m(1, 1) = std::conj(gamma);
  return m;
}

inline ComplexMatrix qubit_superoperator_derivative(const QubitSample& s) {
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = s.dx0;
  m(0, 3) = -s.dx1;
  m(3, 0) = -s.dx0;
  m(3, 3) = s.dx1;
  m(2, 2) = s.dgamma;
  m(1, 1) = std::conj(s.dgamma);
  return m;
}

inline void check_qubit_cp(const QubitSample& s, double t) {
  const double tol = 1e-10;
  if (s.x0 < -tol || s.x0 > 1.0 + tol || s.x1 < -tol || s.x1 > 1.0 + tol) {
    throw InvalidModel("qubit model: x0, x1 leave [0, 1] at t = " + std::to_string(t));
  }
  if (std::norm(s.gamma) > s.x0 * s.x1 + tol) {
    throw InvalidModel("qubit model: |gamma|^2 > x0 x1 at t = " + std::to_string(t) +
                       " (map not completely positive)");
  }
}

}  // namespace detail

inline Superoperator qubit_map(const QubitModelParams& p, double t) {
  const QubitSample s = p.at(t);
  detail::check_qubit_cp(s, t);
  return Superoperator(detail::qubit_superoperator(s.x0, s.x1, s.gamma));
}

struct QubitGeneratorCoeffs {
  double t = 0.0;
  double a0 = 0.0, a1 = 0.0;
  double Gamma = 0.0;
  double Omega = 0.0;

  bool divisible(double tol = 0.0) const { return a0 >= -tol && a1 >= -tol && Gamma >= -tol; }
};

inline QubitGeneratorCoeffs qubit_generator(const QubitModelParams& p, double t) {
  const QubitSample s = p.at(t);
  const double den = 1.0 - s.x0 - s.x1;
  if (!(std::abs(den) > 1e-10)) {
    throw NumericalError("qubit_generator: population map singular (x0 + x1 = 1) at t = " +
                         std::to_string(t));
  }
  if (!(std::abs(s.gamma) > 1e-14)) {
    throw NumericalError("qubit_generator: gamma vanishes at t = " + std::to_string(t) +
                         "; Gamma and Omega are undefined");
  }
  QubitGeneratorCoeffs c;
  c.t = t;
  c.a0 = (s.dx0 * (1.0 - s.x1) + s.dx1 * s.x0) / den;
  c.a1 = (s.dx0 * s.x1 + s.dx1 * (1.0 - s.x0)) / den;
  const Complex ratio = s.dgamma / s.gamma;
  c.Gamma = -(c.a0 + c.a1) / 2.0 - ratio.real();
  c.Omega = ratio.imag();
  return c;
}

/// The generator assembled from its coefficients.
inline Superoperator qubit_generator_superoperator(const QubitGeneratorCoeffs& c) {
  const ComplexMatrix h = -0.5 * c.Omega * pauli::z();
  const Superoperator lz =
      Superoperator::sandwich(pauli::z(), pauli::z()) - Superoperator::identity(2);
  return commutator_generator(h) + c.a0 * dissipator(pauli::plus()) +
         c.a1 * dissipator(pauli::minus()) + (0.5 * c.Gamma) * lz;
}

/// sigma for a state pair whose half-difference at time t is
/// [[d00, d01], [conj(d01), -d00]]:
///   -(2 A d00^2 + (A + 2 Gamma)|d01|^2) / sqrt(d00^2 + |d01|^2),  A = a0 + a1.
inline double sigma_qubit_closed_form(const QubitGeneratorCoeffs& c, double d00, Complex d01) {
  const double r = std::sqrt(d00 * d00 + std::norm(d01));
  if (r == 0.0) return 0.0;
  const double a = c.a0 + c.a1;
  return -(2.0 * a * d00 * d00 + (a + 2.0 * c.Gamma) * std::norm(d01)) / r;
}

/// The same expression with 4 Gamma in place of 2 Gamma. Kept for
/// comparison; it overstates the coherence contribution by a factor two.
inline double sigma_qubit_closed_form_4gamma(const QubitGeneratorCoeffs& c, double d00,
                                              Complex d01) {
  const double r = std::sqrt(d00 * d00 + std::norm(d01));
  if (r == 0.0) return 0.0;
  const double a = c.a0 + c.a1;
  return -(2.0 * a * d00 * d00 + (a + 4.0 * c.Gamma) * std::norm(d01)) / r;
}

/// Classical counterpart: sigma = -2 (a0 + a1) |d0| with d0 the half-difference
/// of the populations of level 0.
inline double sigma_toy_closed_form(double a0, double a1, double d0) {
  return -2.0 * (a0 + a1) * std::abs(d0);
}

inline MapTrajectory qubit_trajectory(const QubitModelParams& p, const TimeGrid& grid) {
  p.validate();
  for (std::size_t i = 0; i < grid.size(); ++i) detail::check_qubit_cp(p.at(grid[i]), grid[i]);
  if (p.family == QubitModelParams::Family::tabulated) {
    std::vector<ComplexMatrix> maps(grid.size()), derivs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const QubitSample s = p.at(grid[i]);
      maps[i] = detail::qubit_superoperator(s.x0, s.x1, s.gamma);
      derivs[i] = detail::qubit_superoperator_derivative(s);
    }
    return MapTrajectory::from_samples(grid, std::move(maps), std::move(derivs));
  }
  return MapTrajectory::from_function(
      grid,
      [p](double t) {
        const QubitSample s = p.at(t);
        return detail::qubit_superoperator(s.x0, s.x1, s.gamma);
      },
      [p](double t) { return detail::qubit_superoperator_derivative(p.at(t)); });
}

}  // namespace nonmarkov::models
