#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nonmarkov/divisibility.hpp"
#include "nonmarkov/models.hpp"
#include "nonmarkov/numerics/expm.hpp"
#include "oracles.hpp"

using namespace nonmarkov;
using namespace nonmarkov::models;

namespace {

constexpr double kPi = std::numbers::pi;
// Rate scale of random generators: keeps Lambda(t) well conditioned over the
// test horizons, since L = dLambda Lambda^{-1} loses accuracy like cond(Lambda).
constexpr double kRate = 0.25;

QubitModelParams dephasing(Complex rate) {
  QubitModelParams p;
  p.alpha0 = 0.0;
  p.alpha1 = 0.0;
  p.v = rate.real();
  p.w = rate.imag();
  return p;
}

}  // namespace

TEST(Toy, MapAtPiAndTwoPi) {
  const auto m = toy_map({0.4}, kPi).matrix();
  RealMatrix expect(2, 2);
  expect << 0.2, 0.0, 0.8, 1.0;
  EXPECT_LT((m - expect).cwiseAbs().maxCoeff(), 1e-12);
  const auto f = toy_functions({0.4}, 2 * kPi);
  EXPECT_NEAR(f.x0, 0.0, 1e-12);
  EXPECT_NEAR(f.x1, 0.8, 1e-12);
}

TEST(Toy, Rates) {
  const auto r1 = toy_rates({0.4}, kPi / 2);
  EXPECT_NEAR(r1.a0, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r1.a1, 0.0, 1e-12);
  const auto r2 = toy_rates({0.4}, 1.5 * kPi);
  EXPECT_NEAR(r2.a0, -0.4, 1e-12);
  EXPECT_NEAR(r2.a1, 0.4, 1e-12);
  for (double t = 0.0; t <= kPi; t += 0.01) {
    const auto r = toy_rates({0.4}, t);
    EXPECT_NEAR(r.a0 + r.a1, 0.4 * std::sin(t) / (0.6 + 0.4 * std::cos(t)), 1e-12) << t;
  }
}

TEST(Toy, Invariants) {
  const ToyModelParams p{0.3};
  bool negative_somewhere = false;
  for (double t = 0.0; t <= 3 * kPi; t += 1e-3) {
    const auto f = toy_functions(p, t);
    EXPECT_GE(f.x0, 0.0);
    EXPECT_LE(f.x0, 1.0);
    EXPECT_GE(f.x1, 0.0);
    EXPECT_LE(f.x1, 1.0);
    const auto r = toy_rates(p, t);
    EXPECT_GE(r.a0 + r.a1, -1e-12);
    if (t > kPi && t < 2 * kPi && std::min(r.a0, r.a1) < 0.0) negative_somewhere = true;
  }
  EXPECT_TRUE(negative_somewhere);
  EXPECT_THROW(toy_map({0.5}, 1.0), InvalidModel);
  EXPECT_THROW(toy_map({0.0}, 1.0), InvalidModel);
}

TEST(Qubit, PureDephasing) {
  const auto p = dephasing({1.0, 0.0});
  ComplexMatrix rho(2, 2);
  rho << 0.6, Complex(0.2, 0.1), Complex(0.2, -0.1), 0.4;
  const ComplexMatrix out = qubit_map(p, 0.7).apply(rho);
  EXPECT_NEAR(std::abs(out(0, 1) - rho(0, 1) * std::exp(-0.7)), 0.0, 1e-14);
  EXPECT_NEAR(out(0, 0).real(), 0.6, 1e-15);
  const auto c = qubit_generator(p, 0.7);
  EXPECT_NEAR(c.a0, 0.0, 1e-14);
  EXPECT_NEAR(c.a1, 0.0, 1e-14);
  EXPECT_NEAR(c.Gamma, 1.0, 1e-14);
  EXPECT_NEAR(c.Omega, 0.0, 1e-14);
}

TEST(Qubit, PureRotation) {
  const auto c = qubit_generator(dephasing({0.0, 1.0}), 0.3);
  EXPECT_NEAR(c.Gamma, 0.0, 1e-14);
  EXPECT_NEAR(c.Omega, -1.0, 1e-14);
}

TEST(Qubit, DiagonalSectorIsRelabelledToyMap) {
  QubitModelParams p;
  p.family = QubitModelParams::Family::toy;
  p.kappa = 0.4;
  for (double t : {0.3, 2.0, 4.0, 5.5, 8.0}) {
    const ComplexMatrix s = qubit_map(p, t).matrix();
    const RealMatrix toy = toy_map({0.4}, t).matrix();
    // Superoperator index 0 is rho00, 3 is rho11. Qubit level 0 carries toy state 1.
    EXPECT_NEAR(s(0, 0).real(), toy(1, 1), 1e-14);
    EXPECT_NEAR(s(0, 3).real(), toy(1, 0), 1e-14);
    EXPECT_NEAR(s(3, 0).real(), toy(0, 1), 1e-14);
    EXPECT_NEAR(s(3, 3).real(), toy(0, 0), 1e-14);
    const auto c = qubit_generator(p, t);
    const auto r = toy_rates({0.4}, t);
    EXPECT_NEAR(c.a0, r.a0, 1e-12);
    EXPECT_NEAR(c.a1, r.a1, 1e-12);
  }
}

TEST(Qubit, CompletePositivityConstraint) {
  QubitModelParams p;
  p.alpha0 = 0.3;
  p.alpha1 = 0.5;
  p.beta = 0.4;
  p.omega = 3.0;
  p.v = 0.1;
  for (double t = 0.0; t < 10.0; t += 0.01) {
    const auto s = p.at(t);
    EXPECT_LE(std::norm(s.gamma), s.x0 * s.x1 + 1e-10);
    EXPECT_GE(hermitian_eigs(choi_matrix(qubit_map(p, t))).values.minCoeff(), -1e-10);
  }
  EXPECT_EQ(p.at(0.0).gamma, Complex(1.0));
  p.beta = 1.5;
  EXPECT_THROW(p.validate(), InvalidModel);
}

TEST(Qubit, GeneratorReconstructsFiniteDifference) {
  QubitModelParams p;
  p.alpha0 = 0.35;
  p.alpha1 = 0.25;
  p.u0 = 0.8;
  p.u1 = 1.7;
  p.v = 0.2;
  p.w = 0.9;
  p.beta = 0.3;
  p.omega = 2.5;
  const double eps = 1e-5;
  for (double t : {0.2, 1.0, 2.7, 5.0}) {
    const ComplexMatrix m = qubit_map(p, t).matrix();
    const ComplexMatrix dm = (qubit_map(p, t + eps).matrix() - qubit_map(p, t - eps).matrix()) / (2 * eps);
    const ComplexMatrix fd = dm * m.inverse();
    const ComplexMatrix closed = qubit_generator_superoperator(qubit_generator(p, t)).matrix();
    EXPECT_LT(nonmarkov::detail::max_abs(fd - closed), 1e-6) << t;
  }
}

TEST(Qubit, SigmaClosedFormDephasing) {
  const auto c = qubit_generator(dephasing({1.0, 0.0}), 0.5);
  // D = 2 |d01| decays as e^{-t}: dD/dt = -2 |d01| = -1.
  EXPECT_NEAR(sigma_qubit_closed_form(c, 0.0, 0.5), -1.0, 1e-14);
  EXPECT_NEAR(sigma_qubit_closed_form_4gamma(c, 0.0, 0.5), -2.0, 1e-14);
}

TEST(Qubit, SigmaClosedFormMatchesFiniteDifference) {
  QubitModelParams p;
  p.alpha0 = 0.45;
  p.alpha1 = 0.2;
  p.u0 = 1.3;
  p.u1 = 0.6;
  p.v = 0.05;
  p.w = -0.4;
  p.beta = 0.35;
  p.omega = 1.9;
  numerics::Rng rng(31);
  const double eps = 1e-5;
  for (int trial = 0; trial < 30; ++trial) {
    const double t = rng.uniform(0.1, 6.0);
    const double d00 = rng.uniform(-0.5, 0.5);
    const Complex d01(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    ComplexMatrix dt(2, 2);
    dt << d00, d01, std::conj(d01), -d00;
    const ComplexMatrix d0 = unvec(qubit_map(p, t).matrix().inverse() * vec(dt), 2);
    auto dist = [&](double s) { return trace_norm_hermitian(qubit_map(p, s).apply(d0)); };
    const double fd = (dist(t + eps) - dist(t - eps)) / (2 * eps);
    EXPECT_NEAR(sigma_qubit_closed_form(qubit_generator(p, t), d00, d01), fd, 1e-5) << t;
  }
}

TEST(Qubit, GeneratorErrorsWhereUndefined) {
  QubitModelParams p;
  p.beta = 0.5;
  p.omega = 1.0;  // gamma = 0 at t = pi
  EXPECT_THROW(qubit_generator(p, kPi), NumericalError);
  EXPECT_NO_THROW(qubit_map(p, kPi));
}

TEST(Qubit, TabulatedMatchesParametric) {
  QubitModelParams src;
  src.alpha0 = 0.3;
  src.alpha1 = 0.4;
  src.v = 0.3;
  src.w = 0.5;
  QubitModelParams tab;
  tab.family = QubitModelParams::Family::tabulated;
  for (int i = 0; i <= 200; ++i) {
    const double t = 0.02 * i;
    tab.times.push_back(t);
    tab.table.push_back(src.at(t));
  }
  tab.validate();
  for (double t : {0.011, 1.234, 3.999}) {
    EXPECT_NEAR(std::abs(tab.at(t).gamma - src.at(t).gamma), 0.0, 1e-7);
    EXPECT_NEAR(tab.at(t).x0, src.at(t).x0, 1e-7);
  }
}

TEST(Integro, ShortTimeExpansion) {
  const IntegroDiffParams p;
  const auto traj = integro_diff_trajectory(p, TimeGrid(10.0, 0.5));
  const ComplexMatrix l = integro_diff_lindbladian(p).matrix();
  const double eps = 0.5;
  const ComplexMatrix lhs = (traj.native_sample(1) - ComplexMatrix::Identity(4, 4)) / (p.gamma * eps * eps / 2);
  EXPECT_LT(nonmarkov::detail::max_abs(lhs - l) / nonmarkov::detail::max_abs(l), 1e-2);
}

TEST(Integro, MemorylessLimit) {
  // The kernel delays the dynamics by about 1/gamma, so the distance to
  // exp(t L) shrinks like max|L| / gamma.
  IntegroDiffParams p;
  const ComplexMatrix l = integro_diff_lindbladian(p).matrix();
  auto distance = [&](double gamma) {
    p.gamma = gamma;
    const auto traj = integro_diff_trajectory(p, TimeGrid(200.0, 0.5));
    double d = 0.0;
    for (double t : {50.0, 120.0, 200.0}) {
      d = std::max(d, nonmarkov::detail::max_abs(traj.map(t).matrix() - numerics::expm(t * l)));
    }
    return d;
  };
  const double d3 = distance(1e3 * p.gamma0), d4 = distance(1e4 * p.gamma0);
  EXPECT_LT(d3, 2.0 * nonmarkov::detail::max_abs(l) / (1e3 * p.gamma0));
  EXPECT_LT(d4, 1e-3);
  EXPECT_NEAR(d3 / d4, 10.0, 1.0);
}

TEST(Integro, AgreesWithConvolutionOracle) {
  const IntegroDiffParams p;
  const TimeGrid grid(250.0, 0.25);
  const auto traj = integro_diff_trajectory(p, grid);
  std::vector<double> times;
  for (std::size_t i = 0; i < grid.size(); i += 8) times.push_back(grid[i]);
  const auto ref = oracle::convolution_history(integro_diff_lindbladian(p).matrix(), p.gamma, times, 0.125);
  double sup = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    sup = std::max(sup, nonmarkov::detail::max_abs(traj.map(times[k]).matrix() - ref[k]));
  }
  EXPECT_LT(sup, 1e-5);
}

TEST(Integro, TracePreservationAndStationaryState) {
  IntegroDiffParams p;
  p.gamma0 = 0.05;
  p.gamma = 0.5;
  const auto traj = integro_diff_trajectory(p, TimeGrid(400.0, 1.0));
  const double pbar = integro_diff_stationary_population(p);
  EXPECT_NEAR(pbar, 1.5 / 2.0, 1e-15);
  for (double t : {10.0, 200.0, 400.0}) EXPECT_LT(traj.map(t).trace_defect(), 1e-8);
  ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
  rho(1, 1) = 1.0;
  const ComplexMatrix late = traj.map(400.0).apply(rho);
  EXPECT_NEAR(late(0, 0).real(), pbar, 1e-6);
  // L annihilates the stationary state.
  ComplexMatrix st = ComplexMatrix::Zero(2, 2);
  st(0, 0) = pbar;
  st(1, 1) = 1.0 - pbar;
  EXPECT_LT(nonmarkov::detail::max_abs(integro_diff_lindbladian(p).apply(st)), 1e-15);
}

TEST(Integro, HermiticityPreserved) {
  const auto traj = integro_diff_trajectory({}, TimeGrid(100.0, 0.5));
  numerics::Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix h = numerics::random_hermitian(rng, 2).matrix();
    const ComplexMatrix out = traj.map(rng.uniform(0.0, 100.0)).apply(h);
    EXPECT_LT(nonmarkov::detail::max_abs(out - out.adjoint()), 1e-10);
  }
}

TEST(Integro, ReferenceStates) {
  const auto r = reference_helstrom_states();
  EXPECT_NEAR(r.rho1.matrix().trace().real(), 1.0, 1e-15);
  EXPECT_NEAR(r.rho2.matrix().trace().real(), 1.0, 1e-15);
  const ComplexMatrix delta = (1 - r.p) * r.rho1.matrix() - r.p * r.rho2.matrix();
  EXPECT_NEAR(delta.trace().real(), 0.86, 1e-12);
}

TEST(Semigroup, ClassicalTwoState) {
  RealMatrix l(2, 2);
  l << -1, 1, 1, -1;
  const auto traj = classical_semigroup_trajectory(l, TimeGrid(2.0, 0.01));
  for (double t : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(traj.stochastic_at(t)(0, 1), 0.5 * (1 - std::exp(-2 * t)), 1e-12);
  }
  EXPECT_TRUE(traj.is_classical());
}

TEST(Semigroup, QuantumHermiticityAndTrace) {
  numerics::Rng rng(34);
  const auto traj = semigroup_trajectory(random_lindblad_generator(rng, 3, 2, kRate), TimeGrid(2.0, 0.05));
  for (double t : {0.3, 1.1, 2.0}) {
    const Superoperator s = traj.map(t);
    EXPECT_LT(s.trace_defect(), 1e-10);
    EXPECT_LT(s.hermiticity_defect(), 1e-10);
  }
}
