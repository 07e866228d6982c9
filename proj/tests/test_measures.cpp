#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nonmarkov/measures.hpp"
#include "nonmarkov/models.hpp"
#include "oracles.hpp"

using namespace nonmarkov;
using namespace nonmarkov::models;

namespace {

constexpr double kPi = std::numbers::pi;
// Rate scale of random generators: keeps Lambda(t) well conditioned over the
// test horizons, since L = dLambda Lambda^{-1} loses accuracy like cond(Lambda).
constexpr double kRate = 0.25;

DensityMatrix diag2(double a) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = 1.0 - a;
  return DensityMatrix(m);
}

SearchOptions small_search(std::size_t budget = 1200, std::size_t starts = 8) {
  SearchOptions o;
  o.budget = budget;
  o.starts = starts;
  o.seed = 77;
  return o;
}

// ||(1 (x) Lambda(t)) Delta||_1 through the oracle extension and eigensolver.
double oracle_norm(const MapTrajectory& traj, const ComplexMatrix& delta, Index k, double t) {
  return oracle::trace_norm(oracle::apply_extended(traj.map(t).matrix(), traj.dim(), delta, k));
}

MapTrajectory toy_traj(double h = 1e-3) { return toy_trajectory({0.4}, TimeGrid(3 * kPi, h)); }

}  // namespace

TEST(TraceDistance, DiagonalExample) {
  EXPECT_NEAR(trace_distance(diag2(0.75), diag2(0.25)), 0.5, 1e-15);
}

TEST(Helstrom, ReferenceDelta) {
  const auto r = reference_helstrom_states();
  const HelstromMatrix h(r.p, r.rho1, r.rho2);
  EXPECT_LT(nonmarkov::detail::max_abs(h.delta().matrix() - (0.93 * r.rho1.matrix() - 0.07 * r.rho2.matrix())), 1e-15);
  EXPECT_NEAR(h.delta().trace(), 0.86, 1e-12);
  EXPECT_NEAR(min_error_probability(r.p, r.rho1, r.rho2), 0.5 * (1 - h.trace_norm()), 1e-15);
  EXPECT_NEAR(min_error_probability(r.p, r.rho1, r.rho2),
              min_error_brute_force(r.p, r.rho1, r.rho2, 4000, 3), 1e-6);
}

TEST(Helstrom, BoundaryPriors) {
  numerics::Rng rng(41);
  const auto a = numerics::random_density_matrix(rng, 3), b = numerics::random_density_matrix(rng, 3);
  EXPECT_EQ(min_error_probability(0.0, a, b), 0.0);
  EXPECT_EQ(min_error_probability(1.0, a, b), 0.0);
  EXPECT_THROW(HelstromMatrix(1.5, a, b), std::invalid_argument);
}

TEST(Helstrom, OrthogonalStates) {
  EXPECT_NEAR(min_error_probability(0.3, diag2(1.0), diag2(0.0)), 0.0, 1e-15);
}

TEST(Helstrom, MatchesMeasurementSearch) {
  numerics::Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = rng.uniform();
    const auto a = numerics::random_density_matrix(rng, 2), b = numerics::random_density_matrix(rng, 2);
    const double e = min_error_probability(p, a, b);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 0.5);
    EXPECT_NEAR(e, oracle::qubit_min_error_search(p, a.matrix(), b.matrix()), 1e-6) << trial;
  }
}

TEST(Flow, RightDerivativeMatchesFiniteDifference) {
  numerics::Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix x = numerics::random_hermitian(rng, 3).matrix();
    const ComplexMatrix xd = numerics::random_hermitian(rng, 3).matrix();
    const double eps = 1e-7;
    const auto nr = norm_and_right_derivative(x, xd);
    const double fd = (trace_norm_hermitian(x + eps * xd) - trace_norm_hermitian(x)) / eps;
    EXPECT_NEAR(nr.rate, fd, 1e-5);
  }
  // At a kink the right derivative is the norm of the compressed direction.
  ComplexMatrix zero = ComplexMatrix::Zero(2, 2);
  ComplexMatrix dir(2, 2);
  dir << 1, 0, 0, -1;
  EXPECT_NEAR(norm_and_right_derivative(zero, dir).rate, 2.0, 1e-14);
}

TEST(Sigma, ToyVanishesAfterPi) {
  const auto traj = toy_traj();
  numerics::Rng rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const double t = rng.uniform(kPi + 0.01, 2 * kPi - 0.01);
    EXPECT_NEAR(sigma(traj, diag2(rng.uniform()), diag2(rng.uniform()), t), 0.0, 1e-9);
  }
}

TEST(Sigma, ToyClosedFormAtQuarterPeriod) {
  EXPECT_NEAR(sigma_toy_closed_form(2.0 / 3.0, 0.0, 0.5), -2.0 / 3.0, 1e-15);
  const auto traj = toy_traj();
  const auto r1 = diag2(1.0), r2 = diag2(0.0);
  const double t = kPi / 2;
  const RealMatrix m = traj.stochastic_at(t);
  const double d0 = 0.5 * (m(0, 0) - m(0, 1));
  const auto rates = toy_rates({0.4}, t);
  EXPECT_NEAR(sigma(traj, r1, r2, t), sigma_toy_closed_form(rates.a0, rates.a1, d0), 1e-6);
}

TEST(Sigma, TildeOfHalfDifferenceEqualsSigma) {
  QubitModelParams p;
  p.alpha0 = 0.3;
  p.alpha1 = 0.4;
  p.v = 0.2;
  p.beta = 0.3;
  p.omega = 2.0;
  const auto traj = qubit_trajectory(p, TimeGrid(5.0, 1e-3));
  numerics::Rng rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = numerics::random_density_matrix(rng, 2), b = numerics::random_density_matrix(rng, 2);
    const double t = rng.uniform(0.1, 4.9);
    const HermitianOperator half(0.5 * (a.matrix() - b.matrix()));
    EXPECT_NEAR(sigma_tilde(traj, half, t, 1), sigma(traj, a, b, t), 1e-6);
    // Independent finite difference through the oracle extension.
    const double h = traj.grid().step();
    const double fd = (oracle_norm(traj, half.matrix(), 1, t + h) - oracle_norm(traj, half.matrix(), 1, t - h)) / (2 * h);
    EXPECT_NEAR(sigma(traj, a, b, t), fd, 1e-8);
  }
}

TEST(Sigma, SidedRatesAtKink) {
  // x0 = x1 = gamma = 1 - t/2: the population difference of Delta = diag(1/2, -1/2)
  // evolves as 1/2 - t/2, so ||Delta(t)||_1 = |1 - t| has a kink at t = 1.
  QubitModelParams p;
  p.family = QubitModelParams::Family::tabulated;
  for (int i = 0; i <= 40; ++i) {
    const double t = 0.05 * i;
    QubitSample s;
    s.x0 = s.x1 = 1.0 - 0.5 * t;
    s.dx0 = s.dx1 = -0.5;
    s.gamma = s.x0;
    s.dgamma = -0.5;
    p.times.push_back(t);
    p.table.push_back(s);
  }
  const auto traj = qubit_trajectory(p, TimeGrid(2.0, 0.05));
  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -0.5;
  const auto s = sigma_tilde_sided(traj, HermitianOperator(d), 1.0, 1);
  ASSERT_TRUE(s.backward && s.forward);
  EXPECT_NEAR(*s.backward, -1.0, 1e-9);
  EXPECT_NEAR(*s.forward, 1.0, 1e-9);
  EXPECT_NEAR(s.central, 0.0, 1e-9);
  const auto smooth = sigma_tilde_sided(traj, HermitianOperator(d), 0.5, 1);
  EXPECT_NEAR(*smooth.backward, *smooth.forward, 1e-9);
}

TEST(Flow, RatesConsistentWithValues) {
  const auto traj = integro_diff_trajectory({}, TimeGrid(250.0, 0.25));
  const auto r = reference_helstrom_states();
  const ComplexMatrix delta = (1 - r.p) * r.rho1.matrix() - r.p * r.rho2.matrix();
  const FlowTrace f = flow_trace(FlowEvaluator(traj, 2), delta);
  const double h = traj.grid().step();
  for (std::size_t i = 1; i + 1 < f.t.size(); ++i) {
    EXPECT_NEAR(f.rates[i], (f.values[i + 1] - f.values[i - 1]) / (2 * h), 1e-6);
  }
  // Growth on a single contiguous interval.
  ASSERT_EQ(f.intervals.size(), 1u);
  EXPECT_GT(f.intervals[0].second - f.intervals[0].first, 10.0);
  EXPECT_GT(f.positive_integral, 0.0);
  EXPECT_NEAR(f.values.front(), trace_norm_hermitian(delta), 1e-14);
}

TEST(DataProcessing, CpPropagatorSlicesContract) {
  numerics::Rng rng(46);
  const auto integro = integro_diff_trajectory({}, TimeGrid(200.0, 0.5));
  QubitModelParams p;
  p.alpha0 = 0.2;
  p.alpha1 = 0.3;
  p.v = 0.5;
  const auto qubit = qubit_trajectory(p, TimeGrid(5.0, 0.01));
  for (const MapTrajectory* traj : {&integro, &qubit}) {
    const double tmax = traj->grid().t_max();
    for (int trial = 0; trial < 20; ++trial) {
      // Slices Lambda(t, 0) are CP for both models.
      const Superoperator s = traj->map(rng.uniform(0.0, tmax));
      const ComplexMatrix delta = numerics::random_hermitian(rng, 4).matrix();
      EXPECT_LE(trace_norm_hermitian(apply_with_ancilla(s, delta, 2)), trace_norm_hermitian(delta) + 1e-9);
    }
  }
}

TEST(Rhp, ToyIntegralAndMeasure) {
  const auto r = n_rhp(toy_traj(), 3 * kPi);
  EXPECT_NEAR(r.integral, 1.6, 1e-4);
  EXPECT_NEAR(r.value, 1.6 / 2.6, 1e-4);
  EXPECT_TRUE(r.divergent);
}

TEST(Rhp, ToyMeasureGrowsWithHorizon) {
  const auto long_traj = toy_trajectory({0.4}, TimeGrid(21 * kPi, 1e-2));
  double prev = 0.0;
  for (int k : {3, 7, 11, 21}) {
    const auto r = n_rhp(long_traj, k * kPi);
    EXPECT_GT(r.value, prev);
    prev = r.value;
  }
  // I = 0.8 (k - 1): measure -> 1.
  EXPECT_NEAR(prev, 16.0 / 17.0, 1e-3);
}

TEST(Rhp, SemigroupIsZero) {
  numerics::Rng rng(47);
  const auto traj = semigroup_trajectory(random_lindblad_generator(rng, 2, 2, kRate), TimeGrid(3.0, 0.05));
  const auto r = n_rhp(traj, 3.0);
  EXPECT_LT(r.value, 1e-8);
  EXPECT_FALSE(r.divergent);
}

TEST(Blp, ToyIsZero) {
  for (std::size_t budget : {200u, 1200u}) {
    const auto r = n_blp(toy_traj(1e-2), small_search(budget));
    EXPECT_EQ(r.value, 0.0);
  }
}

TEST(Blp, ZeroRhpImpliesZeroBlp) {
  numerics::Rng rng(48);
  for (int trial = 0; trial < 3; ++trial) {
    const auto traj = semigroup_trajectory(random_lindblad_generator(rng, 2, 2, kRate), TimeGrid(3.0, 0.05));
    ASSERT_LT(n_rhp(traj, 3.0).value, 1e-8);
    for (std::size_t budget : {200u, 800u}) EXPECT_EQ(n_blp(traj, small_search(budget)).value, 0.0);
  }
}

TEST(Blp, QubitBackflowIsDetected) {
  QubitModelParams p;
  p.alpha0 = 0.0;
  p.alpha1 = 0.0;
  p.beta = 0.4;
  p.omega = 2.0;
  const auto traj = qubit_trajectory(p, TimeGrid(4.0, 0.01));
  const auto r = n_blp(traj, small_search());
  EXPECT_GT(r.value, 0.0);
  ASSERT_TRUE(r.rho1 && r.rho2);
  EXPECT_FALSE(r.intervals.empty());
  // Coherence |gamma| rises from 1 - 2 beta back to 1 on (pi/2, pi): the best
  // pair gains 2 beta of trace distance.
  EXPECT_NEAR(r.value, 0.8, 1e-3);
}

TEST(HelstromMeasure, ToyPositiveAndDeterministic) {
  const auto traj = toy_traj(1e-2);
  const auto a = n_helstrom(traj, 2, small_search());
  const auto b = n_helstrom(traj, 2, small_search());
  EXPECT_GT(a.value, 0.0);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.evaluations, b.evaluations);
  ASSERT_TRUE(a.delta.has_value());
  EXPECT_GE(n_helstrom(traj, 2, small_search(2400)).value, a.value);
}

TEST(HelstromMeasure, SemigroupIsZero) {
  numerics::Rng rng(49);
  const auto traj = semigroup_trajectory(random_lindblad_generator(rng, 2, 2, kRate), TimeGrid(2.0, 0.05));
  EXPECT_EQ(n_helstrom(traj, 2, small_search(800)).value, 0.0);
}

TEST(Witness, ToyWitnessIsSound) {
  const auto traj = toy_traj(1e-2);
  const auto w = find_backflow_witness(traj, 2, small_search());
  ASSERT_TRUE(w.has_value());
  EXPECT_GT(w->t, kPi);
  const double h = traj.grid().step();
  const double re = (oracle_norm(traj, w->delta.matrix(), 2, w->t + h) -
                     oracle_norm(traj, w->delta.matrix(), 2, w->t - h)) / (2 * h);
  EXPECT_NEAR(re, w->sigma_tilde, 1e-8);
  EXPECT_GT(re, 0.0);
}

TEST(Witness, QubitNegativeRateRegime) {
  QubitModelParams p;
  p.family = QubitModelParams::Family::toy;
  p.kappa = 0.4;
  const auto traj = qubit_trajectory(p, TimeGrid(3 * kPi, 1e-2));
  const auto w = find_backflow_witness(traj, 2, small_search());
  ASSERT_TRUE(w.has_value());
  EXPECT_GT(w->sigma_tilde, 0.0);
  EXPECT_NEAR(sigma_tilde(traj, w->delta, w->t, 2), w->sigma_tilde, 1e-8);
}

TEST(Witness, NoneForSemigroups) {
  numerics::Rng rng(50);
  for (int trial = 0; trial < 3; ++trial) {
    const auto traj = semigroup_trajectory(random_lindblad_generator(rng, 2, 2, kRate), TimeGrid(2.0, 0.05));
    EXPECT_FALSE(find_backflow_witness(traj, 2, small_search(600)).has_value());
  }
  RealMatrix l(3, 3);
  l << -1, 0.5, 0.2, 0.6, -0.5, 0.3, 0.4, 0.0, -0.5;
  const auto cl = classical_semigroup_trajectory(l, TimeGrid(3.0, 0.05));
  EXPECT_FALSE(find_backflow_witness(cl, 3, small_search(600)).has_value());
}
