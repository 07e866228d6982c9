#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nonmarkov/models.hpp"
#include "nonmarkov/numerics/expm.hpp"
#include "nonmarkov/trajectory.hpp"

using namespace nonmarkov;

namespace {

Superoperator damping_generator() {
  return dissipator(pauli::minus()) + 0.3 * dissipator(pauli::plus()) +
         commutator_generator(0.7 * pauli::x());
}

}  // namespace

TEST(TimeGrid, StepIsShrunkToLandOnHorizon) {
  const TimeGrid g(3.0 * std::numbers::pi, 1e-3);
  EXPECT_EQ(g.steps(), 9425u);
  EXPECT_DOUBLE_EQ(g[g.steps()], 3.0 * std::numbers::pi);
  EXPECT_LE(g.step(), 1e-3);
  EXPECT_EQ(TimeGrid(1.0, 0.1).steps(), 10u);
  EXPECT_EQ(TimeGrid(1.0, 0.1).node(0.5).value(), 5u);
  EXPECT_FALSE(TimeGrid(1.0, 0.1).node(0.55).has_value());
  EXPECT_THROW(TimeGrid(0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 2.0), std::invalid_argument);
}

TEST(MapTrajectory, ValidatesSamples) {
  const TimeGrid g(1.0, 0.25);
  std::vector<ComplexMatrix> ok(g.size(), ComplexMatrix::Identity(4, 4));
  EXPECT_NO_THROW(MapTrajectory::from_samples(g, ok));
  auto bad_start = ok;
  bad_start[0](0, 0) = 0.5;
  EXPECT_THROW(MapTrajectory::from_samples(g, bad_start), std::invalid_argument);
  auto not_tp = ok;
  not_tp[2](0, 0) = 0.9;
  EXPECT_THROW(MapTrajectory::from_samples(g, not_tp), std::invalid_argument);
  const TimeGrid tiny(1.0, 0.5);
  EXPECT_THROW(MapTrajectory::from_samples(tiny, std::vector<ComplexMatrix>(3, ComplexMatrix::Identity(4, 4))),
               std::invalid_argument);
  std::vector<RealMatrix> not_stochastic(g.size(), RealMatrix::Identity(2, 2));
  not_stochastic[1](1, 0) = 0.2;
  EXPECT_THROW(MapTrajectory::classical_from_samples(g, not_stochastic), std::invalid_argument);
}

TEST(MapTrajectory, InterpolationOrder) {
  const Superoperator l = damping_generator();
  const TimeGrid g(2.0, 0.05);
  std::vector<ComplexMatrix> maps, derivs;
  for (double t : g.times()) {
    maps.push_back(numerics::expm(t * l.matrix()));
    derivs.push_back(l.matrix() * maps.back());
  }
  const auto lagrange = MapTrajectory::from_samples(g, maps);
  const auto hermite = MapTrajectory::from_samples(g, maps, derivs);
  EXPECT_FALSE(lagrange.has_exact_derivatives());
  EXPECT_TRUE(hermite.has_exact_derivatives());
  for (double t : {0.013, 0.5127, 1.0333, 1.99}) {
    const ComplexMatrix exact = numerics::expm(t * l.matrix());
    EXPECT_LT(detail::max_abs(lagrange.native_at(t) - exact), 1e-5) << t;
    EXPECT_LT(detail::max_abs(hermite.native_at(t) - exact), 1e-6) << t;
    EXPECT_LT(detail::max_abs(hermite.native_derivative_at(t) - l.matrix() * exact), 1e-4) << t;
  }
  // Grid-node derivatives without a table: second-order stencils.
  EXPECT_LT(detail::max_abs(lagrange.native_derivative_at(1.0) - l.matrix() * maps[20]), 1e-2);
  EXPECT_LT(detail::max_abs(lagrange.native_derivative_at(0.0) - l.matrix()), 2e-2);
  EXPECT_THROW((void)lagrange.native_at(2.5), std::out_of_range);
}

TEST(MapTrajectory, SingularMapReportsTimeAndValue) {
  // M(t) = (1 - s) 1 + s J/2 with s = t (2 - t): fully mixing at t = 1.
  auto map = [](double t) {
    const double s = t * (2.0 - t);
    return RealMatrix((1.0 - s) * RealMatrix::Identity(2, 2) + s * RealMatrix::Constant(2, 2, 0.5));
  };
  auto deriv = [](double t) {
    const double ds = 2.0 - 2.0 * t;
    return RealMatrix(ds * (RealMatrix::Constant(2, 2, 0.5) - RealMatrix::Identity(2, 2)));
  };
  const auto traj = MapTrajectory::classical_from_function(TimeGrid(2.0, 0.1), map, deriv);
  EXPECT_LT(traj.smallest_singular_value(1.0), 1e-10);
  try {
    (void)traj.native_inverse(traj.native_at(1.0), 1.0);
    FAIL() << "expected SingularMapError";
  } catch (const SingularMapError& e) {
    EXPECT_DOUBLE_EQ(e.time(), 1.0);
    EXPECT_LT(e.singular_value(), 1e-10);
  }
  EXPECT_GT(traj.smallest_singular_value(0.5), 0.1);
}

TEST(MapTrajectory, SuperoperatorViewOfClassicalMap) {
  const auto traj = models::toy_trajectory({0.4}, TimeGrid(3.0 * std::numbers::pi, 0.01));
  EXPECT_TRUE(traj.is_classical());
  EXPECT_EQ(traj.dim(), 2);
  const Superoperator s = traj.map(std::numbers::pi);
  ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
  rho(0, 0) = 1.0;
  const ComplexMatrix out = s.apply(rho);
  EXPECT_NEAR(out(0, 0).real(), 0.2, 1e-12);
  EXPECT_NEAR(out(1, 1).real(), 0.8, 1e-12);
}
