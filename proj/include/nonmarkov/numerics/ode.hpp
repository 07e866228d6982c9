#pragma once

// Adaptive Dormand-Prince 5(4) integrator with the standard fourth-order
// continuous extension, so that solutions can be reported on an arbitrary
// output grid without constraining the step-size controller.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonmarkov/errors.hpp"

namespace nonmarkov::numerics {

template <typename Scalar>
struct OdeProblem {
  using State = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::function<State(double, const State&)> rhs;
  State initial;
  double t0 = 0.0;
  double t1 = 1.0;
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_step = std::numeric_limits<double>::infinity();
};

namespace dopri {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dopri

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

/// Integrates `problem` and returns the state at every entry of
/// `output_times` (which must be nondecreasing and inside [t0, t1]).
template <typename Scalar>
std::vector<typename OdeProblem<Scalar>::State> integrate_ode(const OdeProblem<Scalar>& problem,
                                                              const std::vector<double>& output_times,
                                                              OdeStats* stats = nullptr) {
  using State = typename OdeProblem<Scalar>::State;
  using namespace dopri;

  if (!(problem.rtol > 0.0) || !(problem.atol > 0.0)) {
    throw std::invalid_argument("integrate_ode: tolerances must be positive");
  }
  if (!(problem.t1 > problem.t0)) throw std::invalid_argument("integrate_ode: degenerate time span");
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    const double t = output_times[i];
    if (t < problem.t0 || t > problem.t1 || (i > 0 && t < output_times[i - 1])) {
      throw std::invalid_argument("integrate_ode: output grid must be sorted and inside the span");
    }
  }

  OdeStats local;
  OdeStats& st = stats ? *stats : local;
  auto f = [&](double t, const State& y) {
    ++st.rhs_evaluations;
    State dy = problem.rhs(t, y);
    if (!dy.allFinite()) {
      throw NumericalError("integrate_ode: right-hand side is not finite at t = " +
                           std::to_string(t));
    }
    return dy;
  };
  auto err_norm = [&](const State& err, const State& y0, const State& y1) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double sc = problem.atol + problem.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
      const double r = std::abs(err(i)) / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, err.size())));
  };

  std::vector<State> out;
  out.reserve(output_times.size());
  std::size_t next_out = 0;

  double t = problem.t0;
  State y = problem.initial;
  while (next_out < output_times.size() && output_times[next_out] <= t) out.push_back(y), ++next_out;

  State k1 = f(t, y);

  // Initial step (Hairer, Norsett & Wanner, II.4).
  double h;
  {
    const double d0 = err_norm(y, y, y);
    const double d1n = err_norm(k1, y, y);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min({h0, problem.max_step, problem.t1 - problem.t0});
    const State y1 = y + h0 * k1;
    const State k2 = f(t + h0, y1);
    const double d2 = err_norm(k2 - k1, y, y) / h0;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    h = std::min({100.0 * h0, h1, problem.max_step, problem.t1 - problem.t0});
  }

  while (t < problem.t1) {
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      throw NumericalError("integrate_ode: step size underflow; last good time t = " +
                           std::to_string(t));
    }
    const bool last = t + h >= problem.t1;
    if (last) h = problem.t1 - t;

    const State k2 = f(t + c2 * h, y + h * (a21 * k1));
    const State k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const State k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const State k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const State y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const State k7 = f(t + h, y_new);
    const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = err_norm(err, y, y_new);

    if (!std::isfinite(en)) {
      ++st.rejected;
      h *= 0.2;
      continue;
    }
    if (en <= 1.0) {
      ++st.accepted;
      const double t_new = last ? problem.t1 : t + h;
      // Continuous extension on [t, t_new].
      if (next_out < output_times.size() && output_times[next_out] <= t_new) {
        const State r1 = y;
        const State r2 = y_new - y;
        const State r3 = h * k1 - r2;
        const State r4 = r2 - h * k7 - r3;
        const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next_out < output_times.size() && output_times[next_out] <= t_new) {
          const double tq = output_times[next_out];
          if (tq == t_new) {
            out.push_back(y_new);
          } else {
            const double th = (tq - t) / h;
            const double th1 = 1.0 - th;
            out.push_back(r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5))));
          }
          ++next_out;
        }
      }
      t = t_new;
      y = y_new;
      k1 = k7;
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = std::min(h * fac, problem.max_step);
    } else {
      ++st.rejected;
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
    }
  }
  while (next_out < output_times.size()) out.push_back(y), ++next_out;
  return out;
}

}  // namespace nonmarkov::numerics
