#include <cmath>

#include "doctest.h"
#include "mismpc/model.hpp"

using namespace mismpc;

namespace {

ParametricSystem scalar_integrator() {
  ParametricSystem s;
  s.n = 1; s.m = 1; s.n_theta = 1;
  s.f = [](const Vec& x, const Vec& u, const Vec& th) {
    return Vec{x[0] + (1.0 + th[0]) * u[0]};
  };
  s.name = "integrator";
  return s;
}

OdeSystem exp_ode() {
  OdeSystem o;
  o.n = 1; o.m = 1; o.n_theta = 1;
  o.F = [](const Vec& x, const Vec&, const Vec&) { return Vec{x[0]}; };
  o.name = "xdot=x";
  return o;
}

OdeSystem pend_ode() {
  OdeSystem o;
  o.n = 2; o.m = 1; o.n_theta = 3;
  o.F = [](const Vec& x, const Vec& u, const Vec& th) {
    return Vec{x[1],
               std::sin(x[0]) - th[0] * th[0] * x[1] + (5.0 + th[1]) * u[0]};
  };
  o.name = "pendulum";
  return o;
}

}  // namespace

TEST_CASE("open_loop_rollout trajectories and dimension checks") {
  auto sys = scalar_integrator();
  std::vector<Vec> u = {{-1.0}, {-1.0}};

  auto s0 = open_loop_rollout(sys, {3.0}, u, {0.0});
  REQUIRE(s0.size() == 3);
  CHECK(s0[0][0] == doctest::Approx(3.0));
  CHECK(s0[1][0] == doctest::Approx(2.0));
  CHECK(s0[2][0] == doctest::Approx(1.0));

  auto s1 = open_loop_rollout(sys, {3.0}, u, {0.5});
  CHECK(s1[1][0] == doctest::Approx(1.5));
  CHECK(s1[2][0] == doctest::Approx(0.0));

  CHECK_THROWS_AS(open_loop_rollout(sys, {3.0, 1.0}, u, {0.0}), invalid_input);
  CHECK_THROWS_AS(open_loop_rollout(sys, {3.0}, {{1.0, 2.0}}, {0.0}),
                  invalid_input);
  CHECK_THROWS_AS(open_loop_rollout(sys, {3.0}, u, {}), invalid_input);
}

TEST_CASE("rk4_step matches the exponential to fifth order") {
  auto ode = exp_ode();
  Vec x1 = rk4_step(ode, {1.0}, {0.0}, {0.0}, 0.1);
  CHECK(std::abs(x1[0] - std::exp(0.1)) < 1e-7);
}

TEST_CASE("rk4_step flags non-finite blowups") {
  OdeSystem bad;
  bad.n = 1; bad.m = 1; bad.n_theta = 1;
  bad.F = [](const Vec& x, const Vec&, const Vec&) {
    return Vec{x[0] * x[0] * 1e200};
  };
  CHECK_THROWS_AS(rk4_step(bad, {1e200}, {0.0}, {0.0}, 1.0),
                  numerical_overflow);
}

TEST_CASE("hanging pendulum equilibrium is fixed under rk4") {
  auto ode = pend_ode();
  const double pi = 3.14159265358979323846;
  Vec x1 = rk4_step(ode, {pi, 0.0}, {0.0}, {0.0, 0.0, 0.0}, 0.1);
  // sin(pi) is ~1e-16; one step cannot move the state by more than ~1e-17.
  CHECK(std::abs(x1[0] - pi) < 1e-12);
  CHECK(std::abs(x1[1]) < 1e-12);
}

TEST_CASE("exact_discretize reproduces the flow of xdot = x") {
  auto ode = exp_ode();
  Discretization disc{0.1, 100};
  Vec x1 = exact_discretize(ode, {1.0}, {0.0}, {0.0}, disc);
  CHECK(std::abs(x1[0] - std::exp(0.1)) < 1e-12);

  // Self-convergence: refining substeps changes nothing past 1e-9.
  Discretization fine{0.1, 10000};
  Vec x2 = exact_discretize(ode, {1.0}, {0.0}, {0.0}, fine);
  CHECK(std::abs(x1[0] - x2[0]) < 1e-9);
}

TEST_CASE("residual_r is the Euler defect and shrinks quadratically") {
  auto ode = exp_ode();
  Discretization disc{0.1, 100};
  Vec r = residual_r(ode, {1.0}, {0.0}, {0.0}, disc);
  CHECK(r[0] == doctest::Approx(std::exp(0.1) - 1.1).epsilon(1e-10));

  auto pend = pend_ode();
  Vec x = {2.0, -0.5};
  Vec u = {0.3};
  Vec th = {0.5, 1.0, 0.0};
  Vec r1 = residual_r(pend, x, u, th, {0.1, 100});
  Vec r2 = residual_r(pend, x, u, th, {0.05, 100});
  double n1 = norm2(r1), n2 = norm2(r2);
  // Halving delta shrinks the defect by about 4.
  CHECK(n1 / n2 > 3.0);
  CHECK(n1 / n2 < 5.0);
}
