#include <cmath>

#include "doctest.h"
#include "mismpc/terminal.hpp"

using namespace mismpc;

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m(0, 0) = a; m(0, 1) = b; m(1, 0) = c; m(1, 1) = d;
  return m;
}

Mat mat1(double a) {
  Mat m(1, 1);
  m(0, 0) = a;
  return m;
}

ParametricSystem scalar_integrator() {
  ParametricSystem s;
  s.n = 1; s.m = 1; s.n_theta = 1;
  s.f = [](const Vec& x, const Vec& u, const Vec& th) {
    return Vec{x[0] + (1.0 + th[0]) * u[0]};
  };
  return s;
}

ParametricSystem signed_sqrt() {
  ParametricSystem s;
  s.n = 1; s.m = 1; s.n_theta = 1;
  s.f = [](const Vec& x, const Vec& u, const Vec& th) {
    double z = x[0] + (1.0 + th[0]) * u[0];
    double r = std::sqrt(std::abs(z));
    return Vec{z < 0 ? -r : r};
  };
  return s;
}

}  // namespace

TEST_CASE("dlyap_solve on diagonal systems") {
  Mat z(2, 2);
  Mat p0 = dlyap_solve(z, identity(2));
  CHECK(p0(0, 0) == doctest::Approx(1.0));
  CHECK(p0(0, 1) == doctest::Approx(0.0));
  CHECK(p0(1, 1) == doctest::Approx(1.0));

  Mat half = matscale(identity(2), 0.5);
  Mat p1 = dlyap_solve(half, identity(2));
  CHECK(p1(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(p1(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("dlyap_solve rejects unstable A and asymmetric C") {
  CHECK_THROWS_AS(dlyap_solve(identity(2), identity(2)), no_solution);
  Mat c = mat2(1, 0.5, 0.0, 1);
  CHECK_THROWS_AS(dlyap_solve(matscale(identity(2), 0.5), c), invalid_input);
}

TEST_CASE("dlyap_solve reproduces the pendulum terminal weight") {
  Mat ak = mat2(1, 0.1, -0.9, 0);
  Mat qk = mat2(5, 4, 4, 5);  // Q + K'RK with Q = I, R = 1, K = [2 2]
  Mat p = dlyap_solve(ak, matscale(qk, 2.0));
  CHECK(std::abs(p(0, 0) - 31.133) < 1e-3);
  CHECK(std::abs(p(0, 1) - 10.196) < 1e-3);
  CHECK(std::abs(p(1, 0) - 10.196) < 1e-3);
  CHECK(std::abs(p(1, 1) - 10.311) < 1e-3);
  CHECK(asymmetry(p) < 1e-12);

  // Residual of the defining equation.
  Mat res = matadd(matsub(matmul(transpose(ak), matmul(p, ak)), p),
                   matscale(qk, 2.0));
  double rmax = 0;
  for (double v : res.a) rmax = std::max(rmax, std::abs(v));
  CHECK(rmax < 1e-10);
}

TEST_CASE("pendulum terminal constants match the frozen design") {
  auto c = pendulum_terminal_constants();
  CHECK(std::abs(c.a - 2.8643e-3) < 1e-6);
  CHECK(std::abs(c.b - 0.045675) < 1e-5);
  CHECK(std::abs(c.x_star - 0.9774) < 1e-3);
  CHECK(std::abs(c.x_lower + 1.0231) < 1e-3);
  CHECK(c.c_f == doctest::Approx(min_sym_eigenvalue(c.P_f) / 8.0));
  CHECK(std::abs(c.c_f - 0.768791) < 1e-3);

  // The closed-loop matrix is Schur with the documented spectrum.
  Mat acl = matsub(c.fb.A, matmul(c.fb.B, c.fb.K));
  auto ev = eigenvalues_2x2(acl);
  CHECK(ev[0].real() == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(ev[1].real() == doctest::Approx(0.1).epsilon(1e-12));

  // x_star solves 1 - b s - s^2 = 0.
  double q = 1.0 - c.b * c.x_star - c.x_star * c.x_star;
  CHECK(std::abs(q) < 1e-9);

  // P_f is positive definite and symmetric.
  CHECK(min_sym_eigenvalue(c.P_f) > 6.0);
  CHECK(asymmetry(c.P_f) < 1e-12);
}

TEST_CASE("terminal descent holds for the signed-sqrt design") {
  auto sys = signed_sqrt();
  TerminalIngredients term;
  term.P_f = mat1(4.0);
  term.c_f = 4.0;
  term.kappa_f = [](const Vec& x) { return Vec{-x[0]}; };
  auto stage = [](const Vec& x, const Vec& u) {
    return x[0] * x[0] + u[0] * u[0];
  };
  auto rep = verify_assumption3(sys, stage, term, {-1.0}, {1.0}, 4000, 7);
  CHECK(rep.input_feasible);
  CHECK(rep.pass);
  CHECK(rep.max_violation <= 1e-9);
}

TEST_CASE("terminal descent fails honestly for the scalar integrator design") {
  // With l = (x^2+u^2)/2 and V_f = x^2/2 no terminal law can descend:
  // the requirement collapses to (x+k)^2 + k^2 <= 0. For k_f = -x the
  // violation is exactly x^2/2, peaking at the terminal set boundary.
  auto sys = scalar_integrator();
  TerminalIngredients term;
  term.P_f = mat1(0.5);
  term.c_f = 0.5;
  term.kappa_f = [](const Vec& x) { return Vec{-x[0]}; };
  auto stage = [](const Vec& x, const Vec& u) {
    return 0.5 * (x[0] * x[0] + u[0] * u[0]);
  };
  auto rep = verify_assumption3(sys, stage, term, {-1.0}, {1.0}, 10000, 7);
  CHECK(rep.input_feasible);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_violation == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(std::abs(rep.worst_point[0]) > 0.99);
}

TEST_CASE("terminal descent check verifies the pendulum design on its set") {
  auto c = pendulum_terminal_constants();
  OdeSystem ode;
  ode.n = 2; ode.m = 1; ode.n_theta = 3;
  ParametricSystem sys;
  sys.n = 2; sys.m = 1; sys.n_theta = 3;
  // Nominal Euler model with gain estimate 5, delta 0.1.
  sys.f = [](const Vec& x, const Vec& u, const Vec&) {
    return Vec{x[0] + 0.1 * x[1],
               x[1] + 0.1 * (std::sin(x[0]) + 5.0 * u[0])};
  };
  TerminalIngredients term;
  term.P_f = c.P_f;
  term.c_f = c.c_f;
  Mat K = c.fb.K;
  term.kappa_f = [K](const Vec& x) {
    return Vec{-(K(0, 0) * x[0] + K(0, 1) * x[1])};
  };
  auto stage = [](const Vec& x, const Vec& u) {
    return x[0] * x[0] + x[1] * x[1] + u[0] * u[0];
  };
  auto rep = verify_assumption3(sys, stage, term, {-1.0}, {1.0}, 4000, 11);
  CHECK(rep.input_feasible);
  CHECK(rep.pass);
  CHECK(rep.max_violation < 0.0);
}

TEST_CASE("terminal descent check flags input-box violations") {
  auto sys = scalar_integrator();
  TerminalIngredients term;
  term.P_f = mat1(0.5);
  term.c_f = 0.5;
  term.kappa_f = [](const Vec& x) { return Vec{-3.0 * x[0]}; };
  auto stage = [](const Vec& x, const Vec& u) {
    return 0.5 * (x[0] * x[0] + u[0] * u[0]);
  };
  auto rep = verify_assumption3(sys, stage, term, {-1.0}, {1.0}, 4000, 7);
  CHECK_FALSE(rep.input_feasible);
  CHECK_FALSE(rep.pass);
  CHECK_THROWS_AS(verify_assumption3(sys, stage, term, {-1.0}, {1.0}, 0, 7),
                  invalid_input);
}
