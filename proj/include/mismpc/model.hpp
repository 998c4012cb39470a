#pragma once

// Parametric discrete-time systems, fixed-step RK4 discretization of ODEs
// under zero-order hold, and the discretization-residual map used to build
// plants whose mismatch interpolates between Euler and the exact flow.

#include <functional>
#include <string>
#include <vector>

#include "mismpc/errors.hpp"
#include "mismpc/linalg.hpp"

namespace mismpc {

// x+ = f(x, u, theta). theta = 0 recovers the nominal model.
struct ParametricSystem {
  int n = 0;
  int m = 0;
  int n_theta = 0;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> f;
  std::string name;
};

// xdot = F(x, u, theta), u held constant over a step.
struct OdeSystem {
  int n = 0;
  int m = 0;
  int n_theta = 0;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> F;
  std::string name;
};

struct Discretization {
  double delta = 0.1;
  int substeps = 100;  // >= 1
};

// Nominal model map f(x, u, 0).
Vec nominal_step(const ParametricSystem& sys, const Vec& x, const Vec& u);

// States s[0..K] with s[0]=x0 and s[k+1]=f(s[k], u[k], theta).
// Dimension mismatches throw invalid_input.
std::vector<Vec> open_loop_rollout(const ParametricSystem& sys,
                                   const Vec& x0,
                                   const std::vector<Vec>& inputs,
                                   const Vec& theta);

// One classical RK4 step of size h with u, theta held fixed.
// Non-finite intermediate values throw numerical_overflow.
Vec rk4_step(const OdeSystem& ode, const Vec& x, const Vec& u, const Vec& theta,
             double h);

// disc.substeps RK4 steps of size delta/substeps; stands in for the exact flow.
Vec exact_discretize(const OdeSystem& ode, const Vec& x, const Vec& u,
                     const Vec& theta, const Discretization& disc);

// r(x,u,theta) = exact_discretize(...) - x - delta*F(x,u,theta): the gap
// between the flow and one explicit Euler step. O(delta^2) as delta -> 0.
Vec residual_r(const OdeSystem& ode, const Vec& x, const Vec& u,
               const Vec& theta, const Discretization& disc);

}  // namespace mismpc
