#include "mismpc/model.hpp"

#include <cmath>
#include <string>

namespace mismpc {

namespace {
void check_dims(const char* who, int want, const Vec& v, const char* what) {
  if (static_cast<int>(v.size()) != want)
    throw invalid_input(std::string(who) + ": " + what + " has size " +
                        std::to_string(v.size()) + ", expected " +
                        std::to_string(want));
}
}  // namespace

Vec nominal_step(const ParametricSystem& sys, const Vec& x, const Vec& u) {
  return sys.f(x, u, Vec(sys.n_theta, 0.0));
}

std::vector<Vec> open_loop_rollout(const ParametricSystem& sys, const Vec& x0,
                                   const std::vector<Vec>& inputs,
                                   const Vec& theta) {
  check_dims("open_loop_rollout", sys.n, x0, "x0");
  check_dims("open_loop_rollout", sys.n_theta, theta, "theta");
  std::vector<Vec> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (const Vec& u : inputs) {
    check_dims("open_loop_rollout", sys.m, u, "input");
    Vec next = sys.f(states.back(), u, theta);
    check_dims("open_loop_rollout", sys.n, next, "successor");
    states.push_back(std::move(next));
  }
  return states;
}

Vec rk4_step(const OdeSystem& ode, const Vec& x, const Vec& u, const Vec& theta,
             double h) {
  check_dims("rk4_step", ode.n, x, "x");
  check_dims("rk4_step", ode.m, u, "u");
  check_dims("rk4_step", ode.n_theta, theta, "theta");

  Vec k1 = ode.F(x, u, theta);
  Vec k2 = ode.F(vadd(x, vscale(k1, 0.5 * h)), u, theta);
  Vec k3 = ode.F(vadd(x, vscale(k2, 0.5 * h)), u, theta);
  Vec k4 = ode.F(vadd(x, vscale(k3, h)), u, theta);
  Vec out(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  if (!all_finite(out))
    throw numerical_overflow("rk4_step: non-finite state");
  return out;
}

Vec exact_discretize(const OdeSystem& ode, const Vec& x, const Vec& u,
                     const Vec& theta, const Discretization& disc) {
  if (disc.substeps < 1)
    throw invalid_input("exact_discretize: substeps must be >= 1");
  const double h = disc.delta / disc.substeps;
  Vec s = x;
  for (int k = 0; k < disc.substeps; ++k) s = rk4_step(ode, s, u, theta, h);
  return s;
}

Vec residual_r(const OdeSystem& ode, const Vec& x, const Vec& u,
               const Vec& theta, const Discretization& disc) {
  Vec flow = exact_discretize(ode, x, u, theta, disc);
  Vec euler = vadd(x, vscale(ode.F(x, u, theta), disc.delta));
  return vsub(flow, euler);
}

}  // namespace mismpc
