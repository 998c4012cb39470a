#pragma once

// Benchmark scenario registry. Each scenario bundles a plant family, the
// nominal MPC problem, optional closed-form law and Lyapunov candidate, and
// the default grids its experiments use. Construction runs spot checks of the
// structural assumptions the scenario declares.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mismpc/closedloop.hpp"
#include "mismpc/model.hpp"
#include "mismpc/ocp.hpp"

namespace mismpc {

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;
};

struct LyapunovCandidate {
  std::function<double(const Vec&)> V;
  double alpha3_coeff = 0.0;  // descent target alpha3(s) = coeff * s^2
  std::string label;
};

struct Scenario {
  std::string name;
  ParametricSystem plant;
  MpcProblem prob;
  std::optional<AnalyticLaw> analytic;
  std::optional<LyapunovCandidate> candidate;

  // Structural assumptions the scenario declares (checked at load):
  // 1 continuity at the origin, 2 compact input box containing 0,
  // 3 terminal descent condition, 4 stage cost lower bound,
  // 5 terminal cost upper bound on the terminal set,
  // 6 origin fixed under every theta, 7 smooth model (C1).
  std::set<int> assumptions;

  GridSpec x_grid;      // default sweep range for the first coordinate
  GridSpec theta_grid;  // default sweep range for scalar theta
  double sim_box = 0.0; // escape radius = 10 * diameter of the feasible box
  double default_rho = 0.0;
  double default_delta = 0.0;
  GammaTrack gamma_track = GammaTrack::warm_start_quadratic;
  bool use_solver = true;  // false: closed-loop work routes the analytic law
  std::vector<std::string> artifacts;  // files cmd_reproduce emits

  // Quadratic comparison bounds: alpha1*s^2 <= V(x), alpha3*s^2 <= l(x,kappa(x)).
  double alpha1_coeff = 0.0;
  double alpha3_coeff = 0.0;

  std::unique_ptr<Policy> make_policy() const;
};

std::vector<std::string> scenario_names();

// Throws invalid_input for unknown names; runs declared-assumption spot
// checks on first construction of each scenario.
Scenario make_scenario(const std::string& name);

// Building blocks exposed for tests.
OdeSystem pendulum_ode();
ParametricSystem pendulum_plant(const Discretization& disc);
ParametricSystem integrator_plant();
ParametricSystem signed_sqrt_plant();
ParametricSystem sin_plant();
double sin_gamma(double x);  // |x| sin(2 pi / x), 0 at 0

}  // namespace mismpc
