#pragma once

// Finite-horizon optimal control problems with box input constraints and a
// terminal sublevel-set constraint, solved by single shooting: augmented
// Lagrangian on the scalar terminal constraint around a projected-gradient
// inner loop. A brute-force grid solver covers low-dimensional cross-checks.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mismpc/errors.hpp"
#include "mismpc/linalg.hpp"
#include "mismpc/model.hpp"
#include "mismpc/terminal.hpp"

namespace mismpc {

// Inputs stacked over the horizon: u[k] is the m-vector applied at step k.
using InputSequence = std::vector<Vec>;

struct MpcProblem {
  ParametricSystem sys;  // prediction uses sys.f(.,.,0)
  int N = 1;
  Vec input_lower;  // box U, contains 0
  Vec input_upper;
  std::function<double(const Vec&, const Vec&)> stage_cost;  // l(x,u), l(0,0)=0
  TerminalIngredients terminal;

  // Optional analytic hooks; central finite differences otherwise.
  std::function<void(const Vec&, const Vec&, Mat&, Mat&)> model_jacobians;
  std::function<void(const Vec&, const Vec&, Vec&, Vec&)> stage_cost_gradients;
};

struct OcpSolution {
  InputSequence u_opt;
  std::vector<Vec> x_traj;   // N+1 states under the nominal model
  double value = 0.0;
  double terminal_value = 0.0;  // V_f at the predicted terminal state
  bool feasible = false;
  int iterations = 0;
  double kkt_residual = 0.0;
  Vec x0;
};

// Closed-form control law used by scenarios that admit one.
struct AnalyticLaw {
  std::function<Vec(const Vec&)> kappa;
  std::function<double(const Vec&)> value_fn;  // optimal value on the domain
  double domain_radius = 0.0;                  // valid for |x|_inf <= radius
  std::string label;
};

// Stage costs summed along the nominal rollout plus terminal cost.
// Dimension mismatches -> invalid_input; non-finite states -> numerical_overflow.
double objective(const MpcProblem& prob, const Vec& x, const InputSequence& u);

// Box feasibility within 1e-12 and terminal value <= c_f + 1e-8.
bool feasible(const MpcProblem& prob, const Vec& x, const InputSequence& u);

struct SolveOptions {
  int max_outer = 200;
  int max_inner = 2000;
  double pg_tol = 1e-8;
  double constraint_tol = 1e-8;
  double mu0 = 10.0;
  double mu_growth = 10.0;
  // Extra deterministic starting points beyond {warm start, zeros}.
  std::vector<InputSequence> extra_starts;
};

// Multi-start solve; the warm start (when given) is also evaluated as-is so
// the returned value never exceeds the warm start's objective. Infeasibility
// is declared when no start drives the terminal violation below 1e-6.
OcpSolution solve(const MpcProblem& prob, const Vec& x,
                  const InputSequence* warm = nullptr,
                  const SolveOptions& opts = {});

// Exhaustive grid + one golden-section refinement per coordinate. Only m = 1
// and N <= 2 are supported (unsupported otherwise); grid_per_dim >= 101.
OcpSolution brute_force_solve(const MpcProblem& prob, const Vec& x,
                              int grid_per_dim = 201);

// Shifted previous solution with the terminal law appended, projected into
// the input box. prev must be feasible (invalid_input otherwise).
InputSequence warm_start(const MpcProblem& prob, const OcpSolution& prev);

// First input of the solution at x.
Vec control_law(const MpcProblem& prob, const Vec& x,
                const InputSequence* warm = nullptr);

Vec clamp_to_box(const Vec& u, const Vec& lo, const Vec& hi);

}  // namespace mismpc
