#pragma once

// Closed-loop simulation under plant-model mismatch and the numerical
// certification pipeline: invariance checks, descent scans over (x, theta)
// grids, disturbance-gain fitting, and exponential decay fits.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mismpc/compfn.hpp"
#include "mismpc/errors.hpp"
#include "mismpc/ocp.hpp"

namespace mismpc {

// Feedback policy plus the value function it reports. SolverPolicy wraps the
// OCP solver with warm starting; AnalyticPolicy wraps a closed-form law.
class Policy {
 public:
  virtual ~Policy() = default;
  struct Decision {
    Vec u;
    double value = 0.0;   // V(x) before the step
    bool feasible = false;
    Vec terminal_state;   // predicted terminal state (empty if not applicable)
    InputSequence plan;   // full input plan (empty if not applicable)
  };
  // Stateful step: solver policies consume and refresh their warm start.
  virtual Decision decide(const Vec& x) = 0;
  // Stateless evaluation (cold solve), safe to call concurrently.
  virtual Decision evaluate(const Vec& x) const = 0;
  // Value only. Infeasible/out-of-domain -> infinity.
  virtual double value(const Vec& x) const = 0;
  virtual void reset() = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

std::unique_ptr<Policy> make_solver_policy(const MpcProblem& prob);
std::unique_ptr<Policy> make_analytic_policy(const AnalyticLaw& law);

struct ClosedLoopRun {
  std::vector<Vec> theta_seq;
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  std::vector<double> values;   // V at each visited state
  std::vector<double> delta_v;  // values[k+1]-values[k]
  bool escaped = false;
};

// Simulates x+ = plant(x, policy(x), theta_seq[k]) for k_max steps or until
// the solve goes infeasible, a state leaves escape_radius (sup norm), or a
// value is non-finite. Infeasible x0 -> infeasible_start.
ClosedLoopRun run_closed_loop(Policy& policy, const ParametricSystem& plant,
                              const Vec& x0, const std::vector<Vec>& theta_seq,
                              int k_max, double escape_radius);

// Convenience: solver policy from prob, constant theta.
ClosedLoopRun run_closed_loop(const MpcProblem& prob,
                              const ParametricSystem& plant, const Vec& x0,
                              const Vec& theta, int k_max,
                              double escape_radius);

std::vector<Vec> constant_theta(const Vec& theta, int k_max);

struct CostDifferenceField {
  std::vector<Vec> x_grid;
  std::vector<Vec> theta_grid;
  // dv[i*theta_grid.size()+j] = V(f(x_i, kappa(x_i), theta_j)) - V(x_i);
  // +infinity marks an infeasible successor.
  std::vector<double> dv;
  std::vector<std::uint8_t> feasible;  // successor solve feasible
  std::vector<double> value_at_x;      // V(x_i), infinity when x_i infeasible
};

// One policy evaluation per grid state, one per successor. The parallel flag
// routes the x loop through OpenMP; both paths assemble identical bytes.
CostDifferenceField cost_difference_field(const Policy& policy,
                                          const ParametricSystem& plant,
                                          const std::vector<Vec>& x_grid,
                                          const std::vector<Vec>& theta_grid,
                                          bool parallel = true);

enum class CheckOutcome { ok, violated, inconclusive };

struct RpiReport {
  CheckOutcome outcome = CheckOutcome::inconclusive;
  Vec worst_x;
  Vec worst_theta;
  double worst_value = 0.0;  // V at the worst successor
  int samples_used = 0;
};

// Checks V(f(x, kappa(x), theta)) <= rho + 1e-8 for sampled x in the
// rho-sublevel set (rejection sampling from a discovered bounding box) and
// theta on the radius-delta sphere plus an interior grid.
RpiReport rpi_check(const Policy& policy, const ParametricSystem& plant,
                    double rho, double delta, int samples, std::uint64_t seed,
                    double box_limit);

enum class StabilityVerdict { SES, SAS, RAS_only, unstable, inconclusive };

const char* to_string(StabilityVerdict v);

struct CertificationReport {
  double rho = 0.0;
  double delta_tested = 0.0;
  bool rpi_ok = false;
  double descent_margin = 0.0;   // min over samples of -(observed dV)
  double eps_quadratic = 0.0;    // min over samples of -(dV)/|x|^2, x != 0
  JointComparisonFn lyap_increase_fit;
  ScalingReport scaling;
  StabilityVerdict verdict = StabilityVerdict::inconclusive;
  int samples_used = 0;
  int infeasible_samples = 0;
};

struct GammaFit;

// Scans dV over the caller's (x, theta) samples restricted to the rho-sublevel
// set, checks invariance over the same samples, and classifies:
//   unstable  - some successor leaves the sublevel set (or escapes)
//   SES       - dV <= -eps|x|^2 with eps > 0 at every sampled x != 0
//   SAS       - descent with positive margin against alpha3 (non-quadratic)
//   RAS_only  - descent fails somewhere but containment runs stay bounded
// When fit is given, its gamma lands in lyap_increase_fit and the scaling
// condition is evaluated at tau = delta over the sampled radius range.
CertificationReport descent_certification(const Policy& policy,
                                          const ParametricSystem& plant,
                                          double rho, double delta,
                                          const std::vector<Vec>& x_samples,
                                          const std::vector<Vec>& theta_samples,
                                          const ScalarComparisonFn& alpha3,
                                          const GammaFit* fit = nullptr);

enum class GammaTrack {
  warm_start_quadratic,  // d = |V_N(f_c, u~) - V_N(fhat_c, u~)|, envelope d/|x|^2
  warm_start_general,    // same d, bilinear table in (|x|, |theta|)
  candidate_quadratic,   // d = |V(f_c) - V(fhat_c)| for a declared Lyapunov V
};

struct GammaFit {
  JointComparisonFn gamma;           // gamma_V(s, t)
  std::vector<double> shell_t;       // |theta| shells, ascending, includes 0
  std::vector<double> shell_sigma;   // quadratic tracks: sigma_V(t) per shell
  GammaTrack track = GammaTrack::warm_start_quadratic;
};

// Fits the disturbance-to-cost gain from samples. For the warm-start tracks
// the perturbation d compares the shifted plan's cost at the true and nominal
// successors; the candidate track needs candidate_v.
GammaFit fit_gamma_v(const MpcProblem& prob, const ParametricSystem& plant,
                     const Policy& policy, const std::vector<Vec>& x_samples,
                     const std::vector<Vec>& theta_samples, GammaTrack track,
                     const std::function<double(const Vec&)>& candidate_v = {});

struct ModelErrorReport {
  std::vector<double> shell_t;  // |theta| shells
  std::vector<double> envelope; // e(t) = max |f - fhat| / |(x,u)| over the box
  bool finite = true;
  bool zero_at_origin = true;   // e(0) = 0
  bool bounded_near_origin = true;  // envelope stable under shrinking the box
};

// Per-shell relative model error over a sampled compact box, excluding
// (x,u) = 0. A scenario whose error ratio blows up as the box shrinks (the
// signed-sqrt plant) gets bounded_near_origin = false.
ModelErrorReport model_error_bounds_check(const ParametricSystem& plant,
                                          const Vec& x_lo, const Vec& x_hi,
                                          const Vec& u_lo, const Vec& u_hi,
                                          const std::vector<double>& shells,
                                          int samples, std::uint64_t seed);

struct ExponentialFit {
  bool ok = false;       // false: fewer than 3 usable points
  double c = 0.0;        // |x(k)| <= c |x(0)| lambda^k on the fitted run
  double lambda = 0.0;
  double residual = 0.0; // max overshoot against the pre-adjustment fit
};

// Least squares on log|x(k)| over points with |x(k)| > 1e-10; c is then
// raised so the bound holds at every fitted point.
ExponentialFit exponential_fit(const std::vector<Vec>& states);

// Robust-descent inequality residual at one (x, theta):
//   V0(f_c) - [V0(x) - l(x, u0) + V_N(f_c, u~) - V_N(fhat_c, u~)]
// using the solver's feasible solutions. Empty when the shifted plan is
// infeasible at the perturbed successor.
std::optional<double> robust_descent_residual(const MpcProblem& prob,
                                              const ParametricSystem& plant,
                                              const Vec& x, const Vec& theta);

}  // namespace mismpc
