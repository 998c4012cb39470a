#include "mismpc/scenario.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "mismpc/terminal.hpp"

namespace mismpc {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

double sat(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

// Signed square root: odd, continuous, not Lipschitz at 0.
double sgn_sqrt(double y) { return y < 0.0 ? -std::sqrt(-y) : std::sqrt(y); }

Mat mat1x1(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

[[noreturn]] void fail_check(const std::string& scenario, int assumption,
                             const std::string& what) {
  throw no_solution("scenario '" + scenario + "': assumption " +
                    std::to_string(assumption) + " spot check failed: " + what);
}

// Sampling checks of the structural assumptions a scenario declares. Cheap by
// construction; they run once per scenario name per process.
void run_spot_checks(const Scenario& sc) {
  const ParametricSystem& sys = sc.prob.sys;
  const Vec x0(static_cast<size_t>(sys.n), 0.0);
  const Vec u0(static_cast<size_t>(sys.m), 0.0);
  const Vec t0(static_cast<size_t>(sys.n_theta), 0.0);

  if (sc.assumptions.count(1)) {
    if (norm_inf(sys.f(x0, u0, t0)) > 1e-12) fail_check(sc.name, 1, "f(0,0,0) != 0");
    for (int i = 0; i < sys.n; ++i) {
      Vec x = x0;
      x[static_cast<size_t>(i)] = 1e-12;
      const Vec y = sys.f(x, u0, t0);
      if (!all_finite(y) || norm_inf(y) > 1e-4)
        fail_check(sc.name, 1, "nominal map not continuous at the origin");
    }
  }

  if (sc.assumptions.count(2)) {
    if (static_cast<int>(sc.prob.input_lower.size()) != sys.m ||
        static_cast<int>(sc.prob.input_upper.size()) != sys.m)
      fail_check(sc.name, 2, "input box dimension mismatch");
    for (int j = 0; j < sys.m; ++j) {
      const double lo = sc.prob.input_lower[static_cast<size_t>(j)];
      const double hi = sc.prob.input_upper[static_cast<size_t>(j)];
      if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi) || lo > 0.0 || hi < 0.0)
        fail_check(sc.name, 2, "input box must be compact and contain 0");
    }
  }

  if (sc.assumptions.count(3)) {
    const Assumption3Report rep =
        verify_assumption3(sys, sc.prob.stage_cost, sc.prob.terminal,
                           sc.prob.input_lower, sc.prob.input_upper, 800);
    if (!rep.pass) fail_check(sc.name, 3, "terminal descent condition violated");
  }

  if (sc.assumptions.count(4)) {
    if (std::abs(sc.prob.stage_cost(x0, u0)) > 1e-12) fail_check(sc.name, 4, "l(0,0) != 0");
    for (int i = 0; i < sys.n; ++i) {
      Vec x = x0;
      x[static_cast<size_t>(i)] = 0.5;
      if (sc.prob.stage_cost(x, u0) <= 0.0)
        fail_check(sc.name, 4, "stage cost not positive away from the origin");
      x[static_cast<size_t>(i)] = -0.5;
      if (sc.prob.stage_cost(x, u0) <= 0.0)
        fail_check(sc.name, 4, "stage cost not positive away from the origin");
    }
  }

  if (sc.assumptions.count(5)) {
    const Mat& P = sc.prob.terminal.P_f;
    if (P.rows != sys.n || P.cols != sys.n) fail_check(sc.name, 5, "P_f dimension mismatch");
    if (asymmetry(P) > 1e-9) fail_check(sc.name, 5, "P_f not symmetric");
    if (min_sym_eigenvalue(P) <= 0.0) fail_check(sc.name, 5, "P_f not positive definite");
    if (!(sc.prob.terminal.c_f > 0.0)) fail_check(sc.name, 5, "c_f must be positive");
  }

  if (sc.assumptions.count(6)) {
    for (int i = 0; i < sys.n_theta; ++i) {
      for (int g = 0; g < 5; ++g) {
        Vec th = t0;
        th[static_cast<size_t>(i)] = -1.0 + 0.5 * g;
        if (norm_inf(sys.f(x0, u0, th)) != 0.0)
          fail_check(sc.name, 6, "origin not fixed under theta");
      }
    }
  }

  if (sc.assumptions.count(7)) {
    // Smoothness proxy: central second differences of the nominal map stay
    // O(h^2) at an off-origin probe point.
    Vec xp(static_cast<size_t>(sys.n), 0.3);
    Vec up(static_cast<size_t>(sys.m), 0.1);
    const double h = 1e-3;
    const Vec fc = sys.f(xp, up, t0);
    for (int i = 0; i < sys.n; ++i) {
      Vec xm = xp, xq = xp;
      xm[static_cast<size_t>(i)] += h;
      xq[static_cast<size_t>(i)] -= h;
      const Vec fp = sys.f(xm, up, t0);
      const Vec fm = sys.f(xq, up, t0);
      for (int r = 0; r < sys.n; ++r) {
        const double second = fp[static_cast<size_t>(r)] - 2.0 * fc[static_cast<size_t>(r)] +
                              fm[static_cast<size_t>(r)];
        if (!std::isfinite(second) || std::abs(second) > 1e-4)
          fail_check(sc.name, 7, "nominal map not smooth in the state");
      }
    }
  }
}

Scenario build_integrator() {
  Scenario sc;
  sc.name = "integrator";
  sc.plant = integrator_plant();
  sc.prob.sys = sc.plant;
  sc.prob.N = 2;
  sc.prob.input_lower = {-1.0};
  sc.prob.input_upper = {1.0};
  sc.prob.stage_cost = [](const Vec& x, const Vec& u) {
    return 0.5 * (x[0] * x[0] + u[0] * u[0]);
  };
  sc.prob.terminal.P_f = mat1x1(0.5);
  sc.prob.terminal.c_f = 0.5;  // sublevel set [-1, 1]
  sc.prob.terminal.kappa_f = [](const Vec& x) { return Vec{-x[0]}; };
  sc.prob.model_jacobians = [](const Vec&, const Vec&, Mat& A, Mat& B) {
    A = mat1x1(1.0);
    B = mat1x1(1.0);
  };
  sc.prob.stage_cost_gradients = [](const Vec& x, const Vec& u, Vec& gx, Vec& gu) {
    gx = {x[0]};
    gu = {u[0]};
  };

  AnalyticLaw law;
  law.kappa = [](const Vec& x) { return Vec{-sat(0.6 * x[0])}; };
  law.value_fn = [](const Vec& x) {
    const double ax = std::abs(x[0]);
    if (ax <= 5.0 / 3.0) return 0.8 * x[0] * x[0];
    return 0.5 * x[0] * x[0] + 0.5 + 0.75 * (ax - 1.0) * (ax - 1.0);
  };
  law.domain_radius = 3.0;
  law.label = "two-step saturated linear law";
  sc.analytic = law;

  // No assumption 3: with this terminal pair the descent condition fails,
  // min_u [V_f(x+u) + l(x,u)] = 0.75 x^2 > V_f(x).
  sc.assumptions = {1, 2, 4, 5, 6, 7};
  sc.x_grid = {-3.0, 3.0, 81};
  sc.theta_grid = {-2.0, 4.0, 41};
  sc.sim_box = 60.0;
  sc.default_rho = 8.0;
  sc.default_delta = 0.9;
  sc.gamma_track = GammaTrack::warm_start_quadratic;
  sc.use_solver = true;
  sc.artifacts = {"fig1_contour.csv", "fig1_contour.svg", "fig2_trajectories.csv",
                  "fig2_trajectories.svg"};
  sc.alpha1_coeff = 0.5;
  sc.alpha3_coeff = 0.5;
  return sc;
}

Scenario build_signed_sqrt() {
  Scenario sc;
  sc.name = "signed-sqrt";
  sc.plant = signed_sqrt_plant();
  sc.prob.sys = sc.plant;
  sc.prob.N = 1;
  sc.prob.input_lower = {-1.0};
  sc.prob.input_upper = {1.0};
  sc.prob.stage_cost = [](const Vec& x, const Vec& u) {
    return x[0] * x[0] + u[0] * u[0];
  };
  sc.prob.terminal.P_f = mat1x1(4.0);
  sc.prob.terminal.c_f = 4.0;  // sublevel set [-1, 1]
  sc.prob.terminal.kappa_f = [](const Vec& x) { return Vec{-x[0]}; };

  AnalyticLaw law;
  law.kappa = [](const Vec& x) { return Vec{-sat(x[0])}; };
  law.value_fn = [](const Vec& x) {
    const double ax = std::abs(x[0]);
    if (ax <= 1.0) return 2.0 * x[0] * x[0];
    return x[0] * x[0] + 4.0 * ax - 3.0;
  };
  law.domain_radius = 2.0;
  law.label = "one-step saturated linear law";
  sc.analytic = law;

  sc.assumptions = {1, 2, 3, 4, 5, 6};  // not 7: square root kink at the origin
  sc.x_grid = {-2.0, 2.0, 81};
  sc.theta_grid = {-3.0, 3.0, 41};
  sc.sim_box = 40.0;
  sc.default_rho = 2.0;
  sc.default_delta = 0.5;
  sc.gamma_track = GammaTrack::warm_start_general;
  sc.use_solver = false;  // gradient solver is certified on C1 scenarios only
  sc.artifacts = {"fig3_contour.csv", "fig3_contour.svg", "fig4_trajectories.csv",
                  "fig4_trajectories.svg"};
  sc.alpha1_coeff = 2.0;
  sc.alpha3_coeff = 2.0;
  return sc;
}

Scenario build_sin() {
  Scenario sc;
  sc.name = "sin";
  sc.plant = sin_plant();
  sc.prob.sys = sc.plant;
  sc.prob.N = 1;
  sc.prob.input_lower = {-1.0};
  sc.prob.input_upper = {1.0};
  sc.prob.stage_cost = [](const Vec& x, const Vec& u) {
    return x[0] * x[0] + u[0] * u[0];
  };
  sc.prob.terminal.P_f = mat1x1(4.0);
  sc.prob.terminal.c_f = 4.0;  // sublevel set [-1, 1]
  sc.prob.terminal.kappa_f = [](const Vec& x) {
    return Vec{-0.5 * (x[0] + sin_gamma(x[0]))};
  };

  // Exact one-step minimizer: with z = x + gamma(x)/2 the objective
  // x^2 + u^2 + 4(z + u)^2 is convex in u, so clamping the unconstrained
  // minimizer u = -0.8 z to the input box is exact.
  AnalyticLaw law;
  law.kappa = [](const Vec& x) {
    const double z = x[0] + 0.5 * sin_gamma(x[0]);
    return Vec{-sat(0.8 * z)};
  };
  law.value_fn = [](const Vec& x) {
    const double z = x[0] + 0.5 * sin_gamma(x[0]);
    const double u = -sat(0.8 * z);
    return x[0] * x[0] + u * u + 4.0 * (z + u) * (z + u);
  };
  law.domain_radius = 2.0;
  law.label = "one-step sinusoid law";
  sc.analytic = law;

  LyapunovCandidate cand;
  cand.V = [](const Vec& x) {
    return std::abs(x[0]) <= 2.0 ? x[0] * x[0] : std::numeric_limits<double>::infinity();
  };
  cand.alpha3_coeff = 0.75;
  cand.label = "clipped quadratic candidate";
  sc.candidate = cand;

  sc.assumptions = {1, 2, 3, 4, 5, 6};  // not 7: sin(2 pi / x) oscillates at 0
  sc.x_grid = {-2.0, 2.0, 81};
  sc.theta_grid = {-1.0, 1.0, 41};
  sc.sim_box = 40.0;
  sc.default_rho = 4.0;  // candidate sublevel set [-2, 2]
  sc.default_delta = 0.5;
  sc.gamma_track = GammaTrack::candidate_quadratic;
  sc.use_solver = false;
  sc.artifacts = {"lyap_envelope.csv", "sin_runs.csv", "sin_runs.svg"};
  sc.alpha1_coeff = 1.0;
  sc.alpha3_coeff = 0.75;
  return sc;
}

Scenario build_pendulum() {
  Scenario sc;
  sc.name = "pendulum";
  const Discretization disc;  // delta 0.1, substeps 100
  sc.plant = pendulum_plant(disc);
  sc.prob.sys = sc.plant;
  sc.prob.N = 20;
  sc.prob.input_lower = {-1.0};
  sc.prob.input_upper = {1.0};
  sc.prob.stage_cost = [](const Vec& x, const Vec& u) {
    return x[0] * x[0] + x[1] * x[1] + u[0] * u[0];
  };

  const PendulumTerminalConstants tc = pendulum_terminal_constants();
  sc.prob.terminal.P_f = tc.P_f;
  sc.prob.terminal.c_f = tc.c_f;
  sc.prob.terminal.kappa_f = [](const Vec& x) { return Vec{-2.0 * x[0] - 2.0 * x[1]}; };
  sc.prob.model_jacobians = [](const Vec& x, const Vec&, Mat& A, Mat& B) {
    A = Mat(2, 2);
    A(0, 0) = 1.0;
    A(0, 1) = 0.1;
    A(1, 0) = 0.1 * std::cos(x[0]);
    A(1, 1) = 1.0;
    B = Mat(2, 1);
    B(1, 0) = 0.5;
  };
  sc.prob.stage_cost_gradients = [](const Vec& x, const Vec& u, Vec& gx, Vec& gu) {
    gx = {2.0 * x[0], 2.0 * x[1]};
    gu = {2.0 * u[0]};
  };

  sc.assumptions = {1, 2, 3, 4, 5, 6, 7};
  sc.x_grid = {-1.0, 1.0, 17};
  sc.theta_grid = {-1.0, 1.0, 17};  // scalar sweeps scan the input-gain offset
  sc.sim_box = 200.0;
  sc.default_rho = 8.0;
  sc.default_delta = 0.5;
  sc.gamma_track = GammaTrack::warm_start_quadratic;
  sc.use_solver = true;
  sc.artifacts = {"terminal_constants.json", "fig5_trajectories.csv",
                  "fig5_trajectories.svg"};
  sc.alpha1_coeff = 1.0;
  sc.alpha3_coeff = 1.0;
  return sc;
}

Scenario build(const std::string& name) {
  if (name == "integrator") return build_integrator();
  if (name == "signed-sqrt") return build_signed_sqrt();
  if (name == "sin") return build_sin();
  if (name == "pendulum") return build_pendulum();
  throw invalid_input("unknown scenario '" + name +
                      "'; valid names: integrator, signed-sqrt, sin, pendulum");
}

std::mutex g_check_mutex;
std::set<std::string>* g_checked = nullptr;

}  // namespace

std::vector<std::string> scenario_names() {
  return {"integrator", "signed-sqrt", "sin", "pendulum"};
}

Scenario make_scenario(const std::string& name) {
  Scenario sc = build(name);
  {
    std::lock_guard<std::mutex> lock(g_check_mutex);
    if (g_checked == nullptr) g_checked = new std::set<std::string>();
    if (g_checked->count(name) == 0) {
      run_spot_checks(sc);
      g_checked->insert(name);
    }
  }
  return sc;
}

std::unique_ptr<Policy> Scenario::make_policy() const {
  if (use_solver) return make_solver_policy(prob);
  if (!analytic) throw invalid_input("scenario '" + name + "' has no closed-form law");
  return make_analytic_policy(*analytic);
}

OdeSystem pendulum_ode() {
  OdeSystem ode;
  ode.n = 2;
  ode.m = 1;
  ode.n_theta = 3;  // third coordinate is the discretization blend, unused by F
  ode.F = [](const Vec& x, const Vec& u, const Vec& th) {
    return Vec{x[1], std::sin(x[0]) - th[0] * th[0] * x[1] + (5.0 + th[1]) * u[0]};
  };
  ode.name = "pendulum";
  return ode;
}

ParametricSystem pendulum_plant(const Discretization& disc) {
  ParametricSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.n_theta = 3;
  const OdeSystem ode = pendulum_ode();
  // theta3 blends Euler (0) into the exact flow (1). The endpoints reuse the
  // exact code paths bitwise.
  sys.f = [ode, disc](const Vec& x, const Vec& u, const Vec& th) {
    const double blend = th[2];
    if (blend == 1.0) return exact_discretize(ode, x, u, th, disc);
    const Vec fdot = ode.F(x, u, th);
    Vec next{x[0] + disc.delta * fdot[0], x[1] + disc.delta * fdot[1]};
    if (blend != 0.0) {
      const Vec r = residual_r(ode, x, u, th, disc);
      next[0] += blend * r[0];
      next[1] += blend * r[1];
    }
    return next;
  };
  sys.name = "pendulum";
  return sys;
}

ParametricSystem integrator_plant() {
  ParametricSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.n_theta = 1;
  sys.f = [](const Vec& x, const Vec& u, const Vec& th) {
    return Vec{x[0] + (1.0 + th[0]) * u[0]};
  };
  sys.name = "integrator";
  return sys;
}

ParametricSystem signed_sqrt_plant() {
  ParametricSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.n_theta = 1;
  sys.f = [](const Vec& x, const Vec& u, const Vec& th) {
    return Vec{sgn_sqrt(x[0] + (1.0 + th[0]) * u[0])};
  };
  sys.name = "signed-sqrt";
  return sys;
}

ParametricSystem sin_plant() {
  ParametricSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.n_theta = 1;
  sys.f = [](const Vec& x, const Vec& u, const Vec& th) {
    return Vec{x[0] + 0.5 * sin_gamma(x[0]) + (1.0 + th[0]) * u[0]};
  };
  sys.name = "sin";
  return sys;
}

double sin_gamma(double x) {
  if (std::abs(x) < 1e-150) return 0.0;
  return std::abs(x) * std::sin(kTwoPi / x);
}

}  // namespace mismpc
