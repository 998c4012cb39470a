#include "mismpc/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mismpc {

namespace {

constexpr double kBoxTol = 1e-12;
constexpr double kTerminalTol = 1e-8;

void check_problem_dims(const MpcProblem& prob, const Vec& x,
                        const InputSequence& u) {
  if (static_cast<int>(x.size()) != prob.sys.n)
    throw invalid_input("ocp: state has wrong dimension");
  if (static_cast<int>(u.size()) != prob.N)
    throw invalid_input("ocp: input sequence length differs from horizon");
  for (const Vec& uk : u)
    if (static_cast<int>(uk.size()) != prob.sys.m)
      throw invalid_input("ocp: input has wrong dimension");
}

struct Rollout {
  std::vector<Vec> states;  // N+1
  double cost = 0.0;        // stage sum + terminal
  double terminal_value = 0.0;
};

Rollout roll(const MpcProblem& prob, const Vec& x, const InputSequence& u) {
  Rollout r;
  r.states = open_loop_rollout(prob.sys, x, u, Vec(prob.sys.n_theta, 0.0));
  for (int k = 0; k < prob.N; ++k) {
    if (!all_finite(r.states[k + 1]))
      throw numerical_overflow("ocp: non-finite predicted state");
    r.cost += prob.stage_cost(r.states[k], u[k]);
  }
  r.terminal_value = quad_form(prob.terminal.P_f, r.states.back());
  r.cost += r.terminal_value;
  if (!std::isfinite(r.cost))
    throw numerical_overflow("ocp: non-finite objective");
  return r;
}

// Central-difference Jacobians of the nominal model, used when the problem
// supplies no analytic hook.
void fd_jacobians(const MpcProblem& prob, const Vec& x, const Vec& u, Mat& A,
                  Mat& B) {
  const int n = prob.sys.n, m = prob.sys.m;
  A = Mat(n, n);
  B = Mat(n, m);
  Vec xp = x, xm = x, up = u, um = u;
  for (int j = 0; j < n; ++j) {
    double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    Vec fp = nominal_step(prob.sys, xp, u);
    Vec fm = nominal_step(prob.sys, xm, u);
    for (int i = 0; i < n; ++i) A(i, j) = (fp[i] - fm[i]) / (2 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  for (int j = 0; j < m; ++j) {
    double h = 1e-6 * (1.0 + std::abs(u[j]));
    up[j] = u[j] + h;
    um[j] = u[j] - h;
    Vec fp = nominal_step(prob.sys, x, up);
    Vec fm = nominal_step(prob.sys, x, um);
    for (int i = 0; i < n; ++i) B(i, j) = (fp[i] - fm[i]) / (2 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
}

void fd_stage_gradients(const MpcProblem& prob, const Vec& x, const Vec& u,
                        Vec& gx, Vec& gu) {
  const int n = prob.sys.n, m = prob.sys.m;
  gx.assign(n, 0.0);
  gu.assign(m, 0.0);
  Vec xp = x, xm = x, up = u, um = u;
  for (int j = 0; j < n; ++j) {
    double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    gx[j] = (prob.stage_cost(xp, u) - prob.stage_cost(xm, u)) / (2 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  for (int j = 0; j < m; ++j) {
    double h = 1e-6 * (1.0 + std::abs(u[j]));
    up[j] = u[j] + h;
    um[j] = u[j] - h;
    gu[j] = (prob.stage_cost(x, up) - prob.stage_cost(x, um)) / (2 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
}

// Gradient of the augmented objective
//   L(u) = sum l(x_k, u_k) + (1 + w) V_f(x_N)
// by one adjoint sweep; w is the active multiplier weight on the terminal
// constraint (V_f enters both the cost and the constraint).
std::vector<Vec> al_gradient(const MpcProblem& prob, const Rollout& r,
                             const InputSequence& u, double w) {
  const int N = prob.N, n = prob.sys.n, m = prob.sys.m;
  std::vector<Vec> grad(N, Vec(m, 0.0));

  Vec p(n, 0.0);
  const Vec& xN = r.states[N];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      p[i] += 2.0 * (1.0 + w) * prob.terminal.P_f(i, j) * xN[j];

  for (int k = N - 1; k >= 0; --k) {
    Mat A, B;
    if (prob.model_jacobians)
      prob.model_jacobians(r.states[k], u[k], A, B);
    else
      fd_jacobians(prob, r.states[k], u[k], A, B);
    Vec gx, gu;
    if (prob.stage_cost_gradients)
      prob.stage_cost_gradients(r.states[k], u[k], gx, gu);
    else
      fd_stage_gradients(prob, r.states[k], u[k], gx, gu);

    grad[k] = vadd(gu, matvec(transpose(B), p));
    p = vadd(gx, matvec(transpose(A), p));
  }
  return grad;
}

double flat_dot(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double s = 0;
  for (size_t k = 0; k < a.size(); ++k) s += dot(a[k], b[k]);
  return s;
}

double flat_norm_inf(const std::vector<Vec>& a) {
  double s = 0;
  for (const Vec& v : a) s = std::max(s, norm_inf(v));
  return s;
}

InputSequence clamp_seq(const MpcProblem& prob, InputSequence u) {
  for (Vec& uk : u) uk = clamp_to_box(uk, prob.input_lower, prob.input_upper);
  return u;
}

struct AlResult {
  InputSequence u;
  Rollout roll;
  double pg_norm = 0.0;
  double violation = 0.0;
  double multiplier = 0.0;
  int iterations = 0;
};

double al_value(double cost, double g, double lambda, double mu) {
  double m = std::max(0.0, lambda + mu * g);
  return cost + (m * m - lambda * lambda) / (2.0 * mu);
}

// Inner loop: projected gradient with a Barzilai-Borwein step and monotone
// Armijo backtracking. Stops on the unit-step projected-gradient norm, the
// iteration budget, or step collapse (needed at nonsmooth kinks).
void pgd_inner(const MpcProblem& prob, const Vec& x, AlResult& st,
               double lambda, double mu, double pg_tol, int max_inner) {
  auto eval = [&](const InputSequence& u, Rollout& r) {
    r = roll(prob, x, u);
    double g = r.terminal_value - prob.terminal.c_f;
    return al_value(r.cost, g, lambda, mu);
  };

  InputSequence u = st.u;
  Rollout r;
  double fval;
  try {
    fval = eval(u, r);
  } catch (const numerical_overflow&) {
    // Hopeless start; leave the state untouched.
    return;
  }

  std::vector<Vec> g_prev, u_prev;
  double t = 0.0;
  for (int it = 0; it < max_inner; ++it) {
    double w = std::max(0.0, lambda + mu * (r.terminal_value - prob.terminal.c_f));
    std::vector<Vec> grad = al_gradient(prob, r, u, w);
    ++st.iterations;

    // Unit-step projected gradient as the stationarity measure.
    InputSequence probe(u.size());
    for (size_t k = 0; k < u.size(); ++k)
      probe[k] = clamp_to_box(vsub(u[k], grad[k]), prob.input_lower,
                              prob.input_upper);
    double pg = 0;
    for (size_t k = 0; k < u.size(); ++k)
      pg = std::max(pg, norm_inf(vsub(probe[k], u[k])));
    st.pg_norm = pg;
    if (pg <= pg_tol) break;

    if (it == 0) {
      t = (1.0 + flat_norm_inf(std::vector<Vec>(u.begin(), u.end()))) /
          (1.0 + flat_norm_inf(grad));
    } else {
      std::vector<Vec> du(u.size()), dg(u.size());
      for (size_t k = 0; k < u.size(); ++k) {
        du[k] = vsub(u[k], u_prev[k]);
        dg[k] = vsub(grad[k], g_prev[k]);
      }
      double sy = flat_dot(du, dg);
      double ss = flat_dot(du, du);
      t = sy > 1e-300 ? ss / sy : t * 2.0;
    }
    t = std::clamp(t, 1e-12, 1e12);

    u_prev = u;
    g_prev = grad;

    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      InputSequence u_new(u.size());
      for (size_t k = 0; k < u.size(); ++k)
        u_new[k] = clamp_to_box(vsub(u[k], vscale(grad[k], t)),
                                prob.input_lower, prob.input_upper);
      double step = 0;
      std::vector<Vec> d(u.size());
      for (size_t k = 0; k < u.size(); ++k) {
        d[k] = vsub(u_new[k], u[k]);
        step = std::max(step, norm_inf(d[k]));
      }
      if (step < 1e-14) break;  // projected step collapsed

      Rollout r_new;
      double f_new;
      try {
        f_new = eval(u_new, r_new);
      } catch (const numerical_overflow&) {
        t *= 0.5;
        continue;
      }
      if (f_new <= fval + 1e-4 * flat_dot(grad, d)) {
        u = std::move(u_new);
        r = std::move(r_new);
        fval = f_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // stalled (kink or flat landscape)
  }

  st.u = u;
  st.roll = r;
  st.violation = std::max(0.0, r.terminal_value - prob.terminal.c_f);
}

AlResult augmented_lagrangian(const MpcProblem& prob, const Vec& x,
                              InputSequence start, const SolveOptions& opts) {
  AlResult st;
  st.u = clamp_seq(prob, std::move(start));
  st.roll = roll(prob, x, st.u);
  st.violation = std::max(0.0, st.roll.terminal_value - prob.terminal.c_f);

  double lambda = 0.0, mu = opts.mu0;
  double prev_viol = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    pgd_inner(prob, x, st, lambda, mu, opts.pg_tol, opts.max_inner);
    double g = st.roll.terminal_value - prob.terminal.c_f;
    st.violation = std::max(0.0, g);
    st.multiplier = lambda;
    if (st.violation <= opts.constraint_tol && st.pg_norm <= opts.pg_tol) break;
    lambda = std::max(0.0, lambda + mu * g);
    // Grow the penalty only when the violation is not shrinking fast enough.
    if (st.violation > 0.25 * prev_viol) mu = std::min(mu * opts.mu_growth, 1e12);
    prev_viol = std::max(st.violation, 1e-300);
  }
  return st;
}

OcpSolution pack_solution(const MpcProblem& prob, const Vec& x,
                          const InputSequence& u, int iterations,
                          double kkt_residual) {
  Rollout r = roll(prob, x, u);
  OcpSolution sol;
  sol.u_opt = u;
  sol.x_traj = r.states;
  sol.value = r.cost;
  sol.terminal_value = r.terminal_value;
  sol.feasible = true;
  for (const Vec& uk : u)
    for (size_t i = 0; i < uk.size(); ++i)
      if (uk[i] < prob.input_lower[i] - kBoxTol ||
          uk[i] > prob.input_upper[i] + kBoxTol)
        sol.feasible = false;
  if (r.terminal_value > prob.terminal.c_f + kTerminalTol) sol.feasible = false;
  sol.iterations = iterations;
  sol.kkt_residual = kkt_residual;
  sol.x0 = x;
  return sol;
}

}  // namespace

Vec clamp_to_box(const Vec& u, const Vec& lo, const Vec& hi) {
  Vec r = u;
  for (size_t i = 0; i < r.size(); ++i) r[i] = std::clamp(r[i], lo[i], hi[i]);
  return r;
}

double objective(const MpcProblem& prob, const Vec& x, const InputSequence& u) {
  check_problem_dims(prob, x, u);
  return roll(prob, x, u).cost;
}

bool feasible(const MpcProblem& prob, const Vec& x, const InputSequence& u) {
  check_problem_dims(prob, x, u);
  for (const Vec& uk : u)
    for (size_t i = 0; i < uk.size(); ++i)
      if (uk[i] < prob.input_lower[i] - kBoxTol ||
          uk[i] > prob.input_upper[i] + kBoxTol)
        return false;
  Rollout r = roll(prob, x, u);
  return r.terminal_value <= prob.terminal.c_f + kTerminalTol;
}

OcpSolution solve(const MpcProblem& prob, const Vec& x,
                  const InputSequence* warm, const SolveOptions& opts) {
  if (static_cast<int>(x.size()) != prob.sys.n)
    throw invalid_input("solve: state has wrong dimension");

  std::vector<InputSequence> starts;
  if (warm) {
    check_problem_dims(prob, x, *warm);
    starts.push_back(clamp_seq(prob, *warm));
  }
  starts.push_back(InputSequence(prob.N, Vec(prob.sys.m, 0.0)));
  for (const InputSequence& s : opts.extra_starts)
    starts.push_back(clamp_seq(prob, s));

  struct Candidate {
    InputSequence u;
    double value;
    double violation;
    int iterations;
    double kkt;
  };
  std::vector<Candidate> cands;

  // The raw starts participate in the final selection so a feasible warm
  // start is never beaten by its own optimized descendant's bookkeeping.
  for (const InputSequence& s : starts) {
    try {
      Rollout r = roll(prob, x, s);
      cands.push_back({s, r.cost,
                       std::max(0.0, r.terminal_value - prob.terminal.c_f), 0,
                       std::numeric_limits<double>::infinity()});
    } catch (const numerical_overflow&) {
    }
  }

  int total_iterations = 0;
  for (const InputSequence& s : starts) {
    try {
      AlResult res = augmented_lagrangian(prob, x, s, opts);
      total_iterations += res.iterations;
      double kkt = std::max(res.pg_norm, res.violation);
      cands.push_back({res.u, res.roll.cost, res.violation, res.iterations, kkt});
    } catch (const numerical_overflow&) {
    }
  }
  if (cands.empty())
    throw numerical_overflow("solve: every start diverged");

  auto better = [](const Candidate& a, const Candidate& b) {
    bool fa = a.violation <= kTerminalTol, fb = b.violation <= kTerminalTol;
    if (fa != fb) return fa;
    if (fa) return a.value < b.value;
    if (a.violation != b.violation) return a.violation < b.violation;
    return a.value < b.value;
  };
  const Candidate* best = &cands[0];
  for (const Candidate& c : cands)
    if (better(c, *best)) best = &c;

  return pack_solution(prob, x, best->u, total_iterations, best->kkt);
}

OcpSolution brute_force_solve(const MpcProblem& prob, const Vec& x,
                              int grid_per_dim) {
  if (prob.sys.m != 1 || prob.N > 2)
    throw unsupported("brute_force_solve: only m = 1 and N <= 2");
  if (grid_per_dim < 101)
    throw invalid_input("brute_force_solve: grid_per_dim must be >= 101");

  const double lo = prob.input_lower[0], hi = prob.input_upper[0];
  auto grid_at = [&](int i) {
    return lo + (hi - lo) * i / (grid_per_dim - 1);
  };

  // Penalized objective keeps the scan total while honoring feasibility.
  auto score = [&](const InputSequence& u) {
    Rollout r = roll(prob, x, u);
    double viol = std::max(0.0, r.terminal_value - prob.terminal.c_f);
    return viol > kTerminalTol ? 1e12 + viol : r.cost;
  };

  InputSequence best;
  double best_score = std::numeric_limits<double>::infinity();
  if (prob.N == 1) {
    for (int i = 0; i < grid_per_dim; ++i) {
      InputSequence u = {{grid_at(i)}};
      double s = score(u);
      if (s < best_score) { best_score = s; best = u; }
    }
  } else {
    for (int i = 0; i < grid_per_dim; ++i)
      for (int j = 0; j < grid_per_dim; ++j) {
        InputSequence u = {{grid_at(i)}, {grid_at(j)}};
        double s = score(u);
        if (s < best_score) { best_score = s; best = u; }
      }
  }

  // One golden-section pass per coordinate around the winning cell.
  const double h = (hi - lo) / (grid_per_dim - 1);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int coord = 0; coord < prob.N; ++coord) {
    double a = std::max(lo, best[coord][0] - h);
    double b = std::min(hi, best[coord][0] + h);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    InputSequence uc = best, ud = best;
    uc[coord][0] = c;
    ud[coord][0] = d;
    double fc = score(uc), fd = score(ud);
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        b = d; d = c; fd = fc;
        c = b - phi * (b - a);
        uc[coord][0] = c;
        fc = score(uc);
      } else {
        a = c; c = d; fc = fd;
        d = a + phi * (b - a);
        ud[coord][0] = d;
        fd = score(ud);
      }
    }
    InputSequence um = best;
    um[coord][0] = 0.5 * (a + b);
    if (score(um) < best_score) {
      best = um;
      best_score = score(um);
    }
  }

  return pack_solution(prob, x, best, 0, 0.0);
}

InputSequence warm_start(const MpcProblem& prob, const OcpSolution& prev) {
  if (!prev.feasible)
    throw invalid_input("warm_start: previous solution infeasible");
  InputSequence u;
  u.reserve(prob.N);
  for (int k = 1; k < prob.N; ++k) u.push_back(prev.u_opt[k]);
  u.push_back(prob.terminal.kappa_f(prev.x_traj.back()));
  return clamp_seq(prob, std::move(u));
}

Vec control_law(const MpcProblem& prob, const Vec& x, const InputSequence* warm) {
  return solve(prob, x, warm).u_opt.front();
}

}  // namespace mismpc
