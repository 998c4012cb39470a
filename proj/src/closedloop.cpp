#include "mismpc/closedloop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "mismpc/model.hpp"

namespace mismpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Policy::Decision pack_decision(const OcpSolution& sol) {
  Policy::Decision d;
  d.feasible = sol.feasible;
  d.value = sol.feasible ? sol.value : kInf;
  if (!sol.u_opt.empty()) d.u = sol.u_opt.front();
  if (!sol.x_traj.empty()) d.terminal_state = sol.x_traj.back();
  d.plan = sol.u_opt;
  return d;
}

class SolverPolicy final : public Policy {
 public:
  explicit SolverPolicy(MpcProblem prob) : prob_(std::move(prob)) {}

  Decision decide(const Vec& x) override {
    InputSequence shifted;
    const InputSequence* warm = nullptr;
    if (prev_.has_value()) {
      try {
        shifted = warm_start(prob_, *prev_);
        warm = &shifted;
      } catch (const std::exception&) {
        warm = nullptr;
      }
    }
    OcpSolution sol = solve(prob_, x, warm);
    Decision d = pack_decision(sol);
    if (sol.feasible) prev_ = std::move(sol); else prev_.reset();
    return d;
  }

  Decision evaluate(const Vec& x) const override {
    return pack_decision(solve(prob_, x));
  }

  double value(const Vec& x) const override {
    OcpSolution sol = solve(prob_, x);
    return sol.feasible ? sol.value : kInf;
  }

  void reset() override { prev_.reset(); }

  std::unique_ptr<Policy> clone() const override {
    auto copy = std::make_unique<SolverPolicy>(prob_);
    copy->prev_ = prev_;
    return copy;
  }

 private:
  MpcProblem prob_;
  std::optional<OcpSolution> prev_;
};

class AnalyticPolicy final : public Policy {
 public:
  explicit AnalyticPolicy(AnalyticLaw law) : law_(std::move(law)) {}

  Decision decide(const Vec& x) override { return evaluate(x); }

  Decision evaluate(const Vec& x) const override {
    Decision d;
    double v = value(x);
    if (!std::isfinite(v)) {
      d.value = kInf;
      d.feasible = false;
      return d;
    }
    d.u = law_.kappa(x);
    d.value = v;
    d.feasible = true;
    d.plan = {d.u};
    return d;
  }

  double value(const Vec& x) const override {
    if (norm_inf(x) > law_.domain_radius) return kInf;
    double v = law_.value_fn(x);
    return std::isfinite(v) ? v : kInf;
  }

  void reset() override {}

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<AnalyticPolicy>(law_);
  }

 private:
  AnalyticLaw law_;
};

void push_unique(std::vector<Vec>& set, Vec p) {
  for (const auto& q : set) {
    double gap = 0.0;
    for (size_t i = 0; i < q.size(); ++i)
      gap = std::max(gap, std::abs(q[i] - p[i]));
    if (gap <= 1e-12) return;
  }
  set.push_back(std::move(p));
}

// Directions of norm exactly radius: axis points plus a sphere covering for
// two or more parameter components.
void append_sphere(std::vector<Vec>& set, int nt, double radius) {
  if (radius <= 0.0) return;
  for (int i = 0; i < nt; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vec p(nt, 0.0);
      p[i] = sgn * radius;
      push_unique(set, std::move(p));
    }
  }
  if (nt == 2) {
    const double two_pi = 6.283185307179586;
    for (int k = 0; k < 16; ++k) {
      double ang = two_pi * k / 16.0;
      push_unique(set, {radius * std::cos(ang), radius * std::sin(ang)});
    }
  } else if (nt >= 3) {
    const int points = 26;
    const double golden_angle = 2.399963229728653;
    for (int k = 0; k < points; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / points;
      double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      double ang = golden_angle * k;
      Vec p(nt, 0.0);
      p[0] = radius * rad * std::cos(ang);
      p[1] = radius * rad * std::sin(ang);
      p[2] = radius * z;
      push_unique(set, std::move(p));
    }
  }
}

// Origin, the radius-delta sphere, and the half-radius sphere.
std::vector<Vec> theta_probe_set(int nt, double delta) {
  std::vector<Vec> probes;
  probes.emplace_back(nt, 0.0);
  if (delta > 0.0) {
    append_sphere(probes, nt, delta);
    append_sphere(probes, nt, 0.5 * delta);
  }
  return probes;
}

double interp_clamped(const std::vector<double>& grid,
                      const std::vector<double>& vals, double q) {
  if (q <= grid.front()) return vals.front();
  if (q >= grid.back()) return vals.back();
  size_t j = 1;
  while (grid[j] < q) ++j;
  double w = (q - grid[j - 1]) / (grid[j] - grid[j - 1]);
  return vals[j - 1] + w * (vals[j] - vals[j - 1]);
}

struct BilinearTable {
  std::vector<double> s_grid;
  std::vector<double> t_grid;
  std::vector<double> vals;  // row-major, s by t

  static void locate(const std::vector<double>& g, double q, size_t& j0,
                     double& w) {
    if (q <= g.front()) {
      j0 = 0;
      w = 0.0;
      return;
    }
    if (q >= g.back()) {
      j0 = g.size() - 2;
      w = 1.0;
      return;
    }
    size_t j = 1;
    while (g[j] < q) ++j;
    j0 = j - 1;
    w = (q - g[j0]) / (g[j0 + 1] - g[j0]);
  }

  double at(double s, double t) const {
    size_t i0 = 0, j0 = 0;
    double wi = 0.0, wj = 0.0;
    locate(s_grid, s, i0, wi);
    locate(t_grid, t, j0, wj);
    auto v = [&](size_t i, size_t j) { return vals[i * t_grid.size() + j]; };
    return (1.0 - wi) * ((1.0 - wj) * v(i0, j0) + wj * v(i0, j0 + 1)) +
           wi * ((1.0 - wj) * v(i0 + 1, j0) + wj * v(i0 + 1, j0 + 1));
  }
};

std::vector<double> norm_shells(const std::vector<Vec>& pts, bool with_zero) {
  std::vector<double> shells;
  if (with_zero) shells.push_back(0.0);
  for (const auto& p : pts) {
    double r = norm2(p);
    if (!with_zero || r > 1e-12) shells.push_back(r);
  }
  std::sort(shells.begin(), shells.end());
  shells.erase(std::unique(shells.begin(), shells.end(),
                           [](double a, double b) {
                             return std::abs(a - b) <= 1e-12;
                           }),
               shells.end());
  return shells;
}

size_t nearest_index(const std::vector<double>& grid, double q) {
  size_t best = 0;
  double best_gap = kInf;
  for (size_t i = 0; i < grid.size(); ++i) {
    double gap = std::abs(grid[i] - q);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::unique_ptr<Policy> make_solver_policy(const MpcProblem& prob) {
  return std::make_unique<SolverPolicy>(prob);
}

std::unique_ptr<Policy> make_analytic_policy(const AnalyticLaw& law) {
  if (!law.kappa || !law.value_fn)
    throw invalid_input("make_analytic_policy: law is incomplete");
  return std::make_unique<AnalyticPolicy>(law);
}

std::vector<Vec> constant_theta(const Vec& theta, int k_max) {
  if (k_max < 0) throw invalid_input("constant_theta: negative horizon");
  return std::vector<Vec>(static_cast<size_t>(k_max), theta);
}

ClosedLoopRun run_closed_loop(Policy& policy, const ParametricSystem& plant,
                              const Vec& x0, const std::vector<Vec>& theta_seq,
                              int k_max, double escape_radius) {
  if (k_max < 0 || static_cast<int>(theta_seq.size()) < k_max)
    throw invalid_input("run_closed_loop: theta_seq shorter than k_max");
  if (static_cast<int>(x0.size()) != plant.n)
    throw invalid_input("run_closed_loop: x0 dimension mismatch");
  ClosedLoopRun run;
  Vec x = x0;
  for (int k = 0;; ++k) {
    Policy::Decision d = policy.decide(x);
    if (!d.feasible) {
      if (k == 0) throw infeasible_start("run_closed_loop: infeasible x0");
      run.states.push_back(x);
      run.values.push_back(kInf);
      run.escaped = true;
      break;
    }
    run.states.push_back(x);
    run.values.push_back(d.value);
    if (k == k_max) break;
    Vec xn = plant.f(x, d.u, theta_seq[static_cast<size_t>(k)]);
    run.inputs.push_back(d.u);
    run.theta_seq.push_back(theta_seq[static_cast<size_t>(k)]);
    if (!all_finite(xn) || norm_inf(xn) > escape_radius) {
      run.escaped = true;
      if (all_finite(xn)) {
        run.states.push_back(xn);
        run.values.push_back(policy.value(xn));
      }
      break;
    }
    x = std::move(xn);
  }
  for (size_t k = 0; k + 1 < run.values.size(); ++k)
    run.delta_v.push_back(run.values[k + 1] - run.values[k]);
  return run;
}

ClosedLoopRun run_closed_loop(const MpcProblem& prob,
                              const ParametricSystem& plant, const Vec& x0,
                              const Vec& theta, int k_max,
                              double escape_radius) {
  auto policy = make_solver_policy(prob);
  return run_closed_loop(*policy, plant, x0, constant_theta(theta, k_max),
                         k_max, escape_radius);
}

CostDifferenceField cost_difference_field(const Policy& policy,
                                          const ParametricSystem& plant,
                                          const std::vector<Vec>& x_grid,
                                          const std::vector<Vec>& theta_grid,
                                          bool parallel) {
  if (x_grid.empty() || theta_grid.empty())
    throw invalid_input("cost_difference_field: empty grid");
  CostDifferenceField out;
  out.x_grid = x_grid;
  out.theta_grid = theta_grid;
  const int nx = static_cast<int>(x_grid.size());
  const int nt = static_cast<int>(theta_grid.size());
  out.dv.assign(static_cast<size_t>(nx) * nt, kInf);
  out.feasible.assign(static_cast<size_t>(nx) * nt, 0);
  out.value_at_x.assign(static_cast<size_t>(nx), kInf);

  // Each row writes a disjoint slice, so the parallel sweep is a plain loop
  // split; the per-cell arithmetic is identical either way.
  auto row = [&](int i) {
    Policy::Decision d;
    try {
      d = policy.evaluate(x_grid[static_cast<size_t>(i)]);
    } catch (const std::exception&) {
      d.feasible = false;
    }
    if (!d.feasible) return;
    out.value_at_x[static_cast<size_t>(i)] = d.value;
    for (int j = 0; j < nt; ++j) {
      double vn = kInf;
      try {
        Vec xn = plant.f(x_grid[static_cast<size_t>(i)], d.u,
                         theta_grid[static_cast<size_t>(j)]);
        if (all_finite(xn)) vn = policy.value(xn);
      } catch (const std::exception&) {
        vn = kInf;
      }
      if (std::isfinite(vn)) {
        out.dv[static_cast<size_t>(i) * nt + j] = vn - d.value;
        out.feasible[static_cast<size_t>(i) * nt + j] = 1;
      }
    }
  };

  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < nx; ++i) row(i);
  } else {
    for (int i = 0; i < nx; ++i) row(i);
  }
  return out;
}

RpiReport rpi_check(const Policy& policy, const ParametricSystem& plant,
                    double rho, double delta, int samples, std::uint64_t seed,
                    double box_limit) {
  if (samples < 1 || rho <= 0.0 || delta < 0.0 || box_limit <= 0.0)
    throw invalid_input("rpi_check: bad arguments");
  RpiReport rep;
  const int n = plant.n;

  auto level_value = [&](const Vec& x) {
    try {
      double v = policy.value(x);
      return std::isfinite(v) ? v : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };

  if (!(level_value(Vec(n, 0.0)) <= rho)) return rep;  // inconclusive

  // Per-axis extent of the sublevel set, then a small margin.
  Vec half(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vec probe(n, 0.0);
      probe[i] = sgn * box_limit;
      double reach = box_limit;
      if (level_value(probe) > rho) {
        double lo = 0.0, hi = box_limit;
        for (int it = 0; it < 30; ++it) {
          double mid = 0.5 * (lo + hi);
          probe[i] = sgn * mid;
          (level_value(probe) <= rho ? lo : hi) = mid;
        }
        reach = lo;
      }
      half[i] = std::max(half[i], reach);
    }
    half[i] = std::min(half[i] * 1.05 + 1e-9, box_limit);
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto probes = theta_probe_set(plant.n_theta, delta);

  bool violated = false;
  double worst = -kInf;
  long attempts = 0;
  const long attempt_cap = 50L * samples;
  while (rep.samples_used < samples && attempts < attempt_cap) {
    ++attempts;
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = unit(rng) * half[i];
    if (!(level_value(x) <= rho)) continue;
    Policy::Decision d;
    try {
      d = policy.evaluate(x);
    } catch (const std::exception&) {
      continue;
    }
    if (!d.feasible) continue;
    ++rep.samples_used;
    for (const auto& th : probes) {
      double vp = kInf;
      try {
        Vec xn = plant.f(x, d.u, th);
        if (all_finite(xn)) vp = level_value(xn);
      } catch (const std::exception&) {
      }
      if (vp > worst) {
        worst = vp;
        rep.worst_x = x;
        rep.worst_theta = th;
        rep.worst_value = vp;
      }
      if (vp > rho + 1e-8) violated = true;
    }
  }
  if (rep.samples_used == 0) return rep;  // inconclusive
  rep.outcome = violated ? CheckOutcome::violated : CheckOutcome::ok;
  return rep;
}

const char* to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::SES: return "SES";
    case StabilityVerdict::SAS: return "SAS";
    case StabilityVerdict::RAS_only: return "RAS_only";
    case StabilityVerdict::unstable: return "unstable";
    case StabilityVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

CertificationReport descent_certification(const Policy& policy,
                                          const ParametricSystem& plant,
                                          double rho, double delta,
                                          const std::vector<Vec>& x_samples,
                                          const std::vector<Vec>& theta_samples,
                                          const ScalarComparisonFn& alpha3,
                                          const GammaFit* fit) {
  if (x_samples.empty() || theta_samples.empty() || rho <= 0.0)
    throw invalid_input("descent_certification: bad arguments");
  if (!alpha3.eval)
    throw invalid_input("descent_certification: alpha3 missing");

  CertificationReport rep;
  rep.rho = rho;
  rep.delta_tested = delta;

  struct Kept {
    Vec x;
    Policy::Decision d;
  };
  std::vector<Kept> kept;
  for (const auto& x : x_samples) {
    Policy::Decision d;
    try {
      d = policy.evaluate(x);
    } catch (const std::exception&) {
      d.feasible = false;
    }
    if (!d.feasible || !(d.value <= rho + 1e-9)) {
      ++rep.infeasible_samples;
      continue;
    }
    kept.push_back({x, std::move(d)});
  }
  if (kept.empty()) return rep;  // inconclusive

  bool rpi_ok = true;
  double margin = kInf;
  double eps = kInf;
  double sas = kInf;
  double radius_max = 0.0;
  for (const auto& k : kept) {
    double ns = norm2(k.x);
    radius_max = std::max(radius_max, ns);
    for (const auto& th : theta_samples) {
      ++rep.samples_used;
      double vn = kInf;
      try {
        Vec xn = plant.f(k.x, k.d.u, th);
        if (all_finite(xn)) {
          double v = policy.value(xn);
          if (std::isfinite(v)) vn = v;
        }
      } catch (const std::exception&) {
      }
      if (vn > rho + 1e-8) rpi_ok = false;
      double dv = vn - k.d.value;
      margin = std::min(margin, -dv);
      if (ns > 1e-12) {
        eps = std::min(eps, -dv / (ns * ns));
        sas = std::min(sas, -dv - alpha3.eval(ns));
      }
    }
  }
  rep.rpi_ok = rpi_ok;
  rep.descent_margin = margin;
  rep.eps_quadratic = (eps == kInf) ? 0.0 : eps;

  if (fit != nullptr && fit->gamma.eval) {
    rep.lyap_increase_fit = fit->gamma;
    try {
      double s_hi = radius_max > 1e-6 ? radius_max : 1.0;
      rep.scaling =
          scaling_limit_estimate(fit->gamma, alpha3, delta, 1e-8, s_hi);
    } catch (const std::exception&) {
      // leave the default (inconclusive) scaling report
    }
  }

  if (!rpi_ok) {
    rep.verdict = StabilityVerdict::unstable;
    return rep;
  }
  if (std::isfinite(eps) && eps > 0.0 && margin >= -1e-12) {
    rep.verdict = StabilityVerdict::SES;
    return rep;
  }
  if (std::isfinite(sas) && sas > 0.0 && margin >= -1e-12) {
    rep.verdict = StabilityVerdict::SAS;
    return rep;
  }

  // Descent failed somewhere: probe boundedness with short closed-loop runs.
  bool contained = true;
  const size_t stride = std::max<size_t>(1, kept.size() / 9);
  const double guard = 1e3 * (1.0 + radius_max);
  for (size_t i = 0; i < kept.size() && contained; i += stride) {
    for (const auto& th : theta_samples) {
      auto probe = policy.clone();
      probe->reset();
      ClosedLoopRun run;
      try {
        run = run_closed_loop(*probe, plant, kept[i].x, constant_theta(th, 40),
                              40, guard);
      } catch (const std::exception&) {
        contained = false;
        break;
      }
      if (run.escaped) {
        contained = false;
        break;
      }
      for (double v : run.values) {
        if (!(v <= rho + 1e-6)) {
          contained = false;
          break;
        }
      }
      if (!contained) break;
    }
  }
  rep.verdict =
      contained ? StabilityVerdict::RAS_only : StabilityVerdict::inconclusive;
  return rep;
}

GammaFit fit_gamma_v(const MpcProblem& prob, const ParametricSystem& plant,
                     const Policy& policy, const std::vector<Vec>& x_samples,
                     const std::vector<Vec>& theta_samples, GammaTrack track,
                     const std::function<double(const Vec&)>& candidate_v) {
  if (x_samples.empty() || theta_samples.empty())
    throw invalid_input("fit_gamma_v: empty samples");
  if (track == GammaTrack::candidate_quadratic && !candidate_v)
    throw invalid_input("fit_gamma_v: candidate track needs candidate_v");

  GammaFit fit;
  fit.track = track;
  fit.shell_t = norm_shells(theta_samples, true);
  if (fit.shell_t.size() < 2)
    throw invalid_input("fit_gamma_v: no nonzero theta sample");

  const bool quadratic = track != GammaTrack::warm_start_general;
  std::vector<double> s_shells;
  if (!quadratic) {
    s_shells = norm_shells(x_samples, true);
    if (s_shells.size() < 2)
      throw invalid_input("fit_gamma_v: no nonzero state sample");
  }

  std::vector<double> sigma(fit.shell_t.size(), 0.0);
  std::vector<double> table(
      quadratic ? 0 : s_shells.size() * fit.shell_t.size(), 0.0);
  const Vec theta0(static_cast<size_t>(plant.n_theta), 0.0);

  for (const auto& x : x_samples) {
    const double ns = norm2(x);
    if (ns <= 1e-12) continue;

    Policy::Decision d0;
    try {
      d0 = policy.evaluate(x);
    } catch (const std::exception&) {
      continue;
    }
    if (!d0.feasible || d0.plan.empty()) continue;

    // Reference successor under the nominal model and the comparison plan.
    double base = 0.0;
    InputSequence utilde;
    bool ready = false;
    try {
      if (track == GammaTrack::candidate_quadratic) {
        Vec fhat = nominal_step(prob.sys, x, d0.u);
        if (all_finite(fhat)) {
          base = candidate_v(fhat);
          ready = std::isfinite(base);
        }
      } else {
        auto xs = open_loop_rollout(prob.sys, x, d0.plan, theta0);
        utilde.assign(d0.plan.begin() + 1, d0.plan.end());
        utilde.push_back(clamp_to_box(prob.terminal.kappa_f(xs.back()),
                                      prob.input_lower, prob.input_upper));
        base = objective(prob, xs[1], utilde);
        ready = std::isfinite(base);
      }
    } catch (const std::exception&) {
      ready = false;
    }
    if (!ready) continue;

    for (const auto& th : theta_samples) {
      double d = 0.0;
      bool ok = false;
      try {
        Vec fc = plant.f(x, d0.plan.front(), th);
        if (all_finite(fc)) {
          double val = track == GammaTrack::candidate_quadratic
                           ? candidate_v(fc)
                           : objective(prob, fc, utilde);
          if (std::isfinite(val)) {
            d = std::abs(val - base);
            ok = true;
          }
        }
      } catch (const std::exception&) {
      }
      if (!ok) continue;
      const size_t tj = nearest_index(fit.shell_t, norm2(th));
      if (quadratic) {
        sigma[tj] = std::max(sigma[tj], d / (ns * ns));
      } else {
        const size_t si = nearest_index(s_shells, ns);
        double& cell = table[si * fit.shell_t.size() + tj];
        cell = std::max(cell, d);
      }
    }
  }

  if (quadratic) {
    sigma.front() = 0.0;  // theta = 0 perturbs nothing
    fit.shell_sigma = sigma;
    const std::vector<double> ts = fit.shell_t;
    const std::vector<double> sg = sigma;
    fit.gamma.eval = [ts, sg](double s, double t) {
      return interp_clamped(ts, sg, std::abs(t)) * s * s;
    };
    fit.gamma.label = "fitted sigma_V(|theta|) s^2";
  } else {
    for (size_t j = 0; j < fit.shell_t.size(); ++j) table[j] = 0.0;
    for (size_t i = 0; i < s_shells.size(); ++i)
      table[i * fit.shell_t.size()] = 0.0;
    BilinearTable bt{s_shells, fit.shell_t, table};
    fit.gamma.eval = [bt](double s, double t) {
      return bt.at(std::abs(s), std::abs(t));
    };
    fit.gamma.label = "fitted bilinear envelope";
  }
  return fit;
}

ModelErrorReport model_error_bounds_check(const ParametricSystem& plant,
                                          const Vec& x_lo, const Vec& x_hi,
                                          const Vec& u_lo, const Vec& u_hi,
                                          const std::vector<double>& shells,
                                          int samples, std::uint64_t seed) {
  const int n = plant.n;
  const int m = plant.m;
  if (static_cast<int>(x_lo.size()) != n || static_cast<int>(x_hi.size()) != n ||
      static_cast<int>(u_lo.size()) != m || static_cast<int>(u_hi.size()) != m)
    throw invalid_input("model_error_bounds_check: box dimension mismatch");
  if (shells.empty() || samples < 0)
    throw invalid_input("model_error_bounds_check: bad arguments");
  for (size_t i = 0; i < shells.size(); ++i) {
    if (shells[i] < 0.0 || (i > 0 && shells[i] <= shells[i - 1]))
      throw invalid_input("model_error_bounds_check: shells must ascend");
  }

  ModelErrorReport rep;
  rep.shell_t = shells;
  const Vec theta0(static_cast<size_t>(plant.n_theta), 0.0);
  const int dims = n + m;
  const int per = dims <= 3 ? 9 : 5;

  auto build_points = [&](double scale, int rand_count, std::uint64_t sd) {
    std::vector<std::pair<Vec, Vec>> pts;
    long total = 1;
    for (int d = 0; d < dims; ++d) total *= per;
    for (long c = 0; c < total; ++c) {
      Vec x(static_cast<size_t>(n)), u(static_cast<size_t>(m));
      long rem = c;
      for (int d = 0; d < dims; ++d) {
        int digit = static_cast<int>(rem % per);
        rem /= per;
        double lo = (d < n ? x_lo[d] : u_lo[d - n]) * scale;
        double hi = (d < n ? x_hi[d] : u_hi[d - n]) * scale;
        double v = lo + (hi - lo) * digit / (per - 1);
        if (d < n) x[static_cast<size_t>(d)] = v;
        else u[static_cast<size_t>(d - n)] = v;
      }
      pts.emplace_back(std::move(x), std::move(u));
    }
    std::mt19937_64 rng(sd);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 0; c < rand_count; ++c) {
      Vec x(static_cast<size_t>(n)), u(static_cast<size_t>(m));
      for (int i = 0; i < n; ++i)
        x[static_cast<size_t>(i)] =
            (x_lo[i] + (x_hi[i] - x_lo[i]) * unit(rng)) * scale;
      for (int i = 0; i < m; ++i)
        u[static_cast<size_t>(i)] =
            (u_lo[i] + (u_hi[i] - u_lo[i]) * unit(rng)) * scale;
      pts.emplace_back(std::move(x), std::move(u));
    }
    return pts;
  };

  auto envelope_at = [&](const std::vector<std::pair<Vec, Vec>>& pts,
                         double t) {
    std::vector<Vec> dirs;
    if (t <= 0.0) {
      dirs.emplace_back(static_cast<size_t>(plant.n_theta), 0.0);
    } else {
      append_sphere(dirs, plant.n_theta, t);
    }
    double e = 0.0;
    for (const auto& [x, u] : pts) {
      double den = 0.0;
      for (double v : x) den += v * v;
      for (double v : u) den += v * v;
      den = std::sqrt(den);
      if (den <= 1e-12) continue;
      Vec f0 = plant.f(x, u, theta0);
      if (!all_finite(f0)) {
        rep.finite = false;
        continue;
      }
      for (const auto& th : dirs) {
        Vec f1 = plant.f(x, u, th);
        if (!all_finite(f1)) {
          rep.finite = false;
          continue;
        }
        e = std::max(e, norm2(vsub(f1, f0)) / den);
      }
    }
    return e;
  };

  const auto full = build_points(1.0, samples, seed);
  for (double t : shells) rep.envelope.push_back(envelope_at(full, t));
  rep.zero_at_origin = envelope_at(full, 0.0) <= 1e-12;

  const double t_ref = shells.back();
  if (t_ref > 0.0) {
    const auto tiny = build_points(1e-4, std::min(samples, 200), seed + 1);
    const double e_full = envelope_at(full, t_ref);
    const double e_tiny = envelope_at(tiny, t_ref);
    rep.bounded_near_origin = !(e_tiny > 10.0 * std::max(e_full, 1e-12));
  }
  return rep;
}

ExponentialFit exponential_fit(const std::vector<Vec>& states) {
  ExponentialFit fit;
  if (states.size() < 3) return fit;
  const double r0 = norm2(states.front());
  if (!(r0 > 1e-10)) return fit;

  std::vector<std::pair<double, double>> pts;  // (k, log|x(k)|)
  for (size_t k = 0; k < states.size(); ++k) {
    if (!all_finite(states[k])) continue;
    double r = norm2(states[k]);
    if (r > 1e-10) pts.emplace_back(static_cast<double>(k), std::log(r));
  }
  if (pts.size() < 3) return fit;

  double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
  for (const auto& [k, y] : pts) {
    sk += k;
    sy += y;
    skk += k * k;
    sky += k * y;
  }
  const double np = static_cast<double>(pts.size());
  const double det = np * skk - sk * sk;
  if (std::abs(det) < 1e-300) return fit;
  const double slope = (np * sky - sk * sy) / det;
  const double intercept = (sy * skk - sk * sky) / det;

  fit.lambda = std::exp(slope);
  double overshoot = -kInf;
  double need = -kInf;
  const double log_r0 = std::log(r0);
  for (const auto& [k, y] : pts) {
    overshoot = std::max(overshoot, y - (intercept + slope * k));
    need = std::max(need, y - log_r0 - slope * k);
  }
  fit.c = std::exp(need);
  fit.residual = overshoot;
  fit.ok = true;
  return fit;
}

std::optional<double> robust_descent_residual(const MpcProblem& prob,
                                              const ParametricSystem& plant,
                                              const Vec& x, const Vec& theta) {
  OcpSolution sol = solve(prob, x);
  if (!sol.feasible) return std::nullopt;
  InputSequence utilde = warm_start(prob, sol);
  const Vec& u0 = sol.u_opt.front();

  Vec fc = plant.f(x, u0, theta);
  if (!all_finite(fc)) return std::nullopt;
  if (!feasible(prob, fc, utilde)) return std::nullopt;
  const Vec& fhat = sol.x_traj[1];

  OcpSolution next = solve(prob, fc, &utilde);
  if (!next.feasible) return std::nullopt;

  const double bound = sol.value - prob.stage_cost(x, u0) +
                       objective(prob, fc, utilde) -
                       objective(prob, fhat, utilde);
  return next.value - bound;
}

}  // namespace mismpc
