#include "mismpc/compfn.hpp"

#include <cmath>
#include <limits>

namespace mismpc {

const char* to_string(ScalingVerdict v) {
  switch (v) {
    case ScalingVerdict::passes: return "passes";
    case ScalingVerdict::fails: return "fails";
    default: return "inconclusive";
  }
}

namespace {
// Strictness margin shared by the monotonicity checks.
double strict_tol(double v) { return 1e-12 * (1.0 + std::abs(v)); }
}  // namespace

bool check_class_k(const ScalarComparisonFn& f, const std::vector<double>& grid) {
  if (grid.empty()) throw invalid_input("check_class_k: empty grid");
  if (grid.front() != 0.0)
    throw invalid_input("check_class_k: grid must start at 0");
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]) || grid[i] < 0)
      throw invalid_input("check_class_k: grid must be ascending and nonnegative");

  double prev = f.eval(0.0);
  if (std::abs(prev) > 1e-12) return false;
  for (size_t i = 1; i < grid.size(); ++i) {
    double v = f.eval(grid[i]);
    if (!std::isfinite(v)) return false;
    if (v - prev <= strict_tol(v)) return false;
    prev = v;
  }
  return true;
}

bool check_class_k2(const JointComparisonFn& g,
                    const std::vector<double>& s_grid,
                    const std::vector<double>& t_grid) {
  if (s_grid.empty() || t_grid.empty())
    throw invalid_input("check_class_k2: empty grid");
  for (double t : t_grid) {
    if (std::abs(g.eval(0.0, t)) > 1e-12) return false;
    if (t == 0.0) continue;
    ScalarComparisonFn slice{[&g, t](double s) { return g.eval(s, t); },
                             g.label};
    if (!check_class_k(slice, s_grid)) return false;
  }
  for (double s : s_grid) {
    if (std::abs(g.eval(s, 0.0)) > 1e-12) return false;
    if (s == 0.0) continue;
    ScalarComparisonFn slice{[&g, s](double t) { return g.eval(s, t); },
                             g.label};
    if (!check_class_k(slice, t_grid)) return false;
  }
  return true;
}

ScalingReport scaling_limit_estimate(const JointComparisonFn& gamma,
                                     const ScalarComparisonFn& alpha,
                                     double tau, double s_min, double s_max,
                                     int points) {
  if (points < 8) throw invalid_input("scaling_limit_estimate: points < 8");
  if (!(s_min > 0) || !(s_min < s_max))
    throw invalid_input("scaling_limit_estimate: need 0 < s_min < s_max");

  ScalingReport rep;
  rep.tau = tau;
  const double log_hi = std::log(s_max), log_lo = std::log(s_min);
  for (int i = 0; i < points; ++i) {
    double s = std::exp(log_hi + (log_lo - log_hi) * i / (points - 1));
    double a = alpha.eval(s);
    if (!(a > 0))
      throw division_domain(
          "scaling_limit_estimate: alpha not positive at s=" + std::to_string(s));
    rep.ratio_samples.emplace_back(s, gamma.eval(s, tau) / a);
  }

  // Behavior of the last quartile (smallest s) decides whether a limit is
  // reported.
  const size_t n = rep.ratio_samples.size();
  const size_t q0 = (3 * n) / 4;
  bool nondecreasing = true, nonincreasing = true;
  for (size_t i = q0 + 1; i < n; ++i) {
    double prev = rep.ratio_samples[i - 1].second;
    double cur = rep.ratio_samples[i].second;
    if (cur > prev + strict_tol(cur)) nonincreasing = false;
    if (cur < prev - strict_tol(cur)) nondecreasing = false;
  }
  const bool monotone = nondecreasing || nonincreasing;
  const double final_ratio = rep.ratio_samples.back().second;
  rep.limit_estimate =
      monotone ? final_ratio : std::numeric_limits<double>::quiet_NaN();

  bool all_below_one = true;
  for (auto& [s, r] : rep.ratio_samples)
    if (!(r < 1.0)) all_below_one = false;

  if (monotone && final_ratio < 1.0 && all_below_one) {
    rep.verdict = ScalingVerdict::passes;
  } else if ((monotone && final_ratio >= 1.0) ||
             (nondecreasing && final_ratio > 10.0)) {
    rep.verdict = ScalingVerdict::fails;
  } else {
    rep.verdict = ScalingVerdict::inconclusive;
  }
  return rep;
}

DeltaSearchResult find_delta_for_rho(const JointComparisonFn& gamma,
                                     const ScalarComparisonFn& alpha,
                                     double rho,
                                     const std::vector<double>& s_grid,
                                     const std::vector<double>& t_grid) {
  if (s_grid.empty() || t_grid.empty())
    throw invalid_input("find_delta_for_rho: empty grid");
  std::vector<double> s_used;
  for (double s : s_grid)
    if (s > 0 && s <= rho) s_used.push_back(s);
  if (s_used.empty())
    throw invalid_input("find_delta_for_rho: no samples inside (0, rho]");

  auto ok_at = [&](double t) {
    for (double s : s_used)
      if (!(gamma.eval(s, t) < alpha.eval(s))) return false;
    return true;
  };

  // delta must dominate every smaller grid value too, so scan ascending and
  // remember the last prefix that stayed strict. A zero radius is not a
  // usable margin and does not count as found.
  DeltaSearchResult res;
  for (double t : t_grid) {
    if (!ok_at(t)) break;
    if (t > 0) {
      res.found = true;
      res.delta = t;
    }
  }
  return res;
}

}  // namespace mismpc
