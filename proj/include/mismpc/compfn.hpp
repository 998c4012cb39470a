#pragma once

// Comparison functions (class K / K-infinity / K^2) and the small-signal
// scaling test that decides whether a fitted disturbance gain stays below a
// decrease bound near the origin.

#include <functional>
#include <string>
#include <vector>

#include "mismpc/errors.hpp"

namespace mismpc {

struct ScalarComparisonFn {
  std::function<double(double)> eval;
  std::string label;
};

struct JointComparisonFn {
  std::function<double(double, double)> eval;  // (s, t)
  std::string label;
};

enum class ScalingVerdict { passes, fails, inconclusive };

const char* to_string(ScalingVerdict v);

struct ScalingReport {
  double tau = 0.0;
  // (s, gamma(s,tau)/alpha(s)) samples, s strictly decreasing toward 0.
  std::vector<std::pair<double, double>> ratio_samples;
  // Ratio at the smallest sampled s when the last quartile is monotone;
  // quiet NaN marks an indeterminate limit.
  double limit_estimate = 0.0;
  ScalingVerdict verdict = ScalingVerdict::inconclusive;
};

// True iff f(0)=0 and f is strictly increasing along the grid. The grid must
// be sorted ascending, nonnegative, and contain 0; empty grid -> invalid_input.
// Strictness tolerance: successive values must differ by more than
// 1e-12*(1+|value|).
bool check_class_k(const ScalarComparisonFn& f, const std::vector<double>& grid);

// Joint analogue: g(0,t)=g(s,0)=0 on the grids and strict increase in each
// argument with the other held at each positive grid value.
bool check_class_k2(const JointComparisonFn& g,
                    const std::vector<double>& s_grid,
                    const std::vector<double>& t_grid);

// Samples gamma(s,tau)/alpha(s) on a log-spaced grid from s_max down to s_min
// and classifies the s->0 behavior. points >= 8 and 0 < s_min < s_max are
// required (invalid_input); alpha must be positive at every sample
// (division_domain).
ScalingReport scaling_limit_estimate(const JointComparisonFn& gamma,
                                     const ScalarComparisonFn& alpha,
                                     double tau,
                                     double s_min = 1e-8,
                                     double s_max = 1.0,
                                     int points = 64);

// Largest t in t_grid such that gamma(s,t') < alpha(s) strictly for every
// sampled s in (0, rho] and every t' in t_grid with t' <= t. Returns false in
// .found when no grid value qualifies.
struct DeltaSearchResult {
  bool found = false;
  double delta = 0.0;
};

DeltaSearchResult find_delta_for_rho(const JointComparisonFn& gamma,
                                     const ScalarComparisonFn& alpha,
                                     double rho,
                                     const std::vector<double>& s_grid,
                                     const std::vector<double>& t_grid);

}  // namespace mismpc
