#pragma once

// Terminal ingredients for MPC: quadratic costs, discrete-time Lyapunov
// solves for the terminal weight, and sampling checks of the terminal
// descent condition V_f(f(x, k_f(x))) <= V_f(x) - l(x, k_f(x)) on the
// terminal set.

#include <cstdint>
#include <functional>
#include <vector>

#include "mismpc/errors.hpp"
#include "mismpc/linalg.hpp"
#include "mismpc/model.hpp"

namespace mismpc {

struct QuadraticCost {
  Mat Q;  // symmetric positive definite, state weight
  Mat R;  // symmetric positive definite, input weight
};

struct TerminalIngredients {
  Mat P_f;       // terminal weight, V_f(x) = x'P_f x
  double c_f;    // terminal set is the c_f-sublevel set of V_f
  std::function<Vec(const Vec&)> kappa_f;
};

struct LinearFeedback {
  Mat A;
  Mat B;
  Mat K;  // u = -K x; A - B K must be Schur stable
};

double terminal_cost(const TerminalIngredients& t, const Vec& x);

// Solves A' P A - P = -C for symmetric C. Column-stacked n^2 x n^2 linear
// system; throws invalid_input for non-square/asymmetric C, no_solution when
// the system is singular (spectral radius of A >= 1) or the residual exceeds
// 1e-10.
Mat dlyap_solve(const Mat& A, const Mat& C);

struct Assumption3Report {
  double max_violation = 0.0;  // max over samples of V_f(f(x,k_f)) - V_f(x) + l(x,k_f)
  Vec worst_point;
  bool input_feasible = true;  // k_f(x) inside the input box at every sample
  bool pass = false;           // max_violation <= 1e-9 and input_feasible
};

// Rejection-samples the terminal set from its bounding box and evaluates the
// terminal descent inequality under the nominal model. sample_count = 0 ->
// invalid_input.
Assumption3Report verify_assumption3(
    const ParametricSystem& sys,
    const std::function<double(const Vec&, const Vec&)>& stage_cost,
    const TerminalIngredients& term,
    const Vec& input_lower, const Vec& input_upper,
    int sample_count = 10000, std::uint64_t seed = 20260816ull);

struct PendulumTerminalConstants {
  Mat P_f;
  double a = 0.0;       // quartic margin coefficient, [P_f]_22 * delta^2 / 36
  double b = 0.0;       // quadratic margin coefficient, delta*|A_K' P_f e_2|/3
  double x_star = 0.0;  // positive root of 1 - b s - s^2
  double x_lower = 0.0; // negative root of the same polynomial
  double c_f = 0.0;     // min eigenvalue of P_f over 8
  LinearFeedback fb;
  QuadraticCost cost;
};

// Terminal design for the forced pendulum benchmark: Euler linearization at
// the origin with delta = 0.1 and gain estimate 5, K = [2 2],
// P_f = dlyap(A_K, 2(Q + K'RK)).
PendulumTerminalConstants pendulum_terminal_constants();

}  // namespace mismpc
