#include "mismpc/terminal.hpp"

#include <cmath>
#include <random>

namespace mismpc {

double terminal_cost(const TerminalIngredients& t, const Vec& x) {
  return quad_form(t.P_f, x);
}

Mat dlyap_solve(const Mat& A, const Mat& C) {
  if (A.rows != A.cols || C.rows != C.cols || A.rows != C.rows)
    throw invalid_input("dlyap_solve: square matrices of equal size required");
  if (asymmetry(C) > 1e-12)
    throw invalid_input("dlyap_solve: C must be symmetric");
  const int n = A.rows;

  // Column-stacked unknowns: (I - A' (x) A') vec(P) = vec(C), with
  // vec(A'PA)[ij] = sum_kl A(k,i) A(l,j) P(k,l).
  Mat sys(n * n, n * n);
  Vec rhs(n * n);
  auto idx = [n](int i, int j) { return i * n + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      rhs[idx(i, j)] = C(i, j);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double coeff = (k == i && l == j ? 1.0 : 0.0) - A(k, i) * A(l, j);
          sys(idx(i, j), idx(k, l)) += coeff;
        }
    }

  Vec p;
  try {
    p = solve_dense(sys, rhs);
  } catch (const no_solution&) {
    throw no_solution("dlyap_solve: singular system (spectral radius >= 1)");
  }

  Mat P(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) P(i, j) = p[idx(i, j)];
  // Symmetrize away roundoff; the exact solution is symmetric for symmetric C.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = 0.5 * (P(i, j) + P(j, i));
      P(i, j) = P(j, i) = v;
    }

  Mat res = matadd(matsub(matmul(transpose(A), matmul(P, A)), P), C);
  double rmax = 0, pmax = 0;
  for (double v : res.a) rmax = std::max(rmax, std::abs(v));
  for (double v : P.a) pmax = std::max(pmax, std::abs(v));
  if (rmax > 1e-10 * std::max(1.0, pmax))
    throw no_solution("dlyap_solve: residual too large");
  return P;
}

Assumption3Report verify_assumption3(
    const ParametricSystem& sys,
    const std::function<double(const Vec&, const Vec&)>& stage_cost,
    const TerminalIngredients& term, const Vec& input_lower,
    const Vec& input_upper, int sample_count, std::uint64_t seed) {
  if (sample_count <= 0)
    throw invalid_input("verify_assumption3: sample_count must be positive");
  const int n = sys.n;

  // Axis-aligned bounding box of the ellipsoid {x : x'P_f x <= c_f}:
  // half-width_i = sqrt(c_f * (P_f^{-1})_ii).
  Mat pinv = inverse(term.P_f);
  Vec half(n);
  for (int i = 0; i < n; ++i) half[i] = std::sqrt(term.c_f * pinv(i, i));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Assumption3Report rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  int accepted = 0;
  while (accepted < sample_count) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = half[i] * unit(rng);
    if (quad_form(term.P_f, x) > term.c_f) continue;
    ++accepted;

    Vec u = term.kappa_f(x);
    for (size_t i = 0; i < u.size(); ++i)
      if (u[i] < input_lower[i] - 1e-12 || u[i] > input_upper[i] + 1e-12)
        rep.input_feasible = false;

    Vec xn = nominal_step(sys, x, u);
    double viol = quad_form(term.P_f, xn) - quad_form(term.P_f, x) +
                  stage_cost(x, u);
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_point = x;
    }
  }
  rep.pass = rep.input_feasible && rep.max_violation <= 1e-9;
  return rep;
}

PendulumTerminalConstants pendulum_terminal_constants() {
  const double delta = 0.1;
  const double gain = 5.0;

  PendulumTerminalConstants c;
  c.fb.A = identity(2);
  c.fb.A(0, 1) = delta;
  c.fb.A(1, 0) = delta;  // d(sin x1)/dx1 at the origin
  c.fb.B = Mat(2, 1);
  c.fb.B(1, 0) = delta * gain;
  c.fb.K = Mat(1, 2);
  c.fb.K(0, 0) = 2.0;
  c.fb.K(0, 1) = 2.0;

  c.cost.Q = identity(2);
  c.cost.R = identity(1);

  Mat a_k = matsub(c.fb.A, matmul(c.fb.B, c.fb.K));
  Mat q_k = matadd(c.cost.Q, matmul(transpose(c.fb.K),
                                    matmul(c.cost.R, c.fb.K)));
  c.P_f = dlyap_solve(a_k, matscale(q_k, 2.0));

  c.a = c.P_f(1, 1) * delta * delta / 36.0;
  Vec pe2 = {c.P_f(0, 1), c.P_f(1, 1)};
  c.b = delta * norm2(matvec(transpose(a_k), pe2)) / 3.0;
  c.c_f = min_sym_eigenvalue(c.P_f) / 8.0;

  // Roots of 1 - b s - s^2 bracket the radii where the terminal descent
  // margin certificate stays positive.
  auto q = [&](double s) { return 1.0 - c.b * s - s * s; };
  auto bisect = [&](double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (hi - lo < 1e-12) return mid;
      if (q(lo) * q(mid) <= 0) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
  };
  c.x_star = bisect(0.0, 10.0);
  c.x_lower = bisect(-10.0, 0.0);
  return c;
}

}  // namespace mismpc
