#include "mismpc/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "mismpc/errors.hpp"

namespace mismpc {

Mat identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat transpose(const Mat& m) {
  Mat t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

Mat matmul(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) throw invalid_input("matmul: inner dimensions differ");
  Mat r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      double xv = x(i, k);
      if (xv == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) r(i, j) += xv * y(k, j);
    }
  return r;
}

Vec matvec(const Mat& m, const Vec& v) {
  if (m.cols != static_cast<int>(v.size()))
    throw invalid_input("matvec: dimension mismatch");
  Vec r(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) r[i] += m(i, j) * v[j];
  return r;
}

Mat matadd(const Mat& x, const Mat& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw invalid_input("matadd: shape mismatch");
  Mat r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

Mat matsub(const Mat& x, const Mat& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw invalid_input("matsub: shape mismatch");
  Mat r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

Mat matscale(const Mat& x, double s) {
  Mat r = x;
  for (double& v : r.a) v *= s;
  return r;
}

double dot(const Vec& x, const Vec& y) {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

double norm_inf(const Vec& x) {
  double m = 0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

Vec vadd(const Vec& x, const Vec& y) {
  Vec r = x;
  for (size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

Vec vsub(const Vec& x, const Vec& y) {
  Vec r = x;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

Vec vscale(const Vec& x, double s) {
  Vec r = x;
  for (double& v : r) v *= s;
  return r;
}

bool all_finite(const Vec& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

double quad_form(const Mat& m, const Vec& x) {
  double s = 0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) s += x[i] * m(i, j) * x[j];
  return s;
}

Vec solve_dense(Mat m, Vec b) {
  if (m.rows != m.cols || m.rows != static_cast<int>(b.size()))
    throw invalid_input("solve_dense: square system required");
  const int n = m.rows;
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int col = 0; col < n; ++col) {
    int best = col;
    double bestv = std::abs(m(col, col));
    for (int r = col + 1; r < n; ++r) {
      double v = std::abs(m(r, col));
      if (v > bestv) { bestv = v; best = r; }
    }
    double scale = 0;
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(m(best, j)));
    if (bestv <= 1e-12 * std::max(scale, 1.0))
      throw no_solution("solve_dense: singular pivot");
    if (best != col) {
      for (int j = 0; j < n; ++j) std::swap(m(best, j), m(col, j));
      std::swap(b[best], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = m(r, col) / m(col, col);
      if (f == 0.0) continue;
      m(r, col) = 0.0;
      for (int j = col + 1; j < n; ++j) m(r, j) -= f * m(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

std::array<std::complex<double>, 2> eigenvalues_2x2(const Mat& m) {
  if (m.rows != 2 || m.cols != 2)
    throw invalid_input("eigenvalues_2x2: 2x2 only");
  double tr = m(0, 0) + m(1, 1);
  double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  double half = 0.5 * tr;
  double disc = half * half - det;
  std::array<std::complex<double>, 2> ev;
  if (disc >= 0) {
    double root = std::sqrt(disc);
    ev[0] = {half + root, 0.0};
    ev[1] = {half - root, 0.0};
  } else {
    double root = std::sqrt(-disc);
    ev[0] = {half, root};
    ev[1] = {half, -root};
  }
  return ev;
}

std::vector<double> sym_eigenvalues(const Mat& m) {
  if (m.rows != m.cols) throw invalid_input("sym_eigenvalues: square required");
  const int n = m.rows;
  Mat a = m;
  // Cyclic Jacobi sweeps; n is tiny so convergence is quick.
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(a(i, j)));
    if (off < 1e-14) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double min_sym_eigenvalue(const Mat& m) { return sym_eigenvalues(m).front(); }
double max_sym_eigenvalue(const Mat& m) { return sym_eigenvalues(m).back(); }

double asymmetry(const Mat& m) {
  double w = 0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      w = std::max(w, std::abs(m(i, j) - m(j, i)));
  return w;
}

Mat inverse(const Mat& m) {
  if (m.rows != m.cols) throw invalid_input("inverse: square required");
  const int n = m.rows;
  Mat inv(n, n);
  for (int j = 0; j < n; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    Vec col = solve_dense(m, e);
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

}  // namespace mismpc
