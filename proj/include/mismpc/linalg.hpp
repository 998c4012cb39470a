#pragma once

// Small dense linear algebra on flat row-major storage. Everything here is
// sized for the n<=8 systems this project needs; no attempt at performance.

#include <array>
#include <complex>
#include <vector>

namespace mismpc {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major, a[i*cols+j]

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

Mat identity(int n);
Mat transpose(const Mat& m);
Mat matmul(const Mat& x, const Mat& y);
Vec matvec(const Mat& m, const Vec& v);
Mat matadd(const Mat& x, const Mat& y);
Mat matsub(const Mat& x, const Mat& y);
Mat matscale(const Mat& x, double s);

double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);
double norm_inf(const Vec& x);
Vec vadd(const Vec& x, const Vec& y);
Vec vsub(const Vec& x, const Vec& y);
Vec vscale(const Vec& x, double s);
bool all_finite(const Vec& x);

// x^T M x for square M.
double quad_form(const Mat& m, const Vec& x);

// Gaussian elimination with partial pivoting; throws no_solution when a pivot
// falls below 1e-12 times the row scale.
Vec solve_dense(Mat m, Vec b);

// Eigenvalues of a 2x2 (possibly nonsymmetric) matrix via the characteristic
// polynomial; returned with the larger real part first.
std::array<std::complex<double>, 2> eigenvalues_2x2(const Mat& m);

// Eigenvalues of a symmetric matrix by cyclic Jacobi, ascending order.
std::vector<double> sym_eigenvalues(const Mat& m);

double min_sym_eigenvalue(const Mat& m);
double max_sym_eigenvalue(const Mat& m);

// Max |m(i,j) - m(j,i)|.
double asymmetry(const Mat& m);

// Inverse via solve_dense column by column (n<=8 use only).
Mat inverse(const Mat& m);

}  // namespace mismpc
