#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

#include "natvol/errors.hpp"

namespace natvol {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Minkowski pairing of signature (-,+,...,+): <a,b> = -a0*b0 + sum a_i*b_i.
inline double mdot(const Vec& a, const Vec& b) {
  double s = -a[0] * b[0];
  for (Eigen::Index i = 1; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double mdot(const double* a, const double* b, int dim) {
  double s = -a[0] * b[0];
  for (int i = 1; i < dim; ++i) s += a[i] * b[i];
  return s;
}

// J*v, J = diag(-1, 1, ..., 1).
inline Vec mink_flip(const Vec& v) {
  Vec w = v;
  w[0] = -w[0];
  return w;
}

inline Mat minkowski_form(int dim) {
  Mat J = Mat::Identity(dim, dim);
  J(0, 0) = -1.0;
  return J;
}

// Deterministic pairwise summation; result is independent of any outer
// parallel scheduling as long as the input ordering is fixed.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = x[0];
    for (std::size_t i = 1; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

// In-place Cholesky factorization/solve for tiny SPD systems (hot path;
// avoids heap traffic). Returns false if a pivot drops below eps.
inline bool cholesky_small(double* a, int n, double eps = 0.0) {
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (d <= eps) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (int i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (int k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / l;
    }
  }
  return true;
}

inline void cholesky_solve_small(const double* l, int n, double* b) {
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= l[i * n + k] * b[k];
    b[i] = v / l[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = b[i];
    for (int k = i + 1; k < n; ++k) v -= l[k * n + i] * b[k];
    b[i] = v / l[i * n + i];
  }
}

inline double sym_min_eigenvalue(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace natvol
