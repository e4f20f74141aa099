#pragma once

// Newton descent for bar(nu) = argmin Lambda_nu on the hyperboloid, with
// backtracking on the gradient norm and re-projection retraction. Lambda_nu
// is strictly convex and proper for admissible measures, so the minimizer is
// unique and independent of the initial guess.

#include <cmath>
#include <vector>

#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/hyperboloid.hpp"
#include "natvol/measure.hpp"

namespace natvol {

struct BarycenterConfig {
  double tol = 1e-10;   // residual g-norm of the implicit equation
  int max_iter = 100;
  bool track_objective = false;
};

struct BarycenterResult {
  HPoint point;
  double residual = 0.0;
  int iterations = 0;
  double hessian_min_eig = 0.0;
  std::vector<double> objective_trace;  // filled when track_objective is set
};

namespace detail {

constexpr int kMaxDim = 8;

// residual vector (ambient) and its g-norm at y; atoms row-major N x dim
// with first coordinate normalized to 1, weights summing to 1.
inline double bary_gradient(const double* atoms, const double* w, int N, int dim, const double* y,
                            double* grad_out) {
  double acc[kMaxDim];
  for (int d = 0; d < dim; ++d) acc[d] = 0.0;
  for (int i = 0; i < N; ++i) {
    const double* x = atoms + static_cast<std::size_t>(i) * dim;
    double s = y[0] * x[0];
    for (int d = 1; d < dim; ++d) s -= y[d] * x[d];
    const double c = w[i] / s;  // s = -<y, xi_i> > 0
    for (int d = 0; d < dim; ++d) acc[d] -= c * x[d];
  }
  double norm2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    grad_out[d] = acc[d] + y[d];
    norm2 += (d == 0 ? -1.0 : 1.0) * grad_out[d] * grad_out[d];
  }
  return std::sqrt(std::max(0.0, norm2));
}

inline double bary_objective(const double* atoms, const double* w, int N, int dim, const double* y) {
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    const double* x = atoms + static_cast<std::size_t>(i) * dim;
    double s = y[0] * x[0];
    for (int d = 1; d < dim; ++d) s -= y[d] * x[d];
    acc += w[i] * std::log(s);
  }
  return acc;
}

inline bool try_reproject_raw(double* y, int dim) {
  double q = y[0] * y[0];
  for (int d = 1; d < dim; ++d) q -= y[d] * y[d];
  if (q <= 0.0 || y[0] <= 0.0) return false;
  const double inv = 1.0 / std::sqrt(q);
  for (int d = 0; d < dim; ++d) y[d] *= inv;
  return true;
}

inline void reproject_raw(double* y, int dim) {
  if (!try_reproject_raw(y, dim))
    throw invalid_point_error("barycenter: iterate left the timelike cone");
}

// Orthonormal tangent frame at y (transvection image of the coordinate
// axes; exact at any radius), columns stored row-major as frame[k*dim + d].
inline void tangent_frame_raw(const double* y, int dim, double* frame) {
  const int n = dim - 1;
  const double denom = 1.0 + y[0];
  for (int k = 1; k <= n; ++k) {
    const double c = y[k] / denom;
    double* fk = frame + (k - 1) * dim;
    fk[0] = y[k];
    for (int d = 1; d <= n; ++d) fk[d] = (d == k ? 1.0 : 0.0) + c * y[d];
  }
}

}  // namespace detail

// Core solver over flat atom storage (shared by the measure-level API and the
// natural-map evaluator).
inline BarycenterResult barycenter_flat(const double* atoms, const double* w, int N, int dim,
                                        Vec y0, const BarycenterConfig& cfg = {}) {
  using namespace detail;
  const int n = dim - 1;
  if (dim > kMaxDim) throw dimension_error("barycenter: dimension too large");

  double y[kMaxDim], grad[kMaxDim], ytrial[kMaxDim], gtrial[kMaxDim];
  for (int d = 0; d < dim; ++d) y[d] = y0[d];
  reproject_raw(y, dim);

  BarycenterResult res;
  if (cfg.track_objective) res.objective_trace.push_back(bary_objective(atoms, w, N, dim, y));

  double fJ[kMaxDim * kMaxDim];      // J * frame columns, row-major (n x dim)
  double hess[kMaxDim * kMaxDim];    // n x n
  double gf[kMaxDim], step[kMaxDim];

  double frame[kMaxDim * kMaxDim];
  double rnorm = bary_gradient(atoms, w, N, dim, y, grad);
  int it = 0;
  for (; it < cfg.max_iter && rnorm >= cfg.tol; ++it) {
    // orthonormal frame of T_y, then fJ_k = J f_k
    tangent_frame_raw(y, dim, frame);
    for (int k = 0; k < n; ++k) {
      fJ[k * dim + 0] = -frame[k * dim + 0];
      for (int d = 1; d < dim; ++d) fJ[k * dim + d] = frame[k * dim + d];
    }

    for (int k = 0; k < n; ++k) gf[k] = 0.0;
    for (int k = 0; k < n * n; ++k) hess[k] = 0.0;
    double ck[kMaxDim];
    for (int i = 0; i < N; ++i) {
      const double* x = atoms + static_cast<std::size_t>(i) * dim;
      double s = y[0] * x[0];
      for (int d = 1; d < dim; ++d) s -= y[d] * x[d];
      const double inv_s = 1.0 / s;
      for (int k = 0; k < n; ++k) {
        double dotv = 0.0;
        const double* fk = fJ + k * dim;
        for (int d = 0; d < dim; ++d) dotv += fk[d] * x[d];
        ck[k] = -dotv * inv_s;  // <f_k, grad beta_i>
      }
      const double wi = w[i];
      for (int k = 0; k < n; ++k) {
        gf[k] += wi * ck[k];
        for (int l = 0; l <= k; ++l) hess[k * n + l] -= wi * ck[k] * ck[l];
      }
    }
    for (int k = 0; k < n; ++k) {
      hess[k * n + k] += 1.0;  // Hess = I - sum w dbeta (x) dbeta
      for (int l = k + 1; l < n; ++l) hess[k * n + l] = hess[l * n + k];
    }

    // Newton step; positive-definiteness guard falls back to a gradient step.
    double chol[kMaxDim * kMaxDim];
    for (int k = 0; k < n * n; ++k) chol[k] = hess[k];
    bool newton_ok = cholesky_small(chol, n, 1e-10);
    if (newton_ok) {
      for (int k = 0; k < n; ++k) step[k] = -gf[k];
      cholesky_solve_small(chol, n, step);
    } else {
      for (int k = 0; k < n; ++k) step[k] = -0.5 * gf[k];
    }

    // directional derivative of Lambda along the step (frame coordinates)
    double slope = 0.0;
    for (int k = 0; k < n; ++k) slope += gf[k] * step[k];

    double t = 1.0;
    bool accepted = false;
    double obj_cur = 0.0;
    bool obj_known = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      for (int d = 0; d < dim; ++d) {
        double delta = 0.0;
        for (int k = 0; k < n; ++k) delta += frame[k * dim + d] * step[k] * t;
        ytrial[d] = y[d] + delta;
      }
      if (!try_reproject_raw(ytrial, dim)) {  // overshot the cone: reject trial
        t *= 0.5;
        continue;
      }
      const double rt = bary_gradient(atoms, w, N, dim, ytrial, gtrial);
      bool take = rt < rnorm;  // fast path: residual decreased
      if (!take) {
        // Armijo on the strictly convex objective (always satisfiable along
        // a descent direction); evaluated lazily since the fast path covers
        // nearly every iteration
        if (!obj_known) {
          obj_cur = bary_objective(atoms, w, N, dim, y);
          obj_known = true;
        }
        const double obj_trial = bary_objective(atoms, w, N, dim, ytrial);
        take = obj_trial <= obj_cur + 1e-4 * t * slope;
      }
      if (take) {
        for (int d = 0; d < dim; ++d) {
          y[d] = ytrial[d];
          grad[d] = gtrial[d];
        }
        rnorm = rt;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (cfg.track_objective) res.objective_trace.push_back(bary_objective(atoms, w, N, dim, y));
    if (!accepted) break;
  }

  if (rnorm >= cfg.tol)
    throw convergence_error("barycenter: no convergence after " + std::to_string(it) +
                                " iterations (residual " + std::to_string(rnorm) + ")",
                            rnorm);

  Vec yv(dim);
  for (int d = 0; d < dim; ++d) yv[d] = y[d];
  res.point = HPoint(std::move(yv));
  res.residual = rnorm;
  res.iterations = it;

  {  // Hessian spectrum at the solution (positive for admissible measures)
    tangent_frame_raw(y, dim, frame);
    for (int k = 0; k < n; ++k) {
      fJ[k * dim + 0] = -frame[k * dim + 0];
      for (int d = 1; d < dim; ++d) fJ[k * dim + d] = frame[k * dim + d];
    }
    for (int k = 0; k < n * n; ++k) hess[k] = 0.0;
    double ck[kMaxDim];
    for (int i = 0; i < N; ++i) {
      const double* x = atoms + static_cast<std::size_t>(i) * dim;
      double s = y[0] * x[0];
      for (int d = 1; d < dim; ++d) s -= y[d] * x[d];
      for (int k = 0; k < n; ++k) {
        double dotv = 0.0;
        const double* fk = fJ + k * dim;
        for (int d = 0; d < dim; ++d) dotv += fk[d] * x[d];
        ck[k] = -dotv / s;
      }
      for (int k = 0; k < n; ++k)
        for (int l = 0; l <= k; ++l) hess[k * n + l] -= w[i] * ck[k] * ck[l];
    }
    Mat H(n, n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) H(k, l) = (k == l ? 1.0 : 0.0) + hess[std::max(k, l) * n + std::min(k, l)];
    res.hessian_min_eig = sym_min_eigenvalue(H);
  }
  return res;
}

// --- measure-level API -------------------------------------------------------

inline double lambda_value(const BoundaryMeasure& nu, const HPoint& x) {
  double acc = 0.0;
  for (int i = 0; i < nu.size(); ++i) acc += nu.weights[i] * std::log(-mdot(x.coords, nu.atoms[i].coords));
  return acc;
}

inline HTangent lambda_grad(const BoundaryMeasure& nu, const HPoint& x) {
  Vec g = nu.total_mass() * x.coords;
  for (int i = 0; i < nu.size(); ++i) {
    const double s = -mdot(x.coords, nu.atoms[i].coords);
    g -= (nu.weights[i] / s) * nu.atoms[i].coords;
  }
  return HTangent{x, std::move(g)};
}

// Hessian of Lambda_nu as an n x n matrix in the given orthonormal frame,
// Hess = (sum w) I - sum w_i dbeta_i (x) dbeta_i.
inline Mat lambda_hess(const BoundaryMeasure& nu, const HPoint& x, const Mat& frame) {
  const int n = static_cast<int>(frame.cols());
  Mat H = nu.total_mass() * Mat::Identity(n, n);
  for (int i = 0; i < nu.size(); ++i) {
    const double s = -mdot(x.coords, nu.atoms[i].coords);
    Vec c(n);
    for (int k = 0; k < n; ++k) c[k] = -mdot(frame.col(k), nu.atoms[i].coords) / s;
    H -= nu.weights[i] * c * c.transpose();
  }
  return H;
}

inline Vec euclidean_average_lift(const BoundaryMeasure& nu) {
  Vec v = Vec::Zero(nu.atoms.front().coords.size());
  for (int i = 0; i < nu.size(); ++i) v += nu.weights[i] * nu.atoms[i].coords;
  const double q = -mdot(v, v);
  if (q <= 1e-30) throw degenerate_measure_error("barycenter: atom average is not timelike");
  return v / std::sqrt(q);
}

inline BarycenterResult barycenter(const BoundaryMeasure& nu, const BarycenterConfig& cfg = {}) {
  nu.require_admissible();
  const int dim = nu.atoms.front().coords.size();
  const int N = nu.size();
  std::vector<double> atoms(static_cast<std::size_t>(N) * dim);
  std::vector<double> w(N);
  const double mass = nu.total_mass();
  for (int i = 0; i < N; ++i) {
    for (int d = 0; d < dim; ++d) atoms[static_cast<std::size_t>(i) * dim + d] = nu.atoms[i].coords[d];
    w[i] = nu.weights[i] / mass;
  }
  return barycenter_flat(atoms.data(), w.data(), N, dim, euclidean_average_lift(nu), cfg);
}

}  // namespace natvol
