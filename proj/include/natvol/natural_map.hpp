#pragma once

// The natural map F(a,x) = bar((phi_x)_* nu_a), its differential via the
// differentiated implicit equation (an m x m SPD solve; finite differences
// stay available as an oracle in the tests), slice Jacobians, and the
// quadratic-form chain underlying the Jacobian bound.
//
// Quadrature nodes are shared between the construction of nu_a and every
// form assembly at a given a, so the implicit equation and its derivative
// are discretized consistently; with probability-normalized weights the
// normalization term drops out of the differentiated equation exactly at
// the barycenter.

#include <cmath>
#include <vector>

#include "natvol/barycenter.hpp"
#include "natvol/cocycle.hpp"
#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/group.hpp"
#include "natvol/hyperboloid.hpp"
#include "natvol/measure.hpp"
#include "natvol/quadrature.hpp"

namespace natvol {

struct SliceDifferential {
  HPoint base;       // a
  HPoint value;      // F_x(a)
  int x = 0;
  Mat J;             // m x n in orthonormal frames of T_a H^n, T_F H^m
  Mat Hp;            // n x n,  trace 1
  Mat H;             // m x m
  Mat K;             // m x m,  = Id - H (curvature -1 closed form)
  Mat frame_n;       // (n+1) x n ambient frame at a
  Mat frame_m;       // (m+1) x m ambient frame at F
  Vec singular_values;
  double implicit_residual = 0.0;

  // product of the top p singular values; p = n gives jac = sqrt(det J^T J)
  double jacobian(int p = -1) const {
    const int n = static_cast<int>(J.cols());
    if (p < 0) p = n;
    if (p > static_cast<int>(singular_values.size()))
      throw dimension_error("jacobian: p exceeds the number of singular values");
    double prod = 1.0;
    for (int i = 0; i < p; ++i) prod *= singular_values[i];
    return prod;
  }

  bool isometric_embedding(double tol = 1e-3) const {
    for (int i = 0; i < singular_values.size(); ++i)
      if (std::abs(singular_values[i] - 1.0) > tol) return false;
    return true;
  }
};

class NaturalMapEvaluator {
 public:
  Cocycle sigma;
  BoundaryMapSpec boundary;
  SphereQuadrature quad;
  BarycenterConfig solver;
  double min_slice_separation = 0.0;

  static NaturalMapEvaluator build(Cocycle sigma_in, BoundaryMapSpec boundary_in,
                                   SphereQuadrature quad_in, BarycenterConfig solver_in = {},
                                   double injectivity_tol = 1e-10) {
    NaturalMapEvaluator ev;
    ev.sigma = std::move(sigma_in);
    ev.boundary = std::move(boundary_in);
    ev.quad = std::move(quad_in);
    ev.solver = solver_in;
    if (ev.boundary.n != ev.quad.n) throw dimension_error("NaturalMapEvaluator: quadrature dimension");
    if (ev.boundary.m < ev.boundary.n) throw dimension_error("NaturalMapEvaluator: m < n");
    if (ev.boundary.m != ev.sigma.m) throw dimension_error("NaturalMapEvaluator: cocycle target dimension");

    const int slices = ev.boundary.is_shared() ? 1 : static_cast<int>(ev.boundary.slices.size());
    const int dim_m = ev.boundary.m + 1;
    const int N = ev.quad.size();
    ev.pushed_.resize(slices);
    // pairwise injectivity scan is strided above 2048 nodes; consecutive
    // nodes (the likeliest collisions on product grids) are always checked
    const int stride = std::max(1, N / 2048);
    for (int s = 0; s < slices; ++s) {
      auto& flat = ev.pushed_[s];
      flat.resize(static_cast<std::size_t>(N) * dim_m);
      double minsep2 = 1e300;
      for (int i = 0; i < N; ++i) {
        const HBoundaryPoint eta = ev.boundary.slices[s].apply(ev.quad.nodes[i]);
        for (int d = 0; d < dim_m; ++d) flat[static_cast<std::size_t>(i) * dim_m + d] = eta.coords[d];
      }
      auto sep2 = [&](int i, int j) {
        double d2 = 0.0;
        for (int d = 0; d < dim_m; ++d) {
          const double diff = flat[static_cast<std::size_t>(i) * dim_m + d] -
                              flat[static_cast<std::size_t>(j) * dim_m + d];
          d2 += diff * diff;
        }
        return d2;
      };
      for (int i = 0; i + 1 < N; ++i) minsep2 = std::min(minsep2, sep2(i, i + 1));
      for (int i = 0; i < N; i += stride)
        for (int j = i + stride; j < N; j += stride) minsep2 = std::min(minsep2, sep2(i, j));
      const double minsep = std::sqrt(minsep2);
      if (s == 0 || minsep < ev.min_slice_separation) ev.min_slice_separation = minsep;
      if (minsep <= injectivity_tol)
        throw inadmissible_measure_error("NaturalMapEvaluator: slice is not injective on the node set");
    }
    return ev;
  }

  int n() const { return boundary.n; }
  int m() const { return boundary.m; }

  const std::vector<double>& pushed_nodes(int x) const {
    return pushed_[boundary.is_shared() ? 0 : static_cast<std::size_t>(x)];
  }

  // Visual weights at a (independent of x; cache one per cell when scanning).
  void weights_at(const HPoint& a, Vec& w) const { visual_weights(a, quad, w, true); }

  // Barycenter of the pushed measure with the given nu_a weights.
  BarycenterResult solve_pushed(const Vec& w, int x) const {
    const auto& atoms = pushed_nodes(x);
    const int dim = m() + 1;
    const int N = quad.size();
    // initial guess: normalized weighted atom average (equivariant under
    // isometries, so twisted instances converge identically)
    Vec y0 = Vec::Zero(dim);
    for (int i = 0; i < N; ++i)
      for (int d = 0; d < dim; ++d) y0[d] += w[i] * atoms[static_cast<std::size_t>(i) * dim + d];
    const double q = -mdot(y0, y0);
    if (q <= 1e-30) throw degenerate_measure_error("eval: pushed measure concentrates at a point");
    y0 /= std::sqrt(q);
    return barycenter_flat(atoms.data(), w.data(), N, dim, std::move(y0), solver);
  }

  BarycenterResult eval_full(const HPoint& a, int x) const {
    Vec w;
    weights_at(a, w);
    return solve_pushed(w, x);
  }

  HPoint eval(const HPoint& a, int x) const { return eval_full(a, x).point; }

  SliceDifferential differential(const HPoint& a, const Vec& w, int x,
                                 const BarycenterResult& at) const {
    const int nn = n(), mm = m();
    const int dim_n = nn + 1, dim_m = mm + 1;
    const int N = quad.size();
    const double delta = critical_exponent(nn);
    const auto& atoms = pushed_nodes(x);

    SliceDifferential out;
    out.base = a;
    out.value = at.point;
    out.x = x;
    out.implicit_residual = at.residual;
    out.frame_n = tangent_frame(a);
    out.frame_m = tangent_frame(at.point);

    // fJ rows: J * frame columns, for fast Minkowski pairings against nodes
    std::vector<double> fa(static_cast<std::size_t>(nn) * dim_n), fm(static_cast<std::size_t>(mm) * dim_m);
    for (int k = 0; k < nn; ++k) {
      fa[static_cast<std::size_t>(k) * dim_n] = -out.frame_n(0, k);
      for (int d = 1; d < dim_n; ++d) fa[static_cast<std::size_t>(k) * dim_n + d] = out.frame_n(d, k);
    }
    for (int k = 0; k < mm; ++k) {
      fm[static_cast<std::size_t>(k) * dim_m] = -out.frame_m(0, k);
      for (int d = 1; d < dim_m; ++d) fm[static_cast<std::size_t>(k) * dim_m + d] = out.frame_m(d, k);
    }

    Mat Hp = Mat::Zero(nn, nn), H = Mat::Zero(mm, mm), R = Mat::Zero(mm, nn);
    double alpha[8], c[8];
    const double* av = a.coords.data();
    const double* Fv = at.point.coords.data();
    for (int i = 0; i < N; ++i) {
      const double* xi = quad.node_ptr(i);
      const double* eta = atoms.data() + static_cast<std::size_t>(i) * dim_m;
      double sa = av[0] * xi[0];
      for (int d = 1; d < dim_n; ++d) sa -= av[d] * xi[d];
      double sf = Fv[0] * eta[0];
      for (int d = 1; d < dim_m; ++d) sf -= Fv[d] * eta[d];
      for (int k = 0; k < nn; ++k) {
        double dot = 0.0;
        const double* fk = fa.data() + static_cast<std::size_t>(k) * dim_n;
        for (int d = 0; d < dim_n; ++d) dot += fk[d] * xi[d];
        alpha[k] = -dot / sa;  // dbeta_o|_{(a, xi_i)}(f_k)
      }
      for (int k = 0; k < mm; ++k) {
        double dot = 0.0;
        const double* fk = fm.data() + static_cast<std::size_t>(k) * dim_m;
        for (int d = 0; d < dim_m; ++d) dot += fk[d] * eta[d];
        c[k] = -dot / sf;  // dbeta_o|_{(F, eta_i)}(f_k)
      }
      const double wi = w[i];
      for (int k = 0; k < nn; ++k)
        for (int l = 0; l <= k; ++l) Hp(k, l) += wi * alpha[k] * alpha[l];
      for (int k = 0; k < mm; ++k)
        for (int l = 0; l <= k; ++l) H(k, l) += wi * c[k] * c[l];
      for (int k = 0; k < mm; ++k)
        for (int l = 0; l < nn; ++l) R(k, l) += wi * c[k] * alpha[l];
    }
    Hp = Hp.selfadjointView<Eigen::Lower>();
    H = H.selfadjointView<Eigen::Lower>();
    out.Hp = Hp;
    out.H = H;
    out.K = Mat::Identity(mm, mm) - H;

    const double kmin = sym_min_eigenvalue(out.K);
    if (kmin < 1e-10)
      throw degenerate_support_error("differential: K = Id - H is numerically singular");

    // K (D F u) = delta * int (grad beta at (F, phi xi)) dbeta|_(a,xi)(u) dnu_a
    out.J = out.K.llt().solve(delta * R);
    Eigen::JacobiSVD<Mat> svd(out.J);
    out.singular_values = svd.singularValues();
    return out;
  }

  SliceDifferential differential(const HPoint& a, int x) const {
    Vec w;
    weights_at(a, w);
    const auto at = solve_pushed(w, x);
    return differential(a, w, x, at);
  }

  double jacobian(const HPoint& a, int x, int p = -1) const { return differential(a, x).jacobian(p); }

 private:
  std::vector<std::vector<double>> pushed_;  // per slice, row-major N x (m+1)
};

// --- the quadratic-form chain audit -------------------------------------------

struct BcgAuditReport {
  int p = 0;
  double delta = 0.0;
  double jac = 0.0;
  // Cauchy-Schwarz step k(Ju, v) <= delta sqrt(h(v,v)) sqrt(h'(u,u)):
  double cs_max_ratio = 0.0;   // max lhs/rhs over samples (aligned pair included)
  double cs_min_margin = 0.0;  // min (rhs - lhs)
  // trace step det H' <= (tr H'/p)^p:
  double det_hp = 0.0;
  double det_hp_bound = 0.0;
  // restriction step ((det H^V)^{1/2} / det K^V <= p^{p/2} / delta^p):
  double b1_value = 0.0;
  double b1_bound = 0.0;
  // chained bound jac <= delta^p p^{-p/2} (det H^V)^{1/2} / det K^V <= 1:
  double penult_bound = 0.0;

  bool chain_holds(double tol) const {
    return cs_min_margin >= -tol && det_hp <= det_hp_bound + tol && b1_value <= b1_bound + tol &&
           jac <= penult_bound + tol && penult_bound <= 1.0 + tol;
  }
  bool tight(double tol) const {
    return std::abs(cs_max_ratio - 1.0) <= tol &&
           std::abs(det_hp / det_hp_bound - 1.0) <= tol &&
           std::abs(b1_value / b1_bound - 1.0) <= tol && std::abs(jac / penult_bound - 1.0) <= tol;
  }
};

inline BcgAuditReport bcg_bound_audit(const SliceDifferential& d, Rng& rng, int samples = 200) {
  const int n = static_cast<int>(d.J.cols());
  const int m = static_cast<int>(d.J.rows());
  const int p = n;
  BcgAuditReport rep;
  rep.p = p;
  rep.delta = critical_exponent(n);
  rep.jac = d.jacobian(p);

  auto cs_pair = [&](const Vec& u, const Vec& v) {
    const double lhs = (d.J * u).dot(d.K * v);
    const double rhs =
        rep.delta * std::sqrt(std::max(0.0, v.dot(d.H * v))) * std::sqrt(std::max(0.0, u.dot(d.Hp * u)));
    return std::pair<double, double>(lhs, rhs);
  };
  rep.cs_min_margin = 1e300;
  auto feed = [&](const Vec& u, const Vec& v) {
    const auto [lhs, rhs] = cs_pair(u, v);
    if (rhs > 1e-300) rep.cs_max_ratio = std::max(rep.cs_max_ratio, lhs / rhs);
    rep.cs_min_margin = std::min(rep.cs_min_margin, rhs - lhs);
  };
  for (int s = 0; s < samples; ++s) {
    Vec u(n), v(m);
    for (int i = 0; i < n; ++i) u[i] = rng.normal();
    for (int i = 0; i < m; ++i) v[i] = rng.normal();
    u.normalize();
    v.normalize();
    feed(u, v);
    const Vec ju = d.J * u;
    if (ju.norm() > 1e-12) feed(u, ju.normalized());  // aligned pair (tight at equality)
  }

  rep.det_hp = d.Hp.determinant();
  rep.det_hp_bound = std::pow(d.Hp.trace() / p, p);

  // V = range of J via thin SVD
  Eigen::JacobiSVD<Mat> svd(d.J, Eigen::ComputeFullU);
  const Mat U = svd.matrixU().leftCols(p);
  const Mat HV = U.transpose() * d.H * U;
  const Mat KV = U.transpose() * d.K * U;
  rep.b1_value = std::sqrt(std::max(0.0, HV.determinant())) / KV.determinant();
  rep.b1_bound = std::pow(static_cast<double>(p), p / 2.0) / std::pow(rep.delta, p);
  rep.penult_bound = std::pow(rep.delta, p) * std::pow(static_cast<double>(p), -p / 2.0) * rep.b1_value;
  return rep;
}

}  // namespace natvol
