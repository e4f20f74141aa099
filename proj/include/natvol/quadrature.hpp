#pragma once

// Product quadratures on S^{n-1} for n = 2, 3, 4, used to discretize the
// round measure nu_o. Node layout is deterministic; weights sum to 1.
// Construction validates the declared harmonic order by integrating zonal
// harmonics (Chebyshev / Legendre / Chebyshev-2nd kernels) against the rule.

#include <cmath>
#include <string>
#include <vector>

#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/hyperboloid.hpp"
#include "natvol/rng.hpp"

namespace natvol {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int k, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(k, 0.0);
  weights.assign(k, 0.0);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (k + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (k + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < k; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = k * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[k - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[k - 1 - i] = weights[i];
  }
}

// Zonal kernels with zero mean over the sphere for l >= 1:
// S^1: Chebyshev T_l, S^2: Legendre P_l, S^3: Chebyshev-2nd U_l.
inline double zonal_kernel(int sphere_dim, int l, double t) {
  if (l == 0) return 1.0;
  if (sphere_dim == 1) {
    double a = 1.0, b = t;  // T_{l}
    for (int j = 2; j <= l; ++j) {
      const double c = 2.0 * t * b - a;
      a = b;
      b = c;
    }
    return l >= 1 ? b : a;
  }
  if (sphere_dim == 2) {
    double a = 1.0, b = t;  // P_l
    for (int j = 2; j <= l; ++j) {
      const double c = ((2.0 * j - 1.0) * t * b - (j - 1.0) * a) / j;
      a = b;
      b = c;
    }
    return b;
  }
  // U_l, normalized by its sup (l+1) so tolerances are comparable
  double a = 1.0, b = 2.0 * t;
  for (int j = 2; j <= l; ++j) {
    const double c = 2.0 * t * b - a;
    a = b;
    b = c;
  }
  return (l >= 1 ? b : a) / (l + 1.0);
}

struct SphereQuadrature {
  int n = 0;      // ambient hyperbolic dimension; nodes live on S^{n-1}
  int order = 0;  // all zonal harmonics up to this degree integrate to 0 within 1e-10
  std::vector<HBoundaryPoint> nodes;
  Vec weights;
  // row-major (N x (n+1)) copy of node coordinates for hot loops
  std::vector<double> flat;

  int size() const { return static_cast<int>(nodes.size()); }
  const double* node_ptr(int i) const { return flat.data() + static_cast<std::size_t>(i) * (n + 1); }

  void finalize() {
    const int dim = n + 1;
    flat.resize(static_cast<std::size_t>(size()) * dim);
    for (int i = 0; i < size(); ++i)
      for (int d = 0; d < dim; ++d) flat[static_cast<std::size_t>(i) * dim + d] = nodes[i].coords[d];
  }

  // |sum_i w_i Z_l(<u_i, e>)| must vanish for 1 <= l <= order.
  void validate(double tol = 1e-10) const {
    Rng rng(20240317);
    const int sphere_dim = n - 1;
    for (int rep = 0; rep < 3; ++rep) {
      const auto ev = rng.unit_vector(n);
      Vec e(n);
      for (int i = 0; i < n; ++i) e[i] = ev[i];
      for (int l = 1; l <= order; ++l) {
        double acc = 0.0;
        for (int i = 0; i < size(); ++i) {
          const double t = nodes[i].direction().dot(e);
          acc += weights[i] * zonal_kernel(sphere_dim, l, t);
        }
        if (std::abs(acc) > tol)
          throw validation_error("SphereQuadrature: harmonic of degree " + std::to_string(l) +
                                 " integrates to " + std::to_string(acc));
      }
    }
    if (std::abs(weights.sum() - 1.0) > 1e-12)
      throw validation_error("SphereQuadrature: weights do not sum to 1");
  }

  // node_budget is an approximate total node count (--quad-order).
  static SphereQuadrature build(int n, int node_budget) {
    if (n < 2 || n > 4) throw dimension_error("SphereQuadrature: n must be 2, 3 or 4");
    SphereQuadrature q;
    q.n = n;
    if (n == 2) {
      const int N = std::max(8, node_budget);
      q.nodes.reserve(N);
      q.weights = Vec::Constant(N, 1.0 / N);
      const double pi = 3.14159265358979323846;
      for (int i = 0; i < N; ++i) {
        const double th = 2.0 * pi * i / N;
        Vec u(2);
        u << std::cos(th), std::sin(th);
        q.nodes.push_back(HBoundaryPoint::from_direction(u));
      }
      q.order = std::min(N - 1, 48);
    } else if (n == 3) {
      const int nt = std::max(6, static_cast<int>(std::lround(std::sqrt(node_budget / 2.0))));
      const int nphi = 2 * nt;
      std::vector<double> tn, tw;
      gauss_legendre(nt, tn, tw);
      const double pi = 3.14159265358979323846;
      q.weights = Vec(nt * nphi);
      int idx = 0;
      for (int it = 0; it < nt; ++it) {
        const double ct = tn[it];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int ip = 0; ip < nphi; ++ip) {
          const double ph = 2.0 * pi * ip / nphi;
          Vec u(3);
          u << st * std::cos(ph), st * std::sin(ph), ct;
          q.nodes.push_back(HBoundaryPoint::from_direction(u));
          q.weights[idx++] = tw[it] / 2.0 / nphi;
        }
      }
      q.order = std::min({2 * nt - 1, nphi - 1, 32});
    } else {
      // S^3 = { (cos psi, sin psi * omega) } with area element sin^2 psi;
      // Gauss-Chebyshev (2nd kind) handles the sin^2 weight exactly.
      const int npsi = std::max(6, static_cast<int>(std::lround(std::cbrt(node_budget / 4.0))));
      SphereQuadrature s2 = build(3, 4 * npsi * npsi / 2);
      const double pi = 3.14159265358979323846;
      q.weights = Vec(npsi * s2.size());
      int idx = 0;
      for (int k = 1; k <= npsi; ++k) {
        const double psi = pi * k / (npsi + 1.0);
        const double wpsi = (pi / (npsi + 1.0)) * std::sin(psi) * std::sin(psi) / (pi / 2.0);
        // normalized: int_0^pi sin^2 = pi/2
        const double cp = std::cos(psi), sp = std::sin(psi);
        for (int i = 0; i < s2.size(); ++i) {
          Vec u(4);
          const Vec w3 = s2.nodes[i].direction();
          u << cp, sp * w3[0], sp * w3[1], sp * w3[2];
          q.nodes.push_back(HBoundaryPoint::from_direction(u));
          q.weights[idx++] = wpsi * s2.weights[i];
        }
      }
      q.weights /= q.weights.sum();
      q.order = std::min({2 * npsi - 1, s2.order, 16});
    }
    q.finalize();
    q.validate();
    return q;
  }
};

}  // namespace natvol
