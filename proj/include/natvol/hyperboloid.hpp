#pragma once

// Hyperboloid model of H^n: the upper sheet of <a,a> = -1 in Minkowski
// space R^{n,1}. Isometries are linear, Busemann functions have one-line
// closed forms, which is why this model is used throughout instead of the
// ball model (ball coordinates are provided for output only).

#include <cmath>
#include <string>
#include <vector>

#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/rng.hpp"

namespace natvol {

constexpr double kPointTol = 1e-12;
constexpr double kIsometryTol = 1e-10;

struct HPoint {
  Vec coords;  // size n+1, signature (-,+,...,+), coords[0] > 0

  HPoint() = default;
  explicit HPoint(Vec c) : coords(std::move(c)) {}

  int n() const { return static_cast<int>(coords.size()) - 1; }

  static HPoint basepoint(int n) {
    Vec c = Vec::Zero(n + 1);
    c[0] = 1.0;
    return HPoint(std::move(c));
  }

  static HPoint from_coords(Vec c, bool validate = true) {
    HPoint p(std::move(c));
    if (validate) p.check();
    return p;
  }

  // Lift of a spatial vector: (sqrt(1+|x|^2), x).
  static HPoint lift(const Vec& spatial) {
    Vec c(spatial.size() + 1);
    c[0] = std::sqrt(1.0 + spatial.squaredNorm());
    c.tail(spatial.size()) = spatial;
    return HPoint(std::move(c));
  }

  // Rescale onto the hyperboloid; used as drift control after every
  // isometry application.
  void reproject() {
    const double q = -mdot(coords, coords);
    if (q <= 0.0 || coords[0] <= 0.0)
      throw invalid_point_error("reproject: vector is not future timelike");
    coords /= std::sqrt(q);
  }

  void check(double tol = kPointTol) const {
    if (coords.size() < 2) throw invalid_point_error("HPoint: need at least 2 coordinates");
    if (coords[0] <= 0.0) throw invalid_point_error("HPoint: coords[0] must be positive");
    const double q = mdot(coords, coords);
    if (std::abs(q + 1.0) > tol * (1.0 + coords[0] * coords[0]))
      throw invalid_point_error("HPoint: <a,a> != -1 (got " + std::to_string(q) + ")");
  }
};

struct HBoundaryPoint {
  Vec coords;  // null vector normalized so that <xi, o> = -1, i.e. coords[0] = 1

  HBoundaryPoint() = default;
  explicit HBoundaryPoint(Vec c) : coords(std::move(c)) {}

  int n() const { return static_cast<int>(coords.size()) - 1; }

  static HBoundaryPoint from_direction(const Vec& unit_dir) {
    Vec c(unit_dir.size() + 1);
    c[0] = 1.0;
    c.tail(unit_dir.size()) = unit_dir;
    HBoundaryPoint b(std::move(c));
    b.normalize();
    return b;
  }

  Vec direction() const { return coords.tail(coords.size() - 1) / coords[0]; }

  // Fixes the Busemann basepoint convention to o globally: <xi, o> = -1.
  void normalize() {
    if (coords[0] <= 0.0) throw invalid_point_error("HBoundaryPoint: coords[0] must be positive");
    coords /= coords[0];
    // snap the spatial part to the unit sphere to keep <xi,xi> = 0
    const double r = coords.tail(coords.size() - 1).norm();
    if (r <= 0.0) throw invalid_point_error("HBoundaryPoint: zero spatial part");
    coords.tail(coords.size() - 1) /= r;
  }

  void check(double tol = kPointTol) const {
    const double q = mdot(coords, coords);
    if (std::abs(q) > tol) throw invalid_point_error("HBoundaryPoint: not null");
    if (std::abs(coords[0] - 1.0) > tol)
      throw invalid_point_error("HBoundaryPoint: not normalized to <xi,o> = -1");
  }
};

struct HTangent {
  HPoint base;
  Vec vec;  // <base, vec> = 0

  double norm() const { return std::sqrt(std::max(0.0, mdot(vec, vec))); }

  void check(double tol = kPointTol) const {
    base.check();
    if (std::abs(mdot(base.coords, vec)) > tol * (1.0 + vec.norm() * base.coords.norm()))
      throw invalid_point_error("HTangent: vector is not tangent at base");
  }
};

struct HIsometry {
  Mat matrix;  // (n+1)x(n+1) in O+(n,1)

  HIsometry() = default;
  explicit HIsometry(Mat m) : matrix(std::move(m)) {}

  int n() const { return static_cast<int>(matrix.rows()) - 1; }

  static HIsometry identity(int n) { return HIsometry(Mat::Identity(n + 1, n + 1)); }

  // Rotation by theta in the spatial (i,j)-plane (1-based spatial axes).
  static HIsometry rotation(int n, int i, int j, double theta) {
    Mat m = Mat::Identity(n + 1, n + 1);
    const double c = std::cos(theta), s = std::sin(theta);
    m(i, i) = c;
    m(j, j) = c;
    m(i, j) = -s;
    m(j, i) = s;
    return HIsometry(std::move(m));
  }

  // Hyperbolic translation by length t along the spatial axis i.
  static HIsometry boost(int n, int i, double t) {
    Mat m = Mat::Identity(n + 1, n + 1);
    const double c = std::cosh(t), s = std::sinh(t);
    m(0, 0) = c;
    m(i, i) = c;
    m(0, i) = s;
    m(i, 0) = s;
    return HIsometry(std::move(m));
  }

  HPoint apply(const HPoint& p) const {
    HPoint q(matrix * p.coords);
    q.reproject();
    return q;
  }

  // Boundary action with projective renormalization back to <xi,o> = -1.
  HBoundaryPoint apply_boundary(const HBoundaryPoint& xi) const {
    HBoundaryPoint eta(matrix * xi.coords);
    eta.normalize();
    return eta;
  }

  Vec apply_tangent(const Vec& v) const { return matrix * v; }

  HIsometry compose(const HIsometry& other) const { return HIsometry(matrix * other.matrix); }

  // M^{-1} = J M^T J, exact for Lorentz matrices and cheaper/stabler than a
  // generic inverse.
  HIsometry inverse() const {
    const int d = static_cast<int>(matrix.rows());
    Mat inv = matrix.transpose();
    for (int i = 1; i < d; ++i) inv(0, i) = -inv(0, i);
    for (int j = 1; j < d; ++j) inv(j, 0) = -inv(j, 0);
    return HIsometry(std::move(inv));
  }

  double orthogonality_defect() const {
    const int d = static_cast<int>(matrix.rows());
    const Mat J = minkowski_form(d);
    return (matrix.transpose() * J * matrix - J).cwiseAbs().maxCoeff();
  }

  // tol is relative to the squared entry scale (far translations have large
  // entries and the defect of an honest product grows with them)
  void check(double tol = kIsometryTol) const {
    const double scale = 1.0 + matrix.cwiseAbs().maxCoeff();
    if (orthogonality_defect() > tol * scale * scale)
      throw invalid_point_error("HIsometry: M^T J M != J");
    if (matrix(0, 0) <= 0.0) throw invalid_point_error("HIsometry: does not preserve the upper sheet");
  }
};

// --- distance and geodesics ------------------------------------------------

inline double distance(const HPoint& a, const HPoint& b) {
  double z = -mdot(a.coords, b.coords);
  if (z < 1.0 - 1e-9) throw invalid_point_error("distance: arccosh argument below 1");
  if (z < 1.0 + 1e-8) {
    // near-equal points: arccosh(z) loses half the digits to the roundoff of
    // z itself; the chordal identity 4 sinh^2(d/2) = <a-b, a-b> works from
    // the difference vector and stays exact down to machine separation
    const Vec diff = a.coords - b.coords;
    const double q = std::max(0.0, mdot(diff, diff));
    return 2.0 * std::asinh(0.5 * std::sqrt(q));
  }
  return std::acosh(z);
}

// Minkowski-orthogonal projection onto T_a H^n.
inline Vec tangent_projection(const HPoint& a, const Vec& v) {
  return v + mdot(v, a.coords) * a.coords;
}

inline HPoint geodesic_point(const HPoint& a, const Vec& unit_tangent, double t) {
  HPoint p(std::cosh(t) * a.coords + std::sinh(t) * unit_tangent);
  // beyond ~e^18 the residual of <p,p> = -1 is below double roundoff of the
  // squared coordinates; the closed form itself is exact, skip drift control
  if (std::abs(t) < 18.0) p.reproject();
  return p;
}

inline HPoint exp_map(const HPoint& a, const Vec& tangent) {
  const double r = std::sqrt(std::max(0.0, mdot(tangent, tangent)));
  if (r < 1e-300) return a;
  return geodesic_point(a, tangent / r, r);
}

inline Vec log_map(const HPoint& a, const HPoint& b) {
  const double d = distance(a, b);
  if (d < 1e-14) return Vec::Zero(a.coords.size());
  Vec v = (b.coords - std::cosh(d) * a.coords) / std::sinh(d);
  return d * v;
}

// Unit tangent at a pointing toward the ideal point xi.
inline Vec boundary_direction(const HPoint& a, const HBoundaryPoint& xi) {
  Vec v = tangent_projection(a, xi.coords);
  const double r = std::sqrt(std::max(0.0, mdot(v, v)));
  if (r <= 0.0) throw invalid_point_error("boundary_direction: degenerate projection");
  return v / r;
}

// Orthonormal frame of T_a H^n as columns of an (n+1) x n matrix: the
// transvection image of the coordinate axes at the basepoint,
// f_k = e_k + a_k/(1 + a_0) (o + a). Exactly orthonormal at any radius
// (no Gram-Schmidt cancellation) and equal to the coordinate axes at o.
inline Mat tangent_frame(const HPoint& a) {
  const int dim = static_cast<int>(a.coords.size());
  const int n = dim - 1;
  Mat frame = Mat::Zero(dim, n);
  const double denom = 1.0 + a.coords[0];
  for (int k = 1; k <= n; ++k) {
    const double c = a.coords[k] / denom;
    frame(0, k - 1) = a.coords[k];
    for (int d = 1; d <= n; ++d) frame(d, k - 1) = (d == k ? 1.0 : 0.0) + c * a.coords[d];
  }
  return frame;
}

// --- Busemann functions ----------------------------------------------------

// beta_b(a, xi) = log(<a,xi> / <b,xi>); beta_b(b, .) = 0 and
// beta_b(a,xi) = beta_c(a,xi) - beta_c(b,xi) hold exactly in this form.
inline double busemann(const HPoint& b, const HPoint& a, const HBoundaryPoint& xi) {
  const double num = mdot(a.coords, xi.coords);
  const double den = mdot(b.coords, xi.coords);
  return std::log(num / den);
}

// Gradient in a of beta_b(a, xi); unit vector, independent of b.
inline HTangent busemann_grad(const HPoint& a, const HBoundaryPoint& xi) {
  const double t = mdot(a.coords, xi.coords);
  Vec g = xi.coords / t + a.coords;
  return HTangent{a, std::move(g)};
}

inline double busemann_diff(const HPoint& a, const HBoundaryPoint& xi, const Vec& u) {
  const double t = mdot(a.coords, xi.coords);
  return mdot(u, xi.coords) / t;
}

// Curvature -1 closed form: Hess beta = g - d beta (x) d beta. Validated
// against central finite differences in the test suite before any other
// module relies on it.
inline double busemann_hess(const HPoint& a, const HBoundaryPoint& xi, const Vec& u, const Vec& v) {
  const double du = busemann_diff(a, xi, u);
  const double dv = busemann_diff(a, xi, v);
  return mdot(u, v) - du * dv;
}

// --- standard embeddings ---------------------------------------------------

// Upper-left corner injection i_{n,m}: O+(n,1) -> O+(m,1).
inline HIsometry corner_inject(const HIsometry& g, int m) {
  const int n = g.n();
  if (m < n) throw dimension_error("corner_inject: m < n");
  Mat big = Mat::Identity(m + 1, m + 1);
  big.topLeftCorner(n + 1, n + 1) = g.matrix;
  return HIsometry(std::move(big));
}

// Totally geodesic embedding j_{n,m}: H^n -> H^m by zero padding. It is
// i_{n,m}-equivariant: j(g a) = i(g) j(a).
inline HPoint geodesic_embed(const HPoint& a, int m) {
  const int n = a.n();
  if (m < n) throw dimension_error("geodesic_embed: m < n");
  Vec c = Vec::Zero(m + 1);
  c.head(n + 1) = a.coords;
  return HPoint(std::move(c));
}

inline HBoundaryPoint boundary_embed(const HBoundaryPoint& xi, int m) {
  const int n = xi.n();
  if (m < n) throw dimension_error("boundary_embed: m < n");
  Vec c = Vec::Zero(m + 1);
  c.head(n + 1) = xi.coords;
  return HBoundaryPoint(std::move(c));
}

// --- ball model (output/plot only) ------------------------------------------

inline Vec to_ball(const HPoint& a) {
  return a.coords.tail(a.coords.size() - 1) / (1.0 + a.coords[0]);
}

inline HPoint from_ball(const Vec& u) {
  const double r2 = u.squaredNorm();
  if (r2 >= 1.0) throw invalid_point_error("from_ball: point outside the unit ball");
  Vec c(u.size() + 1);
  c[0] = (1.0 + r2) / (1.0 - r2);
  c.tail(u.size()) = 2.0 * u / (1.0 - r2);
  HPoint p(std::move(c));
  p.reproject();
  return p;
}

// --- random elements (deterministic, for tests and scans) -------------------

inline HIsometry random_rotation(Rng& rng, int n) {
  // Haar-ish spatial rotation via QR of a Gaussian matrix.
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  Mat big = Mat::Identity(n + 1, n + 1);
  big.bottomRightCorner(n, n) = q;
  return HIsometry(std::move(big));
}

inline HIsometry random_isometry(Rng& rng, int n, double max_boost = 2.0) {
  const HIsometry r1 = random_rotation(rng, n);
  const HIsometry b = HIsometry::boost(n, 1, rng.uniform(0.0, max_boost));
  const HIsometry r2 = random_rotation(rng, n);
  return r1.compose(b).compose(r2);
}

inline HPoint random_point(Rng& rng, int n, double max_radius = 2.0) {
  const auto dir = rng.unit_vector(n);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = dir[i];
  const double t = max_radius * rng.uniform();
  return HPoint::lift(std::sinh(t) * v);
}

inline HBoundaryPoint random_boundary_point(Rng& rng, int n) {
  const auto dir = rng.unit_vector(n);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = dir[i];
  return HBoundaryPoint::from_direction(v);
}

}  // namespace natvol
