#include <doctest.h>

#include "natvol/barycenter.hpp"

using namespace natvol;

namespace {

BoundaryMeasure three_atoms_s1(double deg0, double deg1, double deg2, const Vec& w) {
  const double pi = 3.14159265358979323846;
  std::vector<HBoundaryPoint> atoms;
  for (double deg : {deg0, deg1, deg2}) {
    Vec u(2);
    u << std::cos(deg * pi / 180.0), std::sin(deg * pi / 180.0);
    atoms.push_back(HBoundaryPoint::from_direction(u));
  }
  return BoundaryMeasure::from_atoms(std::move(atoms), w);
}

// brute-force grid minimization of Lambda_nu over the unit disk, refined
HPoint grid_oracle(const BoundaryMeasure& mu, int grid = 400, int refinements = 2) {
  double best = 1e300;
  Vec bestu = Vec::Zero(2);
  double cx = 0, cy = 0, half = 0.999;
  for (int pass = 0; pass <= refinements; ++pass) {
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        Vec u(2);
        u << cx - half + 2 * half * (i + 0.5) / grid, cy - half + 2 * half * (j + 0.5) / grid;
        if (u.squaredNorm() >= 0.998) continue;
        const double val = lambda_value(mu, from_ball(u));
        if (val < best) {
          best = val;
          bestu = u;
        }
      }
    cx = bestu[0];
    cy = bestu[1];
    half *= 2.5 / grid;
  }
  return from_ball(bestu);
}

}  // namespace

TEST_CASE("lambda basics at the basepoint") {
  const auto quad = SphereQuadrature::build(2, 512);
  const HPoint o = HPoint::basepoint(2);
  const auto nu = visual_measure(o, quad);
  CHECK(std::abs(lambda_value(nu, o)) < 1e-14);
  CHECK(lambda_grad(nu, o).norm() < 1e-14);
}

TEST_CASE("lambda gradient matches finite differences") {
  Rng rng(9);
  const auto quad = SphereQuadrature::build(3, 600);
  const HPoint a = random_point(rng, 3, 1.2);
  const auto nu = visual_measure(random_point(rng, 3, 1.0), quad);
  const Mat F = tangent_frame(a);
  const auto g = lambda_grad(nu, a);
  const double h = 1e-4;
  for (int k = 0; k < 3; ++k) {
    const double fd =
        (lambda_value(nu, geodesic_point(a, F.col(k), h)) -
         lambda_value(nu, geodesic_point(a, F.col(k), -h))) /
        (2 * h);
    CHECK(std::abs(fd - mdot(g.vec, F.col(k))) < 1e-6);
  }
  // Hessian positive definite for admissible measures
  const Mat H = lambda_hess(nu, a, F);
  CHECK(sym_min_eigenvalue(H) > 0.0);
}

TEST_CASE("symmetric configurations minimize at the basepoint") {
  const HPoint o = HPoint::basepoint(2);

  SUBCASE("uniform round measure") {
    const auto quad = SphereQuadrature::build(2, 256);
    const auto res = barycenter(visual_measure(o, quad));
    CHECK(distance(res.point, o) < 1e-10);
    CHECK(res.residual < 1e-10);
  }

  SUBCASE("three equal atoms at 0, 120, 240 degrees") {
    Vec w(3);
    w << 1.0 / 3, 1.0 / 3, 1.0 / 3;
    const auto res = barycenter(three_atoms_s1(0, 120, 240, w));
    CHECK(distance(res.point, o) < 1e-10);
  }
}

TEST_CASE("grid-minimization oracle") {
  Vec w(3);
  w << 0.4, 0.3, 0.3;
  const auto mu = three_atoms_s1(0, 90, 180, w);
  const auto res = barycenter(mu);
  CHECK(res.residual < 1e-10);
  CHECK(res.hessian_min_eig > 0);
  const HPoint oracle = grid_oracle(mu);
  CHECK(distance(oracle, res.point) < 1e-5);
}

TEST_CASE("implicit-equation residual and equivariance") {
  Rng rng(17);
  double worst_eq = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 2 + rep % 3;
    const int natoms = 3 + rng.uniform_int(6);
    std::vector<HBoundaryPoint> atoms;
    Vec w(natoms);
    for (int i = 0; i < natoms; ++i) {
      atoms.push_back(random_boundary_point(rng, n));
      w[i] = 0.1 + rng.uniform();
    }
    BoundaryMeasure mu;
    try {
      mu = BoundaryMeasure::from_atoms(atoms, w);
      if (!mu.admissible()) continue;
    } catch (const error&) {
      continue;
    }
    const auto res = barycenter(mu);
    CHECK(res.residual < 1e-10);
    // property (iii): the residual IS the implicit-equation defect
    CHECK(lambda_grad(mu, res.point).norm() < 1e-9);
    // property (ii): equivariance
    const HIsometry g = random_isometry(rng, n, 1.5);
    BoundaryMeasure gmu = mu;
    for (auto& xi : gmu.atoms) xi = g.apply_boundary(xi);
    const auto gres = barycenter(gmu);
    worst_eq = std::max(worst_eq, distance(gres.point, g.apply(res.point)));
  }
  CHECK(worst_eq < 1e-7);
}

TEST_CASE("weak-* continuity: small weight perturbations move the barycenter O(eps)") {
  Rng rng(23);
  const double eps = 1e-4;
  for (int rep = 0; rep < 10; ++rep) {
    const int natoms = 4 + rng.uniform_int(4);
    std::vector<HBoundaryPoint> atoms;
    Vec w(natoms);
    for (int i = 0; i < natoms; ++i) {
      atoms.push_back(random_boundary_point(rng, 2));
      w[i] = 0.3 + rng.uniform();
    }
    BoundaryMeasure mu = BoundaryMeasure::from_atoms(atoms, w);
    if (!mu.admissible()) continue;
    BoundaryMeasure nu = mu;
    for (int i = 0; i < natoms; ++i) nu.weights[i] *= 1.0 + eps * (2 * rng.uniform() - 1);
    nu.normalize();
    const auto r1 = barycenter(mu), r2 = barycenter(nu);
    CHECK(distance(r1.point, r2.point) <= 100 * eps);
  }
}

TEST_CASE("descent: the objective decreases across accepted iterations") {
  Vec w(3);
  w << 0.45, 0.35, 0.2;
  const auto mu = three_atoms_s1(10, 130, 220, w);
  BarycenterConfig cfg;
  cfg.track_objective = true;
  const auto res = barycenter(mu, cfg);
  REQUIRE(res.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
    CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-14);
}

TEST_CASE("determinism: identical input bits give identical output bits") {
  Vec w(3);
  w << 0.4, 0.3, 0.3;
  const auto mu = three_atoms_s1(5, 85, 200, w);
  const auto r1 = barycenter(mu), r2 = barycenter(mu);
  CHECK(r1.point.coords == r2.point.coords);
  CHECK(r1.residual == r2.residual);
  CHECK(r1.iterations == r2.iterations);
}

TEST_CASE("error paths") {
  Vec e1(2), e2(2);
  e1 << 1, 0;
  e2 << -1, 0;
  std::vector<HBoundaryPoint> atoms = {HBoundaryPoint::from_direction(e1),
                                       HBoundaryPoint::from_direction(e2)};
  Vec w(2);
  w << 0.5, 0.5;
  CHECK_THROWS_AS(barycenter(BoundaryMeasure::from_atoms(atoms, w)), inadmissible_measure_error);

  Vec w2(3);
  w2 << 0.4, 0.3, 0.3;
  const auto mu = three_atoms_s1(0, 90, 180, w2);
  BarycenterConfig cfg;
  cfg.max_iter = 0;  // cannot converge in zero iterations
  try {
    barycenter(mu, cfg);
    CHECK(false);
  } catch (const convergence_error& e) {
    CHECK(e.residual > 0.0);  // solver error reports the residual
  }
}
