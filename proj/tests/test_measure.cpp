#include <doctest.h>

#include "natvol/barycenter.hpp"
#include "natvol/measure.hpp"

using namespace natvol;

TEST_CASE("visual measure at the basepoint is the round measure") {
  const auto quad = SphereQuadrature::build(2, 256);
  const auto mu = visual_measure(HPoint::basepoint(2), quad);
  for (int i = 0; i < mu.size(); ++i) CHECK(mu.weights[i] == doctest::Approx(1.0 / 256).epsilon(1e-12));
}

TEST_CASE("Poisson kernel mass: unnormalized visual mass is 1") {
  Rng rng(11);
  // dense-quadrature oracle at 4x the nodes against the working rule
  for (int n : {2, 3}) {
    const auto quad = SphereQuadrature::build(n, n == 2 ? 1024 : 2048);
    const auto dense = SphereQuadrature::build(n, n == 2 ? 4096 : 8192);
    for (int i = 0; i < 5; ++i) {
      const HPoint a = random_point(rng, n, 1.5);
      const double mass = visual_mass_unnormalized(a, quad);
      const double mass_dense = visual_mass_unnormalized(a, dense);
      CHECK(std::abs(mass_dense - 1.0) < 1e-9);
      CHECK(std::abs(mass - mass_dense) < 1e-8);
    }
  }
}

TEST_CASE("conformal density ratio") {
  Rng rng(22);
  for (int n : {2, 3}) {
    const auto quad = SphereQuadrature::build(n, n == 2 ? 2048 : 4096);
    const double delta = critical_exponent(n);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      const HPoint a = random_point(rng, n, 1.4), b = random_point(rng, n, 1.4);
      const auto mua = visual_measure(a, quad), mub = visual_measure(b, quad);
      for (int i = 0; i < quad.size(); i += quad.size() / 16) {
        const double expected = std::exp(-delta * busemann(b, a, quad.nodes[i]));
        worst = std::max(worst, std::abs(mua.weights[i] / mub.weights[i] - expected));
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("Gamma-equivariance of the density family at the density level") {
  // ratio identity: the visual weight at gamma a relative to the node-wise
  // push-forward of the weight at a, via the cocycle property of beta
  Rng rng(33);
  const auto quad = SphereQuadrature::build(2, 1024);
  const double delta = critical_exponent(2);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const HPoint a = random_point(rng, 2, 1.2);
    const HIsometry g = random_isometry(rng, 2, 1.0);
    const HPoint ga = g.apply(a);
    const auto mu_ga = visual_measure(ga, quad);
    const auto mu_o = visual_measure(HPoint::basepoint(2), quad);
    for (int i = 0; i < quad.size(); i += 64) {
      // d nu_{ga} / d nu_o (xi) = e^{-delta beta_o(ga, xi)}
      const double expected = std::exp(-delta * busemann(HPoint::basepoint(2), ga, quad.nodes[i]));
      worst = std::max(worst, std::abs(mu_ga.weights[i] / mu_o.weights[i] - expected));
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("critical exponent formula") {
  CHECK(critical_exponent(2) == 1.0);
  CHECK(critical_exponent(3) == 2.0);
  CHECK(critical_exponent(4, 1) == 3.0);
  CHECK_THROWS(critical_exponent(1));
}

TEST_CASE("pushforward") {
  const auto quad = SphereQuadrature::build(2, 64);
  Rng rng(44);
  const auto mu = visual_measure(random_point(rng, 2, 1.0), quad);

  SUBCASE("identity") {
    const auto nu = pushforward(mu, [](const HBoundaryPoint& xi) { return xi; });
    CHECK(nu.size() == mu.size());
    CHECK(std::abs(nu.total_mass() - mu.total_mass()) == 0.0);  // mass preserved exactly
    for (int i = 0; i < nu.size(); ++i) CHECK((nu.atoms[i].coords - mu.atoms[i].coords).norm() == 0.0);
  }

  SUBCASE("isometry: atoms move, weights stay") {
    const HIsometry g = random_isometry(rng, 2);
    const auto nu = pushforward(mu, [&](const HBoundaryPoint& xi) { return g.apply_boundary(xi); });
    CHECK(nu.size() == mu.size());
    for (int i = 0; i < nu.size(); ++i) {
      CHECK(nu.weights[i] == mu.weights[i]);
      CHECK((nu.atoms[i].coords - g.apply_boundary(mu.atoms[i]).coords).norm() == 0.0);
    }
  }

  SUBCASE("boundary embedding preserves distinctness") {
    const auto nu = pushforward(mu, [](const HBoundaryPoint& xi) { return boundary_embed(xi, 4); });
    CHECK(nu.size() == mu.size());
    double minsep = 1e300;
    for (int i = 0; i < nu.size(); ++i)
      for (int j = i + 1; j < nu.size(); ++j)
        minsep = std::min(minsep, (nu.atoms[i].coords - nu.atoms[j].coords).norm());
    CHECK(minsep > 1e-10);
  }

  SUBCASE("coincidence merge and the admissibility gate") {
    // collapse everything onto two antipodes: one of them collects >= 1/2
    Vec east(2), west(2);
    east << 1, 0;
    west << -1, 0;
    auto collapse = [&](const HBoundaryPoint& xi) {
      return HBoundaryPoint::from_direction(xi.direction()[0] >= 0 ? east : west);
    };
    CHECK_THROWS_AS(pushforward(mu, collapse), inadmissible_measure_error);
  }
}

TEST_CASE("admissibility flag") {
  Vec e1(2), e2(2);
  e1 << 1, 0;
  e2 << -1, 0;
  std::vector<HBoundaryPoint> atoms = {HBoundaryPoint::from_direction(e1),
                                       HBoundaryPoint::from_direction(e2)};
  Vec w(2);
  w << 0.5, 0.5;
  const auto mu = BoundaryMeasure::from_atoms(atoms, w);
  CHECK_FALSE(mu.admissible());  // two equal Dirac masses
  Vec w2(2);
  w2 << 0.6, 0.4;
  CHECK_FALSE(BoundaryMeasure::from_atoms(atoms, w2).admissible());
  Vec w3(2);
  w3 << 0.49, 0.51;
  CHECK_FALSE(BoundaryMeasure::from_atoms(atoms, w3).admissible());
  std::vector<HBoundaryPoint> three = atoms;
  Vec north(2);
  north << 0, 1;
  three.push_back(HBoundaryPoint::from_direction(north));
  Vec w4(3);
  w4 << 0.4, 0.3, 0.3;
  CHECK(BoundaryMeasure::from_atoms(three, w4).admissible());
}

TEST_CASE("binned statistics") {
  const auto quad = SphereQuadrature::build(2, 512);
  const auto mu = visual_measure(HPoint::basepoint(2), quad);
  CHECK(binned_tv_s1(mu, mu, 16) == 0.0);
  CHECK(hemisphere_discrepancy(mu, mu) == 0.0);
  Rng rng(55);
  const auto nu = visual_measure(random_point(rng, 2, 1.0), quad);
  CHECK(binned_tv_s1(mu, nu, 16) > 0.01);  // genuinely different measures separate
}
