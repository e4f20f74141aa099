#include <doctest.h>

#include "natvol/volume.hpp"

using namespace natvol;

namespace {

constexpr double kFourPi = 4 * 3.14159265358979323846;

Vec tilted_pole(int dim, double tilt) {
  Vec p = Vec::Zero(dim);
  p[0] = std::sin(tilt);
  p[dim - 1] = std::cos(tilt);
  return p;
}

}  // namespace

TEST_CASE("chain-map volumes") {
  auto [G, dom] = genus2_octagon(4096);
  auto X = FiniteProbSpace::uniform(4);

  SUBCASE("the geodesic embedding has volume vol(M) = 4pi with jac = 1") {
    ChainMapSpec chain{{PointMapChain::embed(2, 3)}};
    const auto rep = volume(EquivariantMapSpec::chain(chain), dom, X);
    CHECK(std::abs(rep.volume - kFourPi) < 2e-3);
    CHECK(rep.jac_min > 1.0 - 1e-12);
    CHECK(rep.jac_max < 1.0 + 1e-12);
    CHECK(rep.verdict == "maximal");
    CHECK_FALSE(rep.partial);
  }

  SUBCASE("post-composed isometries drop out of the pullback bit-for-bit") {
    Rng rng(41);
    ChainMapSpec base{{PointMapChain::embed(2, 3)}};
    ChainMapSpec moved{{PointMapChain::embed(2, 3).then(random_isometry(rng, 3, 1.5))}};
    const auto r1 = volume(EquivariantMapSpec::chain(base), dom, X);
    const auto r2 = volume(EquivariantMapSpec::chain(moved), dom, X);
    CHECK(r1.volume == r2.volume);  // bitwise
    CHECK(r1.cell_values == r2.cell_values);
  }

  SUBCASE("refinement sanity: doubling the cells moves the volume < 1e-3") {
    auto [G2, dom2] = genus2_octagon(8192);
    ChainMapSpec chain{{PointMapChain::embed(2, 3)}};
    const auto r1 = volume(EquivariantMapSpec::chain(chain), dom, X);
    const auto r2 = volume(EquivariantMapSpec::chain(chain), dom2, X);
    CHECK(std::abs(r1.volume - r2.volume) < 1e-3);
  }
}

TEST_CASE("natural volume of the standard embedding and its twists") {
  auto [G, dom] = genus2_octagon(1024);
  auto X = FiniteProbSpace::uniform(8);
  // 2048 nodes: enough to resolve the visual density at gamma a for the
  // recorded equivariance sample
  const auto quad = SphereQuadrature::build(2, 2048);
  const auto sigma = standard_embedding_cocycle(G, 3, X);
  auto phi = BoundaryMapSpec::shared(BoundaryChain::embed_chain(2, 3));

  const auto rep = natural_volume(G, sigma, phi, dom, X, quad);

  SUBCASE("maximal case") {
    CHECK(std::abs(rep.volume - dom.total_volume) < 1e-8);  // jac = 1 to solver tolerance
    CHECK(rep.verdict == "maximal");
    CHECK(rep.equivariance_dev < 1e-7);
    CHECK(rep.per_x.size() == static_cast<std::size_t>(X.count));
    // per-x volumes are the slice volumes (mu-independent); each slice of the
    // standard embedding fills the whole domain volume
    for (const double px : rep.per_x) CHECK(std::abs(px - dom.total_volume) < 1e-7);
  }

  SUBCASE("rigidity audit recovers the identity") {
    Cocycle sig = sigma;
    const auto ev = NaturalMapEvaluator::build(sig, phi, quad);
    const auto audit = rigidity_audit(rep, ev, dom);
    CHECK(audit.attempted);
    CHECK(audit.max_fit_residual < 1e-6);
    CHECK_FALSE(audit.inconsistent);
    for (const auto& fit : audit.fitted)
      CHECK((fit.matrix - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("twist invariance of nv and twist recovery up to the stabilizer") {
    Rng rng(42);
    std::vector<HIsometry> f;
    for (int x = 0; x < X.count; ++x) f.push_back(random_isometry(rng, 3, 1.2));
    const auto sigf = twist(sigma, f);
    const auto phif = twist_boundary(phi, f);
    const auto repf = natural_volume(G, sigf, phif, dom, X, quad);
    CHECK(std::abs(repf.volume - rep.volume) < 2e-3);
    CHECK(repf.verdict == "maximal");

    Cocycle sigc = sigf;
    const auto evf = NaturalMapEvaluator::build(sigc, phif, quad);
    const auto audit = rigidity_audit(repf, evf, dom);
    CHECK(audit.attempted);
    CHECK(audit.max_fit_residual < 1e-5);
    double worst = 0;
    for (int x = 0; x < X.count; ++x)
      worst = std::max(worst, stabilizer_defect(f[static_cast<std::size_t>(x)].compose(
                                                    audit.fitted[static_cast<std::size_t>(x)]),
                                                2, 3));
    CHECK(worst < 1e-5);
  }

  SUBCASE("Gamma-invariance of the integrated density") {
    Rng rng(43);
    Cocycle sig = sigma;
    auto spec = EquivariantMapSpec::natural(NaturalMapEvaluator::build(sig, phi, quad));
    CHECK(integrand_invariance_defect(spec, G, X, 8, rng) < 1e-7);
  }
}

TEST_CASE("strict case via a strong squash and the Milnor-Wood set") {
  auto [G, dom] = genus2_octagon(1024);
  auto X = FiniteProbSpace::uniform(4);
  const auto quad = SphereQuadrature::build(2, 1024);
  const auto sigma = standard_embedding_cocycle(G, 3, X);

  SUBCASE("kappa = 5 squash gives nv below vol(M) with a real margin") {
    const auto phi = BoundaryMapSpec::shared(
        BoundaryChain::embed_chain(2, 3).then_squash(tilted_pole(3, 0.63), 5.0));
    const auto rep = natural_volume(G, sigma, phi, dom, X, quad);
    CHECK(rep.milnor_wood_margin > 0.1);
    CHECK(rep.volume < dom.total_volume);
  }

  SUBCASE("Milnor-Wood holds on the admissible test set at the integral level") {
    for (double kappa : {1.0, 1.5, 5.0}) {
      BoundaryChain chain = BoundaryChain::embed_chain(2, 3);
      if (kappa != 1.0) chain = chain.then_squash(tilted_pole(3, 0.63), kappa);
      const auto rep = natural_volume(G, sigma, BoundaryMapSpec::shared(chain), dom, X, quad);
      CHECK(rep.volume <= dom.total_volume * (1 + 5e-4));
    }
  }

  SUBCASE("strict verdict gates the rigidity audit off") {
    VolumeReport strict_rep;
    strict_rep.verdict = "strict";
    Cocycle sig = sigma;
    const auto ev = NaturalMapEvaluator::build(
        sig, BoundaryMapSpec::shared(BoundaryChain::embed_chain(2, 3)), quad);
    const auto audit = rigidity_audit(strict_rep, ev, dom);
    CHECK_FALSE(audit.attempted);
  }
}

TEST_CASE("equivariance spot check on the map spec") {
  auto [G, dom] = genus2_octagon(256);
  auto X = FiniteProbSpace::uniform(4);
  const auto sigma = standard_embedding_cocycle(G, 3, X);
  ChainMapSpec chain{{PointMapChain::embed(2, 3)}};
  auto spec = EquivariantMapSpec::chain(chain);
  Rng rng(44);
  CHECK(spec.equivariance_defect(G, sigma, 20, rng) < 1e-7);
}
