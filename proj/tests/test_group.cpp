#include <doctest.h>

#include <algorithm>
#include <set>

#include "natvol/group.hpp"

using namespace natvol;

namespace {

// Independent breadth-first enumeration: plain word tree pruned by radius,
// deduplicated afterwards by all-pairs comparison (no hashing, no canonical
// ordering shared with the library path).
std::size_t naive_orbit_count(const GroupPresentation& G, double R, double slack = 2.6) {
  const HPoint base = HPoint::basepoint(G.n);
  std::vector<Mat> frontier = {Mat::Identity(G.n + 1, G.n + 1)};
  std::vector<Vec> points = {base.coords};
  const double r_exp = R + slack;
  while (!frontier.empty()) {
    std::vector<Mat> next;
    for (const auto& M : frontier) {
      for (int l = 1; l <= G.rank(); ++l) {
        for (int s = 0; s < 2; ++s) {
          const Mat child = M * (s == 0 ? G.generators[l - 1] : G.generator_invs[l - 1]).matrix;
          const Vec p = child * base.coords;
          double z = -mdot(p, base.coords);
          if (z < 1) z = 1;
          if (std::acosh(z) > r_exp) continue;
          // seen before? (all-pairs scan)
          bool seen = false;
          for (const auto& q : points)
            if ((q - p).norm() < 1e-7 * std::max(1.0, p[0])) {
              seen = true;
              break;
            }
          if (seen) continue;
          points.push_back(p);
          next.push_back(child);
        }
      }
    }
    frontier.swap(next);
  }
  std::size_t count = 0;
  for (const auto& p : points) {
    double z = -mdot(p, base.coords);
    if (z < 1) z = 1;
    if (std::acosh(z) <= R + 1e-12) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("genus-2 octagon construction") {
  auto [G, dom] = genus2_octagon(4096);

  SUBCASE("relator evaluates to the identity") { CHECK(G.relator_defect() < 1e-8); }

  SUBCASE("domain volume matches Gauss-Bonnet (area 4pi for genus 2)") {
    CHECK(std::abs(dom.total_volume - 4 * 3.14159265358979323846) < 1e-3);
    CHECK(std::abs(dom.coarse_total - 4 * 3.14159265358979323846) < 2e-2);
    double acc = 0;
    for (const auto& c : dom.cells) acc += c.weight;
    CHECK(acc == dom.total_volume);  // bookkeeping identity
  }

  SUBCASE("vertex geometry: interior angle sum 2pi") {
    const Genus2Constants C;
    std::vector<HPoint> V;
    for (int k = 0; k < 8; ++k) {
      const double phi = k * 3.14159265358979323846 / 4.0;
      Vec c(3);
      c << std::cosh(C.vertex_radius), std::sinh(C.vertex_radius) * std::cos(phi),
          std::sinh(C.vertex_radius) * std::sin(phi);
      V.push_back(HPoint::from_coords(c, false));
    }
    double total = 0;
    for (int k = 0; k < 8; ++k) {
      Vec u1 = log_map(V[k], V[(k + 1) % 8]);
      Vec u2 = log_map(V[k], V[(k + 7) % 8]);
      u1 /= std::sqrt(mdot(u1, u1));
      u2 /= std::sqrt(mdot(u2, u2));
      total += std::acos(std::max(-1.0, std::min(1.0, mdot(u1, u2))));
    }
    CHECK(std::abs(total - 2 * 3.14159265358979323846) < 1e-8);
  }

  SUBCASE("generator displacement is the systole") {
    const HPoint o = HPoint::basepoint(2);
    for (const auto& g : G.generators)
      CHECK(distance(o, g.apply(o)) == doctest::Approx(2 * std::acosh(1 + std::sqrt(2.0))).epsilon(1e-10));
  }

  SUBCASE("domain cells are pairwise non-equivalent under a small word ball") {
    const auto ball = orbit_ball(G, HPoint::basepoint(2), 6.5);
    Rng rng(3);
    for (int rep = 0; rep < 40; ++rep) {
      const auto& c1 = dom.cells[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(dom.cells.size())))];
      const auto& c2 = dom.cells[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(dom.cells.size())))];
      if (&c1 == &c2) continue;
      for (const auto& op : ball) {
        if (op.word.empty()) continue;
        const HIsometry g = G.evaluate(op.word);
        CHECK(distance(g.apply(c1.point), c2.point) > 1e-8);
      }
    }
  }
}

TEST_CASE("orbit enumeration") {
  auto [G, dom] = genus2_octagon(256);
  const HPoint o = HPoint::basepoint(2);

  SUBCASE("R = 0 gives the identity only") {
    const auto orbit = orbit_ball(G, o, 0.0);
    REQUIRE(orbit.size() == 1);
    CHECK(orbit[0].word.empty());
    CHECK(orbit[0].dist == 0.0);
  }

  SUBCASE("R = 6 count matches the naive BFS oracle exactly") {
    const auto orbit = orbit_ball(G, o, 6.0);
    CHECK(orbit.size() == naive_orbit_count(G, 6.0));
  }

  SUBCASE("words come in shortlex order and distinct points are far apart") {
    const auto orbit = orbit_ball(G, o, 8.0);
    for (std::size_t i = 1; i < orbit.size(); ++i)
      CHECK(orbit[i - 1].word.size() <= orbit[i].word.size());
    // torsion-free: distinct orbit points separated by (at least) the systole
    double minsep = 1e300;
    for (std::size_t i = 0; i < orbit.size(); ++i)
      for (std::size_t j = i + 1; j < orbit.size(); ++j)
        minsep = std::min(minsep, distance(orbit[i].point, orbit[j].point));
    CHECK(minsep > 1e-6);
    CHECK(minsep > 3.0);  // the systole, up to numerics
  }

  SUBCASE("growth slope approaches the critical exponent") {
    const double slope = orbit_growth_slope(G, o, 10.0, 5.0);
    CHECK(std::abs(slope - critical_exponent(2)) < 0.1);
  }

  SUBCASE("budget guard") {
    OrbitBallOptions opts;
    opts.budget = 10;
    CHECK_THROWS_AS(orbit_ball(G, o, 8.0, opts), resource_error);
  }
}

TEST_CASE("poincare series") {
  SUBCASE("trivial generator set: identity term only") {
    GroupPresentation triv;
    triv.n = 2;
    CHECK(poincare_series(triv, 1.3, HPoint::basepoint(2), 5.0) == 1.0);
  }

  SUBCASE("strictly decreasing in s") {
    auto [G, dom] = genus2_octagon(256);
    const HPoint o = HPoint::basepoint(2);
    const double p13 = poincare_series(G, 1.3, o, 12.0);
    const double p15 = poincare_series(G, 1.5, o, 12.0);
    // direct-enumeration oracle at both s values
    const auto orbit = orbit_ball(G, o, 12.0);
    double acc13 = 0, acc15 = 0;
    for (const auto& op : orbit) {
      acc13 += std::exp(-1.3 * op.dist);
      acc15 += std::exp(-1.5 * op.dist);
    }
    CHECK(p13 == doctest::Approx(acc13).epsilon(1e-12));
    CHECK(p15 == doctest::Approx(acc15).epsilon(1e-12));
    CHECK(p13 > p15);
  }
}

TEST_CASE("patterson orbit measure") {
  auto [G, dom] = genus2_octagon(256);
  const HPoint o = HPoint::basepoint(2);

  SUBCASE("comparison with the visual measure") {
    const auto mu = ps_orbit_measure(G, 1.05, o, 12.0);
    const auto quad = SphereQuadrature::build(2, 2048);
    const auto vis = visual_measure(o, quad);
    CHECK(binned_tv_s1(mu, vis, 16) < 0.15);  // 0.1 at the acceptance radius R = 14
  }

  SUBCASE("permutation invariance under generator re-ordering") {
    GroupPresentation G2 = G;
    std::swap(G2.generators[0], G2.generators[2]);
    std::swap(G2.generator_invs[0], G2.generator_invs[2]);
    G2.relators.clear();
    const auto mu1 = ps_orbit_measure(G, 1.1, o, 8.0);
    const auto mu2 = ps_orbit_measure(G2, 1.1, o, 8.0);
    CHECK(mu1.size() == mu2.size());
    CHECK(std::abs(mu1.total_mass() - mu2.total_mass()) < 1e-12);
    // same measure as a set: sorted weights agree
    std::vector<double> w1(mu1.weights.data(), mu1.weights.data() + mu1.size());
    std::vector<double> w2(mu2.weights.data(), mu2.weights.data() + mu2.size());
    std::sort(w1.begin(), w1.end());
    std::sort(w2.begin(), w2.end());
    // weights agree up to the roundoff of re-ordered matrix products
    for (std::size_t i = 0; i < w1.size(); ++i) CHECK(std::abs(w1[i] - w2[i]) < 1e-10);
  }

  SUBCASE("degenerate orbit ball") {
    GroupPresentation triv;
    triv.n = 2;
    CHECK_THROWS_AS(ps_orbit_measure(triv, 1.05, o, 3.0), degenerate_measure_error);
  }
}

TEST_CASE("index-2 cover") {
  auto [G, dom] = genus2_octagon(1024);

  SUBCASE("trivial parity returns the group itself") {
    const auto sub = index2_cover(G, {0, 0, 0, 0});
    CHECK(sub.group.rank() == G.rank());
    CHECK(sub.coset_rep.empty());
    for (int g = 0; g < G.rank(); ++g)
      CHECK((sub.group.generators[g].matrix - G.generators[g].matrix).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("parity must be a homomorphism") {
    // a relator with odd parity sum: fake a presentation with relator = a1
    GroupPresentation bad = G;
    bad.relators.push_back({1});
    CHECK_THROWS_AS(index2_cover(bad, {1, 0, 0, 0}), validation_error);
  }

  SUBCASE("kernel of parity(a1) = 1") {
    auto [Gf, dom_fine] = genus2_octagon(4096);  // 1e-3 volume check needs the fine domain
    const auto sub = index2_cover(Gf, {1, 0, 0, 0});
    CHECK(sub.group.rank() == 7);  // 2x4 - 1 Schreier generators
    CHECK(sub.group.relators.size() == 2);

    // every generator word has parity 0
    for (const auto& w : sub.inclusion_words) {
      int parity = 0;
      for (const int l : w)
        if (std::abs(l) == 1) parity ^= 1;
      CHECK(parity == 0);
    }

    // rewritten relators are trivial: the unconjugated one at 1e-8, the
    // conjugated one within what double precision supports through its
    // far-out intermediates
    CHECK(sub.group.word_identity_defect(sub.group.relators[0]) < 1e-8);
    CHECK(sub.group.word_identity_defect(sub.group.relators[1]) < 1e-4);

    // covering surface volume doubles: chi = 2(-2) gives area 8pi
    const FundamentalDomain dd = doubled_domain(dom_fine, Gf.evaluate(sub.coset_rep));
    CHECK(std::abs(dd.total_volume - 8 * 3.14159265358979323846) < 1e-3);
    CHECK(dd.cells.size() == 2 * dom_fine.cells.size());
  }
}
