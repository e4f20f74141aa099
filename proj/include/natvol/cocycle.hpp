#pragma once

// Measurable cocycles over a finite probability Gamma-space: representation
// cocycles, twists, and boundary maps given as composition chains of checkable
// primitives (isometry actions, the standard boundary embedding, radial
// squash diffeomorphisms). Finite X makes every integral over X an exact sum;
// the atom-free hypothesis of the continuum theory plays no computational
// role here. Essential uniqueness of a boundary map is not verifiable
// numerically: boundary maps are inputs and that hypothesis is the caller's
// responsibility.

#include <cmath>
#include <vector>

#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/group.hpp"
#include "natvol/hyperboloid.hpp"
#include "natvol/quadrature.hpp"
#include "natvol/rng.hpp"

namespace natvol {

struct FiniteProbSpace {
  int count = 0;
  Vec weights;
  // per acting-group generator; empty means the trivial action
  std::vector<std::vector<int>> gen_perms;
  std::vector<std::vector<int>> gen_perms_inv;

  static FiniteProbSpace uniform(int k) {
    FiniteProbSpace x;
    x.count = k;
    x.weights = Vec::Constant(k, 1.0 / k);
    return x;
  }

  bool trivial_action() const { return gen_perms.empty(); }

  int apply_letter(int l, int x) const {
    if (gen_perms.empty()) return x;
    const std::size_t g = static_cast<std::size_t>(std::abs(l)) - 1;
    if (g >= gen_perms.size()) throw validation_error("FiniteProbSpace: letter out of range");
    return l > 0 ? gen_perms[g][x] : gen_perms_inv[g][x];
  }

  // left action: (uv).x = u.(v.x)
  int apply_word(const Word& w, int x) const {
    for (auto it = w.rbegin(); it != w.rend(); ++it) x = apply_letter(*it, x);
    return x;
  }

  // action must be measure preserving; relators (when given) act trivially
  FiniteProbSpace with_action(std::vector<std::vector<int>> perms,
                              const GroupPresentation* group = nullptr) const {
    FiniteProbSpace out = *this;
    out.gen_perms = std::move(perms);
    out.gen_perms_inv.clear();
    for (const auto& p : out.gen_perms) {
      if (static_cast<int>(p.size()) != count)
        throw validation_error("FiniteProbSpace: permutation size mismatch");
      std::vector<int> inv(count, -1);
      for (int x = 0; x < count; ++x) {
        if (p[x] < 0 || p[x] >= count || inv[p[x]] != -1)
          throw validation_error("FiniteProbSpace: action is not a bijection");
        inv[p[x]] = x;
        if (std::abs(weights[p[x]] - weights[x]) > 1e-15)
          throw validation_error("FiniteProbSpace: action is not measure preserving");
      }
      out.gen_perms_inv.push_back(std::move(inv));
    }
    if (group) {
      if (static_cast<int>(out.gen_perms.size()) != group->rank())
        throw validation_error("FiniteProbSpace: one permutation per generator required");
      for (const auto& rel : group->relators)
        for (int x = 0; x < count; ++x)
          if (out.apply_word(rel, x) != x)
            throw validation_error("FiniteProbSpace: relator does not act trivially");
    }
    return out;
  }

  void validate() const {
    if (count <= 0) throw validation_error("FiniteProbSpace: empty");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
      throw validation_error("FiniteProbSpace: weights must sum to 1");
  }
};

// sigma: Gamma x X -> G(m), stored on generators and extended to words by the
// cocycle identity sigma(uv, x) = sigma(u, v x) sigma(v, x).
struct Cocycle {
  FiniteProbSpace space;
  int m = 0;
  int group_rank = 0;
  bool is_representation = false;
  std::vector<std::vector<HIsometry>> rule;      // [generator][x]
  std::vector<std::vector<HIsometry>> rule_inv;  // sigma(g^{-1}, .) cache

  const HIsometry& letter_value(int l, int x) const {
    const std::size_t g = static_cast<std::size_t>(std::abs(l)) - 1;
    return l > 0 ? rule[g][static_cast<std::size_t>(x)] : rule_inv[g][static_cast<std::size_t>(x)];
  }

  HIsometry evaluate(const Word& w, int x) const {
    HIsometry acc = HIsometry::identity(m);
    int cur = x;
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      acc = letter_value(*it, cur).compose(acc);
      cur = space.apply_letter(*it, cur);
    }
    return acc;
  }

  void rebuild_inverses() {
    rule_inv.assign(rule.size(), {});
    for (std::size_t g = 0; g < rule.size(); ++g) {
      rule_inv[g].resize(rule[g].size());
      for (int x = 0; x < space.count; ++x) {
        // sigma(g^{-1}, x) = sigma(g, g^{-1} x)^{-1}
        const int y = space.apply_letter(-(static_cast<int>(g) + 1), x);
        rule_inv[g][static_cast<std::size_t>(x)] = rule[g][static_cast<std::size_t>(y)].inverse();
      }
    }
  }

  // max cocycle-identity deviation over sampled word pairs, relative to the
  // entry scale of the products (far-out words have large matrix entries)
  double identity_defect(Rng& rng, int samples = 50, int max_len = 3) const {
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      Word w1, w2;
      const int l1 = 1 + rng.uniform_int(max_len), l2 = 1 + rng.uniform_int(max_len);
      for (int i = 0; i < l1; ++i)
        w1.push_back((rng.uniform() < 0.5 ? 1 : -1) * (1 + rng.uniform_int(group_rank)));
      for (int i = 0; i < l2; ++i)
        w2.push_back((rng.uniform() < 0.5 ? 1 : -1) * (1 + rng.uniform_int(group_rank)));
      const int x = rng.uniform_int(space.count);
      const Mat lhs = evaluate(word_concat(w1, w2), x).matrix;
      const Mat m1 = evaluate(w1, space.apply_word(w2, x)).matrix;
      const Mat m2 = evaluate(w2, x).matrix;
      // normalize by the factor scales: backtracking pairs cancel, so the
      // computation scale (not the result scale) bounds the roundoff
      const double scale =
          std::max(1.0, m1.cwiseAbs().maxCoeff() * m2.cwiseAbs().maxCoeff());
      worst = std::max(worst, (lhs - m1 * m2).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
  }
};

// Cocycle associated to a representation: sigma_rho(g, x) = rho(g).
inline Cocycle rep_cocycle(const GroupPresentation& G, const std::vector<HIsometry>& rho,
                           const FiniteProbSpace& X, double relator_tol = 1e-8) {
  if (static_cast<int>(rho.size()) != G.rank())
    throw validation_error("rep_cocycle: one image per generator required");
  const int m = rho.front().n();
  GroupPresentation image = GroupPresentation::from_generators(m, rho, G.relators);
  if (image.relator_defect() > relator_tol)
    throw validation_error("rep_cocycle: representation violates a relator");
  Cocycle c;
  c.space = X;
  c.m = m;
  c.group_rank = G.rank();
  c.is_representation = true;
  c.rule.resize(rho.size());
  for (std::size_t g = 0; g < rho.size(); ++g)
    c.rule[g].assign(static_cast<std::size_t>(X.count), rho[g]);
  c.rebuild_inverses();
  return c;
}

// The reference cocycle of the rigidity experiments: the corner injection
// restricted to the lattice.
inline Cocycle standard_embedding_cocycle(const GroupPresentation& G, int m,
                                          const FiniteProbSpace& X) {
  std::vector<HIsometry> rho;
  rho.reserve(G.generators.size());
  for (const auto& g : G.generators) rho.push_back(corner_inject(g, m));
  return rep_cocycle(G, rho, X);
}

// sigma^f(g, x) = f(gx)^{-1} sigma(g, x) f(x).
inline Cocycle twist(const Cocycle& sigma, const std::vector<HIsometry>& f) {
  if (static_cast<int>(f.size()) != sigma.space.count)
    throw validation_error("twist: f must be total on X");
  Cocycle out = sigma;
  out.is_representation = false;
  for (std::size_t g = 0; g < out.rule.size(); ++g) {
    for (int x = 0; x < out.space.count; ++x) {
      const int gx = out.space.apply_letter(static_cast<int>(g) + 1, x);
      out.rule[g][static_cast<std::size_t>(x)] =
          f[static_cast<std::size_t>(gx)].inverse().compose(sigma.rule[g][static_cast<std::size_t>(x)]).compose(
              f[static_cast<std::size_t>(x)]);
    }
  }
  out.rebuild_inverses();
  return out;
}

// --- boundary maps as composition chains --------------------------------------

struct BoundaryStep {
  enum Kind { Isometry, Embed, Squash } kind = Isometry;
  HIsometry iso;      // Isometry
  int embed_to = 0;   // Embed
  Vec pole;           // Squash: pole direction on the current sphere
  double kappa = 1.0; // Squash: stereographic radial exponent, kappa > 0
};

// Stereographic radial reparameterization r -> r^kappa around `pole`:
// theta' = 2 atan(tan(theta/2)^kappa) on the polar angle from the pole.
// A sphere diffeomorphism fixing pole and antipode, injective for kappa > 0.
inline Vec squash_direction(const Vec& u, const Vec& pole, double kappa) {
  const double ct = std::max(-1.0, std::min(1.0, u.dot(pole)));
  const double theta = std::acos(ct);
  Vec w = u - ct * pole;
  const double wn = w.norm();
  if (wn < 1e-14 || theta > 3.14159265358979323846 - 1e-12) return u;  // fixed points
  const double tp = std::tan(0.5 * theta);
  const double theta2 = 2.0 * std::atan(std::pow(tp, kappa));
  return std::cos(theta2) * pole + std::sin(theta2) * (w / wn);
}

struct BoundaryChain {
  int n = 0, m = 0;  // S^{n-1} -> S^{m-1}
  std::vector<BoundaryStep> steps;

  static BoundaryChain embed_chain(int n, int m) {
    if (m < n) throw dimension_error("BoundaryChain: m < n");
    BoundaryChain c;
    c.n = n;
    c.m = m;
    if (m > n) {
      BoundaryStep s;
      s.kind = BoundaryStep::Embed;
      s.embed_to = m;
      c.steps.push_back(std::move(s));
    }
    return c;
  }

  BoundaryChain then_isometry(const HIsometry& g) const {
    if (g.n() != m) throw dimension_error("BoundaryChain: isometry dimension mismatch");
    BoundaryChain c = *this;
    BoundaryStep s;
    s.kind = BoundaryStep::Isometry;
    s.iso = g;
    c.steps.push_back(std::move(s));
    return c;
  }

  BoundaryChain then_squash(Vec pole, double kappa) const {
    if (static_cast<int>(pole.size()) != m) throw dimension_error("BoundaryChain: pole dimension mismatch");
    if (!(kappa > 0.0)) throw validation_error("BoundaryChain: kappa must be positive");
    BoundaryChain c = *this;
    BoundaryStep s;
    s.kind = BoundaryStep::Squash;
    s.pole = pole.normalized();
    s.kappa = kappa;
    c.steps.push_back(std::move(s));
    return c;
  }

  BoundaryChain pre_isometry(const HIsometry& g) const {
    if (g.n() != n) throw dimension_error("BoundaryChain: pre-isometry dimension mismatch");
    BoundaryChain c = *this;
    BoundaryStep s;
    s.kind = BoundaryStep::Isometry;
    s.iso = g;
    c.steps.insert(c.steps.begin(), std::move(s));
    return c;
  }

  HBoundaryPoint apply(const HBoundaryPoint& xi) const {
    HBoundaryPoint cur = xi;
    for (const auto& s : steps) {
      switch (s.kind) {
        case BoundaryStep::Isometry:
          cur = s.iso.apply_boundary(cur);
          break;
        case BoundaryStep::Embed:
          cur = boundary_embed(cur, s.embed_to);
          break;
        case BoundaryStep::Squash: {
          const Vec u = squash_direction(cur.direction(), s.pole, s.kappa);
          cur = HBoundaryPoint::from_direction(u);
          break;
        }
      }
    }
    if (cur.n() != m) throw dimension_error("BoundaryChain: chain does not end in S^{m-1}");
    return cur;
  }
};

// Slice-wise boundary map; one chain shared by all x, or one per x.
struct BoundaryMapSpec {
  int n = 0, m = 0;
  std::vector<BoundaryChain> slices;

  static BoundaryMapSpec shared(BoundaryChain chain) {
    BoundaryMapSpec s;
    s.n = chain.n;
    s.m = chain.m;
    s.slices = {std::move(chain)};
    return s;
  }

  static BoundaryMapSpec per_x(std::vector<BoundaryChain> chains) {
    if (chains.empty()) throw validation_error("BoundaryMapSpec: no slices");
    BoundaryMapSpec s;
    s.n = chains.front().n;
    s.m = chains.front().m;
    s.slices = std::move(chains);
    return s;
  }

  bool is_shared() const { return slices.size() == 1; }
  const BoundaryChain& slice(int x) const {
    return slices.size() == 1 ? slices[0] : slices[static_cast<std::size_t>(x)];
  }

  // min pairwise separation of the slice image on the node set (injectivity
  // scan; the stand-in for essentially injective slices)
  double min_separation(const SphereQuadrature& quad, int x) const {
    const auto& ch = slice(x);
    std::vector<Vec> img;
    img.reserve(quad.nodes.size());
    for (const auto& node : quad.nodes) img.push_back(ch.apply(node).coords);
    double best = 1e300;
    for (std::size_t i = 0; i < img.size(); ++i)
      for (std::size_t j = i + 1; j < img.size(); ++j)
        best = std::min(best, (img[i] - img[j]).norm());
    return best;
  }
};

// phi^f(xi, x) = f(x)^{-1} phi(xi, x).
inline BoundaryMapSpec twist_boundary(const BoundaryMapSpec& phi, const std::vector<HIsometry>& f) {
  BoundaryMapSpec out;
  out.n = phi.n;
  out.m = phi.m;
  out.slices.reserve(f.size());
  for (std::size_t x = 0; x < f.size(); ++x)
    out.slices.push_back(phi.slice(static_cast<int>(x)).then_isometry(f[x].inverse()));
  return out;
}

struct EquivarianceReport {
  double max_deviation = 0.0;
  int samples = 0;
};

// max over sampled (gamma, x, xi) of | phi_{gamma x}(gamma xi) -
// sigma(gamma, x) phi_x(xi) |.
inline EquivarianceReport check_equivariance(const GroupPresentation& G, const Cocycle& sigma,
                                             const BoundaryMapSpec& phi, int samples, Rng& rng) {
  EquivarianceReport rep;
  rep.samples = samples;
  if (G.rank() == 0) return rep;  // trivial group: vacuously equivariant
  for (int s = 0; s < samples; ++s) {
    Word w;
    const int len = 1 + rng.uniform_int(3);
    for (int i = 0; i < len; ++i)
      w.push_back((rng.uniform() < 0.5 ? 1 : -1) * (1 + rng.uniform_int(G.rank())));
    const int x = rng.uniform_int(sigma.space.count);
    const HBoundaryPoint xi = random_boundary_point(rng, G.n);
    const int gx = sigma.space.apply_word(w, x);
    const HBoundaryPoint lhs = phi.slice(gx).apply(G.evaluate(w).apply_boundary(xi));
    const HBoundaryPoint rhs = sigma.evaluate(w, x).apply_boundary(phi.slice(x).apply(xi));
    rep.max_deviation = std::max(rep.max_deviation, (lhs.coords - rhs.coords).cwiseAbs().maxCoeff());
  }
  return rep;
}

}  // namespace natvol
