#pragma once

// Mapping-degree experiments along coverings: pullback cocycles and maps,
// the volume-ratio inequality |deg f| <= vol(f* Phi)/vol(Phi), and the
// naturally-maximal characterization. Only covering maps are instantiated
// (degree = subgroup index, identity lift), so the counting function N(b)
// equals the degree identically; the non-isometry regime of the inequality
// is not exercised at desk scale.

#include <string>
#include <vector>

#include "natvol/cocycle.hpp"
#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/group.hpp"
#include "natvol/volume.hpp"

namespace natvol {

struct CoveringMap {
  GroupPresentation source_group;   // Gamma (pi_1 of the covering space M)
  FundamentalDomain source_domain;  // fundamental domain of Gamma, vol = deg x vol(N)
  GroupPresentation target_group;   // Lambda
  FundamentalDomain target_domain;
  std::vector<Word> inclusion;      // pi_1(f): source generators as Lambda-words
  int degree = 1;

  // relator images must be trivial in Lambda; volumes must match the degree
  void validate(double relator_tol = 1e-8, double vol_tol = 2e-3) const {
    if (static_cast<int>(inclusion.size()) != source_group.rank())
      throw validation_error("CoveringMap: one inclusion word per source generator");
    for (const auto& rel : source_group.relators) {
      Word image;
      for (const int l : rel) {
        const Word& w = inclusion[static_cast<std::size_t>(std::abs(l)) - 1];
        const Word piece = (l > 0) ? w : word_inverse(w);
        image.insert(image.end(), piece.begin(), piece.end());
      }
      if (target_group.word_identity_defect(cyclic_reduce(image)) > relator_tol)
        throw validation_error("CoveringMap: relator image is not trivial in the target group");
    }
    const double expected = degree * target_domain.total_volume;
    if (std::abs(source_domain.total_volume - expected) > vol_tol * std::max(1.0, expected))
      throw validation_error("CoveringMap: source volume does not match degree x target volume");
  }
};

inline CoveringMap identity_covering(const GroupPresentation& G, const FundamentalDomain& dom) {
  CoveringMap f;
  f.source_group = G;
  f.source_domain = dom;
  f.target_group = G;
  f.target_domain = dom;
  f.degree = 1;
  f.inclusion.reserve(G.rank());
  for (int g = 0; g < G.rank(); ++g) f.inclusion.push_back({g + 1});
  return f;
}

// The degree-2 covering of the genus-2 octagon surface determined by the
// parity map a1 -> 1, others -> 0 (a genus-3 surface).
inline CoveringMap genus2_cover_a1(int cells_target = 4096) {
  auto [G, dom] = genus2_octagon(cells_target);
  const auto sub = index2_cover(G, {1, 0, 0, 0});
  CoveringMap f;
  f.source_group = sub.group;
  f.source_domain = doubled_domain(dom, G.evaluate(sub.coset_rep));
  f.target_group = std::move(G);
  f.target_domain = std::move(dom);
  f.inclusion = sub.inclusion_words;
  f.degree = 2;
  return f;
}

// f* sigma(gamma, x) = sigma(pi_1(f)(gamma), x); X becomes a source-group
// space through the inclusion words.
inline Cocycle pullback_cocycle(const CoveringMap& f, const Cocycle& sigma) {
  Cocycle out;
  out.space = sigma.space;
  out.m = sigma.m;
  out.group_rank = static_cast<int>(f.inclusion.size());
  out.is_representation = sigma.is_representation && sigma.space.trivial_action();
  if (!sigma.space.trivial_action()) {
    std::vector<std::vector<int>> perms;
    perms.reserve(f.inclusion.size());
    for (const auto& w : f.inclusion) {
      std::vector<int> p(sigma.space.count);
      for (int x = 0; x < sigma.space.count; ++x) p[x] = sigma.space.apply_word(w, x);
      perms.push_back(std::move(p));
    }
    FiniteProbSpace base = sigma.space;
    base.gen_perms.clear();
    base.gen_perms_inv.clear();
    out.space = base.with_action(std::move(perms));
  }
  out.rule.resize(f.inclusion.size());
  for (std::size_t g = 0; g < f.inclusion.size(); ++g) {
    out.rule[g].reserve(sigma.space.count);
    for (int x = 0; x < sigma.space.count; ++x)
      out.rule[g].push_back(sigma.evaluate(f.inclusion[g], x));
  }
  out.rebuild_inverses();
  return out;
}

// f* Phi(a, x) = Phi(F~(a), x); for covering instances the lift F~ is the
// identity, so the map itself is unchanged and only the acting group shrinks.
inline EquivariantMapSpec pullback_map(const CoveringMap& /*f*/, const EquivariantMapSpec& phi) {
  return phi;
}

// f* phi for the boundary map (identity boundary lift for coverings).
inline BoundaryMapSpec pullback_boundary(const CoveringMap& /*f*/, const BoundaryMapSpec& phi) {
  return phi;
}

struct DegreeReport {
  int degree = 0;
  double nv_source = 0.0;    // nv(f* sigma) over the source domain
  double nv_target = 0.0;    // nv(sigma) over the target domain
  double nv_ratio = 0.0;
  double vol_phi_source = 0.0;  // vol(f* Phi), Phi = natural map of sigma
  double vol_phi_target = 0.0;  // vol(Phi)
  double vol_ratio = 0.0;
  std::string source_verdict, target_verdict;
  bool source_maximal = false, target_maximal = false;
  // N(b) = card(F~^{-1}(b)) is not computed independently: it equals the
  // degree identically for covering instances.
  std::string counting_note = "N(b) = deg for covering instances (identity lift)";
};

inline DegreeReport degree_experiment(const CoveringMap& f, const Cocycle& sigma,
                                      const BoundaryMapSpec& phi, const SphereQuadrature& quad,
                                      const BarycenterConfig& solver = {},
                                      const VolumeOptions& opts = {}) {
  f.validate();
  DegreeReport rep;
  rep.degree = f.degree;

  const VolumeReport target =
      natural_volume(f.target_group, sigma, phi, f.target_domain, sigma.space, quad, solver, opts);
  const Cocycle pulled = pullback_cocycle(f, sigma);
  const BoundaryMapSpec pulled_phi = pullback_boundary(f, phi);
  const VolumeReport source = natural_volume(f.source_group, pulled, pulled_phi, f.source_domain,
                                             pulled.space, quad, solver, opts);

  rep.nv_source = source.volume;
  rep.nv_target = target.volume;
  rep.nv_ratio = source.volume / target.volume;
  rep.source_verdict = source.verdict;
  rep.target_verdict = target.verdict;
  rep.source_maximal = source.verdict == "maximal";
  rep.target_maximal = target.verdict == "maximal";

  // vol(f* Phi) with Phi the natural map of sigma: the pullback map is the
  // same evaluator integrated over the source domain.
  {
    Cocycle sig = sigma;
    auto ev = NaturalMapEvaluator::build(sig, phi, quad, solver);
    auto spec = EquivariantMapSpec::natural(std::move(ev));
    const VolumeReport vs = volume(spec, f.source_domain, pulled.space, opts);
    const VolumeReport vt = volume(spec, f.target_domain, sigma.space, opts);
    rep.vol_phi_source = vs.volume;
    rep.vol_phi_target = vt.volume;
    rep.vol_ratio = vs.volume / vt.volume;
  }
  return rep;
}

}  // namespace natvol
