#pragma once

// Finitely generated discrete isometry groups as generator lists, word-ball
// orbit enumeration (breadth-first, shortlex canonical), the genus-2 regular
// octagon lattice with its side pairings, index-2 covers via Reidemeister-
// Schreier, and quadrature over fundamental domains.

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/hyperboloid.hpp"
#include "natvol/measure.hpp"

namespace natvol {

// A word is a sequence of signed 1-based generator letters: +k is generator
// k-1, -k its inverse. Shortlex order: by length, then lexicographically with
// +1 < -1 < +2 < -2 < ...
using Word = std::vector<int>;

inline Word word_inverse(const Word& w) {
  Word out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = -w[w.size() - 1 - i];
  return out;
}

inline Word word_concat(const Word& a, const Word& b) {
  Word out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Word free_reduce(const Word& w) {
  Word out;
  for (const int l : w) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

// Free + cyclic reduction; preserves triviality and keeps relator-image
// checks away from ill-conditioned conjugations.
inline Word cyclic_reduce(const Word& w) {
  Word out = free_reduce(w);
  std::size_t lo = 0, hi = out.size();
  while (hi - lo >= 2 && out[lo] == -out[hi - 1]) {
    ++lo;
    --hi;
  }
  return Word(out.begin() + static_cast<std::ptrdiff_t>(lo),
              out.begin() + static_cast<std::ptrdiff_t>(hi));
}

struct GroupPresentation {
  int n = 0;
  std::vector<HIsometry> generators;
  std::vector<HIsometry> generator_invs;
  std::vector<Word> relators;
  std::string label;

  int rank() const { return static_cast<int>(generators.size()); }

  static GroupPresentation from_generators(int n, std::vector<HIsometry> gens,
                                           std::vector<Word> relators = {}, std::string label = "") {
    GroupPresentation g;
    g.n = n;
    g.generators = std::move(gens);
    g.relators = std::move(relators);
    g.label = std::move(label);
    g.generator_invs.reserve(g.generators.size());
    for (const auto& m : g.generators) {
      m.check();
      g.generator_invs.push_back(m.inverse());
    }
    return g;
  }

  const HIsometry& letter(int l) const {
    return l > 0 ? generators[static_cast<std::size_t>(l) - 1]
                 : generator_invs[static_cast<std::size_t>(-l) - 1];
  }

  HIsometry evaluate(const Word& w) const {
    HIsometry acc = HIsometry::identity(n);
    for (const int l : w) acc = acc.compose(letter(l));
    return acc;
  }

  // Identity defect of a word, accumulated in extended precision: long
  // words passing through far-out intermediates lose ~ (entry scale)^2 eps
  // per product in doubles, which would swamp the 1e-8 relator tolerance.
  double word_identity_defect(const Word& w) const {
    const int d = n + 1;
    std::vector<long double> acc(static_cast<std::size_t>(d) * d, 0.0L);
    std::vector<long double> tmp(static_cast<std::size_t>(d) * d, 0.0L);
    for (int i = 0; i < d; ++i) acc[static_cast<std::size_t>(i) * d + i] = 1.0L;
    for (const int l : w) {
      const Mat& m = letter(l).matrix;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          long double s = 0.0L;
          for (int k = 0; k < d; ++k)
            s += acc[static_cast<std::size_t>(r) * d + k] * static_cast<long double>(m(k, c));
          tmp[static_cast<std::size_t>(r) * d + c] = s;
        }
      acc.swap(tmp);
    }
    long double worst = 0.0L;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        const long double diff = acc[static_cast<std::size_t>(r) * d + c] - (r == c ? 1.0L : 0.0L);
        worst = std::max(worst, diff < 0 ? -diff : diff);
      }
    return static_cast<double>(worst);
  }

  double relator_defect() const {
    double worst = 0.0;
    for (const auto& r : relators) worst = std::max(worst, word_identity_defect(r));
    return worst;
  }

  void check_relators(double tol = 1e-8) const {
    if (relator_defect() > tol) throw validation_error("relator does not evaluate to the identity");
  }
};

// --- orbit enumeration -------------------------------------------------------

struct OrbitPoint {
  Word word;
  HPoint point;
  double dist = 0.0;
};

struct OrbitBallOptions {
  // Expansion proceeds through points within R + slack; slack must dominate
  // the circumradius of the fundamental domain for completeness.
  double slack = 2.6;
  std::size_t budget = 10000000;  // visited-node cap
};

namespace detail {

struct OrbitDedup {
  // Quantized direction/size keys; genuinely distinct orbit points of a
  // discrete torsion-free group are systole-separated, so only numerical
  // duplicates of the same group element ever land in nearby cells.
  int dim;
  double cell_rel = 1e-5;
  double match_rel = 1e-8;
  std::unordered_map<std::uint64_t, std::uint32_t> head;
  std::vector<std::uint32_t> next;
  const std::vector<double>* points;

  static std::uint64_t mix(std::uint64_t h, std::int64_t v) {
    h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h;
  }

  std::uint64_t key_of(const std::int64_t* cells) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (int d = 0; d < dim; ++d) h = mix(h, cells[d]);
    return h;
  }

  bool equal(const double* a, const double* b) const {
    const double scale = std::max(a[0], b[0]);
    double d2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double diff = a[d] - b[d];
      d2 += diff * diff;
    }
    return std::sqrt(d2) < match_rel * scale;
  }

  // Probes the cell of p and neighbor cells along coordinates whose
  // fractional position is within 1e-3 of a boundary.
  bool insert_if_new(const double* p, std::uint32_t idx) {
    const double q = cell_rel * p[0];
    std::int64_t base_cell[8];
    double frac[8];
    for (int d = 0; d < dim; ++d) {
      const double v = p[d] / q;
      base_cell[d] = static_cast<std::int64_t>(std::floor(v));
      frac[d] = v - std::floor(v);
    }
    int wiggle_dims[8], nwiggle = 0;
    for (int d = 0; d < dim; ++d)
      if (frac[d] < 1e-3 || frac[d] > 1.0 - 1e-3) wiggle_dims[nwiggle++] = d;

    std::int64_t cells[8];
    const int combos = 1 << nwiggle;
    for (int c = 0; c < combos; ++c) {
      for (int d = 0; d < dim; ++d) cells[d] = base_cell[d];
      for (int b = 0; b < nwiggle; ++b)
        if (c & (1 << b)) cells[wiggle_dims[b]] += (frac[wiggle_dims[b]] < 0.5 ? -1 : 1);
      const std::uint64_t k = key_of(cells);
      auto it = head.find(k);
      while (it != head.end()) {
        std::uint32_t j = it->second;
        while (true) {
          if (equal(points->data() + static_cast<std::size_t>(j) * dim, p)) return false;
          if (j >= next.size() || next[j] == UINT32_MAX) break;
          j = next[j];
        }
        break;
      }
    }
    const std::uint64_t k0 = key_of(base_cell);
    if (next.size() <= idx) next.resize(idx + 1, UINT32_MAX);
    auto [it, fresh] = head.try_emplace(k0, idx);
    if (!fresh) {
      // chain at the front
      next[idx] = it->second;
      it->second = idx;
    }
    return true;
  }
};

}  // namespace detail

// All orbit points gamma . base with d(base, gamma base) <= R, deduplicated
// (numerical duplicates indicate a relator and are merged), words in shortlex
// order.
inline std::vector<OrbitPoint> orbit_ball(const GroupPresentation& G, const HPoint& base, double R,
                                          const OrbitBallOptions& opts = {}) {
  if (R < 0.0) throw validation_error("orbit_ball: R must be >= 0");
  const int dim = G.n + 1;
  const double r_expand = R + opts.slack;

  // flat generator matrices in letter-expansion order +1,-1,+2,-2,...
  const int nletters = 2 * G.rank();
  std::vector<double> letter_mats(static_cast<std::size_t>(nletters) * dim * dim);
  std::vector<int> letter_code(nletters);
  for (int g = 0; g < G.rank(); ++g) {
    for (int s = 0; s < 2; ++s) {
      const int li = 2 * g + s;
      letter_code[li] = (s == 0 ? g + 1 : -(g + 1));
      const Mat& m = (s == 0 ? G.generators[g] : G.generator_invs[g]).matrix;
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) letter_mats[(static_cast<std::size_t>(li) * dim + r) * dim + c] = m(r, c);
    }
  }

  std::vector<double> points;           // visited points, flat
  std::vector<std::uint32_t> parents;   // for word reconstruction
  std::vector<std::int8_t> letters;
  std::vector<double> frontier_mats, next_mats;
  std::vector<std::uint32_t> frontier_idx, next_idx;

  detail::OrbitDedup dedup;
  dedup.dim = dim;
  dedup.points = &points;

  // identity node
  points.insert(points.end(), base.coords.data(), base.coords.data() + dim);
  parents.push_back(UINT32_MAX);
  letters.push_back(0);
  dedup.insert_if_new(points.data(), 0);
  frontier_mats.resize(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int d = 0; d < dim; ++d) frontier_mats[static_cast<std::size_t>(d) * dim + d] = 1.0;
  frontier_idx.push_back(0);

  std::vector<double> child(dim * dim), cpoint(dim);
  while (!frontier_idx.empty()) {
    next_mats.clear();
    next_idx.clear();
    for (std::size_t f = 0; f < frontier_idx.size(); ++f) {
      const double* M = frontier_mats.data() + f * dim * dim;
      for (int li = 0; li < nletters; ++li) {
        const double* L = letter_mats.data() + static_cast<std::size_t>(li) * dim * dim;
        for (int r = 0; r < dim; ++r)
          for (int c = 0; c < dim; ++c) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += M[r * dim + k] * L[k * dim + c];
            child[r * dim + c] = s;
          }
        for (int r = 0; r < dim; ++r) {
          double s = 0.0;
          for (int k = 0; k < dim; ++k) s += child[r * dim + k] * base.coords[k];
          cpoint[r] = s;
        }
        double z = cpoint[0] * base.coords[0];
        for (int d = 1; d < dim; ++d) z -= cpoint[d] * base.coords[d];
        if (z < 1.0) z = 1.0;
        const double dist = std::acosh(z);
        if (dist > r_expand) continue;
        const std::uint32_t idx = static_cast<std::uint32_t>(parents.size());
        points.insert(points.end(), cpoint.begin(), cpoint.end());
        if (!dedup.insert_if_new(points.data() + static_cast<std::size_t>(idx) * dim, idx)) {
          points.resize(points.size() - dim);
          continue;
        }
        parents.push_back(frontier_idx[f]);
        letters.push_back(static_cast<std::int8_t>(letter_code[li]));
        if (parents.size() > opts.budget)
          throw resource_error("orbit_ball: visited-node budget exceeded");
        next_mats.insert(next_mats.end(), child.begin(), child.end());
        next_idx.push_back(idx);
      }
    }
    frontier_mats.swap(next_mats);
    frontier_idx.swap(next_idx);
  }

  std::vector<OrbitPoint> out;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    Vec c(dim);
    for (int d = 0; d < dim; ++d) c[d] = points[i * dim + d];
    double z = c[0] * base.coords[0];
    for (int d = 1; d < dim; ++d) z -= c[d] * base.coords[d];
    if (z < 1.0) z = 1.0;
    const double dist = std::acosh(z);
    if (dist > R + 1e-12) continue;
    OrbitPoint op;
    op.dist = dist;
    HPoint p(std::move(c));
    if (dist > 0) p.reproject();
    op.point = std::move(p);
    std::uint32_t j = static_cast<std::uint32_t>(i);
    while (parents[j] != UINT32_MAX) {
      op.word.push_back(letters[j]);
      j = parents[j];
    }
    std::reverse(op.word.begin(), op.word.end());
    out.push_back(std::move(op));
  }
  return out;
}

// Least-squares slope of log N(r) against r over integer radii, the
// empirical orbit growth rate (-> critical exponent).
inline double orbit_growth_slope(const GroupPresentation& G, const HPoint& base, double R,
                                 double r_min = 0.0) {
  const auto orbit = orbit_ball(G, base, R);
  std::vector<double> rs, logs;
  for (int r = static_cast<int>(std::ceil(std::max(1.0, r_min))); r <= static_cast<int>(R); ++r) {
    std::size_t count = 0;
    for (const auto& op : orbit)
      if (op.dist <= r) ++count;
    if (count > 1) {
      rs.push_back(r);
      logs.push_back(std::log(static_cast<double>(count)));
    }
  }
  if (rs.size() < 2) throw degenerate_measure_error("orbit_growth_slope: not enough radii");
  double mr = 0, ml = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    mr += rs[i];
    ml += logs[i];
  }
  mr /= rs.size();
  ml /= rs.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    num += (rs[i] - mr) * (logs[i] - ml);
    den += (rs[i] - mr) * (rs[i] - mr);
  }
  return num / den;
}

// --- Poincare series and orbit measures --------------------------------------

// Truncated s-Poincare series pointed at x: sum over d(gamma x, x) <= R.
inline double poincare_series(const GroupPresentation& G, double s, const HPoint& x, double R) {
  const auto orbit = orbit_ball(G, x, R);
  std::vector<double> terms;
  terms.reserve(orbit.size());
  for (const auto& op : orbit) terms.push_back(std::exp(-s * op.dist));
  return pairwise_sum(terms);
}

// Classical Patterson construction at parameter s (slightly above delta):
// atoms at the radial projections of orbit points gamma o, weights
// e^{-s d(a, gamma o)}, normalized. The identity point has no radial
// projection and is skipped.
inline BoundaryMeasure ps_orbit_measure(const GroupPresentation& G, double s, const HPoint& a,
                                        double R) {
  const HPoint o = HPoint::basepoint(G.n);
  const auto orbit = orbit_ball(G, o, R);
  std::vector<HBoundaryPoint> atoms;
  std::vector<double> w;
  for (const auto& op : orbit) {
    const Vec spatial = op.point.coords.tail(G.n);
    const double r = spatial.norm();
    if (r < 1e-9) continue;  // basepoint itself
    atoms.push_back(HBoundaryPoint::from_direction(spatial / r));
    w.push_back(std::exp(-s * distance(a, op.point)));
  }
  if (atoms.empty()) throw degenerate_measure_error("ps_orbit_measure: empty orbit ball");
  Vec wv = Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
  return BoundaryMeasure::from_atoms(std::move(atoms), std::move(wv), true);
}

// --- fundamental domains ------------------------------------------------------

struct DomainCell {
  HPoint point;
  double weight = 0.0;
};

struct FundamentalDomain {
  int n = 0;
  std::vector<DomainCell> cells;
  double total_volume = 0.0;
  // quarter-resolution companion for Richardson error estimates
  std::vector<DomainCell> coarse_cells;
  double coarse_total = 0.0;
};

// --- the genus-2 regular octagon ---------------------------------------------

struct Genus2Constants {
  // Regular octagon with vertex angle pi/4: all eight vertices form one
  // cycle of total angle 2 pi, area 4 pi by Gauss-Bonnet.
  double vertex_radius;   // arccosh(cot^2(pi/8))
  double apothem;         // arccosh(cot(pi/8))
  Genus2Constants() {
    const double pi = 3.14159265358979323846;
    const double cot8 = 1.0 / std::tan(pi / 8.0);
    vertex_radius = std::acosh(cot8 * cot8);
    apothem = std::acosh(cot8);
  }
};

namespace detail {

// Orientation-preserving isometry of H^2 mapping the directed segment
// (P -> Q) onto (P' -> Q'); segments must have equal length.
inline HIsometry isometry_from_segments(const HPoint& P, const HPoint& Q, const HPoint& Pp,
                                        const HPoint& Qp) {
  auto frame_of = [](const HPoint& A, const HPoint& B) {
    Vec u = log_map(A, B);
    u /= std::sqrt(mdot(u, u));
    // n = unique unit tangent with <n,u>=0, oriented so det[A|u|n] > 0
    Mat F = tangent_frame(A);
    Vec n = F.col(0) - mdot(F.col(0), u) * u;
    if (mdot(n, n) < 1e-12) n = F.col(1) - mdot(F.col(1), u) * u;
    n /= std::sqrt(mdot(n, n));
    Mat M(3, 3);
    M.col(0) = A.coords;
    M.col(1) = u;
    M.col(2) = n;
    if (M.determinant() < 0) M.col(2) = -M.col(2);
    return M;
  };
  const Mat Ma = frame_of(P, Q);
  const Mat Mb = frame_of(Pp, Qp);
  // frame matrices satisfy M^T J M = J, so M^{-1} = J M^T J
  Mat Ja = Ma.transpose();
  Ja.row(0) = -Ja.row(0);
  Ja.col(0) = -Ja.col(0);
  return HIsometry(Mb * Ja);
}

inline FundamentalDomain octagon_domain(int cells_target) {
  const Genus2Constants C;
  const double pi = 3.14159265358979323846;

  auto build = [&](int ntheta, int nr) {
    std::vector<DomainCell> cells;
    cells.reserve(static_cast<std::size_t>(8) * ntheta * nr);
    std::vector<double> tn, tw, rn, rw;
    gauss_legendre(ntheta, tn, tw);
    gauss_legendre(nr, rn, rw);
    const double tanh_ap = std::tanh(C.apothem);
    for (int k = 0; k < 8; ++k) {
      const double th0 = k * pi / 4.0, th1 = (k + 1) * pi / 4.0;
      const double thm = 0.5 * (th0 + th1);
      for (int it = 0; it < ntheta; ++it) {
        const double th = 0.5 * (th0 + th1) + 0.5 * (th1 - th0) * tn[it];
        const double wth = 0.5 * (th1 - th0) * tw[it];
        // polar boundary of the octagon in this sector
        const double Rth = std::atanh(tanh_ap / std::cos(th - thm));
        for (int ir = 0; ir < nr; ++ir) {
          const double r = 0.5 * Rth * (rn[ir] + 1.0);
          const double wr = 0.5 * Rth * rw[ir];
          Vec c(3);
          c << std::cosh(r), std::sinh(r) * std::cos(th), std::sinh(r) * std::sin(th);
          DomainCell cell;
          cell.point = HPoint(std::move(c));
          cell.weight = wth * wr * std::sinh(r);
          cells.push_back(std::move(cell));
        }
      }
    }
    return cells;
  };

  int ntheta = std::max(2, static_cast<int>(std::lround(std::sqrt(cells_target / 16.0))));
  int nr = 2 * ntheta;

  FundamentalDomain dom;
  dom.n = 2;
  dom.cells = build(ntheta, nr);
  for (const auto& c : dom.cells) dom.total_volume += c.weight;
  const int cn = std::max(1, ntheta / 2);
  dom.coarse_cells = build(cn, 2 * cn);
  for (const auto& c : dom.coarse_cells) dom.coarse_total += c.weight;
  return dom;
}

}  // namespace detail

// Regular hyperbolic octagon with vertex angle pi/4 centered at the
// basepoint, with side pairings realizing the surface-group presentation
// < a1,b1,a2,b2 | a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1 >.
//
// Sides are paired (0,2), (1,3), (4,6), (5,7); the pairing isometries are
// built from directed-edge frames and the published generators are
// (g_a, g_b^-1, g_c, g_d^-1), which is the labeling for which the commutator
// word above evaluates to the identity.
inline std::pair<GroupPresentation, FundamentalDomain> genus2_octagon(int cells_target = 4096) {
  const Genus2Constants C;
  const double pi = 3.14159265358979323846;
  std::vector<HPoint> V;
  V.reserve(8);
  for (int k = 0; k < 8; ++k) {
    const double phi = k * pi / 4.0;
    Vec c(3);
    c << std::cosh(C.vertex_radius), std::sinh(C.vertex_radius) * std::cos(phi),
        std::sinh(C.vertex_radius) * std::sin(phi);
    HPoint p(std::move(c));
    p.reproject();
    V.push_back(std::move(p));
  }
  auto pair_edge = [&](int p, int q) {
    // maps directed edge (V_{q+1} -> V_q) onto (V_p -> V_{p+1})
    return detail::isometry_from_segments(V[(q + 1) % 8], V[q % 8], V[p % 8], V[(p + 1) % 8]);
  };
  const HIsometry ga = pair_edge(0, 2);
  const HIsometry gb = pair_edge(1, 3);
  const HIsometry gc = pair_edge(4, 6);
  const HIsometry gd = pair_edge(5, 7);

  std::vector<HIsometry> gens = {ga, gb.inverse(), gc, gd.inverse()};
  std::vector<Word> relators = {{1, 2, -1, -2, 3, 4, -3, -4}};
  GroupPresentation G = GroupPresentation::from_generators(2, std::move(gens), std::move(relators),
                                                           "genus2");
  G.check_relators(1e-8);
  return {std::move(G), detail::octagon_domain(cells_target)};
}

// --- index-2 covers (Reidemeister-Schreier) -----------------------------------

struct SubgroupPresentation {
  GroupPresentation group;
  std::vector<Word> inclusion_words;  // subgroup generators as parent words
  Word coset_rep;                     // transversal element t (empty if trivial cover)
};

// Kernel of the parity homomorphism Gamma -> Z/2 determined by generator
// parities. Schreier generators over the transversal {e, t}; the fundamental
// domain of the cover is D union tD (volume doubles).
inline SubgroupPresentation index2_cover(const GroupPresentation& G, const std::vector<int>& parity) {
  if (static_cast<int>(parity.size()) != G.rank())
    throw validation_error("index2_cover: parity must assign 0/1 to every generator");
  for (const auto& rel : G.relators) {
    int total = 0;
    for (const int l : rel) total ^= parity[static_cast<std::size_t>(std::abs(l)) - 1];
    if (total != 0) throw validation_error("index2_cover: parity is not a homomorphism");
  }
  int t_gen = -1;
  for (int g = 0; g < G.rank(); ++g)
    if (parity[g] == 1) {
      t_gen = g;
      break;
    }
  if (t_gen < 0) {
    SubgroupPresentation sub;
    sub.group = G;
    sub.inclusion_words.reserve(G.rank());
    for (int g = 0; g < G.rank(); ++g) sub.inclusion_words.push_back({g + 1});
    return sub;
  }

  // Schreier generators s_{r,g} = (r g)(rep(rg))^{-1}, skipping the trivial
  // one s_{e,t}. Index of s_{r,g} in the emitted list, or -1 when trivial.
  std::vector<std::vector<int>> sidx(2, std::vector<int>(G.rank(), -1));
  std::vector<Word> inclusion;
  const Word t_word = {t_gen + 1};
  for (int r = 0; r < 2; ++r) {
    for (int g = 0; g < G.rank(); ++g) {
      if (r == 0 && g == t_gen) continue;  // trivial Schreier generator
      Word w;
      if (r == 1) w.push_back(t_gen + 1);
      w.push_back(g + 1);
      const int target = r ^ parity[g];
      if (target == 1) w.push_back(-(t_gen + 1));
      sidx[r][g] = static_cast<int>(inclusion.size());
      inclusion.push_back(std::move(w));
    }
  }

  // Reidemeister rewriting of a parent word lying in the kernel.
  auto rewrite = [&](const Word& w) {
    Word out;
    int state = 0;
    for (const int l : w) {
      const int g = std::abs(l) - 1;
      if (l > 0) {
        const int si = sidx[state][g];
        if (si >= 0) out.push_back(si + 1);
        state ^= parity[g];
      } else {
        const int ns = state ^ parity[g];
        const int si = sidx[ns][g];
        if (si >= 0) out.push_back(-(si + 1));
        state = ns;
      }
    }
    if (state != 0) throw validation_error("index2_cover: word is not in the kernel");
    return out;
  };

  std::vector<HIsometry> gens;
  gens.reserve(inclusion.size());
  for (const auto& w : inclusion) gens.push_back(G.evaluate(w));
  std::vector<Word> relators;
  for (const auto& rel : G.relators) {
    relators.push_back(rewrite(rel));
    relators.push_back(rewrite(word_concat(word_concat(t_word, rel), word_inverse(t_word))));
  }
  SubgroupPresentation sub;
  sub.group = GroupPresentation::from_generators(G.n, std::move(gens), std::move(relators),
                                                 G.label.empty() ? "index2-cover"
                                                                 : G.label + "-cover");
  sub.inclusion_words = std::move(inclusion);
  sub.coset_rep = t_word;
  return sub;
}

// Fundamental domain of an index-2 cover: D union tD.
inline FundamentalDomain doubled_domain(const FundamentalDomain& dom, const HIsometry& t) {
  FundamentalDomain out;
  out.n = dom.n;
  out.cells = dom.cells;
  for (const auto& c : dom.cells) out.cells.push_back({t.apply(c.point), c.weight});
  out.total_volume = 2.0 * dom.total_volume;
  out.coarse_cells = dom.coarse_cells;
  for (const auto& c : dom.coarse_cells) out.coarse_cells.push_back({t.apply(c.point), c.weight});
  out.coarse_total = 2.0 * dom.coarse_total;
  return out;
}

}  // namespace natvol
