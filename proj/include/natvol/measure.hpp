#pragma once

// Finite atomic measures on the boundary sphere, the visual (Patterson-
// Sullivan) density with its closed-form conformal weights, and push-forward
// under boundary maps. The atom-free hypothesis of the continuum theory is
// replaced by the operative barycenter admissibility condition: no atom of
// mass >= 1/2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "natvol/core.hpp"
#include "natvol/errors.hpp"
#include "natvol/hyperboloid.hpp"
#include "natvol/quadrature.hpp"

namespace natvol {

constexpr double kAtomMergeTol = 1e-12;

struct BoundaryMeasure {
  std::vector<HBoundaryPoint> atoms;
  Vec weights;
  bool normalized = false;

  int n() const { return atoms.empty() ? 0 : atoms.front().n(); }
  int size() const { return static_cast<int>(atoms.size()); }
  double total_mass() const { return weights.size() ? weights.sum() : 0.0; }
  double max_weight() const { return weights.size() ? weights.maxCoeff() : 0.0; }

  static BoundaryMeasure from_atoms(std::vector<HBoundaryPoint> atoms, Vec weights,
                                    bool normalize_mass = true) {
    BoundaryMeasure mu;
    mu.atoms = std::move(atoms);
    mu.weights = std::move(weights);
    if (mu.weights.size() != static_cast<Eigen::Index>(mu.atoms.size()))
      throw validation_error("BoundaryMeasure: atom/weight count mismatch");
    for (Eigen::Index i = 0; i < mu.weights.size(); ++i)
      if (!(mu.weights[i] > 0.0)) throw validation_error("BoundaryMeasure: weights must be positive");
    if (normalize_mass) mu.normalize();
    return mu;
  }

  void normalize() {
    const double m = total_mass();
    if (m <= 0.0) throw degenerate_measure_error("BoundaryMeasure: zero total mass");
    weights /= m;
    normalized = true;
  }

  // Barycenter admissibility: no atom of relative mass >= 1/2, and not a
  // two-atom half/half configuration (strict convexity would fail).
  bool admissible() const {
    if (size() < 2) return false;
    return max_weight() / total_mass() < 0.5;
  }

  void require_admissible() const {
    if (!admissible())
      throw inadmissible_measure_error("measure has an atom of mass >= 1/2 (or < 2 atoms)");
  }
};

// delta_Gamma = d(n+1) - 2 for a torsion-free uniform rank-one lattice.
inline double critical_exponent(int n, int d = 1) {
  if (n < 2) throw error("critical_exponent: n must be >= 2");
  return static_cast<double>(d * (n + 1) - 2);
}

// Visual-measure weights at a on the quadrature nodes, w_i  ~  q_i e^{-delta
// beta_o(a, xi_i)}. For nodes normalized to <xi,o> = -1 this is
// q_i (-<a,xi_i>)^{-delta}, so no transcendentals are needed for integer
// delta. Realizes the PS density pointed at a for any lattice in PO(n,1).
inline void visual_weights(const HPoint& a, const SphereQuadrature& quad, Vec& out,
                           bool normalize = true) {
  const int N = quad.size();
  const int dim = quad.n + 1;
  const double delta = critical_exponent(quad.n);
  const int idelta = static_cast<int>(delta);
  out.resize(N);
  const double* av = a.coords.data();
  for (int i = 0; i < N; ++i) {
    const double* x = quad.node_ptr(i);
    double s = av[0] * x[0];
    for (int d = 1; d < dim; ++d) s -= av[d] * x[d];
    // s = -<a, xi> > 0
    double p = s;
    for (int k = 1; k < idelta; ++k) p *= s;
    out[i] = quad.weights[i] / p;
  }
  if (normalize) out /= pairwise_sum(out.data(), N);
}

inline BoundaryMeasure visual_measure(const HPoint& a, const SphereQuadrature& quad) {
  BoundaryMeasure mu;
  mu.atoms = quad.nodes;
  visual_weights(a, quad, mu.weights, true);
  mu.normalized = true;
  return mu;
}

// Unnormalized visual mass; equals 1 in the continuum (Poisson kernel
// identity), so the defect is pure quadrature error.
inline double visual_mass_unnormalized(const HPoint& a, const SphereQuadrature& quad) {
  Vec w;
  visual_weights(a, quad, w, false);
  return pairwise_sum(w.data(), w.size());
}

using BoundaryMapFn = std::function<HBoundaryPoint(const HBoundaryPoint&)>;

// Push-forward: atoms mapped, weights preserved. Atoms closer than
// kAtomMergeTol (chordal, on normalized coordinates) are merged; if a merged
// atom reaches mass >= 1/2 the result is rejected as barycenter-inadmissible,
// mirroring a failed essential-injectivity hypothesis.
inline BoundaryMeasure pushforward(const BoundaryMeasure& mu, const BoundaryMapFn& phi) {
  std::vector<HBoundaryPoint> mapped;
  mapped.reserve(mu.atoms.size());
  for (const auto& xi : mu.atoms) mapped.push_back(phi(xi));

  std::vector<HBoundaryPoint> out_atoms;
  std::vector<double> out_w;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    bool merged = false;
    for (std::size_t k = 0; k < out_atoms.size(); ++k) {
      if ((out_atoms[k].coords - mapped[i].coords).norm() < kAtomMergeTol) {
        out_w[k] += mu.weights[static_cast<Eigen::Index>(i)];
        merged = true;
        break;
      }
    }
    if (!merged) {
      out_atoms.push_back(mapped[i]);
      out_w.push_back(mu.weights[static_cast<Eigen::Index>(i)]);
    }
  }
  BoundaryMeasure out;
  out.atoms = std::move(out_atoms);
  out.weights = Eigen::Map<const Vec>(out_w.data(), static_cast<Eigen::Index>(out_w.size()));
  out.normalized = mu.normalized;
  if (out.max_weight() / out.total_mass() >= 0.5)
    throw inadmissible_measure_error("pushforward: merged atom reached mass >= 1/2");
  return out;
}

// Binned total-variation distance on S^1 via K equal arcs.
inline double binned_tv_s1(const BoundaryMeasure& mu1, const BoundaryMeasure& mu2, int bins = 16) {
  const double pi = 3.14159265358979323846;
  auto histogram = [&](const BoundaryMeasure& mu) {
    std::vector<double> h(bins, 0.0);
    const double mass = mu.total_mass();
    for (int i = 0; i < mu.size(); ++i) {
      const Vec u = mu.atoms[i].direction();
      double th = std::atan2(u[1], u[0]);
      if (th < 0) th += 2.0 * pi;
      int b = static_cast<int>(th / (2.0 * pi) * bins);
      if (b >= bins) b = bins - 1;
      h[b] += mu.weights[i] / mass;
    }
    return h;
  };
  const auto h1 = histogram(mu1), h2 = histogram(mu2);
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += std::abs(h1[b] - h2[b]);
  return 0.5 * tv;
}

// Max over sampled hemispheres of |mu1(H) - mu2(H)|; dimension-generic
// smoothed comparison statistic.
inline double hemisphere_discrepancy(const BoundaryMeasure& mu1, const BoundaryMeasure& mu2,
                                     int directions = 64) {
  const int n = mu1.n();
  Rng rng(777);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    const auto dv = rng.unit_vector(n);
    Vec e(n);
    for (int i = 0; i < n; ++i) e[i] = dv[i];
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < mu1.size(); ++i)
      if (mu1.atoms[i].direction().dot(e) > 0) m1 += mu1.weights[i];
    for (int i = 0; i < mu2.size(); ++i)
      if (mu2.atoms[i].direction().dot(e) > 0) m2 += mu2.weights[i];
    worst = std::max(worst, std::abs(m1 / mu1.total_mass() - m2 / mu2.total_mass()));
  }
  return worst;
}

}  // namespace natvol
