#pragma once

// JSON (de)serialization of the core types and reports, plus CSV helpers.
// Schema version "v1" in every file; points and matrices are plain arrays of
// reals (row-major for matrices), dimension inferred from length.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "natvol/cocycle.hpp"
#include "natvol/core.hpp"
#include "natvol/degree.hpp"
#include "natvol/errors.hpp"
#include "natvol/group.hpp"
#include "natvol/volume.hpp"

namespace natvol {

using nlohmann::json;

inline json to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Vec vec_from_json(const json& arr) {
  Vec v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

inline json to_json(const Mat& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

// square matrix, dimension inferred from length
inline Mat mat_from_json(const json& arr) {
  const std::size_t len = arr.size();
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(len))));
  if (static_cast<std::size_t>(d * d) != len)
    throw validation_error("matrix array length is not a perfect square");
  Mat m(d, d);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = arr[i++].get<double>();
  return m;
}

inline json to_json(const HPoint& p) { return to_json(p.coords); }
inline HPoint hpoint_from_json(const json& arr, bool validate = true) {
  return HPoint::from_coords(vec_from_json(arr), validate);
}

inline json to_json(const HIsometry& g) { return to_json(g.matrix); }
inline HIsometry isometry_from_json(const json& arr) {
  HIsometry g(mat_from_json(arr));
  g.check();
  return g;
}

// {"atoms": [[coords..., w], ...]}
inline json to_json(const BoundaryMeasure& mu) {
  json atoms = json::array();
  for (int i = 0; i < mu.size(); ++i) {
    json row = to_json(mu.atoms[static_cast<std::size_t>(i)].coords);
    row.push_back(mu.weights[i]);
    atoms.push_back(std::move(row));
  }
  return json{{"atoms", std::move(atoms)}};
}

inline BoundaryMeasure measure_from_json(const json& j, bool normalize = false) {
  std::vector<HBoundaryPoint> atoms;
  std::vector<double> w;
  for (const auto& row : j.at("atoms")) {
    const std::size_t len = row.size();
    if (len < 3) throw validation_error("measure atom row too short");
    Vec c(static_cast<Eigen::Index>(len - 1));
    for (std::size_t i = 0; i + 1 < len; ++i) c[static_cast<Eigen::Index>(i)] = row[i].get<double>();
    HBoundaryPoint xi(std::move(c));
    xi.normalize();
    atoms.push_back(std::move(xi));
    w.push_back(row[len - 1].get<double>());
  }
  Vec wv = Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
  return BoundaryMeasure::from_atoms(std::move(atoms), std::move(wv), normalize);
}

inline json to_json(const Word& w) {
  json arr = json::array();
  for (const int l : w) arr.push_back(l);
  return arr;
}

inline Word word_from_json(const json& arr) {
  Word w;
  for (const auto& l : arr) w.push_back(l.get<int>());
  return w;
}

inline json to_json(const GroupPresentation& g) {
  json gens = json::array();
  for (const auto& m : g.generators) gens.push_back(to_json(m));
  json rels = json::array();
  for (const auto& r : g.relators) rels.push_back(to_json(r));
  return json{{"v", "v1"}, {"n", g.n}, {"label", g.label}, {"generators", std::move(gens)},
              {"relators", std::move(rels)}};
}

inline GroupPresentation group_from_json(const json& j) {
  std::vector<HIsometry> gens;
  for (const auto& g : j.at("generators")) gens.push_back(isometry_from_json(g));
  std::vector<Word> rels;
  if (j.contains("relators"))
    for (const auto& r : j.at("relators")) rels.push_back(word_from_json(r));
  GroupPresentation g = GroupPresentation::from_generators(
      j.at("n").get<int>(), std::move(gens), std::move(rels), j.value("label", std::string()));
  g.check_relators();
  return g;
}

inline json to_json(const FiniteProbSpace& x) {
  json out{{"points", x.count}, {"weights", to_json(x.weights)}};
  if (!x.gen_perms.empty()) {
    json perms = json::array();
    for (const auto& p : x.gen_perms) perms.push_back(p);
    out["action"] = std::move(perms);
  }
  return out;
}

inline FiniteProbSpace space_from_json(const json& j, const GroupPresentation* group = nullptr) {
  FiniteProbSpace x = FiniteProbSpace::uniform(j.value("points", 16));
  if (j.contains("weights")) {
    x.weights = vec_from_json(j.at("weights"));
    x.count = static_cast<int>(x.weights.size());
  }
  x.validate();
  if (j.contains("action")) {
    std::vector<std::vector<int>> perms;
    for (const auto& p : j.at("action")) perms.push_back(p.get<std::vector<int>>());
    x = x.with_action(std::move(perms), group);
  }
  return x;
}

// --- boundary chains -----------------------------------------------------------

inline json to_json(const BoundaryChain& c) {
  json steps = json::array();
  for (const auto& s : c.steps) {
    switch (s.kind) {
      case BoundaryStep::Isometry:
        steps.push_back(json{{"op", "isometry"}, {"matrix", to_json(s.iso)}});
        break;
      case BoundaryStep::Embed:
        steps.push_back(json{{"op", "embed"}, {"to", s.embed_to}});
        break;
      case BoundaryStep::Squash:
        steps.push_back(json{{"op", "squash"}, {"pole", to_json(s.pole)}, {"kappa", s.kappa}});
        break;
    }
  }
  return json{{"n", c.n}, {"m", c.m}, {"steps", std::move(steps)}};
}

inline BoundaryChain chain_from_json(const json& j) {
  BoundaryChain c;
  c.n = j.at("n").get<int>();
  c.m = c.n;
  for (const auto& s : j.at("steps")) {
    const std::string op = s.at("op").get<std::string>();
    if (op == "embed") {
      const int to = s.at("to").get<int>();
      if (to < c.m) throw dimension_error("chain embed: target below current dimension");
      BoundaryStep st;
      st.kind = BoundaryStep::Embed;
      st.embed_to = to;
      c.steps.push_back(std::move(st));
      c.m = to;
    } else if (op == "isometry") {
      BoundaryStep st;
      st.kind = BoundaryStep::Isometry;
      st.iso = isometry_from_json(s.at("matrix"));
      if (st.iso.n() != c.m) throw dimension_error("chain isometry: dimension mismatch");
      c.steps.push_back(std::move(st));
    } else if (op == "squash") {
      BoundaryStep st;
      st.kind = BoundaryStep::Squash;
      st.pole = vec_from_json(s.at("pole")).normalized();
      st.kappa = s.at("kappa").get<double>();
      if (static_cast<int>(st.pole.size()) != c.m) throw dimension_error("chain squash: pole dimension");
      if (!(st.kappa > 0)) throw validation_error("chain squash: kappa must be positive");
      c.steps.push_back(std::move(st));
    } else {
      throw validation_error("unknown boundary chain op: " + op);
    }
  }
  const int mj = j.value("m", c.m);
  if (mj != c.m) throw dimension_error("chain: declared m does not match the step chain");
  return c;
}

// --- reports ---------------------------------------------------------------------

struct RunMeta {
  std::uint64_t seed = 1;
  json config = json::object();
};

inline json report_envelope(const RunMeta& meta) {
  return json{{"v", "v1"}, {"seed", meta.seed}, {"natvol_version", "0.1.0"}, {"config", meta.config}};
}

inline json to_json(const BarycenterResult& r, const RunMeta& meta) {
  json out = report_envelope(meta);
  out["point"] = to_json(r.point);
  out["ball_point"] = to_json(to_ball(r.point));
  out["residual"] = r.residual;
  out["iterations"] = r.iterations;
  out["hessian_min_eig"] = r.hessian_min_eig;
  return out;
}

inline json to_json(const VolumeReport& r, const RunMeta& meta) {
  json out = report_envelope(meta);
  out["volume"] = r.volume;
  out["coarse_volume"] = r.coarse_volume;
  out["per_x"] = r.per_x;
  out["jac_min"] = r.jac_min;
  out["jac_mean"] = r.jac_mean;
  out["jac_max"] = r.jac_max;
  out["domain_volume"] = r.domain_volume;
  out["milnor_wood_margin"] = r.milnor_wood_margin;
  out["err_estimate"] = r.err_estimate;
  out["verdict"] = r.verdict;
  if (std::isfinite(r.equivariance_dev)) out["equivariance_dev"] = r.equivariance_dev;
  if (std::isfinite(r.min_slice_separation)) out["min_slice_separation"] = r.min_slice_separation;
  out["cells"] = r.cells;
  out["xcount"] = r.xcount;
  out["partial"] = r.partial;
  out["failed_cells"] = r.failed_cells;
  return out;
}

inline json to_json(const DegreeReport& r, const RunMeta& meta) {
  json out = report_envelope(meta);
  out["degree"] = r.degree;
  out["nv_source"] = r.nv_source;
  out["nv_target"] = r.nv_target;
  out["nv_ratio"] = r.nv_ratio;
  out["vol_phi_source"] = r.vol_phi_source;
  out["vol_phi_target"] = r.vol_phi_target;
  out["vol_ratio"] = r.vol_ratio;
  out["source_verdict"] = r.source_verdict;
  out["target_verdict"] = r.target_verdict;
  out["counting_note"] = r.counting_note;
  return out;
}

// Reports must contain no NaN/Inf anywhere.
inline void check_finite(const json& j) {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    throw validation_error("report contains a non-finite number");
  if (j.is_object() || j.is_array())
    for (const auto& el : j) check_finite(el);
}

inline std::string dump_report(const json& j) {
  check_finite(j);
  return j.dump(2) + "\n";
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot open output file: " + path);
  out << text;
}

inline std::string format_csv_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open input file: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace natvol
