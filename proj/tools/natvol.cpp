// natvol: barycenters, Patterson-Sullivan checks, natural maps, volumes and
// mapping-degree experiments on real hyperbolic spaces.
//
// Exit codes: 0 success, 1 validation/usage error, 2 numerical non-convergence.
// All reports carry schema "v1", the seed, and a config echo; identical
// config + seed produces byte-identical output, including under parallelism.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "natvol/barycenter.hpp"
#include "natvol/degree.hpp"
#include "natvol/instances.hpp"
#include "natvol/io.hpp"
#include "natvol/natural_map.hpp"
#include "natvol/volume.hpp"

namespace {

using namespace natvol;

struct GlobalOpts {
  int quad_order = 2048;
  int cells = 4096;
  double tol = 1e-10;
  int max_iter = 100;
  std::uint64_t seed = 1;
  int parallelism = 0;
  std::string out;
  std::string dump_cells;
  std::string format = "json";
};

void apply_parallelism(const GlobalOpts& g) {
#ifdef _OPENMP
  int threads = g.parallelism;
  if (threads <= 0) {
    if (const char* env = std::getenv("NATMAP_NUM_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)g;
#endif
}

// Execution-resource settings (parallelism) are not part of the semantic
// config: outputs are byte-identical across thread counts.
json config_echo(const GlobalOpts& g, const std::string& subcommand) {
  return json{{"subcommand", subcommand}, {"quad_order", g.quad_order}, {"cells", g.cells},
              {"tol", g.tol},             {"max_iter", g.max_iter},     {"format", g.format}};
}

void flatten_json(const json& j, const std::string& prefix, std::ostringstream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    int i = 0;
    for (const auto& el : j) flatten_json(el, prefix + "[" + std::to_string(i++) + "]", out);
  } else if (j.is_number_float()) {
    out << prefix << "," << format_csv_value(j.get<double>()) << "\n";
  } else {
    out << prefix << "," << j.dump() << "\n";
  }
}

void emit(const GlobalOpts& g, const json& report) {
  std::string text;
  if (g.format == "csv") {
    std::ostringstream os;
    os << "key,value\n";
    flatten_json(report, "", os);
    text = os.str();
  } else {
    text = dump_report(report);
  }
  if (g.out.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_text(g.out, text);
}

void emit_text(const GlobalOpts& g, const std::string& text, const std::string& path) {
  if (path.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_text(path, text);
}

BarycenterConfig solver_config(const GlobalOpts& g) {
  BarycenterConfig cfg;
  cfg.tol = g.tol;
  cfg.max_iter = g.max_iter;
  return cfg;
}

// --- subcommands ------------------------------------------------------------

int run_barycenter(const GlobalOpts& g, const std::string& measure_path) {
  const json mj = read_json_file(measure_path);
  const BoundaryMeasure mu = measure_from_json(mj);
  const auto res = barycenter(mu, solver_config(g));
  RunMeta meta{g.seed, config_echo(g, "barycenter")};
  meta.config["measure"] = measure_path;
  emit(g, to_json(res, meta));
  return 0;
}

int run_ps_check(const GlobalOpts& g, const std::string& domain, double s_param, double radius,
                 int bins) {
  auto inst = resolve_domain(domain, g.cells);
  const auto quad2 = SphereQuadrature::build(2, g.quad_order);
  Rng rng(g.seed);

  // density-ratio identity at n = 2 and n = 3
  double dev2 = 0.0, dev3 = 0.0;
  {
    const auto quad3 = SphereQuadrature::build(3, g.quad_order * 2);
    for (int rep = 0; rep < 20; ++rep) {
      const HPoint a2 = random_point(rng, 2, 1.5), b2 = random_point(rng, 2, 1.5);
      const auto mua = visual_measure(a2, quad2), mub = visual_measure(b2, quad2);
      const int i = rng.uniform_int(quad2.size());
      const double expected = std::exp(-critical_exponent(2) * busemann(b2, a2, quad2.nodes[i]));
      dev2 = std::max(dev2, std::abs(mua.weights[i] / mub.weights[i] - expected));
      const HPoint a3 = random_point(rng, 3, 1.2), b3 = random_point(rng, 3, 1.2);
      const auto m3a = visual_measure(a3, quad3), m3b = visual_measure(b3, quad3);
      const int k = rng.uniform_int(quad3.size());
      const double e3 = std::exp(-critical_exponent(3) * busemann(b3, a3, quad3.nodes[k]));
      dev3 = std::max(dev3, std::abs(m3a.weights[k] / m3b.weights[k] - e3));
    }
  }

  const HPoint o = HPoint::basepoint(2);
  const auto mu_orbit = ps_orbit_measure(inst.group, s_param, o, radius);
  const auto mu_vis = visual_measure(o, quad2);
  const double tv = binned_tv_s1(mu_orbit, mu_vis, bins);
  const double slope = orbit_growth_slope(inst.group, o, radius, radius / 2.0);
  const double p_lo = poincare_series(inst.group, s_param, o, radius);
  const double p_hi = poincare_series(inst.group, s_param + 0.25, o, radius);

  RunMeta meta{g.seed, config_echo(g, "ps-check")};
  meta.config["domain"] = domain;
  meta.config["s"] = s_param;
  meta.config["R"] = radius;
  json out = report_envelope(meta);
  out["density_ratio_dev_n2"] = dev2;
  out["density_ratio_dev_n3"] = dev3;
  out["binned_tv"] = tv;
  out["bins"] = bins;
  out["orbit_growth_slope"] = slope;
  out["critical_exponent"] = critical_exponent(inst.group.n);
  out["poincare"] = json{{"s", s_param}, {"value", p_lo}, {"s_next", s_param + 0.25},
                         {"value_next", p_hi}, {"decreasing", p_hi < p_lo}};
  emit(g, out);
  return 0;
}

int run_natmap_eval(const GlobalOpts& g, const std::string& cocycle_path, const std::string& a_json,
                    int x) {
  const auto spec = cocycle_from_json(read_json_file(cocycle_path), g.cells);
  const auto quad = SphereQuadrature::build(spec.n, g.quad_order);
  Cocycle sigma = spec.sigma;
  const auto ev = NaturalMapEvaluator::build(sigma, spec.boundary, quad, solver_config(g));
  const HPoint a = hpoint_from_json(json::parse(a_json));
  const auto full = ev.eval_full(a, x);
  const auto diff = ev.differential(a, x);

  RunMeta meta{g.seed, config_echo(g, "natmap eval")};
  meta.config["cocycle"] = cocycle_path;
  meta.config["x"] = x;
  json out = report_envelope(meta);
  out["a"] = to_json(a);
  out["value"] = to_json(full.point);
  out["residual"] = full.residual;
  out["iterations"] = full.iterations;
  out["jacobian"] = diff.jacobian();
  out["singular_values"] = to_json(diff.singular_values);
  emit(g, out);
  return 0;
}

int run_jacobian_scan(const GlobalOpts& g, const std::string& cocycle_path,
                      const std::string& domain, int stride) {
  const auto spec = cocycle_from_json(read_json_file(cocycle_path), g.cells);
  auto inst = resolve_domain(domain, g.cells);
  const auto quad = SphereQuadrature::build(spec.n, g.quad_order);
  Cocycle sigma = spec.sigma;
  const auto ev = NaturalMapEvaluator::build(sigma, spec.boundary, quad, solver_config(g));

  std::ostringstream os;
  os << "a0";
  for (int d = 1; d <= spec.n; ++d) os << ",a" << d;
  os << ",x,jac,sv_min,sv_max,residual\n";
  for (std::size_t c = 0; c < inst.domain.cells.size(); c += static_cast<std::size_t>(stride)) {
    const HPoint& a = inst.domain.cells[c].point;
    Vec w;
    ev.weights_at(a, w);
    for (int x = 0; x < sigma.space.count; ++x) {
      const auto at = ev.solve_pushed(w, x);
      const auto d = ev.differential(a, w, x, at);
      os << format_csv_value(a.coords[0]);
      for (int k = 1; k <= spec.n; ++k) os << "," << format_csv_value(a.coords[k]);
      os << "," << x << "," << format_csv_value(d.jacobian()) << ","
         << format_csv_value(d.singular_values.minCoeff()) << ","
         << format_csv_value(d.singular_values.maxCoeff()) << ","
         << format_csv_value(d.implicit_residual) << "\n";
    }
  }
  emit_text(g, os.str(), g.out);
  return 0;
}

void dump_cells_csv(const GlobalOpts& g, const VolumeReport& rep, const FundamentalDomain& dom) {
  if (g.dump_cells.empty()) return;
  std::ostringstream os;
  os << "cell,a0,a1,a2,weight,weighted_integrand\n";
  for (std::size_t c = 0; c < rep.cell_values.size(); ++c) {
    const auto& cell = dom.cells[c];
    os << c;
    for (int d = 0; d <= dom.n; ++d) os << "," << format_csv_value(cell.point.coords[d]);
    os << "," << format_csv_value(cell.weight) << "," << format_csv_value(rep.cell_values[c])
       << "\n";
  }
  write_text(g.dump_cells, os.str());
}

int run_volume(const GlobalOpts& g, const std::string& cocycle_path, const std::string& domain,
               const std::string& map_kind, const std::string& subname) {
  const auto spec = cocycle_from_json(read_json_file(cocycle_path), g.cells);
  auto inst = resolve_domain(domain, g.cells);
  const auto quad = SphereQuadrature::build(spec.n, g.quad_order);

  RunMeta meta{g.seed, config_echo(g, subname)};
  meta.config["cocycle"] = cocycle_path;
  meta.config["domain"] = domain;
  meta.config["map"] = map_kind;

  VolumeReport rep;
  if (map_kind == "embed") {
    ChainMapSpec chain{{PointMapChain::embed(spec.n, spec.m)}};
    rep = volume(EquivariantMapSpec::chain(std::move(chain)), inst.domain, spec.sigma.space);
  } else if (map_kind == "natural") {
    rep = natural_volume(inst.group, spec.sigma, spec.boundary, inst.domain, spec.sigma.space, quad,
                         solver_config(g));
  } else {
    throw validation_error("unknown map kind: " + map_kind + " (embed|natural)");
  }

  json out = to_json(rep, meta);
  if (map_kind == "natural" && rep.verdict == "maximal") {
    Cocycle sigma = spec.sigma;
    const auto ev = NaturalMapEvaluator::build(sigma, spec.boundary, quad, solver_config(g));
    const auto audit = rigidity_audit(rep, ev, inst.domain);
    json aj{{"attempted", audit.attempted},
            {"max_fit_residual", audit.max_fit_residual},
            {"inconsistent", audit.inconsistent}};
    json mats = json::array();
    for (const auto& m : audit.fitted) mats.push_back(to_json(m));
    aj["fitted"] = std::move(mats);
    out["rigidity_audit"] = std::move(aj);
  }
  emit(g, out);
  dump_cells_csv(g, rep, inst.domain);
  return 0;
}

int run_degree(const GlobalOpts& g, const std::string& covering, const std::string& cocycle_path) {
  CoveringMap f;
  if (covering == "genus2-cover-a1" || covering == "identity") {
    if (covering == "identity") {
      auto inst = resolve_domain("genus2", g.cells);
      f = identity_covering(inst.group, inst.domain);
    } else {
      f = genus2_cover_a1(g.cells);
    }
  } else {
    throw validation_error("unknown covering instance: " + covering);
  }
  const auto spec = cocycle_from_json(read_json_file(cocycle_path), g.cells);
  const auto quad = SphereQuadrature::build(spec.n, g.quad_order);
  const auto rep = degree_experiment(f, spec.sigma, spec.boundary, quad, solver_config(g));

  RunMeta meta{g.seed, config_echo(g, "degree")};
  meta.config["covering"] = covering;
  meta.config["cocycle"] = cocycle_path;
  emit(g, to_json(rep, meta));
  return 0;
}

int run_selftest(const GlobalOpts& g, bool fast) {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("%-44s %s\n", name, ok ? "ok" : "FAIL");
    if (!ok) ++failures;
  };
  Rng rng(g.seed);

  {  // hyperboloid kernel
    const HPoint o = HPoint::basepoint(3);
    bool ok = distance(o, o) < 1e-12;
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
      const HPoint a = random_point(rng, 3, 1.5), b = random_point(rng, 3, 1.5);
      const HIsometry gi = random_isometry(rng, 3);
      worst = std::max(worst, std::abs(distance(gi.apply(a), gi.apply(b)) - distance(a, b)));
      const HBoundaryPoint xi = random_boundary_point(rng, 3);
      const auto gr = busemann_grad(a, xi);
      worst = std::max(worst, std::abs(gr.norm() - 1.0));
    }
    check("hyperboloid: isometry invariance, unit grads", ok && worst < 1e-10);
  }
  {  // quadrature + visual measure
    const auto quad = SphereQuadrature::build(2, fast ? 512 : 2048);
    const HPoint a = random_point(rng, 2, 1.5);
    const auto nu = visual_measure(a, quad);
    const auto res = barycenter(nu);
    check("visual measure: barycenter recovers the point", distance(res.point, a) < 1e-8);
  }
  {  // octagon lattice (1024 cells minimum: the area check needs them)
    auto [G, dom] = genus2_octagon(fast ? 1024 : 4096);
    const bool rel = G.relator_defect() < 1e-8;
    const bool vol = std::abs(dom.total_volume - 4 * 3.14159265358979323846) < 1e-2;
    const auto orbit = orbit_ball(G, HPoint::basepoint(2), 4.0);
    check("genus2: relator, area, orbit ball", rel && vol && orbit.size() == 9);
  }
  {  // natural map of the standard embedding
    auto X = FiniteProbSpace::uniform(4);
    auto [G, dom] = genus2_octagon(fast ? 256 : 1024);
    auto sigma = standard_embedding_cocycle(G, 3, X);
    auto phi = BoundaryMapSpec::shared(BoundaryChain::embed_chain(2, 3));
    const auto quad = SphereQuadrature::build(2, fast ? 512 : 2048);
    Cocycle sig = sigma;
    const auto ev = NaturalMapEvaluator::build(sig, phi, quad, solver_config(g));
    const HPoint a = random_point(rng, 2, 1.5);
    const auto d = ev.differential(a, 0);
    const bool evalok = (d.value.coords - geodesic_embed(a, 3).coords).norm() < 1e-8;
    const bool jacok = std::abs(d.jacobian() - 1.0) < 1e-6;
    check("natural map: standard embedding is isometric", evalok && jacok);
    const auto rep = natural_volume(G, sigma, phi, dom, X, quad, solver_config(g));
    check("natural volume: maximal verdict", rep.verdict == "maximal");
    // determinism: recompute and compare serialized bytes
    const auto rep2 = natural_volume(G, sigma, phi, dom, X, quad, solver_config(g));
    RunMeta meta{g.seed, json::object()};
    check("determinism: identical report bytes",
          dump_report(to_json(rep, meta)) == dump_report(to_json(rep2, meta)));
  }
  std::printf("selftest: %s\n", failures == 0 ? "all ok" : "FAILURES");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"natural maps, volumes and degree experiments for cocycles on real hyperbolic spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOpts g;
  app.add_option("--quad-order", g.quad_order, "boundary quadrature node budget");
  app.add_option("--cells", g.cells, "fundamental-domain quadrature cells");
  app.add_option("--tol", g.tol, "solver tolerance");
  app.add_option("--max-iter", g.max_iter, "solver iteration cap");
  app.add_option("--seed", g.seed, "RNG seed (echoed in every report)");
  app.add_option("--parallelism", g.parallelism, "worker threads (0: NATMAP_NUM_THREADS or default)");
  app.add_option("--out", g.out, "output path (default: stdout)");
  app.add_option("--dump-cells", g.dump_cells, "write per-cell CSV dump to this path");
  app.add_option("--format", g.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  std::string measure_path, cocycle_path = "", domain = "genus2", covering = "genus2-cover-a1";
  std::string a_json = "[1,0,0]", map_kind = "natural";
  double s_param = 1.05, radius = 14.0;
  int bins = 16, x_index = 0, stride = 16;
  bool fast = false;

  auto* cmd_bary = app.add_subcommand("barycenter", "barycenter of a boundary measure (JSON in/out)");
  cmd_bary->fallthrough();
  cmd_bary->add_option("--measure", measure_path, "measure JSON path")->required();

  auto* cmd_ps = app.add_subcommand("ps-check", "Patterson-Sullivan density and orbit checks");
  cmd_ps->fallthrough();
  cmd_ps->add_option("--domain", domain, "lattice instance");
  cmd_ps->add_option("--s", s_param, "Poincare exponent");
  cmd_ps->add_option("--R", radius, "orbit radius");
  cmd_ps->add_option("--bins", bins, "TV histogram bins");

  auto* cmd_natmap = app.add_subcommand("natmap", "natural map evaluation");
  cmd_natmap->fallthrough();
  auto* cmd_eval = cmd_natmap->add_subcommand("eval", "evaluate F(a,x) and its differential");
  cmd_eval->fallthrough();
  cmd_eval->add_option("--cocycle", cocycle_path, "cocycle spec JSON")->required();
  cmd_eval->add_option("--a", a_json, "point coordinates as a JSON array");
  cmd_eval->add_option("--x", x_index, "point of X");
  auto* cmd_scan_sub = cmd_natmap->add_subcommand("jacobian-scan", "jacobian scan over a domain");
  cmd_scan_sub->fallthrough();
  cmd_scan_sub->add_option("--cocycle", cocycle_path, "cocycle spec JSON")->required();
  cmd_scan_sub->add_option("--domain", domain, "lattice instance");
  cmd_scan_sub->add_option("--stride", stride, "use every k-th domain cell");
  auto* cmd_scan = app.add_subcommand("jacobian-scan", "jacobian scan over a domain");
  cmd_scan->fallthrough();
  cmd_scan->add_option("--cocycle", cocycle_path, "cocycle spec JSON")->required();
  cmd_scan->add_option("--domain", domain, "lattice instance");
  cmd_scan->add_option("--stride", stride, "use every k-th domain cell");

  auto* cmd_vol = app.add_subcommand("volume", "volume of an equivariant map");
  cmd_vol->fallthrough();
  cmd_vol->add_option("--cocycle", cocycle_path, "cocycle spec JSON")->required();
  cmd_vol->add_option("--domain", domain, "lattice instance");
  cmd_vol->add_option("--map", map_kind, "embed|natural");

  auto* cmd_nv = app.add_subcommand("natural-volume", "natural volume of a cocycle");
  cmd_nv->fallthrough();
  cmd_nv->add_option("--cocycle", cocycle_path, "cocycle spec JSON")->required();
  cmd_nv->add_option("--domain", domain, "lattice instance");

  auto* cmd_deg = app.add_subcommand("degree", "mapping-degree experiment along a covering");
  cmd_deg->fallthrough();
  cmd_deg->add_option("--covering", covering, "identity|genus2-cover-a1");
  cmd_deg->add_option("--cocycle", cocycle_path, "cocycle spec JSON")->required();

  auto* cmd_self = app.add_subcommand("selftest", "run the invariant suite");
  cmd_self->fallthrough();
  cmd_self->add_flag("--fast", fast, "reduced sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage/help text
    const std::string name = e.get_name();
    return (name == "CallForHelp" || name == "CallForAllHelp" || name == "CallForVersion") ? 0 : 1;
  }
  apply_parallelism(g);

  try {
    if (cmd_bary->parsed()) return run_barycenter(g, measure_path);
    if (cmd_ps->parsed()) return run_ps_check(g, domain, s_param, radius, bins);
    if (cmd_natmap->parsed() && cmd_eval->parsed()) return run_natmap_eval(g, cocycle_path, a_json, x_index);
    if ((cmd_natmap->parsed() && cmd_scan_sub->parsed()) || cmd_scan->parsed())
      return run_jacobian_scan(g, cocycle_path, domain, stride);
    if (cmd_vol->parsed()) return run_volume(g, cocycle_path, domain, map_kind, "volume");
    if (cmd_nv->parsed()) return run_volume(g, cocycle_path, domain, "natural", "natural-volume");
    if (cmd_deg->parsed()) return run_degree(g, covering, cocycle_path);
    if (cmd_self->parsed()) return run_selftest(g, fast);
    std::fputs("no subcommand\n", stderr);
    return 1;
  } catch (const convergence_error& e) {
    std::fprintf(stderr, "numerical non-convergence: %s\n", e.what());
    return 2;
  } catch (const error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
