#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "natvol/instances.hpp"
#include "natvol/io.hpp"

using namespace natvol;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

#ifdef NATVOL_BIN
int run_cli(const std::string& args) {
  const std::string cmd = std::string(NATVOL_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}
#endif

}  // namespace

TEST_CASE("point / isometry / measure round trips") {
  Rng rng(61);
  const HPoint a = random_point(rng, 3, 1.5);
  CHECK((hpoint_from_json(to_json(a)).coords - a.coords).norm() == 0.0);

  const HIsometry g = random_isometry(rng, 3);
  CHECK((isometry_from_json(to_json(g)).matrix - g.matrix).cwiseAbs().maxCoeff() == 0.0);

  const auto quad = SphereQuadrature::build(2, 64);
  const auto mu = visual_measure(a.n() == 3 ? HPoint::basepoint(2) : a, quad);
  const auto mu2 = measure_from_json(to_json(mu));
  CHECK(mu2.size() == mu.size());
  for (int i = 0; i < mu.size(); ++i) {
    CHECK(mu2.weights[i] == mu.weights[i]);
    CHECK((mu2.atoms[i].coords - mu.atoms[i].coords).norm() < 1e-15);
  }
}

TEST_CASE("group and chain round trips") {
  auto [G, dom] = genus2_octagon(256);
  const json gj = to_json(G);
  const auto G2 = group_from_json(gj);
  CHECK(G2.rank() == G.rank());
  CHECK(G2.relators == G.relators);
  for (int g = 0; g < G.rank(); ++g)
    CHECK((G2.generators[g].matrix - G.generators[g].matrix).cwiseAbs().maxCoeff() == 0.0);

  Vec pole(3);
  pole << 0.3, 0.2, 1.0;
  const auto chain = BoundaryChain::embed_chain(2, 3).then_squash(pole, 1.5);
  const auto chain2 = chain_from_json(to_json(chain));
  CHECK(chain2.m == 3);
  Rng rng(62);
  for (int i = 0; i < 5; ++i) {
    const auto xi = random_boundary_point(rng, 2);
    CHECK((chain.apply(xi).coords - chain2.apply(xi).coords).norm() < 1e-15);
  }
}

TEST_CASE("cocycle spec loader") {
  json spec = {
      {"v", "v1"},
      {"n", 2},
      {"m", 3},
      {"group", "genus2"},
      {"space", {{"points", 8}}},
      {"rule", "representation"},
      {"representation", "standard-embedding"},
  };
  const auto cs = cocycle_from_json(spec, 256);
  CHECK(cs.sigma.m == 3);
  CHECK(cs.sigma.space.count == 8);
  CHECK(cs.sigma.is_representation);
  CHECK(cs.boundary.is_shared());

  // with a boundary chain and a twist
  spec["boundary"] = {{"chain", to_json(BoundaryChain::embed_chain(2, 3))}};
  json twists = json::array();
  Rng rng(63);
  for (int x = 0; x < 8; ++x) twists.push_back(to_json(random_isometry(rng, 3, 1.0)));
  spec["twist"] = twists;
  const auto cs2 = cocycle_from_json(spec, 256);
  CHECK_FALSE(cs2.sigma.is_representation);
  CHECK_FALSE(cs2.boundary.is_shared());
}

TEST_CASE("report envelope and finiteness guard") {
  RunMeta meta{77, json{{"subcommand", "test"}}};
  json rep = report_envelope(meta);
  CHECK(rep.at("v") == "v1");
  CHECK(rep.at("seed") == 77);
  rep["value"] = 1.25;
  CHECK_NOTHROW(dump_report(rep));
  rep["bad"] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dump_report(rep), validation_error);
}

#ifdef NATVOL_BIN
TEST_CASE("CLI: exit codes, determinism, schema") {
  const std::string tmp = "/tmp/natvol_test";
  REQUIRE(std::system(("mkdir -p " + tmp).c_str()) == 0);

  SUBCASE("unknown flags give usage errors (exit 1)") {
    CHECK(run_cli("--definitely-not-a-flag") == 1);
    CHECK(run_cli("barycenter") == 1);  // missing required --measure
  }

  SUBCASE("barycenter: runs, deterministic bytes, convergence failure exit 2") {
    // three atoms at 0/90/180 degrees, weights .4/.3/.3
    json mj = {{"atoms", json::array({json::array({1.0, 1.0, 0.0, 0.4}),
                                      json::array({1.0, 0.0, 1.0, 0.3}),
                                      json::array({1.0, -1.0, 0.0, 0.3})})}};
    write_text(tmp + "/measure.json", mj.dump());
    const std::string out1 = tmp + "/bary1.json", out2 = tmp + "/bary2.json";
    CHECK(run_cli("barycenter --measure " + tmp + "/measure.json --out " + out1) == 0);
    CHECK(run_cli("barycenter --measure " + tmp + "/measure.json --out " + out2) == 0);
    CHECK(slurp(out1) == slurp(out2));  // byte-identical
    const json rep = read_json_file(out1);
    CHECK(rep.at("v") == "v1");
    CHECK(rep.contains("seed"));
    CHECK(rep.at("residual").get<double>() < 1e-10);
    // a zero iteration budget cannot converge: exit 2 with a residual report
    CHECK(run_cli("barycenter --measure " + tmp + "/measure.json --max-iter 0") == 2);
  }

  SUBCASE("natural-volume on the standard embedding cocycle") {
    json spec = {{"v", "v1"},   {"n", 2},
                 {"m", 3},      {"group", "genus2"},
                 {"space", {{"points", 4}}}, {"rule", "representation"},
                 {"representation", "standard-embedding"}};
    write_text(tmp + "/std-embed.json", spec.dump());
    const std::string out = tmp + "/nv.json";
    CHECK(run_cli("natural-volume --cocycle " + tmp + "/std-embed.json --domain genus2 "
                  "--quad-order 256 --cells 256 --out " + out) == 0);
    const json rep = read_json_file(out);
    CHECK(rep.at("verdict") == "maximal");
    CHECK(std::abs(rep.at("volume").get<double>() - rep.at("domain_volume").get<double>()) < 1e-6);
    CHECK(rep.contains("rigidity_audit"));
    CHECK(rep.at("rigidity_audit").at("max_fit_residual").get<double>() < 1e-6);

    // csv format emits flattened key,value rows
    CHECK(run_cli("natural-volume --cocycle " + tmp + "/std-embed.json --domain genus2 "
                  "--quad-order 256 --cells 256 --format csv --out " + tmp + "/nv.csv") == 0);
    const std::string csv = slurp(tmp + "/nv.csv");
    CHECK(csv.rfind("key,value", 0) == 0);
    CHECK(csv.find("verdict,") != std::string::npos);
  }

  SUBCASE("byte determinism is independent of the parallelism setting") {
    json spec = {{"v", "v1"},   {"n", 2},
                 {"m", 3},      {"group", "genus2"},
                 {"space", {{"points", 4}}}, {"rule", "representation"},
                 {"representation", "standard-embedding"}};
    write_text(tmp + "/det-spec.json", spec.dump());
    const std::string base = "natural-volume --cocycle " + tmp + "/det-spec.json --domain genus2 "
                             "--quad-order 256 --cells 256 --seed 7 ";
    CHECK(run_cli(base + "--parallelism 1 --out " + tmp + "/p1.json") == 0);
    CHECK(run_cli(base + "--parallelism 3 --out " + tmp + "/p3.json") == 0);
    const std::string a = slurp(tmp + "/p1.json"), b = slurp(tmp + "/p3.json");
    CHECK(a == b);
    CHECK(a.find("\"seed\": 7") != std::string::npos);
  }

  SUBCASE("jacobian-scan CSV schema") {
    json spec = {{"v", "v1"},   {"n", 2},
                 {"m", 3},      {"group", "genus2"},
                 {"space", {{"points", 2}}}, {"rule", "representation"},
                 {"representation", "standard-embedding"}};
    write_text(tmp + "/scan-spec.json", spec.dump());
    CHECK(run_cli("jacobian-scan --cocycle " + tmp + "/scan-spec.json --domain genus2 "
                  "--quad-order 256 --cells 256 --stride 64 --out " + tmp + "/scan.csv") == 0);
    const std::string csv = slurp(tmp + "/scan.csv");
    CHECK(csv.rfind("a0,a1,a2,x,jac,sv_min,sv_max,residual", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 2);
  }

  SUBCASE("selftest") { CHECK(run_cli("selftest --fast --quad-order 256 --cells 256") == 0); }
}
#endif
