#pragma once

// Named desk-scale instances and the JSON cocycle-spec loader shared by the
// CLI and the test suites.

#include <string>
#include <utility>

#include "natvol/cocycle.hpp"
#include "natvol/degree.hpp"
#include "natvol/group.hpp"
#include "natvol/io.hpp"

namespace natvol {

struct DomainInstance {
  GroupPresentation group;
  FundamentalDomain domain;
};

// "genus2", "genus2-cover-a1", or a path to a group JSON (which then has no
// quadrature domain and can only be used where a domain is not required).
inline DomainInstance resolve_domain(const std::string& name, int cells) {
  if (name == "genus2") {
    auto [g, d] = genus2_octagon(cells);
    return {std::move(g), std::move(d)};
  }
  if (name == "genus2-cover-a1") {
    auto [g, d] = genus2_octagon(cells);
    auto sub = index2_cover(g, {1, 0, 0, 0});
    FundamentalDomain dd = doubled_domain(d, g.evaluate(sub.coset_rep));
    return {std::move(sub.group), std::move(dd)};
  }
  throw validation_error("unknown domain instance: " + name +
                         " (expected genus2 or genus2-cover-a1)");
}

struct CocycleSpec {
  GroupPresentation group;
  Cocycle sigma;
  BoundaryMapSpec boundary;
  int n = 0, m = 0;
};

// {"v":"v1","n":2,"m":3,"group":"genus2"|{...},"space":{...},
//  "rule":"representation","representation":"standard-embedding"|[mats],
//  "twist":[mats] (optional), "boundary":{"chain":{...}}|{"per_x":[...]}}
inline CocycleSpec cocycle_from_json(const json& j, int domain_cells = 4096) {
  CocycleSpec spec;
  spec.n = j.at("n").get<int>();
  spec.m = j.at("m").get<int>();

  if (j.at("group").is_string()) {
    spec.group = resolve_domain(j.at("group").get<std::string>(), domain_cells).group;
  } else {
    spec.group = group_from_json(j.at("group"));
  }
  if (spec.group.n != spec.n) throw dimension_error("cocycle spec: group dimension mismatch");

  FiniteProbSpace X = j.contains("space") ? space_from_json(j.at("space"), &spec.group)
                                          : FiniteProbSpace::uniform(16);

  const std::string rule = j.value("rule", std::string("representation"));
  if (rule != "representation")
    throw validation_error("cocycle spec: only representation rules are supported in v1");
  std::vector<HIsometry> rho;
  if (!j.contains("representation") ||
      (j.at("representation").is_string() &&
       j.at("representation").get<std::string>() == "standard-embedding")) {
    for (const auto& g : spec.group.generators) rho.push_back(corner_inject(g, spec.m));
  } else {
    for (const auto& g : j.at("representation")) rho.push_back(isometry_from_json(g));
  }
  spec.sigma = rep_cocycle(spec.group, rho, X);

  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    if (b.contains("chain")) {
      spec.boundary = BoundaryMapSpec::shared(chain_from_json(b.at("chain")));
    } else if (b.contains("per_x")) {
      std::vector<BoundaryChain> chains;
      for (const auto& c : b.at("per_x")) chains.push_back(chain_from_json(c));
      spec.boundary = BoundaryMapSpec::per_x(std::move(chains));
    } else {
      throw validation_error("cocycle spec: boundary needs chain or per_x");
    }
  } else {
    spec.boundary = BoundaryMapSpec::shared(BoundaryChain::embed_chain(spec.n, spec.m));
  }
  if (spec.boundary.n != spec.n || spec.boundary.m != spec.m)
    throw dimension_error("cocycle spec: boundary dimensions mismatch");

  if (j.contains("twist")) {
    std::vector<HIsometry> f;
    for (const auto& g : j.at("twist")) f.push_back(isometry_from_json(g));
    if (static_cast<int>(f.size()) != X.count)
      throw validation_error("cocycle spec: twist must give one isometry per point of X");
    spec.sigma = twist(spec.sigma, f);
    spec.boundary = twist_boundary(spec.boundary, f);
  }
  return spec;
}

}  // namespace natvol
