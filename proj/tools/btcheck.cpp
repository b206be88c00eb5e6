#include <CLI11.hpp>
#include <btk/characters.hpp>
#include <btk/json_io.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

using namespace btk;

namespace {

struct RunConfig {
  std::string command;
  long p = 2, d = 2, r = 0, M = -1;
  std::uint64_t seed = 0;
  std::size_t budget_simplices = 1u << 20;
  std::size_t budget_subgroup = 1u << 20;
  std::string in_path, out_path;
  bool p_set = false, d_set = false, r_set = false, m_set = false;
};

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    fail("ParseError", std::string("input needs key '") + key + "'");
  return j.at(key);
}

Json read_input(const RunConfig& cfg) {
  if (cfg.in_path.empty()) fail("ParseError", cfg.command + " needs --in <file>");
  std::ifstream f(cfg.in_path);
  if (!f) fail("ParseError", "cannot open '" + cfg.in_path + "'");
  try {
    return Json::parse(f);
  } catch (const std::exception& ex) {
    fail("ParseError", std::string("invalid JSON: ") + ex.what());
  }
}

void require_prime(long p) {
  if (p < 2) fail("ParseError", "p must be a prime");
  for (long q = 2; q * q <= p; ++q)
    if (p % q == 0) fail("ParseError", std::to_string(p) + " is not prime");
}

Json base_config(const RunConfig& cfg) {
  Json c;
  c["p"] = cfg.p;
  c["d"] = cfg.d;
  c["r"] = cfg.r;
  c["M"] = cfg.M;
  c["seed"] = cfg.seed;
  c["budget-simplices"] = cfg.budget_simplices;
  c["budget-subgroup"] = cfg.budget_subgroup;
  if (!cfg.in_path.empty()) c["in"] = cfg.in_path;
  return c;
}

// append without the prefixing Report::merge applies
void absorb(Report& rep, const Report& sub) {
  for (const Check& c : sub.checks) rep.checks.push_back(c);
}

/* Builds the system a model-driven command operates on: an explicit system
 * from an --in document carrying "support", a reference congruence model from
 * an --in model description (flags override its fields), or the reference
 * model described by the flags alone. */
struct Loaded {
  IdempotentSystem system;
  Json model;
};

Loaded load_from_doc(const RunConfig& cfg, const Json& doc) {
  if (doc.is_object() && doc.contains("support"))
    return {system_from_json(doc), Json{{"source", "explicit"}}};
  ModelConfig mc = model_from_json(doc);
  if (cfg.p_set) mc.p = cfg.p;
  if (cfg.d_set) mc.d = cfg.d;
  if (cfg.r_set) mc.r = cfg.r;
  if (cfg.m_set) mc.M = cfg.M;
  require_prime(mc.p);
  if (mc.d != 2) fail("ParseError", "reference congruence models need d = 2");
  return {reference_tree_model(mc.p, mc.r, mc.space, mc.M, cfg.budget_subgroup),
          model_to_json(mc)};
}

Loaded load_system(const RunConfig& cfg) {
  if (!cfg.in_path.empty()) return load_from_doc(cfg, read_input(cfg));
  ModelConfig mc;
  mc.p = cfg.p;
  mc.d = cfg.d;
  mc.r = cfg.r;
  mc.M = cfg.M;
  require_prime(mc.p);
  if (mc.d != 2) fail("ParseError", "reference congruence models need d = 2");
  return {reference_tree_model(mc.p, mc.r, mc.space, mc.M, cfg.budget_subgroup),
          model_to_json(mc)};
}

/* ---- geometric commands ---- */

void cmd_hull(Report& rep, const RunConfig& cfg) {
  Json j = read_input(cfg);
  ApartmentShape shape = shape_from_json(j);
  Polysimplex s = polysimplex_from_json(shape, field(j, "sigma"));
  Polysimplex t = polysimplex_from_json(shape, field(j, "tau"));
  SubComplex h = hull(shape, s, t, cfg.budget_simplices);
  rep.add(Check{"hull", true, subcomplex_to_json(h)});
}

void cmd_convex_check(Report& rep, const RunConfig& cfg) {
  SubComplex sigma = subcomplex_from_json(read_input(cfg));
  ConvexityResult cr = is_convex(sigma, cfg.budget_simplices);
  Json w;
  if (cr.convex) {
    w = Json{{"cells", sigma.size()}};
  } else {
    w = Json{{"s", to_string(cr.witness->s)},
             {"t", to_string(cr.witness->t)},
             {"escaped", to_string(cr.witness->escaped)}};
  }
  rep.add(Check{"convex", cr.convex, std::move(w)});
}

void cmd_admissible_check(Report& rep, const RunConfig& cfg) {
  SubComplex sigma = subcomplex_from_json(read_input(cfg));
  AdmissibilityResult ar = is_admissible(sigma, cfg.budget_simplices);
  Json w;
  if (ar.admissible) {
    w = Json{{"cells", sigma.size()}};
  } else {
    w = Json{{"reason", ar.reason}};
    if (ar.witness_cell) w["cell"] = to_string(*ar.witness_cell);
    if (ar.witness_vertex) w["vertex"] = to_string(*ar.witness_vertex);
  }
  rep.add(Check{"admissible", ar.admissible, std::move(w)});
}

void cmd_minimal_face(Report& rep, const RunConfig& cfg) {
  Json j = read_input(cfg);
  ApartmentShape shape = shape_from_json(j);
  Vertex x = vertex_from_json(shape, field(j, "x"));
  Polysimplex sigma = polysimplex_from_json(shape, field(j, "sigma"));
  Polysimplex got = minimal_face(shape, x, sigma);
  Polysimplex oracle = minimal_face_bruteforce(shape, x, sigma);
  rep.add(Check{"minimal-face", got == oracle, polysimplex_to_json(shape, got)});

  MaximalConeResult mc = maximal_cone(shape, x, sigma);
  std::vector<Vertex> base = sigma.vertices();
  base.push_back(x);
  bool cone_ok = sigma.is_face_of(mc.sigma) && hull_constraints(shape, base).contains(mc.sigma);
  Json w{{"sigma", polysimplex_to_json(shape, mc.sigma)}};
  if (mc.omega) w["omega"] = polysimplex_to_json(shape, *mc.omega);
  rep.add(Check{"maximal-cone", cone_ok, std::move(w)});
}

void cmd_paths(Report& rep, const RunConfig& cfg) {
  Json j = read_input(cfg);
  ApartmentShape shape = shape_from_json(j);
  Polysimplex sigma = polysimplex_from_json(shape, field(j, "sigma"));
  Polysimplex tau = polysimplex_from_json(shape, field(j, "tau"));
  if (!j.contains("y") && !j.contains("omega"))
    fail("ParseError", "paths needs \"y\" (vertex path) or \"omega\" (simplex path)");
  if (j.contains("y")) {
    Vertex y = vertex_from_json(shape, j.at("y"));
    std::vector<Vertex> path = vertex_path(shape, sigma, tau, y);
    Json w = Json::array();
    for (const Vertex& v : path) w.push_back(vertex_to_json(v));
    rep.add(Check{"vertex-path", true, Json{{"path", std::move(w)}}});
  }
  if (j.contains("omega")) {
    Polysimplex omega = polysimplex_from_json(shape, j.at("omega"));
    std::vector<Polysimplex> path = simplex_path(shape, sigma, tau, omega);
    Json w = Json::array();
    for (const Polysimplex& s : path) w.push_back(polysimplex_to_json(shape, s));
    rep.add(Check{"simplex-path", true, Json{{"path", std::move(w)}}});
  }
}

/* The four-coordinate configuration where the hull of a vertex and an edge
 * strictly exceeds the union of the hulls over the edge's endpoints, together
 * with the dominant-chain inequality descriptions of all three hulls. */
void cmd_counterexample_a3(Report& rep, const RunConfig& cfg) {
  ApartmentShape a3 = irreducible(4);
  auto v = [&](Coord w0, Coord w1, Coord w2, Coord w3) {
    return make_vertex(a3, {w0, w1, w2, w3});
  };
  Vertex x = v(0, 0, 0, 0), y = v(4, 2, 2, 0);
  Vertex z1 = v(4, 2, 1, 0), z2 = v(4, 3, 2, 0);
  rep.add("endpoints-adjacent", adjacent(a3, z1, z2));

  auto vset = [&](const Polysimplex& a, const Polysimplex& b) {
    return hull_vertex_set(hull_constraints(a3, a, b), cfg.budget_simplices);
  };
  Polysimplex e = span(a3, {z1, z2});
  std::set<Vertex> h1 = vset(vertex_cell(a3, x), vertex_cell(a3, z1));
  std::set<Vertex> h2 = vset(vertex_cell(a3, x), vertex_cell(a3, z2));
  std::set<Vertex> he = vset(vertex_cell(a3, x), e);

  rep.add("target-in-edge-hull", he.count(y) != 0);
  rep.add("target-outside-z1-hull", h1.count(y) == 0);
  rep.add("target-outside-z2-hull", h2.count(y) == 0);

  // inequality descriptions, enumerated over the dominant bounding box:
  //   h1: w0>=w1>=w2>=0, w0<=w1+2, w1<=w2+1, w2<=1
  //   h2: same ordering,  w0<=w1+1, w1<=w2+1, w2<=2
  //   he: same ordering,  w0<=w1+2, w1<=w2+1, w2<=2, w0<=4
  std::set<Vertex> h1x, h2x, hex;
  for (Coord w2 = 0; w2 <= 2; ++w2)
    for (Coord w1 = w2; w1 <= w2 + 1; ++w1)
      for (Coord w0 = w1; w0 <= w1 + 2; ++w0) {
        if (w2 <= 1) h1x.insert(v(w0, w1, w2, 0));
        if (w0 <= w1 + 1) h2x.insert(v(w0, w1, w2, 0));
        if (w0 <= 4) hex.insert(v(w0, w1, w2, 0));
      }
  rep.add(Check{"z1-hull-description", h1 == h1x, Json{{"size", h1.size()}}});
  rep.add(Check{"z2-hull-description", h2 == h2x, Json{{"size", h2.size()}}});
  rep.add(Check{"edge-hull-description", he == hex, Json{{"size", he.size()}}});
}

void cmd_ball(Report& rep, const RunConfig& cfg) {
  require_prime(cfg.p);
  if (cfg.d < 2) fail("ParseError", "d must be at least 2");
  LatticeContext ctx{cfg.p, cfg.d};
  BuildingComplex bc = ball(ctx, standard_vertex(ctx), cfg.r, cfg.budget_simplices);
  std::size_t n = bc.vertex_list().size();
  rep.add(Check{"ball", true,
                Json{{"vertices", n}, {"cells", bc.size()},
                     {"complex", building_complex_to_json(bc)}}});
  if (cfg.d == 2) {
    // regular tree: 1 + (p+1) * (p^r - 1) / (p - 1) vertices within radius r
    long long expect = 1, shell = cfg.p + 1;
    for (long k = 1; k <= cfg.r; ++k, shell *= cfg.p) expect += shell;
    rep.add(Check{"tree-vertex-count", n == static_cast<std::size_t>(expect),
                  Json{{"vertices", n}, {"expected", expect}}});
  }
}

/* ---- model-driven commands ---- */

void cmd_group_consistency(Report& rep, const RunConfig& cfg) {
  Loaded l = load_system(cfg);
  rep.config["model"] = l.model;
  if (!l.system.model) fail("Unsupported", "group-consistency needs a finite group model");
  absorb(rep, check_group_consistency(l.system));
}

void cmd_idempotent_consistency(Report& rep, const RunConfig& cfg) {
  Loaded l = load_system(cfg);
  rep.config["model"] = l.model;
  absorb(rep, check_idempotent_consistency(l.system, cfg.budget_simplices));
}

void cmd_support_projection(Report& rep, const RunConfig& cfg) {
  Loaded l = load_system(cfg);
  rep.config["model"] = l.model;
  absorb(rep, check_support_projection(l.system, cfg.budget_simplices));
}

void cmd_resolve(Report& rep, const RunConfig& cfg) {
  Loaded l = load_system(cfg);
  rep.config["model"] = l.model;
  absorb(rep, verify_resolution(l.system, l.system.sigma, cfg.budget_simplices));
}

void cmd_corner_fullness(Report& rep, const RunConfig& cfg) {
  Loaded l = load_system(cfg);
  rep.config["model"] = l.model;
  const SubComplex& sigma = l.system.sigma;
  if (sigma.empty()) fail("PreconditionViolated", "the support complex is empty");
  Polysimplex delta = sigma.cells_of_dim(sigma.max_dim()).front();
  rep.config["delta"] = polysimplex_to_json(sigma.shape(), delta);
  absorb(rep, check_corner_fullness(l.system, delta, {}, cfg.budget_simplices));
}

void cmd_character(Report& rep, const RunConfig& cfg) {
  Json doc;
  bool have_doc = !cfg.in_path.empty();
  if (have_doc) doc = read_input(cfg);
  Loaded l = have_doc ? load_from_doc(cfg, doc) : load_system(cfg);
  rep.config["model"] = l.model;
  rep.config["rng"] = "splitmix64-counter";
  absorb(rep, check_lefschetz(l.system, cfg.budget_simplices));
  if (l.system.model) {
    Rng rng(cfg.seed);
    absorb(rep, check_hecke_traces(l.system, rng, 20, cfg.budget_simplices));
  }
  if (have_doc && doc.is_object() && doc.contains("elements")) {
    OrientedComplex oc = orient(l.system.sigma);
    for (const Json& ej : doc.at("elements")) {
      if (!ej.is_number_integer()) fail("ParseError", "\"elements\" must hold integers");
      int idx = ej.get<int>();
      std::string name = "character-" + std::to_string(idx);
      const SymmetryAction* g = nullptr;
      for (const SymmetryAction& s : l.system.symmetries)
        if (!s.twisted && s.group_element == idx) g = &s;
      if (!g) {
        rep.add(Check::failed(name, Json{{"kind", "UnknownElement"},
                                         {"message", "no declared translation for this index"}}));
        continue;
      }
      CharacterReport cr = lefschetz_sum(l.system, oc, *g, cfg.budget_simplices);
      rep.add(Check{name, cr.matches(), cr.to_json()});
    }
  }
}

/* ---- seeded batteries ---- */

Polysimplex random_cell(Rng& rng, const ApartmentShape& shape, Coord spread) {
  std::vector<Coord> base(shape.total());
  for (auto& c : base) c = rng.range(-spread, spread);
  Vertex b = make_vertex(shape, base);
  std::vector<Vertex> vs{b};
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    int m = shape.factors[f];
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    for (int i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    int len = static_cast<int>(rng.below(m));
    auto [beg, end] = shape.range(f);
    (void)end;
    std::vector<Coord> cur = b.x;
    for (int s = 0; s < len; ++s) {
      ++cur[beg + perm[s]];
      vs.push_back(make_vertex(shape, cur));
    }
  }
  return span(shape, vs);
}

Vertex random_vertex(Rng& rng, const ApartmentShape& shape, Coord spread) {
  std::vector<Coord> x(shape.total());
  for (auto& c : x) c = rng.range(-spread, spread);
  return make_vertex(shape, x);
}

void hull_battery(Report& rep, Rng& rng, int instances, std::size_t budget) {
  for (int i = 0; i < instances; ++i) {
    Rng sub = rng.derive(1000 + i);
    ApartmentShape shape = i % 2 == 0 ? irreducible(3) : irreducible(4);
    Polysimplex s = random_cell(sub, shape, 2);
    Polysimplex t = random_cell(sub, shape, 2);
    SubComplex h = hull(shape, s, t, budget);
    SubComplex seed(shape);
    seed.insert(s);
    seed.insert(t);
    SubComplex closure = convex_closure(seed, budget);
    rep.add(Check{"hull-" + std::to_string(i), h == closure,
                  Json{{"cells", h.size()}, {"closure-cells", closure.size()}}});
  }
}

void lemma_battery(Report& rep, Rng& rng, int instances, std::size_t budget) {
  ApartmentShape prod{{3, 2}};
  for (int i = 0; i < instances; ++i) {
    Rng sub = rng.derive(2000 + i);
    const ApartmentShape& shape =
        i % 3 == 0 ? irreducible(3) : i % 3 == 1 ? irreducible(4) : prod;
    Polysimplex t = random_cell(sub, shape, 2);
    Vertex x = random_vertex(sub, shape, 3);
    bool face_ok = minimal_face(shape, x, t) == minimal_face_bruteforce(shape, x, t);
    MaximalConeResult mc = maximal_cone(shape, x, t);
    std::vector<Vertex> base = t.vertices();
    base.push_back(x);
    HullConstraints hc = hull_constraints(shape, base);
    bool cone_ok = t.is_face_of(mc.sigma) && hc.contains(mc.sigma);
    // maximality: no strictly larger coface stays inside the hull
    SubComplex st = star(shape, mc.sigma);
    for (const Polysimplex& cf : st.cells())
      if (mc.sigma.is_face_of(cf) && cf != mc.sigma) cone_ok = cone_ok && !hc.contains(cf);
    rep.add(Check::of("lemma-" + std::to_string(i), face_ok && cone_ok,
                      Json{{"minimal-face", face_ok}, {"maximal-cone", cone_ok}}));
    (void)budget;
  }
}

void resolve_battery(Report& rep, Rng& rng, int instances, std::size_t budget) {
  ApartmentShape a2 = irreducible(3);
  for (int i = 0; i < instances; ++i) {
    Rng sub = rng.derive(3000 + i);
    SubComplex sigma = random_admissible_complex(a2, sub, 2, 3, budget);
    IdempotentSystem e = random_diagonal_system(sigma, sub, 2, 6, budget);
    rep.merge(verify_resolution(e, sigma, budget), "resolve-" + std::to_string(i));
  }
}

void mv_battery(Report& rep, Rng& rng, int instances, std::size_t budget) {
  ApartmentShape a2 = irreducible(3);
  int walls = 0;
  for (int i = 0; i < instances; ++i) {
    Rng sub = rng.derive(4000 + i);
    SubComplex sigma = random_admissible_complex(a2, sub, 2, 3, budget);
    IdempotentSystem e = random_diagonal_system(sigma, sub, 2, 6, budget);
    std::string tag = "mv-" + std::to_string(i);
    std::optional<AffineRoot> root = find_separating_root(sigma);
    if (!root) {
      rep.add(Check{tag + ".no-wall", true, Json{{"cells", sigma.size()}}});
      continue;
    }
    HalfspaceSplit hs = halfspace_split(sigma, *root, budget);
    rep.merge(check_mayer_vietoris(e, hs.plus, hs.minus, hs.zero, budget), tag);
    ++walls;
  }
  rep.add(Check{"walls-found", walls > 0, Json{{"count", walls}}});
}

void serre_battery(Report& rep, Rng& rng, int instances, std::size_t budget) {
  ApartmentShape a2 = irreducible(3);
  for (int i = 0; i < instances; ++i) {
    Rng sub = rng.derive(5000 + i);
    SubComplex sigma = random_admissible_complex(a2, sub, 2, 3, budget);
    IdempotentSystem e = random_diagonal_system(sigma, sub, 2, 6, budget);
    // nested coordinate submodules are invariant under every diagonal e_x
    std::size_t n = e.module_dim;
    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k) perm[k] = k;
    for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[sub.below(k)]);
    std::size_t k1 = sub.below(n + 1), k2 = k1 + sub.below(n - k1 + 1);
    QMat sub_basis(n, k1), mid_basis(n, k2);
    for (std::size_t c = 0; c < k2; ++c) {
      if (c < k1) sub_basis.at(perm[c], c) = 1;
      mid_basis.at(perm[c], c) = 1;
    }
    rep.merge(check_serre_closure(e, sigma, sub_basis, mid_basis), "serre-" + std::to_string(i));
  }
}

void stabilization_battery(Report& rep, Rng& rng, std::size_t budget) {
  ApartmentShape a2 = irreducible(3);
  std::vector<SubComplex> chain;
  for (Coord k = 1; k <= 3; ++k)
    chain.push_back(enumerate_box(a2, {0, 0, 0}, {k, k, 0}, budget));
  Rng sub = rng.derive(6000);
  IdempotentSystem e = random_diagonal_system(chain.back(), sub, 3, 6, budget);
  rep.merge(check_stabilization(e, chain, budget), "stabilize");
}

void cmd_mayer_vietoris(Report& rep, const RunConfig& cfg) {
  rep.config["rng"] = "splitmix64-counter";
  Rng rng(cfg.seed);
  mv_battery(rep, rng, 20, cfg.budget_simplices);
}

void cmd_serre(Report& rep, const RunConfig& cfg) {
  rep.config["rng"] = "splitmix64-counter";
  Rng rng(cfg.seed);
  serre_battery(rep, rng, 20, cfg.budget_simplices);
}

void cmd_battery(Report& rep, const RunConfig& cfg) {
  rep.config["rng"] = "splitmix64-counter";
  Rng rng(cfg.seed);
  hull_battery(rep, rng, 10, cfg.budget_simplices);
  lemma_battery(rep, rng, 20, cfg.budget_simplices);
  resolve_battery(rep, rng, 4, cfg.budget_simplices);
  mv_battery(rep, rng, 6, cfg.budget_simplices);
  serre_battery(rep, rng, 6, cfg.budget_simplices);
  stabilization_battery(rep, rng, cfg.budget_simplices);

  IdempotentSystem tree = reference_tree_model(2, 0, "regular", -1, cfg.budget_subgroup);
  rep.merge(check_group_consistency(tree), "tree-group");
  rep.merge(check_idempotent_consistency(tree, cfg.budget_simplices), "tree-system");
  rep.merge(verify_resolution(tree, tree.sigma, cfg.budget_simplices), "tree-resolve");
  rep.merge(check_lefschetz(tree, cfg.budget_simplices), "tree-lefschetz");
  Rng hr(cfg.seed);
  rep.merge(check_hecke_traces(tree, hr, 10, cfg.budget_simplices), "tree-hecke");
}

Report run(const RunConfig& cfg) {
  Report rep;
  rep.command = cfg.command;
  rep.config = base_config(cfg);
  if (cfg.command == "hull") cmd_hull(rep, cfg);
  else if (cfg.command == "convex-check") cmd_convex_check(rep, cfg);
  else if (cfg.command == "admissible-check") cmd_admissible_check(rep, cfg);
  else if (cfg.command == "minimal-face") cmd_minimal_face(rep, cfg);
  else if (cfg.command == "paths") cmd_paths(rep, cfg);
  else if (cfg.command == "counterexample-a3") cmd_counterexample_a3(rep, cfg);
  else if (cfg.command == "ball") cmd_ball(rep, cfg);
  else if (cfg.command == "group-consistency") cmd_group_consistency(rep, cfg);
  else if (cfg.command == "idempotent-consistency") cmd_idempotent_consistency(rep, cfg);
  else if (cfg.command == "support-projection") cmd_support_projection(rep, cfg);
  else if (cfg.command == "resolve") cmd_resolve(rep, cfg);
  else if (cfg.command == "mayer-vietoris") cmd_mayer_vietoris(rep, cfg);
  else if (cfg.command == "serre") cmd_serre(rep, cfg);
  else if (cfg.command == "corner-fullness") cmd_corner_fullness(rep, cfg);
  else if (cfg.command == "character") cmd_character(rep, cfg);
  else if (cfg.command == "battery") cmd_battery(rep, cfg);
  else fail("ParseError", "unknown command " + cfg.command);
  return rep;
}

void emit(const RunConfig& cfg, const Report& rep) {
  std::string text = rep.to_json(false).dump(2) + "\n";
  if (cfg.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out_path);
  if (!f) fail("ParseError", "cannot write '" + cfg.out_path + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"exact checks for apartment geometry, idempotent systems, and resolutions"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"hull", "hull of two polysimplices (half-space algorithm)"},
      {"convex-check", "test a subcomplex for convexity"},
      {"admissible-check", "test a subcomplex for admissibility"},
      {"minimal-face", "minimal face and maximal cone at a vertex, with oracles"},
      {"paths", "self-verifying vertex/simplex paths inside a hull"},
      {"counterexample-a3", "four-coordinate hull additivity counterexample"},
      {"ball", "finite ball in the lattice building"},
      {"group-consistency", "congruence subgroup family checks"},
      {"idempotent-consistency", "consistent-system axioms for the chosen model"},
      {"support-projection", "image/kernel/absorption checks for the support projection"},
      {"resolve", "chain and cochain resolution checks"},
      {"mayer-vietoris", "seeded half-space split rank identities"},
      {"serre", "seeded hereditary checks for exact triples"},
      {"corner-fullness", "transport of one chamber's projection over the complex"},
      {"character", "Lefschetz fixed-point sums and Hecke traces"},
      {"battery", "seeded randomized suite over all harnesses"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--p", cfg.p, "residue characteristic");
    sub->add_option("--d", cfg.d, "matrix dimension");
    sub->add_option("--r", cfg.r, "congruence depth / ball radius");
    sub->add_option("--precision", cfg.M, "matrix entries are taken mod p^M");
    sub->add_option("--seed", cfg.seed, "seed for randomized batteries");
    sub->add_option("--budget-simplices", cfg.budget_simplices, "polysimplex enumeration cap");
    sub->add_option("--budget-subgroup", cfg.budget_subgroup, "subgroup enumeration cap");
    sub->add_option("--in", cfg.in_path, "input JSON document");
    sub->add_option("--out", cfg.out_path, "write the report here instead of stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();
  cfg.p_set = sub->count("--p") > 0;
  cfg.d_set = sub->count("--d") > 0;
  cfg.r_set = sub->count("--r") > 0;
  cfg.m_set = sub->count("--precision") > 0;

  Report rep;
  int status = 0;
  try {
    rep = run(cfg);
    status = rep.all_pass() ? 0 : 1;
  } catch (const Error& err) {
    if (err.kind == "ParseError") {
      std::cerr << err.what() << "\n";
      return 2;
    }
    rep.command = cfg.command;
    rep.config = base_config(cfg);
    rep.checks.push_back(Check::failed("run", Json{{"kind", err.kind}, {"message", err.what()}}));
    status = err.kind == "BudgetExceeded" ? 3 : 1;
  }
  try {
    emit(cfg, rep);
  } catch (const Error& err) {
    std::cerr << err.what() << "\n";
    return 2;
  }
  return status;
}
