#include <btk/characters.hpp>

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

using namespace btk;

namespace {

template <class F>
std::string thrown_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind;
  }
  return "";
}

// reference models are expensive to build, so share them across cases
const IdempotentSystem& segment_model(long p, long r, const std::string& space) {
  static std::map<std::string, IdempotentSystem> cache;
  std::string key = std::to_string(p) + "/" + std::to_string(r) + "/" + space;
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, reference_tree_model(p, r, space)).first;
  return it->second;
}

SymmetryAction identity_action(const IdempotentSystem& e) {
  SymmetryAction id;
  id.name = "id";
  id.space_perm.resize(e.module_dim);
  std::iota(id.space_perm.begin(), id.space_perm.end(), 0);
  for (const Vertex& v : e.vertices()) id.vertex_map[v] = v;
  return id;
}

int identity_element(const FiniteGroupModel& model) {
  for (int g = 0; g < static_cast<int>(model.size()); ++g)
    if (model.mul(g, g) == g) return g;
  return -1;
}

QMat permute_rows(const std::vector<std::size_t>& perm, const QMat& m) {
  QMat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(perm[i], j) = m.at(i, j);
  return out;
}

// the restriction-to-V_sigma definition of the local character, computed on
// an explicit basis of the cell module
Rat restricted_trace(const IdempotentSystem& e, const Polysimplex& cell,
                     const SymmetryAction& g) {
  MappedCell mc = map_cell(e.sigma.shape(), cell, g.vertex_map);
  REQUIRE(mc.image == cell);
  QMat basis = e.image_basis(cell);
  auto coords = solve(basis, e.cell_op(cell).apply(permute_rows(g.space_perm, basis)));
  REQUIRE(coords.has_value());
  Rat t = 0;
  for (std::size_t i = 0; i < coords->cols(); ++i) t += coords->at(i, i);
  return Rat(mc.sign) * t;
}

}  // namespace

TEST_SUITE("characters") {
  TEST_CASE("the identity action counts the rank of the support projection") {
    const IdempotentSystem& e = segment_model(2, 0, "regular");
    OrientedComplex oc = orient(e.sigma);
    CharacterReport rep = lefschetz_sum(e, oc, identity_action(e));

    CHECK(rep.element == -1);
    CHECK(rep.symmetry == "id");
    CHECK(rep.lefschetz_sum == Rat(3));
    CHECK(rep.ambient_trace == Rat(3));
    CHECK(rep.matches());
    // every cell of the segment is fixed: two vertices and the edge
    CHECK(rep.fixed_simplices.size() == 3);
    Rat vertex_total = 0, edge_total = 0;
    for (const auto& [cell, sign, local] : rep.fixed_simplices) {
      if (cell.dim() == 0) {
        CHECK(sign == 1);
        CHECK(local == Rat(2));  // rank of av{K_x} on the regular module
        vertex_total += local;
      } else {
        CHECK(sign == -1);
        CHECK(local == Rat(1));
        edge_total += local;
      }
    }
    CHECK(vertex_total - edge_total == rep.lefschetz_sum);

    Json j = rep.to_json();
    CHECK(j["lefschetz-sum"] == "3/1");
    CHECK(j["ambient-trace"] == "3/1");
    CHECK(j["matches"] == true);
    CHECK(j["fixed-simplices"].size() == 3);

    // identity on a single cell: the local character is the cell module rank
    Polysimplex edge = *e.sigma.cells_of_dim(1).begin();
    CHECK(simplex_character(e, oc, edge, identity_action(e)) == Rat(1));
  }

  TEST_CASE("a flip across an edge cancels the orientation and degree signs") {
    ApartmentShape line{{2}};
    Vertex a = make_vertex(line, {0, 0}), b = make_vertex(line, {1, 0});
    SubComplex segment(line);
    segment.insert(span(line, {a, b}));
    std::map<Vertex, QMat> ops;
    ops[a] = QMat::identity(1);
    ops[b] = QMat::identity(1);
    IdempotentSystem sys = explicit_system(segment, ops);
    OrientedComplex oc = orient(segment);

    SymmetryAction flip;
    flip.name = "flip";
    flip.space_perm = {0};
    flip.vertex_map = {{a, b}, {b, a}};

    Polysimplex edge = span(line, {a, b});
    // the slice swap reverses orientation while the module action is trivial,
    // so the local character is minus the cell module rank
    CHECK(simplex_character(sys, oc, edge, flip) == Rat(-1));
    CHECK(thrown_kind([&] { simplex_character(sys, oc, vertex_cell(line, a), flip); }) ==
          "NotStabilizing");

    CharacterReport rep = lefschetz_sum(sys, oc, flip);
    CHECK(rep.fixed_simplices.size() == 1);
    const auto& [cell, sign, local] = rep.fixed_simplices.front();
    CHECK(cell == edge);
    CHECK(sign == -1);
    CHECK(local == Rat(-1));
    CHECK(rep.lefschetz_sum == Rat(1));  // (-1) for the degree times (-1) for the flip
    CHECK(rep.ambient_trace == Rat(1));
    CHECK(rep.matches());
  }

  TEST_CASE("declared tree symmetries satisfy the fixed point formula") {
    struct Instance {
      long p, r;
      std::string space;
      std::size_t count;
    };
    const std::vector<Instance> instances = {
        {2, 0, "regular", 32},
        {3, 0, "regular", 243},
        {2, 1, "regular", 128},
        {2, 1, "projective-line", 128},
    };
    for (const Instance& in : instances) {
      CAPTURE(in.p);
      CAPTURE(in.r);
      CAPTURE(in.space);
      const IdempotentSystem& e = segment_model(in.p, in.r, in.space);
      Report rep = check_lefschetz(e);
      CHECK(rep.checks.size() == in.count);
      CHECK(rep.all_pass());
      std::size_t cells = e.sigma.size();
      for (const Check& c : rep.checks) {
        // translations fix every cell; the twist keeps only the middle vertex
        std::size_t expect = c.name.find("wt") != std::string::npos ? 1 : cells;
        CHECK(c.witness["fixed"] == expect);
      }
    }
  }

  TEST_CASE("local characters match a dense restriction oracle") {
    const IdempotentSystem& e = segment_model(2, 1, "regular");
    OrientedComplex oc = orient(e.sigma);

    const SymmetryAction* translation = nullptr;
    const SymmetryAction* twist = nullptr;
    for (const SymmetryAction& g : e.symmetries) {
      if (!translation && !g.twisted && g.group_element > 0) translation = &g;
      if (!twist && g.twisted) twist = &g;
    }
    REQUIRE(translation != nullptr);
    REQUIRE(twist != nullptr);

    for (const Polysimplex& cell : e.sigma.cells())
      CHECK(simplex_character(e, oc, cell, *translation) ==
            restricted_trace(e, cell, *translation));

    Polysimplex middle = vertex_cell(e.sigma.shape(), e.vertices()[1]);
    CHECK(simplex_character(e, oc, middle, *twist) == restricted_trace(e, middle, *twist));
    // the twist swaps the two edges, so neither is stabilized
    Polysimplex edge = e.sigma.cells_of_dim(1).front();
    CHECK(thrown_kind([&] { simplex_character(e, oc, edge, *twist); }) == "NotStabilizing");
  }

  TEST_CASE("symmetries that move cells off the complex are rejected") {
    const IdempotentSystem& e = segment_model(2, 0, "regular");
    OrientedComplex oc = orient(e.sigma);
    std::vector<Vertex> vs = e.vertices();

    SymmetryAction shift = identity_action(e);
    shift.vertex_map.clear();
    shift.vertex_map[vs[0]] = vs[1];
    shift.vertex_map[vs[1]] = make_vertex(e.sigma.shape(), {2, 0});
    CHECK(thrown_kind([&] { lefschetz_sum(e, oc, shift); }) == "NotInvariantComplex");

    SymmetryAction partial = identity_action(e);
    partial.vertex_map.erase(vs[1]);
    CHECK(thrown_kind([&] { lefschetz_sum(e, oc, partial); }) == "NotInvariantComplex");

    SymmetryAction narrow = identity_action(e);
    narrow.space_perm.pop_back();
    CHECK(thrown_kind([&] { lefschetz_sum(e, oc, narrow); }) == "ShapeMismatch");
    CHECK(thrown_kind([&] { simplex_character(e, oc, oc.complex().cells_of_dim(1).front(), narrow); }) ==
          "ShapeMismatch");

    SubComplex lone(e.sigma.shape());
    lone.insert(vertex_cell(e.sigma.shape(), vs[0]));
    CHECK(thrown_kind([&] { lefschetz_sum(e, orient(lone), identity_action(e)); }) ==
          "ShapeMismatch");
    Polysimplex outside = vertex_cell(e.sigma.shape(), make_vertex(e.sigma.shape(), {5, 0}));
    CHECK(thrown_kind([&] { simplex_character(e, oc, outside, identity_action(e)); }) ==
          "PreconditionViolated");
  }

  TEST_CASE("hecke traces agree with homology and Euler data") {
    const IdempotentSystem& e = segment_model(2, 0, "regular");
    CHECK(hecke_trace({}, e) == Rat(0));

    int one = identity_element(*e.model);
    REQUIRE(one >= 0);
    // the identity acts as the support projection itself on degree zero
    CHECK(hecke_trace({{one, Rat(1)}}, e) == Rat(3));
    CHECK(hecke_trace({{one, Rat(2)}}, e) == Rat(6));
    CHECK(dim_image_sum(e) == 3);

    // averaging over the whole group projects onto the invariant line
    std::vector<int> everyone(e.model->size());
    std::iota(everyone.begin(), everyone.end(), 0);
    CHECK(hecke_trace(averaging_element(*e.model, everyone), e) == Rat(1));

    const IdempotentSystem& wide = segment_model(2, 1, "regular");
    int wone = identity_element(*wide.model);
    CHECK(hecke_trace({{wone, Rat(1)}}, wide) == Rat(dim_image_sum(wide)));
    std::vector<int> wall(wide.model->size());
    std::iota(wall.begin(), wall.end(), 0);
    CHECK(hecke_trace(averaging_element(*wide.model, wall), wide) == Rat(1));

    CHECK(thrown_kind([&] { hecke_trace({{99999, Rat(1)}}, e); }) == "UnknownElement");

    ApartmentShape line{{2}};
    SubComplex seg = enumerate_box(line, {0, 0}, {1, 0}, 1u << 20);
    IdempotentSystem diag = diagonal_model(seg, {seg, seg});
    CHECK(thrown_kind([&] { hecke_trace({}, diag); }) == "Unsupported");
  }

  TEST_CASE("random group algebra elements pass the trace battery") {
    const IdempotentSystem& e = segment_model(2, 1, "regular");
    Rng rng(2026);
    Report rep = check_hecke_traces(e, rng, 20);
    CHECK(rep.checks.size() == 20);
    CHECK(rep.all_pass());

    Rng r1(7), r2(7);
    Report a = check_hecke_traces(e, r1, 5);
    Report b = check_hecke_traces(e, r2, 5);
    CHECK(a.to_json(false) == b.to_json(false));

    const IdempotentSystem& pl = segment_model(2, 0, "projective-line");
    Rng prng(11);
    Report pr = check_hecke_traces(pl, prng, 8);
    CHECK(pr.all_pass());
  }
}
