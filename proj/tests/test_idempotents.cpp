#include <btk/idempotents.hpp>

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
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

QMat qm(const std::vector<std::vector<Rat>>& rows) {
  QMat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j) m.at(i, j) = rows[i][j];
  return m;
}

ModMatrix mm(const std::vector<long>& v) { return ModMatrix(v.begin(), v.end()); }

// exponent vector of the segment vertex at coordinate c, normalised like
// apartment_coordinates (minimum entry zero)
std::vector<long> segment_exponents(long c) {
  if (c >= 0) return {c, 0};
  return {0, -c};
}

// independent order formula: one free residue of size p^(M - min(M, e_ij))
// per entry, where e_ij = r + 1 + n_i - n_j
Int expected_subgroup_order(long p, long r, long M, const std::vector<long>& n) {
  Int order = 1;
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t j = 0; j < n.size(); ++j) {
      long e = std::min(M, r + 1 + n[i] - n[j]);
      order *= pow_int(p, M - e);
    }
  return order;
}

bool matches_pattern(const ModMatrix& g, long p, long r, long M, const std::vector<long>& n) {
  long d = static_cast<long>(n.size());
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      long e = std::min(M, r + 1 + n[i] - n[j]);
      Int want = (i == j) ? 1 : 0;
      if ((g[i * d + j] - want) % pow_int(p, e) != 0) return false;
    }
  return true;
}

const Check* find_check(const Report& rep, const std::string& name) {
  for (const auto& c : rep.checks)
    if (c.name == name) return &c;
  return nullptr;
}

Vertex sv(const ApartmentShape& sh, const std::vector<Coord>& raw) { return make_vertex(sh, raw); }

SubComplex single_vertex(const ApartmentShape& sh, const std::vector<Coord>& raw) {
  SubComplex sc(sh);
  sc.insert(vertex_cell(sh, sv(sh, raw)));
  return sc;
}

// reference models are expensive to build, so share them across cases
const IdempotentSystem& segment_model(long p, long r, const std::string& space) {
  static std::map<std::string, IdempotentSystem> cache;
  std::string key = std::to_string(p) + "/" + std::to_string(r) + "/" + space;
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, reference_tree_model(p, r, space)).first;
  return it->second;
}

}  // namespace

TEST_SUITE("idempotents") {
  TEST_CASE("residue matrix helpers") {
    Int m8 = 8;
    ModMatrix a = mm({1, 2, 0, 3}), b = mm({5, 1, 2, 7});
    ModMatrix ab = mod_mul(a, b, 2, m8);
    CHECK(ab == mm({(1 * 5 + 2 * 2) % 8, (1 * 1 + 2 * 7) % 8, (3 * 2) % 8, (3 * 7) % 8}));
    CHECK(mod_mul(mod_mul(a, b, 2, m8), a, 2, m8) == mod_mul(a, mod_mul(b, a, 2, m8), 2, m8));
    CHECK(mod_invertible(mm({1, 0, 0, 1}), 2, 2));
    CHECK_FALSE(mod_invertible(mm({1, 1, 1, 1}), 2, 2));
    CHECK(mod_invertible(mm({1, 1, 1, 0}), 2, 2));
    CHECK(mod_reduce(qm({{3, -1}, {10, 0}}), m8) == mm({3, 7, 2, 0}));
    CHECK(thrown_kind([&] { mod_reduce(qm({{Rat(1, 2), 0}, {0, 1}}), m8); }) == "NotIntegral");
  }

  TEST_CASE("congruence subgroups match the entrywise order formula") {
    struct Params {
      long p, r, M, c;
    };
    const std::vector<Params> cases = {{2, 0, 2, 0}, {2, 0, 2, 1},  {3, 0, 2, 0},
                                       {3, 0, 2, 1}, {2, 1, 3, -1}, {2, 1, 3, 0},
                                       {2, 1, 3, 1}, {3, 1, 3, -1}, {3, 1, 3, 1},
                                       {2, 2, 5, 2}, {5, 0, 1, 0}};
    for (const auto& prm : cases) {
      CAPTURE(prm.p);
      CAPTURE(prm.r);
      CAPTURE(prm.c);
      LatticeContext ctx{prm.p, 2};
      auto k = congruence_subgroup(prm.p, 2, prm.r, prm.M,
                                   standard_apartment_embed(ctx, {prm.c, 0}));
      auto n = segment_exponents(prm.c);
      CHECK(Int(k.size()) == expected_subgroup_order(prm.p, prm.r, prm.M, n));
      CHECK(std::is_sorted(k.begin(), k.end()));
      Int modulus = pow_int(prm.p, prm.M);
      bool all_match = true, units = true;
      for (const auto& g : k) {
        if (!matches_pattern(g, prm.p, prm.r, prm.M, n)) all_match = false;
        if (!mod_invertible(g, prm.p, 2)) units = false;
      }
      CHECK(all_match);
      CHECK(units);
      // conversely, every residue matrix with the pattern appears
      if (k.size() <= 100) {
        long hits = 0;
        for (const auto& g : full_general_linear(prm.p, 2, prm.M, 1u << 22))
          if (matches_pattern(g, prm.p, prm.r, prm.M, n)) ++hits;
        CHECK(Int(hits) == Int(k.size()));
      }
      // closed under products
      std::set<ModMatrix> kset(k.begin(), k.end());
      bool closed = true;
      for (const auto& a : k)
        for (const auto& b : k)
          if (!kset.count(mod_mul(a, b, 2, modulus))) closed = false;
      CHECK(closed);
    }
  }

  TEST_CASE("pinned subgroup patterns at p = 3, r = 1, M = 3") {
    LatticeContext ctx{3, 2};
    auto km = congruence_subgroup(3, 2, 1, 3, standard_apartment_embed(ctx, {-1, 0}));
    auto k0 = congruence_subgroup(3, 2, 1, 3, standard_apartment_embed(ctx, {0, 0}));
    auto kp = congruence_subgroup(3, 2, 1, 3, standard_apartment_embed(ctx, {1, 0}));
    CHECK(km.size() == 81);
    CHECK(k0.size() == 81);
    CHECK(kp.size() == 81);
    // exponent patterns [[2,1],[3,2]], [[2,2],[2,2]], [[2,3],[1,2]]
    for (const auto& g : km) {
      CHECK((g[0] - 1) % 9 == 0);
      CHECK(g[1] % 3 == 0);
      CHECK(g[2] % 27 == 0);
      CHECK((g[3] - 1) % 9 == 0);
    }
    for (const auto& g : kp) {
      CHECK((g[0] - 1) % 9 == 0);
      CHECK(g[1] % 27 == 0);
      CHECK(g[2] % 3 == 0);
      CHECK((g[3] - 1) % 9 == 0);
    }
  }

  TEST_CASE("congruence subgroup guards") {
    LatticeContext ctx{2, 2};
    CHECK(thrown_kind([&] {
            congruence_subgroup(2, 2, 0, 5, standard_apartment_embed(ctx, {2, 0}));
          }) == "DepthExceeded");
    CHECK(thrown_kind([&] {
            congruence_subgroup(2, 2, 0, 1, standard_apartment_embed(ctx, {1, 0}));
          }) == "PrecisionTooLow");
    CHECK(thrown_kind([&] {
            congruence_subgroup(2, 2, 1, 1, standard_apartment_embed(ctx, {0, 0}));
          }) == "PrecisionTooLow");
    CHECK(thrown_kind([&] {
            congruence_subgroup(2, 2, 0, 2, standard_apartment_embed(ctx, {0, 0}), 4);
          }) == "BudgetExceeded");
    CHECK(thrown_kind([&] { congruence_subgroup(4, 2, 0, 2, standard_vertex(ctx)); }) ==
          "NotPrime");
  }

  TEST_CASE("group closure and the full residue general linear group") {
    CHECK(full_general_linear(2, 2, 1).size() == 6);    // |GL_2(F_2)|
    auto all4 = full_general_linear(2, 2, 2);
    CHECK(all4.size() == 96);                           // 6 * 2^4
    CHECK(std::is_sorted(all4.begin(), all4.end()));
    CHECK(group_closure(2, 2, 2, {}).size() == 1);
    CHECK(group_closure(2, 2, 2, all4).size() == 96);
    CHECK(thrown_kind([&] { group_closure(2, 2, 2, {mm({1, 1, 1, 1})}); }) == "NotInvertible");
    CHECK(thrown_kind([&] { group_closure(2, 2, 2, all4, 10); }) == "BudgetExceeded");
    CHECK(thrown_kind([&] { full_general_linear(2, 2, 8, 1000); }) == "BudgetExceeded");
  }

  TEST_CASE("reference segment groups hit the pinned orders") {
    CHECK(segment_model(2, 0, "regular").model->size() == 32);
    CHECK(segment_model(3, 0, "regular").model->size() == 243);
    CHECK(segment_model(2, 1, "regular").model->size() == 64);
    const auto& E = segment_model(3, 1, "regular");
    const auto& G = *E.model;
    CHECK(G.size() == 729);
    // pinned description: diagonal entries 1 mod 9, off-diagonal 0 mod 3
    bool pattern = true;
    for (const auto& g : G.elements)
      if ((g[0] - 1) % 9 != 0 || g[1] % 3 != 0 || g[2] % 3 != 0 || (g[3] - 1) % 9 != 0)
        pattern = false;
    CHECK(pattern);

    ApartmentShape sh = irreducible(2);
    const auto& km = E.subgroups.at(sv(sh, {-1, 0}));
    const auto& k0 = E.subgroups.at(sv(sh, {0, 0}));
    const auto& kp = E.subgroups.at(sv(sh, {1, 0}));
    CHECK(km.size() == 81);
    CHECK(product_set(G, k0, kp).size() == 243);
    CHECK(product_set(G, km, kp).size() == 729);
    CHECK(product_set(G, km, k0).size() == 243);
  }

  TEST_CASE("product sets agree with brute force and subgroup checks bite") {
    const auto& E = segment_model(2, 0, "regular");
    const auto& G = *E.model;
    ApartmentShape sh = irreducible(2);
    const auto& k0 = E.subgroups.at(sv(sh, {0, 0}));
    const auto& k1 = E.subgroups.at(sv(sh, {1, 0}));
    std::set<int> brute;
    for (int a : k0)
      for (int b : k1) brute.insert(G.mul(a, b));
    auto prod = product_set(G, k0, k1);
    CHECK(std::vector<int>(brute.begin(), brute.end()) == prod);
    CHECK(prod.size() == 32);  // the whole group: K_0 K_1 = G here

    std::vector<int> broken(k0.begin() + 1, k0.end());  // drops one element
    CHECK(thrown_kind([&] { require_subgroup(G, broken); }) == "NotASubgroup");
    CHECK(thrown_kind([&] { require_subgroup(G, {}); }) == "NotASubgroup");
    auto f = averaging_element(G, k0);
    CHECK(f.size() == k0.size());
    CHECK(f.begin()->second == Rat(1, 16));
  }

  TEST_CASE("averaging idempotent rank equals the orbit count on the full group") {
    auto model = build_group_model(2, 2, 2, full_general_linear(2, 2, 2), "regular");
    CHECK(model->size() == 96);
    LatticeContext ctx{2, 2};
    auto u = congruence_subgroup(2, 2, 0, 2, standard_vertex(ctx));
    std::vector<int> idx;
    for (const auto& m : u) {
      int i = model->index_of(m);
      REQUIRE(i >= 0);
      idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end());
    SparseMat av = averaging_idempotent(idx, *model);
    QMat dense = av.to_dense();
    CHECK(dense * dense == dense);
    // independent oracle: count the left-multiplication orbits of the subgroup
    std::vector<char> seen(model->size(), 0);
    std::size_t orbits = 0;
    for (std::size_t x = 0; x < model->size(); ++x) {
      if (seen[x]) continue;
      ++orbits;
      for (int k : idx) seen[model->mul(k, static_cast<int>(x))] = 1;
    }
    CHECK(orbits == 6);
    CHECK(rank(dense) == orbits);
    AlgebraElement f = averaging_element(*model, idx);
    CHECK(algebra_trace(*model, f) == Rat(6));
  }

  TEST_CASE("module operator arithmetic in all three representations") {
    ModuleOp d1 = ModuleOp::diagonal({Rat(1), Rat(0), Rat(1)});
    ModuleOp d2 = ModuleOp::diagonal({Rat(1), Rat(1), Rat(0)});
    CHECK((d1 * d2) == ModuleOp::diagonal({Rat(1), Rat(0), Rat(0)}));
    CHECK((d1 + d2 - d1 * d2).trace() == Rat(3));
    CHECK(d1.is_idempotent());
    CHECK_FALSE(ModuleOp::diagonal({Rat(2)}).is_idempotent());
    CHECK(ModuleOp::identity_like(d1) == ModuleOp::diagonal({Rat(1), Rat(1), Rat(1)}));
    CHECK(d1.apply(qm({{1, 2}, {3, 4}, {5, 6}})) == qm({{1, 2}, {0, 0}, {5, 6}}));
    CHECK(d1.sparse().nnz() == 2);
    CHECK(thrown_kind([&] { (void)(d1 == ModuleOp::dense(QMat::identity(3))); }) ==
          "KindMismatch");

    ModuleOp p = ModuleOp::dense(qm({{1, 0}, {0, 0}}));
    CHECK(p.is_idempotent());
    CHECK((p.scaled(3)).trace() == Rat(3));

    // convolution realises operator composition on the module
    const auto& E = segment_model(2, 0, "regular");
    const auto& G = *E.model;
    AlgebraElement f1{{0, Rat(2)}, {5, Rat(-1, 3)}};
    AlgebraElement f2{{7, Rat(1, 2)}, {12, Rat(4)}};
    QMat m1 = algebra_matrix(G, f1).to_dense(), m2 = algebra_matrix(G, f2).to_dense();
    CHECK(algebra_matrix(G, convolve(G, f1, f2)).to_dense() == m1 * m2);
    ModuleOp a1 = ModuleOp::algebra(E.model, f1);
    CHECK(a1.trace() == algebra_trace(G, f1));
    CHECK((a1 - a1) == ModuleOp::algebra(E.model, {}));
  }

  TEST_CASE("reference segment geometry and symmetry inventory") {
    ApartmentShape sh = irreducible(2);
    const auto& E0 = segment_model(2, 0, "regular");
    CHECK(E0.vertices() == std::vector<Vertex>{sv(sh, {0, 0}), sv(sh, {1, 0})});
    CHECK(E0.symmetries.size() == 32);  // not centre-symmetric: translations only
    CHECK(E0.sigma.max_dim() == 1);
    CHECK(E0.defined_at(sv(sh, {0, 0})));
    CHECK_FALSE(E0.defined_at(sv(sh, {5, 0})));

    const auto& E1 = segment_model(2, 1, "regular");
    CHECK(E1.vertices() ==
          std::vector<Vertex>{sv(sh, {-1, 0}), sv(sh, {0, 0}), sv(sh, {1, 0})});
    CHECK(E1.symmetries.size() == 128);  // 64 translations and 64 twisted ones
    CHECK(E1.automorphism.size() == 64);
    const auto& tw = E1.symmetries.back();
    CHECK(tw.twisted);
    CHECK(tw.name.substr(0, 2) == "wt");
    CHECK(tw.vertex_map.at(sv(sh, {-1, 0})) == sv(sh, {1, 0}));
  }

  TEST_CASE("group-level consistency holds on reference segments") {
    for (auto [p, r] : std::vector<std::pair<long, long>>{{2, 0}, {2, 1}, {3, 1}}) {
      CAPTURE(p);
      CAPTURE(r);
      Report rep = check_group_consistency(segment_model(p, r, "regular"));
      CHECK(rep.all_pass());
      const Check* eq = find_check(rep, "equivariant-subgroups");
      REQUIRE(eq != nullptr);
      CHECK(eq->witness["cases"].get<long>() > 0);
    }
  }

  TEST_CASE("operator-level consistency holds on reference segments") {
    for (auto [p, r] : std::vector<std::pair<long, long>>{{2, 0}, {2, 1}}) {
      CAPTURE(p);
      CAPTURE(r);
      Report rep = check_idempotent_consistency(segment_model(p, r, "regular"));
      CHECK(rep.all_pass());
      const Check* hull_all = find_check(rep, "hull-absorption-all");
      REQUIRE(hull_all != nullptr);
      CHECK(hull_all->pass);
    }
  }

  TEST_CASE("lemma equivalence: set conditions versus operator conditions") {
    Report rep = check_lemma_equivalence(segment_model(2, 1, "regular"));
    CHECK(rep.all_pass());
    const Check* sup = find_check(rep, "support-reconstruction");
    REQUIRE(sup != nullptr);
    CHECK(sup->witness["adjacent-pairs"].get<long>() == 2);
    CHECK(thrown_kind([&] { check_lemma_equivalence(segment_model(2, 0, "projective-line")); }) ==
          "Unsupported");
  }

  TEST_CASE("a too-small endpoint subgroup breaks the hull condition both ways") {
    const auto& E = segment_model(2, 1, "regular");
    ApartmentShape sh = irreducible(2);
    Vertex vm = sv(sh, {-1, 0}), v0 = sv(sh, {0, 0}), vp = sv(sh, {1, 0});
    // S = K_{-1} cap K_0 cap K_1 has order 4 and sits inside every K_x
    std::vector<int> s;
    for (int i : E.subgroups.at(vm))
      if (std::binary_search(E.subgroups.at(v0).begin(), E.subgroups.at(v0).end(), i) &&
          std::binary_search(E.subgroups.at(vp).begin(), E.subgroups.at(vp).end(), i))
        s.push_back(i);
    CHECK(s.size() == 4);
    auto subgroups = E.subgroups;
    subgroups[vm] = s;
    IdempotentSystem bad = group_system(E.model, E.sigma, subgroups);

    Report sets = check_group_consistency(bad);
    CHECK_FALSE(sets.all_pass());
    CHECK(find_check(sets, "product-commute")->pass);       // S absorbs into both
    CHECK_FALSE(find_check(sets, "hull-subgroup-adjacent")->pass);

    Report ops = check_idempotent_consistency(bad);
    CHECK_FALSE(ops.all_pass());
    CHECK(find_check(ops, "vertex-idempotent")->pass);
    CHECK(find_check(ops, "commute-adjacent")->pass);
    CHECK_FALSE(find_check(ops, "hull-absorption-adjacent")->pass);
    CHECK(find_check(ops, "vertex-to-cell-implication")->pass);  // vacuously

    Report both = check_lemma_equivalence(bad);
    CHECK(find_check(both, "sets-imply-operators")->pass);  // premise already fails
    CHECK(thrown_kind([&] { support_projection(bad); }) == "ConsistencyFailure");
  }

  TEST_CASE("equivariance passes for declared symmetries and catches bogus ones") {
    CHECK(check_equivariance(segment_model(2, 0, "regular")).all_pass());
    CHECK(check_equivariance(segment_model(2, 1, "regular")).all_pass());
    CHECK(check_equivariance(segment_model(2, 0, "projective-line")).all_pass());

    IdempotentSystem counterfeit = segment_model(2, 0, "regular");
    ApartmentShape sh = irreducible(2);
    SymmetryAction bogus;
    bogus.name = "swap-without-twist";
    bogus.space_perm.resize(counterfeit.module_dim);
    for (std::size_t i = 0; i < bogus.space_perm.size(); ++i) bogus.space_perm[i] = i;
    bogus.vertex_map[sv(sh, {0, 0})] = sv(sh, {1, 0});
    bogus.vertex_map[sv(sh, {1, 0})] = sv(sh, {0, 0});
    counterfeit.symmetries = {bogus};
    Report rep = check_equivariance(counterfeit);
    CHECK_FALSE(rep.all_pass());
    CHECK(find_check(rep, "equivariance")->witness["symmetry"] == "swap-without-twist");
  }

  TEST_CASE("noncommuting explicit projections are reported, not silently used") {
    ApartmentShape sh = irreducible(2);
    SubComplex seg = enumerate_box(sh, {0, 0}, {1, 0});
    // conjugated coordinate projections that do not commute
    std::map<Vertex, QMat> e;
    e[sv(sh, {0, 0})] = qm({{1, 0}, {0, 0}});
    e[sv(sh, {1, 0})] = qm({{1, -1}, {0, 0}});
    IdempotentSystem E = explicit_system(seg, e);
    CHECK(thrown_kind([&] { E.cell_op(*seg.cells_of_dim(1).begin()); }) ==
          "NonCommutingVertices");
    Report rep = check_idempotent_consistency(E);
    CHECK_FALSE(rep.all_pass());
    CHECK_FALSE(find_check(rep, "commute-adjacent")->pass);
    CHECK_FALSE(find_check(rep, "join-product")->pass);
    CHECK(find_check(rep, "join-product")->witness["kind"] == "NonCommutingVertices");
    CHECK(find_check(rep, "vertex-to-cell-implication")->pass);
    CHECK(thrown_kind([&] { support_projection(E); }) == "ConsistencyFailure");

    CHECK(thrown_kind([&] {
            explicit_system(seg, {{sv(sh, {0, 0}), qm({{2, 0}, {0, 0}})},
                                  {sv(sh, {1, 0}), qm({{1, 0}, {0, 0}})}});
          }) == "NotIdempotent");
    CHECK(thrown_kind([&] {
            explicit_system(seg, {{sv(sh, {0, 0}), qm({{1, 0}, {0, 0}})}});
          }) == "MissingVertex");
  }

  TEST_CASE("diagonal support projection matches the Euler-characteristic oracle") {
    ApartmentShape sh = irreducible(3);
    SubComplex box = enumerate_box(sh, {0, 0, 0}, {2, 2, 0});
    auto vc = [&](Coord a, Coord b) { return vertex_cell(sh, sv(sh, {a, b, 0})); };
    std::vector<SubComplex> supports = {
        hull(sh, vc(0, 0), vc(2, 2)),   // diagonal strip inside the box
        hull(sh, vc(0, 0), vc(0, 2)),   // left column
        hull(sh, vc(1, 1), vc(1, 1)),   // single interior vertex
        hull(sh, vc(5, 5), vc(6, 6)),   // far away: misses the box entirely
        hull(sh, vc(2, 0), vc(4, 0)),   // pokes into the box at one corner
        hull(sh, vc(1, 0), vc(2, 1)),   // one edge with its endpoints
    };
    IdempotentSystem E = diagonal_model(box, supports);
    CHECK(E.module_dim == 6);

    // independent computation: alternating cell count of each support inside
    std::vector<Rat> expected;
    for (const auto& s : supports) {
      long chi = 0;
      for (const auto& cell : s.cells())
        if (box.contains(cell)) chi += (cell.dim() % 2 == 0) ? 1 : -1;
      expected.push_back(Rat(chi));
    }
    CHECK(expected == std::vector<Rat>{1, 1, 1, 0, 1, 1});

    ModuleOp u = support_projection(E);
    CHECK(u == ModuleOp::diagonal(expected));
    CHECK(dim_image_sum(E) == 5);
    CHECK(dim_kernel_meet(E) == 1);
    CHECK(check_support_projection(E).all_pass());

    // a non-convex support is rejected outright
    SubComplex gap(sh);
    gap.insert(vc(0, 0));
    gap.insert(vc(2, 0));
    CHECK(thrown_kind([&] { diagonal_model(box, {gap}); }) == "NonConvexSupport");
    CHECK(thrown_kind([&] { diagonal_model(box, {SubComplex(sh)}); }) == "NonConvexSupport");
  }

  TEST_CASE("group support projections hit the pinned ranks") {
    {
      const auto& E = segment_model(2, 0, "regular");
      ModuleOp u = support_projection(E);
      CHECK(u.trace() == Rat(3));  // 2 + 2 - 1
      CHECK(dim_image_sum(E) == 3);
      CHECK(dim_kernel_meet(E) == 29);
    }
    {
      const auto& E = segment_model(3, 0, "regular");
      CHECK(support_projection(E).trace() == Rat(5));  // 3 + 3 - 1
    }
    {
      const auto& E = segment_model(3, 1, "regular");
      ModuleOp u = support_projection(E);
      CHECK(u.trace() == Rat(21));  // 9 + 9 + 9 - 3 - 3
      int id = E.model->index_of(mm({1, 0, 0, 1}));
      CHECK(u.coefficients().at(id) == Rat(7, 243));
      CHECK(check_support_projection(E).all_pass());
    }
    {
      const auto& E = segment_model(2, 0, "projective-line");
      CHECK(E.module_dim == 6);  // |P^1(Z/4)|
      ModuleOp u = support_projection(E);
      CHECK(u.trace() == Rat(4));  // 3 + 3 - 2 orbit counts
      CHECK(dim_image_sum(E) == 4);
      CHECK(check_support_projection(E).all_pass());
    }
    {
      const auto& E = segment_model(2, 0, "cosets:K0");
      CHECK(E.module_dim == 2);
      CHECK(support_projection(E).trace() == Rat(2));  // 1 + 2 - 1
      CHECK(check_idempotent_consistency(E).all_pass());
      CHECK(check_equivariance(E).all_pass());
    }
  }

  TEST_CASE("additivity and separation across a wall, diagonal model") {
    ApartmentShape sh = irreducible(3);
    SubComplex box = enumerate_box(sh, {0, 0, 0}, {2, 2, 0});
    auto vc = [&](Coord a, Coord b) { return vertex_cell(sh, sv(sh, {a, b, 0})); };
    std::vector<SubComplex> supports = {
        box,
        hull(sh, vc(0, 0), vc(2, 2)),
        hull(sh, vc(0, 0), vc(0, 2)),
        hull(sh, vc(2, 0), vc(2, 2)),
        hull(sh, vc(1, 1), vc(1, 1)),
        hull(sh, vc(0, 1), vc(2, 1)),
    };
    IdempotentSystem E = diagonal_model(box, supports);
    SubComplex plus = enumerate_box(sh, {0, 0, 0}, {1, 2, 0});
    SubComplex minus = enumerate_box(sh, {1, 0, 0}, {2, 2, 0});
    SubComplex zero = enumerate_box(sh, {1, 0, 0}, {1, 2, 0});
    Report rep = check_projection_additivity(E, plus, minus, zero);
    CHECK(rep.all_pass());
    const Check* sep = find_check(rep, "strict-separation");
    REQUIRE(sep != nullptr);
    CHECK(sep->witness["pairs"].get<long>() == 9);  // 3 left by 3 right vertices

    // wrong overlap is flagged before any projection is attempted
    Report bad = check_projection_additivity(E, plus, minus,
                                             enumerate_box(sh, {0, 0, 0}, {0, 2, 0}));
    CHECK_FALSE(bad.all_pass());
    CHECK_FALSE(find_check(bad, "split-overlap")->pass);

    Report sep2 = check_separation(E, enumerate_box(sh, {0, 0, 0}, {0, 2, 0}),
                                   enumerate_box(sh, {2, 0, 0}, {2, 2, 0}), zero, plus, minus);
    CHECK(sep2.all_pass());

    // a witness pair whose overlap is not the declared wall fails validation
    Report sep3 = check_separation(E, enumerate_box(sh, {0, 0, 0}, {0, 2, 0}),
                                   enumerate_box(sh, {2, 0, 0}, {2, 2, 0}),
                                   single_vertex(sh, {1, 0, 0}), plus, minus);
    CHECK_FALSE(sep3.all_pass());
    CHECK_FALSE(find_check(sep3, "witness-overlap")->pass);
  }

  TEST_CASE("additivity and separation on a group segment") {
    const auto& E = segment_model(2, 1, "regular");
    ApartmentShape sh = irreducible(2);
    SubComplex plus = enumerate_box(sh, {-1, 0}, {0, 0});
    SubComplex minus = enumerate_box(sh, {0, 0}, {1, 0});
    SubComplex zero = single_vertex(sh, {0, 0});
    Report rep = check_projection_additivity(E, plus, minus, zero);
    CHECK(rep.all_pass());
    Report sep = check_separation(E, single_vertex(sh, {-1, 0}), single_vertex(sh, {1, 0}),
                                  zero, plus, minus);
    CHECK(sep.all_pass());
  }

  TEST_CASE("simplex idempotents average over the product set") {
    const auto& E = segment_model(2, 1, "regular");
    const auto& G = *E.model;
    ApartmentShape sh = irreducible(2);
    auto edges = E.sigma.cells_of_dim(1);
    REQUIRE(edges.size() == 2);
    for (const auto& edge : edges) {
      auto vs = edge.vertices();
      auto prod = product_set(G, E.subgroups.at(vs[0]), E.subgroups.at(vs[1]));
      AlgebraElement uniform;
      for (int g : prod) uniform[g] = Rat(1, static_cast<long>(prod.size()));
      CHECK(simplex_idempotent(E, edge) == algebra_matrix(G, uniform));
    }
  }

  TEST_CASE("dominant diagonal double cosets multiply at finite level") {
    LatticeContext ctx{2, 2};
    auto u = congruence_subgroup(2, 2, 0, 3, standard_vertex(ctx));
    CHECK(u.size() == 256);
    std::vector<QMat> gens = {omega_generator(2, 2, 1), omega_generator(2, 2, 2)};
    Report rep = check_dplus_multiplicativity(2, 2, 3, u, gens, 1);
    CHECK(rep.all_pass());
    CHECK(rep.checks.size() == 8);  // 2 hypotheses + 4 coset pairs + 2 commuting
    CHECK(find_check(rep, "double-coset-0-1") != nullptr);
    CHECK(find_check(rep, "omega-commute-0")->witness["level"].get<long>() == 2);

    // too little precision for the pair of dilations
    CHECK(thrown_kind([&] {
            check_dplus_multiplicativity(
                2, 2, 2, congruence_subgroup(2, 2, 0, 2, standard_vertex(ctx)), gens, 1);
          }) == "OutOfValidityRange");
    CHECK(thrown_kind([&] {
            check_dplus_multiplicativity(2, 2, 3, u, {qm({{Rat(1, 2), 0}, {0, 1}})}, 1);
          }) == "NotDominant");
    CHECK(thrown_kind([&] {
            check_dplus_multiplicativity(2, 2, 3, {mm({1, 0, 0, 1}), mm({1, 2, 0, 1})}, gens, 1);
          }) == "NotASubgroup");

    // a subgroup that is not the full congruence preimage fails the hypotheses
    auto off = congruence_subgroup(2, 2, 0, 3, standard_apartment_embed(ctx, {1, 0}));
    Report bad = check_dplus_multiplicativity(2, 2, 3, off, {omega_generator(2, 2, 2)}, 1);
    CHECK_FALSE(bad.all_pass());
    CHECK_FALSE(find_check(bad, "supported-in-principal-congruence")->pass);
    CHECK_FALSE(find_check(bad, "full-preimage")->pass);
  }

  TEST_CASE("dominant search harness reports without concluding") {
    // budget large enough to sweep all of GL_2(Z/4)
    Report rep = dplus_search(2, 2, 2, omega_generator(2, 2, 1), 200);
    CHECK(rep.all_pass());  // the harness itself always completes
    const Check* c = find_check(rep, "search-complete");
    REQUIRE(c != nullptr);
    CHECK(c->witness["skipped-known-regime"].get<long>() == 16);  // 1 + 2 M_2(Z/4)
    CHECK(c->witness["examined"].get<long>() == 80);
    CHECK_FALSE(c->witness["truncated"].get<bool>());
    for (const auto& cand : c->witness["candidates"])
      CHECK(cand["order"].get<long>() > 1);
    // byte-identical rerun
    Report again = dplus_search(2, 2, 2, omega_generator(2, 2, 1), 200);
    CHECK(rep.to_json(false) == again.to_json(false));

    Report truncated = dplus_search(2, 2, 2, omega_generator(2, 2, 1), 10);
    const Check* t = find_check(truncated, "search-complete");
    CHECK(t->witness["examined"].get<long>() == 10);
    CHECK(t->witness["truncated"].get<bool>());
  }

  TEST_CASE("model space guards") {
    CHECK(thrown_kind([&] { reference_tree_model(2, 0, "cosets:XYZ"); }) == "Unsupported");
    CHECK(thrown_kind([&] { reference_tree_model(2, 0, "cosets:K7"); }) == "Unsupported");
    CHECK(thrown_kind([&] { reference_tree_model(2, 0, "mystery"); }) == "Unsupported");
    CHECK(thrown_kind([&] { reference_tree_model(4, 0, "regular"); }) == "NotPrime");
    CHECK(thrown_kind([&] { build_group_model(2, 3, 1, {}, "projective-line"); }) ==
          "Unsupported");
  }
}
