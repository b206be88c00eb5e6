#include <btk/characters.hpp>

#include <map>
#include <optional>
#include <string>
#include <utility>

namespace btk {

namespace {

std::string rat_text(const Rat& q) { return num(q).str() + "/" + den(q).str(); }

// trace of the basis permutation x -> perm[x] composed with a materialised
// operator: sum of the entries (r, c) with perm[r] == c
Rat permuted_trace(const std::vector<std::size_t>& perm, const SparseMat& m) {
  Rat t = 0;
  for (const auto& [r, c, v] : m.entries)
    if (perm[r] == c) t += v;
  return t;
}

// trace of (translation by group element g) composed with an algebra
// operator: sum_h c_h #fix(g h), with nothing materialised
Rat translated_trace(const FiniteGroupModel& model, int g, const AlgebraElement& a) {
  Rat t = 0;
  for (const auto& [h, c] : a) t += c * Rat(model.fixed_count[model.mul(g, h)]);
  return t;
}

/* Trace of the permutation action of a symmetry composed with one operator.
 * The restriction of e_s g e_s to im(e_s) has the same trace as the ambient
 * product g e_s (idempotency plus cyclic invariance), so local characters
 * never need a basis of the cell module.  Untwisted group translations
 * reduce to fixed-point counts; every other case scans the sparse form,
 * which the caller may cache across symmetries. */
Rat action_trace(const IdempotentSystem& e, const ModuleOp& op,
                 std::optional<SparseMat>& cache, const SymmetryAction& g) {
  if (op.kind() == ModuleOp::Kind::Algebra && e.model && !g.twisted && g.group_element >= 0)
    return translated_trace(*e.model, g.group_element, op.coefficients());
  if (!cache) cache = op.sparse();
  return permuted_trace(g.space_perm, *cache);
}

using CellCache = std::map<Polysimplex, std::pair<ModuleOp, std::optional<SparseMat>>>;

CharacterReport lefschetz_core(const IdempotentSystem& e, const OrientedComplex& oc,
                               const SymmetryAction& g, const ModuleOp& u,
                               std::optional<SparseMat>& ucache, CellCache& cells) {
  if (g.space_perm.size() != e.module_dim)
    fail("ShapeMismatch", "symmetry permutation does not match the module dimension");
  CharacterReport rep;
  rep.element = g.group_element;
  rep.symmetry = g.name;
  const SubComplex& sigma = oc.complex();
  for (const Polysimplex& cell : sigma.cells()) {
    MappedCell mc;
    try {
      mc = map_cell(sigma.shape(), cell, g.vertex_map);
    } catch (const Error& err) {
      fail("NotInvariantComplex",
           "symmetry breaks at " + to_string(cell) + ": " + err.what());
    }
    if (!sigma.contains(mc.image))
      fail("NotInvariantComplex",
           "image of " + to_string(cell) + " leaves the complex");
    if (!(mc.image == cell)) continue;
    auto it = cells.find(cell);
    if (it == cells.end())
      it = cells.emplace(cell, std::make_pair(e.cell_op(cell), std::optional<SparseMat>())).first;
    Rat local = Rat(mc.sign) * action_trace(e, it->second.first, it->second.second, g);
    int deg = cell.dim() % 2 ? -1 : 1;
    rep.fixed_simplices.emplace_back(cell, deg, local);
    rep.lefschetz_sum += Rat(deg) * local;
  }
  rep.ambient_trace = action_trace(e, u, ucache, g);
  return rep;
}

// basis of sum_x e_x(V), the ambient image the degree-zero trace lives on
QMat span_basis(const IdempotentSystem& e) {
  QMat acc(e.module_dim, 0);
  for (const Vertex& x : e.vertices())
    acc = QMat::hcat(acc, e.image_basis(vertex_cell(e.sigma.shape(), x)));
  return column_space_basis(acc);
}

// (degree sign, coefficient function of e_s) for every cell of the support
std::vector<std::pair<int, AlgebraElement>> cell_table(const IdempotentSystem& e) {
  std::vector<std::pair<int, AlgebraElement>> out;
  for (const Polysimplex& cell : e.sigma.cells())
    out.emplace_back(cell.dim() % 2 ? -1 : 1, e.cell_op(cell).coefficients());
  return out;
}

Rat hecke_core(const AlgebraElement& f, const IdempotentSystem& e, const QMat& basis,
               const std::vector<std::pair<int, AlgebraElement>>& cells) {
  ModuleOp op = ModuleOp::algebra(e.model, f);
  Rat h0 = 0;
  if (basis.cols() > 0) {
    auto coords = solve(basis, op.apply(basis));
    if (!coords) fail("ConsistencyFailure", "group algebra element moves the image span");
    for (std::size_t i = 0; i < coords->cols(); ++i) h0 += coords->at(i, i);
  }
  Rat euler = 0;
  for (const auto& [sign, coef] : cells)
    euler += Rat(sign) * algebra_trace(*e.model, convolve(*e.model, f, coef));
  if (h0 != euler)
    fail("ConsistencyFailure", "degree-zero trace " + rat_text(h0) +
                                   " differs from the alternating cell sum " + rat_text(euler));
  return h0;
}

}  // namespace

Json CharacterReport::to_json() const {
  Json j;
  j["element"] = element;
  j["symmetry"] = symmetry;
  j["lefschetz-sum"] = rat_text(lefschetz_sum);
  j["ambient-trace"] = rat_text(ambient_trace);
  j["matches"] = matches();
  Json fixed = Json::array();
  for (const auto& [cell, sign, local] : fixed_simplices)
    fixed.push_back(Json{{"cell", to_string(cell)}, {"sign", sign}, {"trace", rat_text(local)}});
  j["fixed-simplices"] = std::move(fixed);
  return j;
}

Rat simplex_character(const IdempotentSystem& e, const OrientedComplex& oc,
                      const Polysimplex& sigma, const SymmetryAction& g) {
  if (!oc.complex().contains(sigma))
    fail("PreconditionViolated", "cell is not part of the oriented complex");
  if (g.space_perm.size() != e.module_dim)
    fail("ShapeMismatch", "symmetry permutation does not match the module dimension");
  MappedCell mc;
  try {
    mc = map_cell(oc.complex().shape(), sigma, g.vertex_map);
  } catch (const Error& err) {
    fail("NotStabilizing", "symmetry does not act on the cell: " + std::string(err.what()));
  }
  if (!(mc.image == sigma))
    fail("NotStabilizing", to_string(sigma) + " maps to " + to_string(mc.image));
  ModuleOp op = e.cell_op(sigma);
  std::optional<SparseMat> cache;
  return Rat(mc.sign) * action_trace(e, op, cache, g);
}

CharacterReport lefschetz_sum(const IdempotentSystem& e, const OrientedComplex& oc,
                              const SymmetryAction& g, std::size_t budget) {
  if (!(oc.complex() == e.sigma))
    fail("ShapeMismatch", "oriented complex does not match the system support");
  ModuleOp u = support_projection(e, budget);
  std::optional<SparseMat> ucache;
  CellCache cells;
  return lefschetz_core(e, oc, g, u, ucache, cells);
}

Rat hecke_trace(const AlgebraElement& f, const IdempotentSystem& e, std::size_t budget) {
  if (!e.model) fail("Unsupported", "hecke traces need a finite group model");
  for (const auto& [g, c] : f)
    if (g < 0 || g >= static_cast<int>(e.model->size()))
      fail("UnknownElement", "coefficient index " + std::to_string(g) + " outside the group");
  AdmissibilityResult adm = is_admissible(e.sigma, budget);
  if (!adm.admissible) fail("NotAdmissible", adm.reason);
  return hecke_core(f, e, span_basis(e), cell_table(e));
}

AlgebraElement random_algebra_element(const FiniteGroupModel& model, Rng& rng, int terms) {
  AlgebraElement f;
  for (int t = 0; t < terms; ++t) {
    int idx = static_cast<int>(rng.below(model.size()));
    long long numer = rng.range(-3, 3);
    if (numer == 0) numer = 1;
    f[idx] += Rat(numer) / Rat(rng.range(1, 3));
  }
  return f;
}

Report check_lefschetz(const IdempotentSystem& e, std::size_t budget) {
  Report rep;
  OrientedComplex oc = orient(e.sigma);
  ModuleOp u = support_projection(e, budget);
  std::optional<SparseMat> ucache;
  CellCache cells;
  for (const SymmetryAction& g : e.symmetries) {
    std::string name = "lefschetz-" + g.name;
    try {
      CharacterReport cr = lefschetz_core(e, oc, g, u, ucache, cells);
      Json w{{"sum", rat_text(cr.lefschetz_sum)},
             {"ambient", rat_text(cr.ambient_trace)},
             {"fixed", cr.fixed_simplices.size()}};
      rep.add(Check{name, cr.matches(), std::move(w)});
    } catch (const Error& err) {
      rep.add(Check::failed(name, Json{{"kind", err.kind}, {"message", err.what()}}));
    }
  }
  return rep;
}

Report check_hecke_traces(const IdempotentSystem& e, Rng& rng, int instances,
                          std::size_t budget) {
  if (!e.model) fail("Unsupported", "hecke traces need a finite group model");
  AdmissibilityResult adm = is_admissible(e.sigma, budget);
  if (!adm.admissible) fail("NotAdmissible", adm.reason);
  Report rep;
  QMat basis = span_basis(e);
  std::vector<std::pair<int, AlgebraElement>> cells = cell_table(e);
  ModuleOp u = support_projection(e, budget);
  for (int i = 0; i < instances; ++i) {
    AlgebraElement f = random_algebra_element(*e.model, rng);
    std::string name = "hecke-" + std::to_string(i);
    try {
      Rat t = hecke_core(f, e, basis, cells);
      Rat ambient = (ModuleOp::algebra(e.model, f) * u).trace();
      Json w{{"trace", rat_text(t)}, {"terms", f.size()}};
      rep.add(Check{name, t == ambient, std::move(w)});
    } catch (const Error& err) {
      rep.add(Check::failed(name, Json{{"kind", err.kind}, {"message", err.what()}}));
    }
  }
  return rep;
}

}  // namespace btk
