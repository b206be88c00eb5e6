#pragma once
/*
 * Lattice-class model of the affine building of GL_d over a p-adic field,
 * at desk scale: every lattice is the column span, over the p-local
 * integers, of an invertible rational matrix.  A vertex is a homothety
 * class of lattices; its canonical representative is the column Hermite
 * normal form — lower triangular, p-power diagonal, below-diagonal entries
 * reduced modulo the diagonal of their row — scaled so the lattice sits
 * inside the standard lattice but not inside p times it.
 *
 * Simplices are chains of lattices pinched between a top lattice and p
 * times it.  The module provides adjacency via relative elementary
 * divisors, the exact group action, breadth-first balls, the diagonal
 * apartment chart, simultaneous diagonalization of two vertices, fixed-point
 * subcomplexes, and (for d = 2) the retraction of the tree onto the
 * standard apartment centered at one of its edges.
 */

#include <btk/apartment.hpp>
#include <btk/linalg.hpp>
#include <btk/numbers.hpp>

#include <set>
#include <vector>

namespace btk {

struct LatticeContext {
  long p = 2;  // residue characteristic (prime)
  long d = 2;  // ambient dimension
};

// Canonical integer matrix of a lattice class (see file comment).
struct LatticeVertex {
  std::vector<std::vector<Int>> h;  // d rows of d entries, lower triangular

  long dim() const { return static_cast<long>(h.size()); }
  bool operator==(const LatticeVertex& o) const { return h == o.h; }
  bool operator!=(const LatticeVertex& o) const { return !(*this == o); }
  bool operator<(const LatticeVertex& o) const;
};

// the canonical matrix as rationals (columns generate the lattice)
QMat vertex_matrix(const LatticeVertex& v);

// Canonicalize the class of the column span of m.  The square overload
// requires m invertible; the generator overload accepts any d×n matrix of
// full row rank.  Throws SingularMatrix otherwise.
LatticeVertex canonical_vertex(const LatticeContext& ctx, const QMat& m);
LatticeVertex lattice_from_generators(const LatticeContext& ctx, const QMat& gens);
LatticeVertex standard_vertex(const LatticeContext& ctx);

// a = left · diag(p^exponents) · right with both transforms invertible over
// the p-local integers; exponents ascending
struct SmithDecomposition {
  std::vector<long> exponents;
  QMat left, right;
};
SmithDecomposition smith_padic(const LatticeContext& ctx, const QMat& a);

// elementary-divisor exponents of w relative to v, ascending, shifted so the
// smallest is 0 (homothety-invariant)
std::vector<long> relative_exponents(const LatticeContext& ctx, const LatticeVertex& v,
                                     const LatticeVertex& w);

// spread of the relative exponents ≤ 1; equal vertices count as adjacent
bool adjacent(const LatticeContext& ctx, const LatticeVertex& v, const LatticeVertex& w);

// graph distance on the (p+1)-regular tree (d = 2 only)
long tree_distance(const LatticeContext& ctx, const LatticeVertex& v, const LatticeVertex& w);

// A simplex: distinct pairwise-adjacent vertex classes together with the
// representing chain Λ_0 ⊋ Λ_1 ⊋ … ⊋ Λ_l ⊇ pΛ_0 (canonical integer
// matrices, largest lattice first).  Identity is determined by the vertex
// set; the chain is re-derived deterministically.
struct BuildingSimplex {
  std::vector<LatticeVertex> verts;                // sorted, distinct
  std::vector<std::vector<std::vector<Int>>> chain;  // nested representatives

  long dim() const { return static_cast<long>(verts.size()) - 1; }
  bool operator==(const BuildingSimplex& o) const { return verts == o.verts; }
  bool operator<(const BuildingSimplex& o) const { return verts < o.verts; }
};

// Builds the simplex on the given classes; throws NotAChain when no
// representatives form a chain (e.g. the classes are not pairwise adjacent).
BuildingSimplex make_simplex(const LatticeContext& ctx, const std::vector<LatticeVertex>& vs);

// all nonempty subsets of the vertex set, each as a simplex (includes s)
std::vector<BuildingSimplex> simplex_faces(const LatticeContext& ctx, const BuildingSimplex& s);

// exact action of g ∈ GL_d(Q); throws SingularMatrix
LatticeVertex act(const LatticeContext& ctx, const QMat& g, const LatticeVertex& v);
BuildingSimplex act(const LatticeContext& ctx, const QMat& g, const BuildingSimplex& s);

// face-closed finite set of simplices
class BuildingComplex {
 public:
  explicit BuildingComplex(LatticeContext ctx) : ctx_(ctx) {}

  const LatticeContext& context() const { return ctx_; }
  const std::set<BuildingSimplex>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool contains(const BuildingSimplex& s) const { return cells_.count(s) != 0; }
  void insert(const BuildingSimplex& s);  // inserts all faces as well

  std::vector<LatticeVertex> vertex_list() const;
  std::vector<BuildingSimplex> cells_of_dim(long k) const;
  long max_dim() const;

 private:
  LatticeContext ctx_;
  std::set<BuildingSimplex> cells_;
};

// classes [M] with pΛ ⊊ M ⊊ Λ: one per proper nonzero subspace of Λ/pΛ
std::vector<LatticeVertex> neighbors(const LatticeContext& ctx, const LatticeVertex& v);

// all simplices on the vertices within graph distance `radius` of `center`;
// throws BudgetExceeded when the vertex count passes `budget`
BuildingComplex ball(const LatticeContext& ctx, const LatticeVertex& center, long radius,
                     std::size_t budget = 1u << 14);

// the diagonal chart: apartment vertex n ↦ class of diag(p^{n_0},…,p^{n_{d-1}})
LatticeVertex standard_apartment_embed(const LatticeContext& ctx, const std::vector<Coord>& n);

// inverse chart for diagonal classes: the exponent vector (min entry 0);
// throws NotInStandardApartment for non-diagonal canonical forms
std::vector<Coord> apartment_coordinates(const LatticeContext& ctx, const LatticeVertex& v);

// basis adapted to both vertices: v = basis·Z^d, w = basis·diag(p^coords_w)·Z^d
// (after scaling), coords_v = 0.  When the relative matrix is already
// diagonal the basis is kept as-is and the coordinates are read off directly.
struct CommonApartment {
  QMat basis;
  std::vector<Coord> coords_v, coords_w;
};
CommonApartment common_apartment(const LatticeContext& ctx, const LatticeVertex& v,
                                 const LatticeVertex& w);

// simplices of `region` all of whose vertices every generator fixes
BuildingComplex fixed_subcomplex(const LatticeContext& ctx, const std::vector<QMat>& generators,
                                 const BuildingComplex& region);

// Retraction of the tree onto the standard apartment centered at `chamber`
// (an edge of the standard apartment): folds every branch along the unique
// geodesic to the chamber, preserving distances to it.  Returns the image as
// an apartment cell in the two-coordinate chart.  d = 2 only (Unsupported).
Polysimplex tree_retraction(const LatticeContext& ctx, const BuildingSimplex& chamber,
                            const BuildingSimplex& s);

std::string to_string(const LatticeVertex& v);

}  // namespace btk
