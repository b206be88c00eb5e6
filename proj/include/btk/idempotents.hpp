#ifndef BTK_IDEMPOTENTS_HPP
#define BTK_IDEMPOTENTS_HPP

/* Consistent systems of idempotents on finite apartment subcomplexes.
 *
 * Two constructions are provided.  The diagonal model attaches to each module
 * basis index a convex subcomplex ("support") and lets e_x be the 0/1 diagonal
 * matrix detecting which supports contain x; consistency then follows from
 * convexity, but is still checked.  The group-averaging model realises the
 * congruence subgroups U^(r) attached to lattice classes inside one finite
 * quotient GL_d(Z/p^M) acting on a finite set X, and lets e_x be the
 * normalised subgroup average acting on Q[X].
 *
 * Operators on the module are kept in the cheapest faithful representation
 * (diagonal vector, group-algebra coefficient function, or dense matrix); all
 * arithmetic is exact rational.  Checkers verify the vertex conditions
 * (commutation for adjacent vertices, the hull relation e_x e_z e_y = e_x e_y),
 * the polysimplex conditions (products along joins, hull absorption), declared
 * symmetry equivariance, the support projection u_Sigma with its image/kernel
 * description, additivity and separation across splits, and the double-coset
 * multiplicativity of dominant diagonal elements at finite level. */

#include <btk/apartment.hpp>
#include <btk/building.hpp>
#include <btk/linalg.hpp>
#include <btk/numbers.hpp>
#include <btk/report.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace btk {

/* ---- finite matrix groups over Z/p^M ---- */

// row-major d x d residue matrix, entries in [0, p^M)
using ModMatrix = std::vector<Int>;

ModMatrix mod_reduce(const QMat& m, const Int& modulus);  // requires integral entries
ModMatrix mod_mul(const ModMatrix& a, const ModMatrix& b, long d, const Int& modulus);
bool mod_invertible(const ModMatrix& m, long p, long d);

// closure of the given residue matrices under multiplication (they must be
// invertible mod p, so the closure is a group); sorted; BudgetExceeded guard
std::vector<ModMatrix> group_closure(long p, long M, long d, std::vector<ModMatrix> gens,
                                     std::size_t budget = 1u << 20);

// all invertible matrices mod p^M; only sensible for tiny parameters
std::vector<ModMatrix> full_general_linear(long p, long d, long M,
                                           std::size_t budget = 1u << 20);

/* Finite image of the congruence subgroup U^(r) of an apartment vertex: all
 * residue matrices with g_ij = delta_ij mod p^(r+1+n_i-n_j), where n is the
 * exponent vector of the vertex.  Throws DepthExceeded when some exponent is
 * negative (vertex too deep for level r), PrecisionTooLow when M is too small
 * for the subgroup to be the full preimage of its image (M >= r+1+spread),
 * and BudgetExceeded when the order exceeds the budget. */
std::vector<ModMatrix> congruence_subgroup(long p, long d, long r, long M,
                                           const LatticeVertex& v,
                                           std::size_t budget = 1u << 20);

struct FiniteGroupModel {
  long p = 2, d = 2, M = 2;
  Int modulus = 4;
  std::string space = "regular";  // "regular" | "projective-line" | "cosets:<name>"
  std::vector<ModMatrix> elements;  // sorted; closed under products and inverses
  std::vector<int> inverse;         // inverse[g] = index of g^-1
  std::size_t module_dim = 0;       // |X|
  std::vector<std::vector<int>> action;       // action[g][x] on the module basis X
  std::vector<long long> fixed_count;         // #{x : g x = x} per element
  std::vector<int> coset_of;   // cosets space only: element index -> basis point
  std::vector<int> coset_rep;  // cosets space only: basis point -> minimal element

  std::size_t size() const { return elements.size(); }
  int index_of(const ModMatrix& m) const;     // -1 when absent
  int mul(int a, int b) const;
  QMat element_matrix(int i) const;           // canonical integer lift

 private:
  friend std::shared_ptr<const FiniteGroupModel> build_group_model(
      long, long, long, const std::vector<ModMatrix>&, const std::string&,
      const std::vector<ModMatrix>&, std::size_t);
  std::vector<std::vector<int>> mult_;        // full table when affordable
};

/* Builds the group generated by `generators` mod p^M together with its module:
 * "regular" (X = the group, left translation), "projective-line" (d = 2,
 * X = P^1(Z/p^M)), or "cosets:<name>" (X = left cosets of coset_subgroup). */
std::shared_ptr<const FiniteGroupModel> build_group_model(
    long p, long d, long M, const std::vector<ModMatrix>& generators,
    const std::string& space, const std::vector<ModMatrix>& coset_subgroup = {},
    std::size_t budget = 1u << 20);

/* ---- group algebra: finitely supported Q-valued functions on the group ---- */

using AlgebraElement = std::map<int, Rat>;

AlgebraElement averaging_element(const FiniteGroupModel& G, const std::vector<int>& subgroup);
AlgebraElement convolve(const FiniteGroupModel& G, const AlgebraElement& a,
                        const AlgebraElement& b);
SparseMat algebra_matrix(const FiniteGroupModel& G, const AlgebraElement& a);
Rat algebra_trace(const FiniteGroupModel& G, const AlgebraElement& a);

// sorted set product AB of two element-index sets
std::vector<int> product_set(const FiniteGroupModel& G, const std::vector<int>& a,
                             const std::vector<int>& b);
// verifies that the sorted index set is closed under products (NotASubgroup)
void require_subgroup(const FiniteGroupModel& G, const std::vector<int>& k);

// spec-level averaging operator on the module; verifies the subgroup property
// and idempotency before returning
SparseMat averaging_idempotent(const std::vector<int>& subgroup_elements,
                               const FiniteGroupModel& model);

/* ---- module operators ---- */

/* One exact operator on the module, in whichever representation its system
 * uses: a diagonal vector, a group-algebra element, or a dense matrix.  Binary
 * operations require matching kinds.  Equality of algebra operators compares
 * coefficient functions on the regular module (where the representation is
 * faithful) and materialised matrices otherwise. */
class ModuleOp {
 public:
  enum class Kind { Diagonal, Algebra, Dense };

  static ModuleOp diagonal(std::vector<Rat> diag);
  static ModuleOp algebra(std::shared_ptr<const FiniteGroupModel> model, AlgebraElement fn);
  static ModuleOp dense(QMat m);

  Kind kind() const { return kind_; }
  std::size_t dim() const;
  const AlgebraElement& coefficients() const { return fn_; }
  const std::vector<Rat>& diagonal_entries() const { return diag_; }

  ModuleOp operator*(const ModuleOp& o) const;
  ModuleOp operator+(const ModuleOp& o) const;
  ModuleOp operator-(const ModuleOp& o) const;
  ModuleOp scaled(const Rat& s) const;
  bool operator==(const ModuleOp& o) const;
  bool is_idempotent() const { return *this * *this == *this; }

  Rat trace() const;
  QMat apply(const QMat& m) const;  // operator times a dense matrix
  SparseMat sparse() const;
  static ModuleOp identity_like(const ModuleOp& proto);

 private:
  Kind kind_ = Kind::Dense;
  std::vector<Rat> diag_;
  std::shared_ptr<const FiniteGroupModel> model_;
  AlgebraElement fn_;
  QMat dense_;
};

/* ---- idempotent systems ---- */

enum class Provenance { DiagonalModel, GroupAveraging, Explicit };

/* A declared symmetry: a permutation of the module basis together with the
 * induced bijection of the vertices of Sigma.  For group systems the optional
 * fields record how the permutation was assembled (left translation by a group
 * element, optionally twisted by the declared automorphism), which enables
 * set-level equivariance checks. */
struct SymmetryAction {
  std::string name;
  std::vector<std::size_t> space_perm;   // basis index x -> pi(x)
  std::map<Vertex, Vertex> vertex_map;   // bijection of Sigma vertices
  int group_element = -1;
  bool twisted = false;
};

struct IdempotentSystem {
  SubComplex sigma;
  Provenance provenance = Provenance::Explicit;
  std::size_t module_dim = 0;

  std::vector<SubComplex> supports;  // diagonal payload: basis index w <-> supports[w]

  std::shared_ptr<const FiniteGroupModel> model;  // group payload
  std::map<Vertex, std::vector<int>> subgroups;   // sorted element indices per vertex
  std::vector<int> automorphism;  // index permutation realising the symmetry twist

  std::map<Vertex, QMat> dense_map;  // explicit payload

  std::vector<SymmetryAction> symmetries;

  std::vector<Vertex> vertices() const;  // vertices of sigma, sorted
  bool defined_at(const Vertex& x) const;
  ModuleOp vertex_op(const Vertex& x) const;
  // product over the vertices of s in canonical order; NonCommutingVertices
  // when the reversed ordering gives a different product
  ModuleOp cell_op(const Polysimplex& s) const;
  // deterministic basis of im(e_s) as dense columns (orbit indicators for
  // group systems, unit vectors for diagonal systems, pivot columns otherwise)
  QMat image_basis(const Polysimplex& s) const;

 private:
  mutable std::map<Polysimplex, ModuleOp> cell_cache_;
};

IdempotentSystem diagonal_model(const SubComplex& sigma,
                                const std::vector<SubComplex>& supports,
                                std::size_t budget = 1u << 20);
IdempotentSystem explicit_system(const SubComplex& sigma, const std::map<Vertex, QMat>& e);
IdempotentSystem group_system(std::shared_ptr<const FiniteGroupModel> model,
                              const SubComplex& sigma,
                              const std::map<Vertex, std::vector<int>>& subgroups);

/* Reference congruence model: the segment of the standard apartment of
 * GL_2(Q_p) centred at the origin with r+2 vertices (coordinates
 * -floor((r+1)/2) .. ceil((r+1)/2)), subgroups U^(r), finite level M
 * (default r+2), module chosen by `space`.  Declares the full symmetry group:
 * left translations by the model group (these fix the segment pointwise) and,
 * when the segment is symmetric, their compositions with the coordinate swap
 * w = antidiag(1,1) acting by conjugation on the regular module and by matrix
 * action otherwise. */
IdempotentSystem reference_tree_model(long p, long r, const std::string& space, long M = -1,
                                      std::size_t budget = 1u << 20);

// spec-level operator for one polysimplex, as a sparse matrix on the module
SparseMat simplex_idempotent(const IdempotentSystem& E, const Polysimplex& s);

std::size_t dim_image_sum(const IdempotentSystem& E);    // dim of sum of im(e_x)
std::size_t dim_kernel_meet(const IdempotentSystem& E);  // dim of intersection of ker(e_x)

/* ---- checkers (failures are report entries, not exceptions) ---- */

// set-level conditions on the subgroups: (a) K_x K_y = K_y K_x for adjacent
// vertices, (b) K_z inside K_x K_y for hull vertices z adjacent to x, and
// (c) equivariance of the subgroup map under the declared symmetries
Report check_group_consistency(const IdempotentSystem& E);

// matrix-level conditions: idempotency, (a) and (b) on vertices, (d) products
// along joins of adjacent polysimplices, (e) hull absorption; (b) is also
// reported without the adjacency restriction ("b-all")
Report check_idempotent_consistency(const IdempotentSystem& E, std::size_t budget = 1u << 20);

// pi e_x pi^{-1} = e_{pi(x)} for every declared symmetry
Report check_equivariance(const IdempotentSystem& E);

/* Both directions of the subgroup/idempotent correspondence on the regular
 * module: group conditions passing force the matrix conditions, and the
 * support of av(K_x) av(K_y) reconstructs the product set, so the matrix hull
 * relation forces K_z inside K_x K_y. */
Report check_lemma_equivalence(const IdempotentSystem& E);

/* Support projection u_Sigma = sum over cells of (-1)^dim e_cell.  Verifies
 * before returning: Sigma admissible (NotAdmissible), vertex conditions (a)
 * and (b) (ConsistencyFailure), u^2 = u, e_x u = e_x = u e_x, and that the
 * image/kernel of u match the span of the images / meet of the kernels. */
ModuleOp support_projection(const IdempotentSystem& E, std::size_t budget = 1u << 20);

// the same postconditions, reported check by check instead of thrown
Report check_support_projection(const IdempotentSystem& E, std::size_t budget = 1u << 20);

/* Additivity across a split Sigma = plus with minus overlapping in zero:
 * u_Sigma = u_plus + u_minus - u_zero, u_plus u_minus = u_minus u_plus =
 * u_zero, and the separation specialisation e_x u_zero e_y = e_x e_y for
 * strictly separated vertex pairs. */
Report check_projection_additivity(const IdempotentSystem& E, const SubComplex& plus,
                                   const SubComplex& minus, const SubComplex& zero,
                                   std::size_t budget = 1u << 20);

/* Separation corollary: if zero = plus_big meet minus_big with plus inside
 * plus_big, minus inside minus_big and plus_big join minus_big admissible,
 * then u_plus u_minus = u_plus u_zero u_minus. */
Report check_separation(const IdempotentSystem& E, const SubComplex& plus,
                        const SubComplex& minus, const SubComplex& zero,
                        const SubComplex& plus_big, const SubComplex& minus_big,
                        std::size_t budget = 1u << 20);

/* ---- double cosets of dominant diagonal elements at finite level ---- */

// diag(p, ..., p, 1, ..., 1) with l entries p
QMat omega_generator(long p, long d, long l);

/* Verifies U g U * U h U = U gh U as residue sets for all ordered pairs of
 * dominant generators, and the commuting condition
 * e Omega e Omega^{-1} = Omega e Omega^{-1} e as scaled residue sets.
 * validity_depth is the congruence level of U (r+1 for U^(r)); pairs whose
 * combined elementary-divisor spread exceeds M - validity_depth throw
 * OutOfValidityRange, as do conjugates leaving the integral model. */
Report check_dplus_multiplicativity(long p, long d, long M,
                                    const std::vector<ModMatrix>& subgroup_elements,
                                    const std::vector<QMat>& dplus_generators,
                                    long validity_depth);

/* Search harness for averages supported outside 1 + M_d(P) that still satisfy
 * the commuting condition with the given dominant element; enumerates cyclic
 * subgroups of GL_d(Z/p^M) up to the budget and reports every candidate.
 * Promises no theoretical conclusion. */
Report dplus_search(long p, long d, long M, const QMat& omega, std::size_t budget = 256);

}  // namespace btk

#endif
