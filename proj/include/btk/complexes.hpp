#ifndef BTK_COMPLEXES_HPP
#define BTK_COMPLEXES_HPP

/* Cellular chain and cochain complexes of an idempotent system.
 *
 * Every polysimplex is oriented by the sorted order of its slices within each
 * factor; incidence numbers across factors follow the Koszul convention, so
 * dropping slice i of factor f contributes (-1)^(dim of earlier factors) *
 * (-1)^i.  The chain complex ("values included into faces") and the cochain
 * complex ("values projected onto cofaces") are assembled as exact rational
 * block matrices with one block per (cell, cell) pair, verified to square to
 * zero, and reduced by fraction-free elimination.  On top of that sit the
 * theorem-level harnesses: resolution verification, half-space splitting with
 * Mayer-Vietoris bookkeeping, growing-complex stabilisation, the single-cell
 * block decomposition oracle, the vertex-image retraction Phi with its Serre
 * closure checks, and corner fullness of a maximal cell's projection. */

#include <btk/apartment.hpp>
#include <btk/idempotents.hpp>
#include <btk/linalg.hpp>
#include <btk/numbers.hpp>
#include <btk/report.hpp>
#include <btk/rng.hpp>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace btk {

/* ---- orientation and incidence ---- */

class OrientedComplex {
 public:
  OrientedComplex() = default;

  const SubComplex& complex() const { return sigma_; }
  // codimension-1 faces of a cell paired with incidence signs, in face order
  const std::vector<std::pair<Polysimplex, int>>& boundary_faces(const Polysimplex& cell) const;
  int incidence(const Polysimplex& face, const Polysimplex& cell) const;  // 0 unless codim-1

 private:
  friend OrientedComplex orient(const SubComplex& sigma);
  SubComplex sigma_;
  std::map<Polysimplex, std::vector<std::pair<Polysimplex, int>>> faces_;
};

// equips the complex with the canonical orientation and verifies that the
// induced boundary squares to zero on constant coefficients
OrientedComplex orient(const SubComplex& sigma);

/* Image cell and orientation sign of a vertex bijection applied to one cell.
 * The sign is the product over factors of the parity of the induced slice
 * permutation; SymmetryBroken when the images are missing from the map or do
 * not span a polysimplex of the same shape. */
struct MappedCell {
  Polysimplex image;
  int sign = 1;
};
MappedCell map_cell(const ApartmentShape& shape, const Polysimplex& cell,
                    const std::map<Vertex, Vertex>& vertex_map);

/* ---- assembled complexes ---- */

/* One assembled complex: per degree the cells in canonical order, a chosen
 * basis of each value im(e_cell) as dense columns, and the connecting matrix
 * between consecutive degrees.  maps[i] connects degrees i and i+1: for a
 * chain assembly it is the boundary C_{i+1} -> C_i, for a cochain assembly the
 * coboundary C_i -> C_{i+1}.  The augmentation goes C_0 -> module for chains
 * and module -> C_0 for cochains. */
struct ChainAssembly {
  bool cochain = false;
  std::size_t module_dim = 0;
  std::vector<std::vector<Polysimplex>> cells;  // per degree
  std::vector<std::vector<QMat>> bases;         // per degree, aligned with cells
  std::vector<std::vector<std::size_t>> offsets;  // column offset of each cell block
  std::vector<std::size_t> dims;                // total basis columns per degree
  std::vector<QMat> maps;
  QMat augmentation;

  std::size_t degrees() const { return dims.size(); }
};

ChainAssembly assemble_chain(const IdempotentSystem& E, const OrientedComplex& oc);
ChainAssembly assemble_cochain(const IdempotentSystem& E, const OrientedComplex& oc);

// connecting matrices as degree-tagged sparse triples, one per line:
// "degree row col num/den", with the domain degree as the tag
std::string assembly_to_text(const ChainAssembly& ca);

/* ---- homology ---- */

struct HomologyResult {
  std::vector<std::size_t> dims;  // dim H_n (chain) or H^n (cochain) per degree
  QMat degree0_basis;             // representative columns in the degree-0 term
};
HomologyResult homology(const ChainAssembly& ca);

// copy of E with the complex replaced; every vertex must be defined (MissingVertex)
IdempotentSystem restrict_system(const IdempotentSystem& E, const SubComplex& sigma);

/* Action of one declared symmetry on one degree of the assembly, with
 * orientation-character signs; SymmetryBroken when the symmetry does not
 * permute the cells or their values. */
QMat symmetry_chain_matrix(const IdempotentSystem& E, const ChainAssembly& ca,
                           const SymmetryAction& g, std::size_t degree);

// the symmetry action commutes with the connecting maps, for every declared symmetry
Report check_assembly_equivariance(const IdempotentSystem& E, const ChainAssembly& ca);

/* Resolution checks for E on an admissible subcomplex: vanishing of higher
 * (co)homology, the augmentation isomorphisms in degree 0, the ambient
 * decomposition module = sum of images + meet of kernels, and the fact that
 * the support projection effects that decomposition. */
Report verify_resolution(const IdempotentSystem& E, const SubComplex& sigma,
                         std::size_t budget = 1u << 20);

/* ---- half-space splitting and Mayer-Vietoris bookkeeping ---- */

struct HalfspaceSplit {
  SubComplex plus, minus, zero;
};

/* Intersections of the complex with the root's nonnegative / nonpositive /
 * zero half-apartments.  The root must compare coordinates of one factor
 * (PreconditionViolated); when sigma is admissible all three pieces are
 * verified admissible. */
HalfspaceSplit halfspace_split(const SubComplex& sigma, const AffineRoot& root,
                               std::size_t budget = 1u << 20);

/* First affine root (factor, then i < j, then level) whose wall strictly
 * separates two vertices of sigma; empty when none exists, which for an
 * admissible complex means sigma is a single polysimplex. */
std::optional<AffineRoot> find_separating_root(const SubComplex& sigma);

// injectivity of H_0(small) -> H_0(big) for nested complexes, by exact ranks
bool h0_inclusion_injective(const IdempotentSystem& E, const SubComplex& small_sigma,
                            const SubComplex& big_sigma);

/* Rank bookkeeping of the long exact sequence for a split of E's complex into
 * plus and minus overlapping in zero: the chain-level dimension identities,
 * vanishing of higher homology on all four complexes, inclusion-exclusion in
 * degree 0, injectivity of H_0(zero) -> H_0(plus), and the Euler identity. */
Report check_mayer_vietoris(const IdempotentSystem& E, const SubComplex& plus,
                            const SubComplex& minus, const SubComplex& zero,
                            std::size_t budget = 1u << 20);

/* Growing-complex stabilisation: consecutive members nested and admissible,
 * and every induced map H_0(chain[i]) -> H_0(chain[i+1]) injective. */
Report check_stabilization(const IdempotentSystem& E, const std::vector<SubComplex>& chain,
                           std::size_t budget = 1u << 20);

/* Single-cell block decomposition oracle: on one polysimplex the vertex
 * idempotents commute, the subset products e_I^0 vanish unless I spans a face,
 * their ranks sum to the module dimension, and the directly computed homology
 * matches the block prediction. */
Report check_single_cell_blocks(const IdempotentSystem& E, const Polysimplex& cell);

/* ---- the retraction onto vertex-generated submodules ---- */

/* Basis of sum_x e_x(W) for a submodule W given by spanning columns; W must be
 * invariant under every vertex idempotent (NotInvariant). */
QMat phi(const IdempotentSystem& E, const SubComplex& sigma, const QMat& submodule);

/* Serre closure at finite scale for the short exact sequence
 * sub >-> mid ->> mid/sub: with P(W) := (W = sum_x e_x(W)), verifies
 * P(mid) => P(quotient), P(mid) => P(sub), and P(sub) & P(quotient) => P(mid).
 * Throws NotExact when sub is not contained in mid and NotCompatible when
 * either submodule fails to be invariant under every e_x. */
Report check_serre_closure(const IdempotentSystem& E, const SubComplex& sigma,
                           const QMat& sub_basis, const QMat& mid_basis);

/* Corner fullness of the projection of a maximal cell delta: conjugators
 * (declared symmetries, by name; empty = all declared) transport the face
 * values of delta onto every vertex, e_x absorbs the transported projection,
 * and the whole-complex projection lies in the span of the transported
 * conjugates (exact linear membership).  MissingConjugator when some cell of
 * the complex is not reachable from a face of delta. */
Report check_corner_fullness(const IdempotentSystem& E, const Polysimplex& delta,
                             const std::vector<std::string>& conjugators = {},
                             std::size_t budget = 1u << 20);

/* ---- seeded fixtures for randomized batteries ---- */

// finite admissible subcomplex inside [0,box]^total, grown by unioning random
// hulls while admissibility is preserved
SubComplex random_admissible_complex(const ApartmentShape& shape, Rng& rng, Coord box,
                                     int pieces, std::size_t budget = 1u << 20);

// diagonal system on sigma whose convex supports are hulls of random vertex
// pairs drawn from sigma and the surrounding box
IdempotentSystem random_diagonal_system(const SubComplex& sigma, Rng& rng, Coord box,
                                        std::size_t n_supports, std::size_t budget = 1u << 20);

}  // namespace btk

#endif
