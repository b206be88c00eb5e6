#ifndef BTK_APARTMENT_HPP
#define BTK_APARTMENT_HPP

/* Finite pieces of apartments of affine type A (products of irreducible A~
 * factors, one factor per block of coordinates).
 *
 * A vertex of an A~_{m-1} factor is an integer vector of length m modulo the
 * all-ones vector; the canonical representative has last coordinate 0.  Two
 * vertices are adjacent when their difference has coordinate spread <= 1 in
 * every factor.  A polysimplex is a product over factors of simplices, each
 * stored as the sorted list of its vertex slices; pairwise-adjacent vertex
 * slices inside one factor always line up into a chain base, base+X_{S_1},
 * base+X_{S_2}, ... with nested index sets S_i, which is what the chamber and
 * carrier machinery below exploits.
 *
 * Hulls are cut out by affine root half-spaces: for every ordered coordinate
 * pair (i,j) inside a factor, the binding constraint on a test vertex w is
 *   w_i - w_j >= min over the base vertices of (x_i - x_j),
 * and a polysimplex lies in the hull iff all of its vertices satisfy all
 * constraints.  Convexity, admissibility, the minimal-face / maximal-cone
 * lemmas and the two path lemmas are implemented on top of that, with exact
 * rational segment tracing (Freudenthal carriers) for the path constructions. */

#include <btk/numbers.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace btk {

using Coord = long long;
using Slice = std::vector<Coord>;  // coordinates of one factor

struct ApartmentShape {
  std::vector<int> factors;  // coordinate count per irreducible factor, each >= 1

  int total() const {
    int t = 0;
    for (int m : factors) t += m;
    return t;
  }
  std::pair<int, int> range(std::size_t f) const {  // [begin, end)
    int b = 0;
    for (std::size_t g = 0; g < f; ++g) b += factors[g];
    return {b, b + factors[f]};
  }
  int factor_of(int coord) const {
    int b = 0;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      b += factors[f];
      if (coord < b) return static_cast<int>(f);
    }
    fail("DimensionMismatch", "coordinate out of range");
  }
  bool operator==(const ApartmentShape&) const = default;
};

inline ApartmentShape irreducible(int d) { return {{d}}; }

Slice canonical_slice(Slice s);

struct Vertex {
  std::vector<Coord> x;
  auto operator<=>(const Vertex&) const = default;
};

Vertex make_vertex(const ApartmentShape& shape, std::vector<Coord> raw);
Slice slice_of(const ApartmentShape& shape, const Vertex& v, std::size_t f);

// affine functional x_i - x_j - k with i, j in the same factor
struct AffineRoot {
  int i = 0, j = 0;
  Coord k = 0;
  auto operator<=>(const AffineRoot&) const = default;
};

Coord eval_root(const AffineRoot& a, const Vertex& v);
Rat eval_root(const AffineRoot& a, const std::vector<Rat>& point);

bool adjacent(const ApartmentShape& shape, const Vertex& v, const Vertex& w);

struct Polysimplex {
  std::vector<std::vector<Slice>> parts;  // parts[f]: sorted distinct slices of factor f

  int dim() const {
    int d = 0;
    for (const auto& p : parts) d += static_cast<int>(p.size()) - 1;
    return d;
  }
  std::size_t vertex_count() const {
    std::size_t n = 1;
    for (const auto& p : parts) n *= p.size();
    return n;
  }
  std::vector<Vertex> vertices() const;                     // product, canonical
  bool is_face_of(const Polysimplex& other) const;          // subset in every factor
  std::vector<Polysimplex> faces() const;                   // all faces including itself
  std::vector<Polysimplex> proper_faces() const;
  auto operator<=>(const Polysimplex&) const = default;
};

Polysimplex span(const ApartmentShape& shape, const std::vector<Vertex>& vs);
Polysimplex vertex_cell(const ApartmentShape& shape, const Vertex& v);

class SubComplex {
  ApartmentShape shape_;
  std::set<Polysimplex> cells_;

 public:
  SubComplex() = default;
  explicit SubComplex(ApartmentShape s) : shape_(std::move(s)) {}

  const ApartmentShape& shape() const { return shape_; }
  const std::set<Polysimplex>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  bool contains(const Polysimplex& p) const { return cells_.count(p) > 0; }

  void insert(const Polysimplex& p);             // inserts p and all faces
  void insert_all(const SubComplex& other);
  std::set<Vertex> vertex_set() const;
  std::vector<Polysimplex> maximal_cells() const;
  std::vector<Polysimplex> cells_of_dim(int d) const;
  int max_dim() const;
  bool operator==(const SubComplex& o) const { return shape_ == o.shape_ && cells_ == o.cells_; }
};

/* Binding hull constraints of a vertex set: k[i][j] = min (x_i - x_j). */
struct HullConstraints {
  ApartmentShape shape;
  std::vector<std::vector<Coord>> k;

  bool contains(const Vertex& v) const;
  bool contains(const Polysimplex& p) const;
};

HullConstraints hull_constraints(const ApartmentShape& shape, const std::vector<Vertex>& base);
HullConstraints hull_constraints(const ApartmentShape& shape, const Polysimplex& s,
                                 const Polysimplex& t);

// all vertices satisfying the constraints (finite; bounded by the base's coordinate box)
std::set<Vertex> hull_vertex_set(const HullConstraints& hc, std::size_t budget);

// every ambient polysimplex all of whose vertices lie in the given set
SubComplex complex_on_vertices(const ApartmentShape& shape, const std::set<Vertex>& vs,
                               std::size_t budget);

SubComplex hull(const ApartmentShape& shape, const Polysimplex& s, const Polysimplex& t,
                std::size_t budget = 1u << 20);

SubComplex enumerate_box(const ApartmentShape& shape, const std::vector<Coord>& lo,
                         const std::vector<Coord>& hi, std::size_t budget = 1u << 20);

SubComplex convex_closure(const SubComplex& sigma, std::size_t budget = 1u << 20);

struct ConvexityWitness {
  Polysimplex s, t, escaped;  // escaped in hull(s,t) but not in the complex
};
struct ConvexityResult {
  bool convex = false;
  std::optional<ConvexityWitness> witness;
};
ConvexityResult is_convex(const SubComplex& sigma, std::size_t budget = 1u << 20);

struct AdmissibilityResult {
  bool admissible = false;
  std::string reason;                      // which condition failed
  std::optional<Polysimplex> witness_cell;
  std::optional<Vertex> witness_vertex;
};
AdmissibilityResult is_admissible(const SubComplex& sigma, std::size_t budget = 1u << 20);

// star of tau in the ambient apartment: all cofaces and their faces
SubComplex star(const ApartmentShape& shape, const Polysimplex& tau);

/* Minimal face lemma: unique minimal face tau of sigma with sigma in hull(x, tau);
 * computed by the chamber reflection algorithm (production) or by exhaustive
 * search over faces (oracle). */
Polysimplex minimal_face(const ApartmentShape& shape, const Vertex& x, const Polysimplex& sigma);
Polysimplex minimal_face_bruteforce(const ApartmentShape& shape, const Vertex& x,
                                    const Polysimplex& sigma);

struct MaximalConeResult {
  Polysimplex sigma;                  // unique maximal element of hull(x,tau) containing tau
  std::optional<Polysimplex> omega;   // when sigma == tau != x: proper face with tau in hull(x, omega)
};
MaximalConeResult maximal_cone(const ApartmentShape& shape, const Vertex& x,
                               const Polysimplex& tau);

/* Path lemmas; outputs are self-verified against their defining clauses and
 * throw PreconditionViolated with a description if verification fails.
 *
 * vertex_path(sigma, tau, y): for y in hull(sigma, tau), a sequence
 * z_0, ..., z_m = y with z_0 a vertex of tau, consecutive entries adjacent,
 * z_i in hull(y, z_{i-1}) and y in hull(sigma, z_i).  A starting vertex is
 * guaranteed to exist when y is adjacent to sigma; in four or more
 * coordinates it can fail otherwise (then this throws). */
std::vector<Vertex> vertex_path(const ApartmentShape& shape, const Polysimplex& sigma,
                                const Polysimplex& tau, const Vertex& y);
std::vector<Polysimplex> simplex_path(const ApartmentShape& shape, const Polysimplex& sigma,
                                      const Polysimplex& tau, const Polysimplex& omega);

// carrier: the unique polysimplex whose relative interior contains the point
Polysimplex carrier(const ApartmentShape& shape, const std::vector<Rat>& point);
std::vector<Rat> barycenter(const Polysimplex& p);

// carriers of open subintervals and crossing points along the straight segment
std::vector<Polysimplex> segment_carriers(const ApartmentShape& shape,
                                          const std::vector<Rat>& from,
                                          const std::vector<Rat>& to);

std::string to_string(const Vertex& v);
std::string to_string(const Polysimplex& p);

}  // namespace btk

#endif
