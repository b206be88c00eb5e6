#pragma once

#include <btk/complexes.hpp>

#include <string>
#include <tuple>
#include <vector>

namespace btk {

/* ---- Lefschetz character sums and Hecke traces ----
 *
 * A symmetry g of a consistent system acts on every module V_sigma it fixes.
 * The local character of a fixed polysimplex is the trace of g on V_sigma,
 * multiplied by the orientation sign of the induced vertex permutation.  The
 * alternating sum of local characters over the fixed cells equals the trace
 * of g on the ambient image sum_x e_x(V); both sides are computed here
 * independently and exactly. */

/* One group element's character data over a complex: the alternating sum of
 * local traces on fixed cells next to the trace of g composed with the
 * support projection.  Equality of the two numbers is the theorem under
 * test, so it is reported rather than enforced. */
struct CharacterReport {
  int element = -1;      // group index when the symmetry is a translation
  std::string symmetry;  // declared symmetry name, when invoked through one
  Rat lefschetz_sum = 0;
  Rat ambient_trace = 0;
  // (fixed cell, degree sign (-1)^dim, local trace including orientation)
  std::vector<std::tuple<Polysimplex, int, Rat>> fixed_simplices;

  bool matches() const { return lefschetz_sum == ambient_trace; }
  Json to_json() const;
};

/* Local character of g at a cell it stabilizes: the orientation sign of the
 * induced slice permutation times the trace of g on V_sigma = im(e_sigma).
 * Throws NotStabilizing when g does not map sigma onto itself. */
Rat simplex_character(const IdempotentSystem& e, const OrientedComplex& oc,
                      const Polysimplex& sigma, const SymmetryAction& g);

/* Full character report for one symmetry: every cell of the complex must map
 * into the complex (otherwise NotInvariantComplex); fixed cells contribute
 * (-1)^dim times their local character.  The ambient side is the trace of
 * the permutation action composed with the support projection. */
CharacterReport lefschetz_sum(const IdempotentSystem& e, const OrientedComplex& oc,
                              const SymmetryAction& g, std::size_t budget = 1u << 20);

/* Trace of a group-algebra element f on the degree-zero homology of the
 * chain assembly, i.e. on sum_x e_x(V).  Computed on an explicit basis of
 * the image span and cross-checked against the alternating sum of the traces
 * of f on the cell modules; a mismatch throws ConsistencyFailure.  Requires
 * a finite group model. */
Rat hecke_trace(const AlgebraElement& f, const IdempotentSystem& e,
                std::size_t budget = 1u << 20);

// seeded sparse rational combination of group elements, for trace batteries
AlgebraElement random_algebra_element(const FiniteGroupModel& model, Rng& rng,
                                      int terms = 3);

/* One check per declared symmetry: its Lefschetz sum equals its ambient
 * trace.  Witnesses carry both numbers and the fixed-cell count. */
Report check_lefschetz(const IdempotentSystem& e, std::size_t budget = 1u << 20);

/* Seeded battery of random group-algebra elements: each hecke_trace must
 * survive its internal Euler cross-check and agree with the directly
 * computed trace of f composed with the support projection. */
Report check_hecke_traces(const IdempotentSystem& e, Rng& rng, int instances,
                          std::size_t budget = 1u << 20);

}  // namespace btk
