#pragma once

#include <btk/building.hpp>
#include <btk/idempotents.hpp>
#include <btk/report.hpp>

#include <string>

namespace btk {

/* ---- JSON schemas for every value that crosses the process boundary ----
 *
 * All parsers throw ParseError on structural problems (wrong type, missing
 * key, malformed number); domain errors raised while rebuilding values (for
 * example a vertex list that does not span a polysimplex) keep their own
 * kinds.  Serializers are deterministic: given equal inputs they produce
 * byte-identical documents. */

/* p-adic scalars print as "num*p^e" with num coprime to p, or
 * "num/den*p^e" when a unit denominator remains; zero prints as "0". */
std::string scalar_text(const Rat& q, long p);
Rat parse_scalar(const std::string& text, long p);

// plain rationals print as "num/den" (parser also accepts "num")
std::string fraction_text(const Rat& q);
Rat parse_fraction(const std::string& text);

// dense matrices as arrays of rows of p-adic scalar strings
Json qmat_to_json(const QMat& m, long p);
QMat qmat_from_json(const Json& j, long p);

// sparse matrices as {"rows", "cols", "entries": [[row, col, "num/den"], ...]}
Json sparse_to_json(const SparseMat& m);
SparseMat sparse_from_json(const Json& j);

/* ---- apartment-side documents ----
 * The shape header is {"type":"A~","d":4} for one irreducible factor or
 * {"type":"A~","factors":[d1,d2,...]} for products; serializers emit both
 * keys when they coincide.  Vertices are integer coordinate arrays. */
Json shape_to_json(const ApartmentShape& shape);
ApartmentShape shape_from_json(const Json& j);

Json vertex_to_json(const Vertex& v);
Vertex vertex_from_json(const ApartmentShape& shape, const Json& j);

// a polysimplex is its sorted vertex list plus the shape header; the parser
// also accepts a bare array of vertex arrays
Json polysimplex_to_json(const ApartmentShape& shape, const Polysimplex& s);
Polysimplex polysimplex_from_json(const ApartmentShape& shape, const Json& j);

// a subcomplex is the shape header plus its maximal cells ("cells"), each a
// vertex list; faces are restored on insertion
Json subcomplex_to_json(const SubComplex& sigma);
SubComplex subcomplex_from_json(const Json& j);

/* ---- building-side documents ---- */

// canonical lattice matrix as rows of p-adic scalar strings
Json lattice_vertex_to_json(const LatticeContext& ctx, const LatticeVertex& v);
LatticeVertex lattice_vertex_from_json(const LatticeContext& ctx, const Json& j);

// finite piece of the building: sorted vertex table plus index cells
Json building_complex_to_json(const BuildingComplex& bc);

/* ---- finite group model descriptions ----
 * {"group":"GL","d":2,"p":2,"M":3,"r":1,"space":"regular"}; "r" and "M" are
 * optional (M = -1 picks the model default). */
struct ModelConfig {
  std::string group = "GL";
  long p = 2, d = 2, r = 0, M = -1;
  std::string space = "regular";
};
Json model_to_json(const ModelConfig& c);
ModelConfig model_from_json(const Json& j);

/* ---- idempotent systems ----
 * Serialized as the support subcomplex plus one sparse matrix per vertex;
 * reading back always yields an explicit-provenance system. */
Json system_to_json(const IdempotentSystem& e);
IdempotentSystem system_from_json(const Json& j);

}  // namespace btk
