#include <btk/json_io.hpp>

#include <map>
#include <regex>
#include <string>
#include <utility>
#include <vector>

namespace btk {

namespace {

const Json& need(const Json& j, const char* key) {
  if (!j.is_object()) fail("ParseError", std::string("expected an object carrying '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) fail("ParseError", std::string("missing key '") + key + "'");
  return *it;
}

long long need_integer(const Json& v, const std::string& what) {
  if (!v.is_number_integer()) fail("ParseError", what + " must be an integer");
  return v.get<long long>();
}

std::string need_string(const Json& v, const std::string& what) {
  if (!v.is_string()) fail("ParseError", what + " must be a string");
  return v.get<std::string>();
}

const Json& need_array(const Json& v, const std::string& what) {
  if (!v.is_array()) fail("ParseError", what + " must be an array");
  return v;
}

Int parse_int(std::string s) {
  if (!s.empty() && s[0] == '+') s.erase(0, 1);
  try {
    return Int(s);
  } catch (const std::exception&) {
    fail("ParseError", "malformed integer '" + s + "'");
  }
}

}  // namespace

/* ---- scalars ---- */

std::string scalar_text(const Rat& q, long p) {
  if (q == 0) return "0";
  PAdicScalar s = PAdicScalar::from_rational(p, q);
  std::string t = s.num.str();
  if (s.den != 1) t += "/" + s.den.str();
  return t + "*p^" + std::to_string(s.exp);
}

Rat parse_scalar(const std::string& text, long p) {
  static const std::regex pat(R"(^([+-]?\d+)(?:/([+-]?\d+))?(?:\*p\^([+-]?\d+))?$)");
  std::smatch m;
  if (!std::regex_match(text, m, pat)) fail("ParseError", "malformed scalar '" + text + "'");
  Int n = parse_int(m[1].str());
  Int d = m[2].matched ? parse_int(m[2].str()) : Int(1);
  if (d == 0) fail("ParseError", "zero denominator in '" + text + "'");
  Rat q = Rat(n, d);
  if (m[3].matched) {
    long e = 0;
    try {
      e = std::stol(m[3].str());
    } catch (const std::exception&) {
      fail("ParseError", "exponent out of range in '" + text + "'");
    }
    q *= pow_rat(p, e);
  }
  return q;
}

std::string fraction_text(const Rat& q) { return num(q).str() + "/" + den(q).str(); }

Rat parse_fraction(const std::string& text) {
  static const std::regex pat(R"(^([+-]?\d+)(?:/([+-]?\d+))?$)");
  std::smatch m;
  if (!std::regex_match(text, m, pat)) fail("ParseError", "malformed fraction '" + text + "'");
  Int n = parse_int(m[1].str());
  Int d = m[2].matched ? parse_int(m[2].str()) : Int(1);
  if (d == 0) fail("ParseError", "zero denominator in '" + text + "'");
  return Rat(n, d);
}

/* ---- matrices ---- */

Json qmat_to_json(const QMat& m, long p) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(scalar_text(m.at(i, j), p));
    rows.push_back(std::move(row));
  }
  return rows;
}

QMat qmat_from_json(const Json& j, long p) {
  const Json& rows = need_array(j, "matrix");
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : need_array(rows[0], "matrix row").size();
  QMat m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const Json& row = need_array(rows[i], "matrix row");
    if (row.size() != c) fail("ParseError", "ragged matrix rows");
    for (std::size_t k = 0; k < c; ++k)
      m.at(i, k) = parse_scalar(need_string(row[k], "matrix entry"), p);
  }
  return m;
}

Json sparse_to_json(const SparseMat& m) {
  Json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  Json entries = Json::array();
  for (const auto& [r, c, v] : m.entries)
    entries.push_back(Json::array({r, c, fraction_text(v)}));
  j["entries"] = std::move(entries);
  return j;
}

SparseMat sparse_from_json(const Json& j) {
  std::size_t rows = static_cast<std::size_t>(need_integer(need(j, "rows"), "rows"));
  std::size_t cols = static_cast<std::size_t>(need_integer(need(j, "cols"), "cols"));
  std::vector<std::tuple<std::size_t, std::size_t, Rat>> triples;
  for (const Json& e : need_array(need(j, "entries"), "entries")) {
    const Json& t = need_array(e, "entry");
    if (t.size() != 3) fail("ParseError", "sparse entries are [row, col, value] triples");
    long long r = need_integer(t[0], "entry row"), c = need_integer(t[1], "entry col");
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= rows || static_cast<std::size_t>(c) >= cols)
      fail("ParseError", "sparse entry outside the declared dimensions");
    triples.emplace_back(r, c, parse_fraction(need_string(t[2], "entry value")));
  }
  return SparseMat::from_triples(rows, cols, triples);
}

/* ---- apartment documents ---- */

Json shape_to_json(const ApartmentShape& shape) {
  Json j;
  j["type"] = "A~";
  if (shape.factors.size() == 1) j["d"] = shape.factors[0];
  j["factors"] = shape.factors;
  return j;
}

ApartmentShape shape_from_json(const Json& j) {
  if (need_string(need(j, "type"), "type") != "A~")
    fail("ParseError", "only type \"A~\" apartments are supported");
  std::vector<int> factors;
  if (j.contains("factors")) {
    for (const Json& f : need_array(j.at("factors"), "factors"))
      factors.push_back(static_cast<int>(need_integer(f, "factor")));
  } else {
    factors.push_back(static_cast<int>(need_integer(need(j, "d"), "d")));
  }
  if (factors.empty()) fail("ParseError", "a shape needs at least one factor");
  for (int f : factors)
    if (f < 2) fail("ParseError", "factors must have at least two coordinates");
  return ApartmentShape{factors};
}

Json vertex_to_json(const Vertex& v) {
  Json j = Json::array();
  for (Coord c : v.x) j.push_back(c);
  return j;
}

Vertex vertex_from_json(const ApartmentShape& shape, const Json& j) {
  const Json& arr = need_array(j, "vertex");
  if (arr.size() != static_cast<std::size_t>(shape.total()))
    fail("ParseError", "vertex has " + std::to_string(arr.size()) + " coordinates, expected " +
                           std::to_string(shape.total()));
  Slice raw;
  for (const Json& c : arr) raw.push_back(need_integer(c, "coordinate"));
  return make_vertex(shape, raw);
}

Json polysimplex_to_json(const ApartmentShape& shape, const Polysimplex& s) {
  Json j = shape_to_json(shape);
  Json vs = Json::array();
  for (const Vertex& v : s.vertices()) vs.push_back(vertex_to_json(v));
  j["vertices"] = std::move(vs);
  return j;
}

Polysimplex polysimplex_from_json(const ApartmentShape& shape, const Json& j) {
  const Json& arr = j.is_array() ? j : need_array(need(j, "vertices"), "vertices");
  if (arr.empty()) fail("ParseError", "a polysimplex needs at least one vertex");
  std::vector<Vertex> vs;
  for (const Json& v : arr) vs.push_back(vertex_from_json(shape, v));
  return span(shape, vs);
}

Json subcomplex_to_json(const SubComplex& sigma) {
  Json j = shape_to_json(sigma.shape());
  Json cells = Json::array();
  for (const Polysimplex& s : sigma.maximal_cells()) {
    Json vs = Json::array();
    for (const Vertex& v : s.vertices()) vs.push_back(vertex_to_json(v));
    cells.push_back(std::move(vs));
  }
  j["cells"] = std::move(cells);
  return j;
}

SubComplex subcomplex_from_json(const Json& j) {
  ApartmentShape shape = shape_from_json(j);
  SubComplex out(shape);
  for (const Json& cell : need_array(need(j, "cells"), "cells"))
    out.insert(polysimplex_from_json(shape, cell));
  return out;
}

/* ---- building documents ---- */

Json lattice_vertex_to_json(const LatticeContext& ctx, const LatticeVertex& v) {
  Json rows = Json::array();
  for (const auto& row : v.h) {
    Json r = Json::array();
    for (const Int& e : row) r.push_back(scalar_text(Rat(e), ctx.p));
    rows.push_back(std::move(r));
  }
  return rows;
}

LatticeVertex lattice_vertex_from_json(const LatticeContext& ctx, const Json& j) {
  QMat m = qmat_from_json(j, ctx.p);
  if (m.rows() != static_cast<std::size_t>(ctx.d) || m.cols() != static_cast<std::size_t>(ctx.d))
    fail("ParseError", "lattice matrix must be " + std::to_string(ctx.d) + "x" + std::to_string(ctx.d));
  return canonical_vertex(ctx, m);
}

Json building_complex_to_json(const BuildingComplex& bc) {
  const LatticeContext& ctx = bc.context();
  Json j;
  j["p"] = ctx.p;
  j["d"] = ctx.d;
  std::vector<LatticeVertex> vs = bc.vertex_list();
  std::map<LatticeVertex, std::size_t> index;
  Json verts = Json::array();
  for (std::size_t i = 0; i < vs.size(); ++i) {
    index.emplace(vs[i], i);
    verts.push_back(lattice_vertex_to_json(ctx, vs[i]));
  }
  j["vertices"] = std::move(verts);
  Json cells = Json::array();
  for (const BuildingSimplex& s : bc.cells()) {
    Json c = Json::array();
    for (const LatticeVertex& v : s.verts) c.push_back(index.at(v));
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j;
}

/* ---- model descriptions ---- */

Json model_to_json(const ModelConfig& c) {
  Json j;
  j["group"] = c.group;
  j["d"] = c.d;
  j["p"] = c.p;
  j["M"] = c.M;
  j["r"] = c.r;
  j["space"] = c.space;
  return j;
}

ModelConfig model_from_json(const Json& j) {
  if (!j.is_object()) fail("ParseError", "a model description must be an object");
  ModelConfig c;
  if (j.contains("group")) c.group = need_string(j.at("group"), "group");
  if (c.group != "GL") fail("ParseError", "only \"GL\" models are supported");
  if (j.contains("p")) c.p = need_integer(j.at("p"), "p");
  if (j.contains("d")) c.d = need_integer(j.at("d"), "d");
  if (j.contains("r")) c.r = need_integer(j.at("r"), "r");
  if (j.contains("M")) c.M = need_integer(j.at("M"), "M");
  if (j.contains("space")) c.space = need_string(j.at("space"), "space");
  if (c.p < 2) fail("ParseError", "p must be at least 2");
  if (c.d < 2) fail("ParseError", "d must be at least 2");
  if (c.r < 0) fail("ParseError", "r must be nonnegative");
  if (c.M < -1 || c.M == 0) fail("ParseError", "M must be positive (or -1 for the default)");
  return c;
}

/* ---- idempotent systems ---- */

Json system_to_json(const IdempotentSystem& e) {
  Json j;
  j["module-dim"] = e.module_dim;
  switch (e.provenance) {
    case Provenance::DiagonalModel: j["provenance"] = "diagonal"; break;
    case Provenance::GroupAveraging: j["provenance"] = "group-averaging"; break;
    case Provenance::Explicit: j["provenance"] = "explicit"; break;
  }
  j["support"] = subcomplex_to_json(e.sigma);
  Json ops = Json::array();
  for (const Vertex& v : e.vertices()) {
    Json item;
    item["vertex"] = vertex_to_json(v);
    item["op"] = sparse_to_json(e.vertex_op(v).sparse());
    ops.push_back(std::move(item));
  }
  j["vertices"] = std::move(ops);
  return j;
}

IdempotentSystem system_from_json(const Json& j) {
  SubComplex support = subcomplex_from_json(need(j, "support"));
  std::map<Vertex, QMat> ops;
  for (const Json& item : need_array(need(j, "vertices"), "vertices")) {
    Vertex v = vertex_from_json(support.shape(), need(item, "vertex"));
    ops.emplace(v, sparse_from_json(need(item, "op")).to_dense());
  }
  IdempotentSystem e = explicit_system(support, ops);
  if (j.contains("module-dim") &&
      static_cast<std::size_t>(need_integer(j.at("module-dim"), "module-dim")) != e.module_dim)
    fail("ParseError", "declared module dimension disagrees with the operators");
  return e;
}

}  // namespace btk
