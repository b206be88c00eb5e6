#include <btk/apartment.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace btk {

Slice canonical_slice(Slice s) {
  if (s.empty()) fail("DimensionMismatch", "empty slice");
  Coord last = s.back();
  for (Coord& c : s) c -= last;
  return s;
}

Vertex make_vertex(const ApartmentShape& shape, std::vector<Coord> raw) {
  if (static_cast<int>(raw.size()) != shape.total())
    fail("DimensionMismatch", "vertex length does not match apartment shape");
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto [b, e] = shape.range(f);
    Coord last = raw[e - 1];
    for (int i = b; i < e; ++i) raw[i] -= last;
  }
  return Vertex{std::move(raw)};
}

Slice slice_of(const ApartmentShape& shape, const Vertex& v, std::size_t f) {
  auto [b, e] = shape.range(f);
  return Slice(v.x.begin() + b, v.x.begin() + e);
}

Coord eval_root(const AffineRoot& a, const Vertex& v) { return v.x[a.i] - v.x[a.j] - a.k; }

Rat eval_root(const AffineRoot& a, const std::vector<Rat>& point) {
  return point[a.i] - point[a.j] - Rat(a.k);
}

bool adjacent(const ApartmentShape& shape, const Vertex& v, const Vertex& w) {
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto [b, e] = shape.range(f);
    Coord mn = 0, mx = 0;
    for (int i = b; i < e; ++i) {
      Coord d = v.x[i] - w.x[i];
      if (i == b) mn = mx = d;
      mn = std::min(mn, d);
      mx = std::max(mx, d);
    }
    if (mx - mn > 1) return false;
  }
  return true;
}

std::vector<Vertex> Polysimplex::vertices() const {
  std::vector<Vertex> out;
  std::vector<std::size_t> idx(parts.size(), 0);
  while (true) {
    Vertex v;
    for (std::size_t f = 0; f < parts.size(); ++f)
      v.x.insert(v.x.end(), parts[f][idx[f]].begin(), parts[f][idx[f]].end());
    out.push_back(std::move(v));
    std::size_t f = 0;
    while (f < parts.size() && ++idx[f] == parts[f].size()) idx[f++] = 0;
    if (f == parts.size()) break;
  }
  return out;
}

bool Polysimplex::is_face_of(const Polysimplex& other) const {
  if (parts.size() != other.parts.size()) return false;
  for (std::size_t f = 0; f < parts.size(); ++f)
    if (!std::includes(other.parts[f].begin(), other.parts[f].end(), parts[f].begin(),
                       parts[f].end()))
      return false;
  return true;
}

std::vector<Polysimplex> Polysimplex::faces() const {
  // nonempty slice subsets per factor, combined over factors
  std::vector<std::vector<std::vector<Slice>>> choices(parts.size());
  for (std::size_t f = 0; f < parts.size(); ++f) {
    std::size_t n = parts[f].size();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      std::vector<Slice> sub;
      for (std::size_t t = 0; t < n; ++t)
        if (mask & (1u << t)) sub.push_back(parts[f][t]);
      choices[f].push_back(std::move(sub));
    }
  }
  std::vector<Polysimplex> out;
  std::vector<std::size_t> idx(parts.size(), 0);
  while (true) {
    Polysimplex p;
    p.parts.resize(parts.size());
    for (std::size_t f = 0; f < parts.size(); ++f) p.parts[f] = choices[f][idx[f]];
    out.push_back(std::move(p));
    std::size_t f = 0;
    while (f < parts.size() && ++idx[f] == choices[f].size()) idx[f++] = 0;
    if (f == parts.size()) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Polysimplex> Polysimplex::proper_faces() const {
  std::vector<Polysimplex> out = faces();
  out.erase(std::remove(out.begin(), out.end(), *this), out.end());
  return out;
}

Polysimplex span(const ApartmentShape& shape, const std::vector<Vertex>& vs) {
  if (vs.empty()) fail("DimensionMismatch", "span of empty vertex set");
  for (std::size_t a = 0; a < vs.size(); ++a)
    for (std::size_t b = a + 1; b < vs.size(); ++b)
      if (!adjacent(shape, vs[a], vs[b]))
        fail("NotAdjacent", "vertices " + to_string(vs[a]) + " and " + to_string(vs[b]) +
                                " do not span a common polysimplex");
  Polysimplex p;
  p.parts.resize(shape.factors.size());
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    std::set<Slice> slices;
    for (const Vertex& v : vs) slices.insert(slice_of(shape, v, f));
    p.parts[f].assign(slices.begin(), slices.end());
  }
  return p;
}

Polysimplex vertex_cell(const ApartmentShape& shape, const Vertex& v) {
  Polysimplex p;
  p.parts.resize(shape.factors.size());
  for (std::size_t f = 0; f < shape.factors.size(); ++f) p.parts[f] = {slice_of(shape, v, f)};
  return p;
}

void SubComplex::insert(const Polysimplex& p) {
  for (const Polysimplex& q : p.faces()) cells_.insert(q);
}

void SubComplex::insert_all(const SubComplex& other) {
  for (const Polysimplex& q : other.cells()) cells_.insert(q);
}

std::set<Vertex> SubComplex::vertex_set() const {
  std::set<Vertex> out;
  for (const Polysimplex& p : cells_)
    for (const Vertex& v : p.vertices()) out.insert(v);
  return out;
}

std::vector<Polysimplex> SubComplex::maximal_cells() const {
  std::set<Polysimplex> nonmax;
  for (const Polysimplex& p : cells_)
    for (const Polysimplex& q : p.faces())
      if (q != p) nonmax.insert(q);
  std::vector<Polysimplex> out;
  for (const Polysimplex& p : cells_)
    if (!nonmax.count(p)) out.push_back(p);
  return out;
}

std::vector<Polysimplex> SubComplex::cells_of_dim(int d) const {
  std::vector<Polysimplex> out;
  for (const Polysimplex& p : cells_)
    if (p.dim() == d) out.push_back(p);
  return out;
}

int SubComplex::max_dim() const {
  int d = -1;
  for (const Polysimplex& p : cells_) d = std::max(d, p.dim());
  return d;
}

bool HullConstraints::contains(const Vertex& v) const {
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto [b, e] = shape.range(f);
    for (int i = b; i < e; ++i)
      for (int j = b; j < e; ++j)
        if (i != j && v.x[i] - v.x[j] < k[i][j]) return false;
  }
  return true;
}

bool HullConstraints::contains(const Polysimplex& p) const {
  // constraints are factorwise, so checking every slice of every factor is
  // equivalent to checking every product vertex
  for (std::size_t f = 0; f < p.parts.size(); ++f) {
    auto [b, e] = shape.range(f);
    for (const Slice& s : p.parts[f])
      for (int i = b; i < e; ++i)
        for (int j = b; j < e; ++j)
          if (i != j && s[i - b] - s[j - b] < k[i][j]) return false;
  }
  return true;
}

HullConstraints hull_constraints(const ApartmentShape& shape, const std::vector<Vertex>& base) {
  if (base.empty()) fail("DimensionMismatch", "hull of empty vertex set");
  int n = shape.total();
  HullConstraints hc{shape, std::vector<std::vector<Coord>>(n, std::vector<Coord>(n, 0))};
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto [b, e] = shape.range(f);
    for (int i = b; i < e; ++i)
      for (int j = b; j < e; ++j) {
        if (i == j) continue;
        Coord mn = base[0].x[i] - base[0].x[j];
        for (const Vertex& v : base) mn = std::min(mn, v.x[i] - v.x[j]);
        hc.k[i][j] = mn;
      }
  }
  return hc;
}

HullConstraints hull_constraints(const ApartmentShape& shape, const Polysimplex& s,
                                 const Polysimplex& t) {
  std::vector<Vertex> base = s.vertices();
  for (const Vertex& v : t.vertices()) base.push_back(v);
  return hull_constraints(shape, base);
}

std::set<Vertex> hull_vertex_set(const HullConstraints& hc, std::size_t budget) {
  const ApartmentShape& shape = hc.shape;
  std::vector<std::vector<Slice>> factor_sets(shape.factors.size());
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto [b, e] = shape.range(f);
    int m = e - b;
    // bounding box from the constraints against the last coordinate
    std::vector<Coord> lo(m), hi(m);
    for (int i = 0; i < m; ++i) {
      lo[i] = hc.k[b + i][e - 1];
      hi[i] = -hc.k[e - 1][b + i];
      if (lo[i] > hi[i]) break;  // empty factor, caught below
    }
    std::size_t vol = 1;
    for (int i = 0; i < m; ++i) {
      if (lo[i] > hi[i]) {
        vol = 0;
        break;
      }
      vol *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
      if (vol > budget) fail("BudgetExceeded", "hull bounding box too large");
    }
    Slice cur(m, 0);
    if (vol > 0) {
      for (int i = 0; i < m; ++i) cur[i] = lo[i];
      cur[m - 1] = 0;  // canonical representatives only
      while (true) {
        bool ok = true;
        for (int i = 0; i < m && ok; ++i)
          for (int j = 0; j < m && ok; ++j)
            if (i != j && cur[i] - cur[j] < hc.k[b + i][b + j]) ok = false;
        if (ok) factor_sets[f].push_back(cur);
        int i = 0;
        while (i < m - 1 && cur[i] == hi[i]) {
          cur[i] = lo[i];
          ++i;
        }
        if (i == m - 1) break;
        ++cur[i];
      }
    }
    if (factor_sets[f].empty()) return {};
  }
  std::size_t total = 1;
  for (const auto& fs : factor_sets) {
    total *= fs.size();
    if (total > budget) fail("BudgetExceeded", "hull vertex set too large");
  }
  std::set<Vertex> out;
  std::vector<std::size_t> idx(factor_sets.size(), 0);
  while (true) {
    Vertex v;
    for (std::size_t f = 0; f < factor_sets.size(); ++f)
      v.x.insert(v.x.end(), factor_sets[f][idx[f]].begin(), factor_sets[f][idx[f]].end());
    out.insert(std::move(v));
    std::size_t f = 0;
    while (f < factor_sets.size() && ++idx[f] == factor_sets[f].size()) idx[f++] = 0;
    if (f == factor_sets.size()) break;
  }
  return out;
}

namespace {

/* All simplices of one factor whose vertex slices lie in the given set.
 * Relative to any member slice the others are base + X_S (up to the all-ones
 * shift) with nested sets S, so depth-first extension over nested index sets
 * starting from each base finds every simplex at least once. */
std::set<std::vector<Slice>> factor_simplices(int m, const std::set<Slice>& vf) {
  std::set<std::vector<Slice>> out;
  for (const Slice& base : vf) {
    struct Step {
      unsigned mask;
      Slice s;
    };
    std::vector<Step> steps;
    for (unsigned mask = 1; mask + 1 < (1u << m); ++mask) {
      Slice t = base;
      for (int a = 0; a < m; ++a)
        if (mask & (1u << a)) ++t[a];
      t = canonical_slice(std::move(t));
      if (vf.count(t)) steps.push_back({mask, std::move(t)});
    }
    std::vector<Slice> chain = {base};
    std::function<void(unsigned)> dfs = [&](unsigned last) {
      std::vector<Slice> sorted = chain;
      std::sort(sorted.begin(), sorted.end());
      out.insert(std::move(sorted));
      for (const Step& st : steps) {
        if (st.mask == last || (st.mask & last) != last) continue;  // need strict superset
        chain.push_back(st.s);
        dfs(st.mask);
        chain.pop_back();
      }
    };
    dfs(0);
  }
  return out;
}

}  // namespace

SubComplex complex_on_vertices(const ApartmentShape& shape, const std::set<Vertex>& vs,
                               std::size_t budget) {
  SubComplex out(shape);
  if (vs.empty()) return out;
  std::vector<std::set<Slice>> proj(shape.factors.size());
  for (const Vertex& v : vs)
    for (std::size_t f = 0; f < shape.factors.size(); ++f) proj[f].insert(slice_of(shape, v, f));
  std::vector<std::vector<std::vector<Slice>>> fsimp(shape.factors.size());
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto got = factor_simplices(shape.factors[f], proj[f]);
    fsimp[f].assign(got.begin(), got.end());
  }
  std::size_t count = 0;
  std::vector<std::size_t> idx(shape.factors.size(), 0);
  while (true) {
    Polysimplex p;
    p.parts.resize(shape.factors.size());
    for (std::size_t f = 0; f < shape.factors.size(); ++f) p.parts[f] = fsimp[f][idx[f]];
    bool all_in = true;
    for (const Vertex& v : p.vertices())
      if (!vs.count(v)) {
        all_in = false;
        break;
      }
    if (all_in) {
      if (++count > budget) fail("BudgetExceeded", "too many polysimplices on vertex set");
      out.insert(p);
    }
    std::size_t f = 0;
    while (f < shape.factors.size() && ++idx[f] == fsimp[f].size()) idx[f++] = 0;
    if (f == shape.factors.size()) break;
  }
  return out;
}

SubComplex hull(const ApartmentShape& shape, const Polysimplex& s, const Polysimplex& t,
                std::size_t budget) {
  HullConstraints hc = hull_constraints(shape, s, t);
  return complex_on_vertices(shape, hull_vertex_set(hc, budget), budget);
}

SubComplex enumerate_box(const ApartmentShape& shape, const std::vector<Coord>& lo,
                         const std::vector<Coord>& hi, std::size_t budget) {
  int n = shape.total();
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    fail("DimensionMismatch", "box bounds do not match apartment shape");
  std::size_t vol = 1;
  for (int i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) return SubComplex(shape);
    vol *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
    if (vol > budget) fail("BudgetExceeded", "box volume too large");
  }
  std::set<Vertex> vs;
  std::vector<Coord> cur(lo);
  while (true) {
    vs.insert(make_vertex(shape, cur));
    int i = 0;
    while (i < n && cur[i] == hi[i]) {
      cur[i] = lo[i];
      ++i;
    }
    if (i == n) break;
    ++cur[i];
  }
  return complex_on_vertices(shape, vs, budget);
}

SubComplex convex_closure(const SubComplex& sigma, std::size_t budget) {
  const ApartmentShape& shape = sigma.shape();
  std::set<Vertex> vs = sigma.vertex_set();
  if (vs.empty()) return SubComplex(shape);
  for (std::size_t round = 0; round < 1000; ++round) {
    SubComplex c = complex_on_vertices(shape, vs, budget);
    std::vector<Polysimplex> maxc = c.maximal_cells();
    std::set<Vertex> next = vs;
    for (std::size_t a = 0; a < maxc.size(); ++a)
      for (std::size_t b = a; b < maxc.size(); ++b) {
        HullConstraints hc = hull_constraints(shape, maxc[a], maxc[b]);
        for (const Vertex& w : hull_vertex_set(hc, budget)) next.insert(w);
        if (next.size() > budget) fail("BudgetExceeded", "convex closure grew past budget");
      }
    if (next == vs) return c;
    vs = std::move(next);
  }
  fail("BudgetExceeded", "convex closure did not stabilize");
}

ConvexityResult is_convex(const SubComplex& sigma, std::size_t budget) {
  if (sigma.empty()) return {true, std::nullopt};
  const ApartmentShape& shape = sigma.shape();
  std::set<Vertex> vs = sigma.vertex_set();

  // every ambient polysimplex spanned by vertices of the complex must belong to it
  SubComplex spanned = complex_on_vertices(shape, vs, budget);
  for (int d = 0; d <= spanned.max_dim(); ++d) {
    for (const Polysimplex& w : spanned.cells_of_dim(d)) {
      if (sigma.contains(w)) continue;
      // dimension-minimal escapee: all proper faces are present, and two
      // facets jointly carry all of its vertices, so some face pair certifies
      std::vector<Polysimplex> present;
      for (const Polysimplex& fc : w.proper_faces())
        if (sigma.contains(fc)) present.push_back(fc);
      for (std::size_t a = 0; a < present.size(); ++a)
        for (std::size_t b = a; b < present.size(); ++b) {
          HullConstraints hc = hull_constraints(shape, present[a], present[b]);
          if (hc.contains(w)) return {false, ConvexityWitness{present[a], present[b], w}};
        }
      fail("PreconditionViolated", "span escapee without certifying face pair");
    }
  }

  // hulls of maximal pairs must not reach new vertices
  std::vector<Polysimplex> maxc = sigma.maximal_cells();
  for (std::size_t a = 0; a < maxc.size(); ++a)
    for (std::size_t b = a; b < maxc.size(); ++b) {
      HullConstraints hc = hull_constraints(shape, maxc[a], maxc[b]);
      for (const Vertex& w : hull_vertex_set(hc, budget))
        if (!vs.count(w)) return {false, ConvexityWitness{maxc[a], maxc[b], vertex_cell(shape, w)}};
    }
  return {true, std::nullopt};
}

AdmissibilityResult is_admissible(const SubComplex& sigma, std::size_t budget) {
  if (sigma.empty()) return {true, "", std::nullopt, std::nullopt};
  const ApartmentShape& shape = sigma.shape();
  std::set<Vertex> vs = sigma.vertex_set();

  SubComplex spanned = complex_on_vertices(shape, vs, budget);
  for (const Polysimplex& w : spanned.cells())
    if (!sigma.contains(w)) return {false, "missing-span", w, std::nullopt};

  std::vector<Polysimplex> cells(sigma.cells().begin(), sigma.cells().end());
  // cofaces[i]: indices of cells strictly containing cells[i]
  std::vector<std::vector<std::size_t>> cofaces(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j)
      if (i != j && cells[i].is_face_of(cells[j])) cofaces[i].push_back(j);

  for (const Vertex& x : vs) {
    Polysimplex xc = vertex_cell(shape, x);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const Polysimplex& tau = cells[i];
      if (tau == xc) continue;
      bool reducible = false;
      for (const Polysimplex& om : tau.proper_faces()) {
        std::vector<Vertex> base = om.vertices();
        base.push_back(x);
        if (hull_constraints(shape, base).contains(tau)) {
          reducible = true;
          break;
        }
      }
      if (reducible) continue;
      std::vector<Vertex> base = tau.vertices();
      base.push_back(x);
      HullConstraints hc = hull_constraints(shape, base);
      bool extended = false;
      for (std::size_t j : cofaces[i])
        if (hc.contains(cells[j])) {
          extended = true;
          break;
        }
      if (!extended) return {false, "no-extension", tau, x};
    }
  }
  return {true, "", std::nullopt, std::nullopt};
}

SubComplex star(const ApartmentShape& shape, const Polysimplex& tau) {
  // per factor: candidate slices within distance one of the factor part,
  // then all factor simplices in that set which contain the part
  std::vector<std::vector<std::vector<Slice>>> fcof(shape.factors.size());
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    int m = shape.factors[f];
    const std::vector<Slice>& part = tau.parts[f];
    std::vector<Coord> lo(m), hi(m);
    for (int i = 0; i < m; ++i) {
      lo[i] = part[0][i];
      hi[i] = part[0][i];
      for (const Slice& s : part) {
        lo[i] = std::min(lo[i], s[i]);
        hi[i] = std::max(hi[i], s[i]);
      }
      --lo[i];
      ++hi[i];
    }
    std::set<Slice> cand(part.begin(), part.end());
    Slice cur(m);
    for (int i = 0; i < m; ++i) cur[i] = lo[i];
    cur[m - 1] = 0;
    while (true) {
      bool ok = true;
      for (const Slice& s : part) {
        Coord mn = cur[0] - s[0], mx = mn;
        for (int i = 1; i < m; ++i) {
          Coord d = cur[i] - s[i];
          mn = std::min(mn, d);
          mx = std::max(mx, d);
        }
        if (mx - mn > 1) {
          ok = false;
          break;
        }
      }
      if (ok) cand.insert(cur);
      if (m == 1) break;
      int i = 0;
      while (i < m - 1 && cur[i] == hi[i]) {
        cur[i] = lo[i];
        ++i;
      }
      if (i == m - 1) break;
      ++cur[i];
    }
    for (const std::vector<Slice>& s : factor_simplices(m, cand)) {
      if (std::includes(s.begin(), s.end(), part.begin(), part.end())) fcof[f].push_back(s);
    }
  }
  SubComplex out(shape);
  std::vector<std::size_t> idx(shape.factors.size(), 0);
  while (true) {
    Polysimplex p;
    p.parts.resize(shape.factors.size());
    for (std::size_t f = 0; f < shape.factors.size(); ++f) p.parts[f] = fcof[f][idx[f]];
    out.insert(p);
    std::size_t f = 0;
    while (f < shape.factors.size() && ++idx[f] == fcof[f].size()) idx[f++] = 0;
    if (f == shape.factors.size()) break;
  }
  return out;
}

/* ---------- chambers of one factor and their simple roots ---------- */

namespace {

struct FactorChamber {
  int m = 0;
  Slice base;              // canonical
  std::vector<int> order;  // the m-1 coordinates that join the nested sets, in join order
  std::vector<Slice> verts;
};

struct ChainRep {
  Slice base;
  std::vector<unsigned> masks;  // strictly nested, proper nonempty
};

ChainRep chain_decompose(const std::vector<Slice>& slices) {
  // slices: sorted distinct canonical, pairwise spread <= 1
  ChainRep rep;
  rep.base = slices.front();
  int m = static_cast<int>(rep.base.size());
  for (std::size_t s = 1; s < slices.size(); ++s) {
    Coord mn = slices[s][0] - rep.base[0], mx = mn;
    for (int a = 1; a < m; ++a) {
      Coord d = slices[s][a] - rep.base[a];
      mn = std::min(mn, d);
      mx = std::max(mx, d);
    }
    if (mx - mn > 1 || mx - mn == 0) fail("NotAdjacent", "slices do not form a simplex chain");
    unsigned mask = 0;
    for (int a = 0; a < m; ++a)
      if (slices[s][a] - rep.base[a] == mx) mask |= (1u << a);
    rep.masks.push_back(mask);
  }
  std::sort(rep.masks.begin(), rep.masks.end(),
            [](unsigned a, unsigned b) { return __builtin_popcount(a) < __builtin_popcount(b); });
  for (std::size_t s = 0; s + 1 < rep.masks.size(); ++s)
    if ((rep.masks[s] & rep.masks[s + 1]) != rep.masks[s] || rep.masks[s] == rep.masks[s + 1])
      fail("NotAdjacent", "slice chain is not nested");
  return rep;
}

FactorChamber rebuild_chamber(int m, std::vector<Slice> slices) {
  std::sort(slices.begin(), slices.end());
  ChainRep rep = chain_decompose(slices);
  if (static_cast<int>(rep.masks.size()) != m - 1)
    fail("PreconditionViolated", "chamber must have full flag");
  FactorChamber ch;
  ch.m = m;
  ch.base = rep.base;
  unsigned prev = 0;
  for (unsigned mask : rep.masks) {
    unsigned diff = mask & ~prev;
    if (__builtin_popcount(diff) != 1) fail("PreconditionViolated", "chamber flag not simple");
    ch.order.push_back(__builtin_ctz(diff));
    prev = mask;
  }
  ch.verts.push_back(ch.base);
  Slice cur = ch.base;
  for (int u : ch.order) {
    ++cur[u];
    ch.verts.push_back(canonical_slice(cur));
  }
  return ch;
}

FactorChamber extend_to_chamber(int m, const std::vector<Slice>& part) {
  ChainRep rep = chain_decompose(part);
  FactorChamber ch;
  ch.m = m;
  ch.base = rep.base;
  unsigned prev = 0;
  std::vector<unsigned> masks = rep.masks;
  masks.push_back((1u << m) - 1);  // final block: coordinates never joined
  for (unsigned mask : masks) {
    for (int a = 0; a < m; ++a)
      if ((mask & (1u << a)) && !(prev & (1u << a))) ch.order.push_back(a);
    prev = mask;
  }
  ch.order.pop_back();  // the last coordinate overall never joins
  ch.verts.push_back(ch.base);
  Slice cur = ch.base;
  for (int u : ch.order) {
    ++cur[u];
    ch.verts.push_back(canonical_slice(cur));
  }
  return ch;
}

Coord eval_local(const AffineRoot& r, const Slice& s) { return s[r.i] - s[r.j] - r.k; }

/* Simple roots a_0..a_{m-1} of a chamber: a_t is 1 at vertex w_t and 0 at the
 * others.  With joins u_1..u_{m-1} and leftover coordinate e:
 *   a_0     = x_e - x_{u_1} - (base_e - base_{u_1} - 1)
 *   a_t     = x_{u_t} - x_{u_{t+1}} - (base_{u_t} - base_{u_{t+1}})
 *   a_{m-1} = x_{u_{m-1}} - x_e - (base_{u_{m-1}} - base_e)            */
std::vector<AffineRoot> simple_roots(const FactorChamber& ch) {
  int m = ch.m;
  if (m == 1) return {};
  unsigned used = 0;
  for (int u : ch.order) used |= (1u << u);
  int estar = __builtin_ctz(~used & ((1u << m) - 1));
  std::vector<AffineRoot> roots(m);
  roots[0] = {estar, ch.order[0], ch.base[estar] - ch.base[ch.order[0]] - 1};
  for (int t = 1; t <= m - 2; ++t)
    roots[t] = {ch.order[t - 1], ch.order[t], ch.base[ch.order[t - 1]] - ch.base[ch.order[t]]};
  roots[m - 1] = {ch.order[m - 2], estar, ch.base[ch.order[m - 2]] - ch.base[estar]};
  for (int t = 0; t < m; ++t)
    for (int s = 0; s < m; ++s)
      if (eval_local(roots[t], ch.verts[s]) != (s == t ? 1 : 0))
        fail("PreconditionViolated", "simple root system inconsistent");
  return roots;
}

FactorChamber reflect(const FactorChamber& ch, const AffineRoot& r) {
  std::vector<Slice> out;
  for (const Slice& w : ch.verts) {
    Slice y = w;
    y[r.i] = w[r.j] + r.k;
    y[r.j] = w[r.i] - r.k;
    out.push_back(canonical_slice(std::move(y)));
  }
  return rebuild_chamber(ch.m, std::move(out));
}

}  // namespace

Polysimplex minimal_face(const ApartmentShape& shape, const Vertex& x, const Polysimplex& sigma) {
  Polysimplex tau;
  tau.parts.resize(shape.factors.size());
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    int m = shape.factors[f];
    const std::vector<Slice>& part = sigma.parts[f];
    if (m == 1) {
      tau.parts[f] = part;
      continue;
    }
    Slice xf = slice_of(shape, x, f);
    FactorChamber ch = extend_to_chamber(m, part);
    bool settled = false;
    for (int iter = 0; iter < 100000; ++iter) {
      std::vector<AffineRoot> roots = simple_roots(ch);
      std::optional<AffineRoot> pick;
      for (const AffineRoot& r : roots) {
        bool on_sigma = true;
        for (const Slice& s : part)
          if (eval_local(r, s) != 0) {
            on_sigma = false;
            break;
          }
        if (!on_sigma || eval_local(r, xf) >= 0) continue;
        if (!pick || r < *pick) pick = r;
      }
      if (!pick) {
        settled = true;
        break;
      }
      ch = reflect(ch, *pick);
      for (const Slice& s : part)
        if (std::find(ch.verts.begin(), ch.verts.end(), s) == ch.verts.end())
          fail("PreconditionViolated", "reflection moved the simplex out of its chamber");
    }
    if (!settled) fail("BudgetExceeded", "chamber reflection loop did not terminate");
    std::vector<AffineRoot> pos;
    for (const AffineRoot& r : simple_roots(ch))
      if (eval_local(r, xf) > 0) pos.push_back(r);
    for (const Slice& s : part) {
      bool keep = true;
      for (const AffineRoot& r : pos)
        if (eval_local(r, s) != 0) {
          keep = false;
          break;
        }
      if (keep) tau.parts[f].push_back(s);
    }
    if (tau.parts[f].empty()) {
      /* The simple roots of the settled chamber sum to 1, non-part roots are
       * >= 0 and every part root is >= 1 here, so the part is a single vertex
       * whose root takes value 1 at x: x coincides with that vertex in this
       * factor, and nothing can be shed.                                    */
      if (part.size() == 1)
        tau.parts[f] = part;
      else
        fail("PreconditionViolated", "minimal face is empty in a factor");
    }
  }
  return tau;
}

Polysimplex minimal_face_bruteforce(const ApartmentShape& shape, const Vertex& x,
                                    const Polysimplex& sigma) {
  std::vector<Polysimplex> good;
  for (const Polysimplex& f : sigma.faces()) {
    std::vector<Vertex> base = f.vertices();
    base.push_back(x);
    if (hull_constraints(shape, base).contains(sigma)) good.push_back(f);
  }
  if (good.empty()) fail("PreconditionViolated", "no face puts the simplex inside the hull");
  Polysimplex best = good[0];
  for (const Polysimplex& g : good)
    if (g.dim() < best.dim()) best = g;
  for (const Polysimplex& g : good)
    if (!best.is_face_of(g))
      fail("PreconditionViolated", "minimal face is not unique on this input");
  return best;
}

MaximalConeResult maximal_cone(const ApartmentShape& shape, const Vertex& x,
                               const Polysimplex& tau) {
  std::vector<Vertex> base = tau.vertices();
  base.push_back(x);
  HullConstraints hc = hull_constraints(shape, base);
  std::set<Vertex> vs;
  SubComplex st = star(shape, tau);
  for (const Polysimplex& s : st.cells()) {
    if (!tau.is_face_of(s) || !hc.contains(s)) continue;
    for (const Vertex& v : s.vertices()) vs.insert(v);
  }
  Polysimplex sig = span(shape, std::vector<Vertex>(vs.begin(), vs.end()));
  if (!tau.is_face_of(sig) || !hc.contains(sig))
    fail("PreconditionViolated", "cofaces inside the hull do not span a single polysimplex");
  MaximalConeResult out{sig, std::nullopt};
  if (sig == tau && tau != vertex_cell(shape, x)) {
    for (const Polysimplex& om : tau.proper_faces()) {
      std::vector<Vertex> b2 = om.vertices();
      b2.push_back(x);
      if (hull_constraints(shape, b2).contains(tau)) {
        out.omega = om;
        break;
      }
    }
    if (!out.omega)
      fail("PreconditionViolated", "maximal cone degenerate but no proper face certifies it");
  }
  return out;
}

/* ---------- carriers and paths ---------- */

namespace {

Coord rat_floor(const Rat& q) {
  Int n = num(q), d = den(q);
  Int f = n / d;
  if (n < 0 && n % d != 0) --f;
  if (f > Int(std::numeric_limits<long long>::max() / 4) ||
      f < Int(std::numeric_limits<long long>::min() / 4))
    fail("BudgetExceeded", "coordinate out of supported range");
  return static_cast<long long>(f);
}

}  // namespace

Polysimplex carrier(const ApartmentShape& shape, const std::vector<Rat>& point) {
  if (static_cast<int>(point.size()) != shape.total())
    fail("DimensionMismatch", "point length does not match apartment shape");
  Polysimplex p;
  p.parts.resize(shape.factors.size());
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto [b, e] = shape.range(f);
    int m = e - b;
    std::vector<Coord> fl(m);
    std::vector<Rat> fr(m);
    for (int a = 0; a < m; ++a) {
      fl[a] = rat_floor(point[b + a]);
      fr[a] = point[b + a] - Rat(fl[a]);
    }
    std::set<Rat> levels(fr.begin(), fr.end());
    std::set<Slice> slices;
    for (const Rat& lv : levels) {
      Slice s(m);
      for (int a = 0; a < m; ++a) s[a] = fl[a] + (fr[a] >= lv ? 1 : 0);
      slices.insert(canonical_slice(std::move(s)));
    }
    p.parts[f].assign(slices.begin(), slices.end());
  }
  return p;
}

std::vector<Rat> barycenter(const Polysimplex& p) {
  std::vector<Rat> out;
  for (const auto& part : p.parts) {
    int m = static_cast<int>(part[0].size());
    for (int a = 0; a < m; ++a) {
      Rat acc = 0;
      for (const Slice& s : part) acc += Rat(s[a]);
      out.push_back(acc / Rat(static_cast<Coord>(part.size())));
    }
  }
  return out;
}

std::vector<Polysimplex> segment_carriers(const ApartmentShape& shape, const std::vector<Rat>& from,
                                          const std::vector<Rat>& to) {
  if (from == to) return {carrier(shape, from)};
  std::set<Rat> events;
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    auto [b, e] = shape.range(f);
    for (int i = b; i < e; ++i)
      for (int j = b; j < i; ++j) {
        Rat d0 = from[i] - from[j], d1 = to[i] - to[j];
        if (d0 == d1) continue;
        Coord klo = rat_floor(d0 < d1 ? d0 : d1);
        Coord khi = rat_floor((d0 < d1 ? d1 : d0)) + 1;
        for (Coord k = klo; k <= khi; ++k) {
          Rat t = (Rat(k) - d0) / (d1 - d0);
          if (t > 0 && t < 1) events.insert(t);
        }
      }
  }
  std::vector<Rat> ts = {Rat(0)};
  ts.insert(ts.end(), events.begin(), events.end());
  ts.push_back(Rat(1));
  auto at = [&](const Rat& t) {
    std::vector<Rat> q(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) q[i] = from[i] + t * (to[i] - from[i]);
    return q;
  };
  std::vector<Polysimplex> seq = {carrier(shape, from)};
  for (std::size_t s = 1; s < ts.size(); ++s) {
    Rat mid = (ts[s - 1] + ts[s]) / Rat(2);
    for (const Polysimplex& p : {carrier(shape, at(mid)), carrier(shape, at(ts[s]))})
      if (p != seq.back()) seq.push_back(p);
  }
  return seq;
}

namespace {

// number of root walls strictly separating two vertex slices of one factor
long long wall_count(const Slice& u, const Slice& y) {
  long long w = 0;
  int m = static_cast<int>(u.size());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Coord gap = (y[a] - y[b]) - (u[a] - u[b]) - 1;
      if (a != b && gap > 0) w += gap;
    }
  return w;
}

}  // namespace

std::vector<Vertex> vertex_path(const ApartmentShape& shape, const Polysimplex& sigma,
                                const Polysimplex& tau, const Vertex& y) {
  {
    std::vector<Vertex> base = sigma.vertices();
    for (const Vertex& v : tau.vertices()) base.push_back(v);
    if (!hull_constraints(shape, base).contains(y))
      fail("PreconditionViolated", "target vertex is not in the hull");
  }
  std::vector<Vertex> path;
  if (vertex_cell(shape, y).is_face_of(tau)) {
    path = {y};
  } else {
    // start slice per factor: any slice of tau keeping y inside hull(sigma, start)
    std::vector<Vertex> sbase = sigma.vertices();
    Vertex z;
    for (std::size_t f = 0; f < shape.factors.size(); ++f) {
      auto [b, e] = shape.range(f);
      int m = e - b;
      std::optional<Slice> chosen;
      for (const Slice& s : tau.parts[f]) {
        bool ok = true;
        for (int i = 0; i < m && ok; ++i)
          for (int j = 0; j < m && ok; ++j) {
            if (i == j) continue;
            Coord mn = s[i] - s[j];
            for (const Vertex& v : sbase) mn = std::min(mn, v.x[b + i] - v.x[b + j]);
            if (y.x[b + i] - y.x[b + j] < mn) ok = false;
          }
        if (ok) {
          chosen = s;
          break;
        }
      }
      if (!chosen)
        fail("PreconditionViolated",
             "no vertex of the simplex keeps the target inside the hull; this requires the "
             "target to be adjacent to the base polysimplex");
      z.x.insert(z.x.end(), chosen->begin(), chosen->end());
    }
    path = {z};
    // factor by factor, walk the straight segment toward y; every carrier
    // vertex moves each coordinate difference weakly toward the target, and
    // the wall count of the greedy choice strictly drops
    for (std::size_t f = 0; f < shape.factors.size(); ++f) {
      auto [b, e] = shape.range(f);
      int m = e - b;
      Slice yf = slice_of(shape, y, f);
      Slice zf = slice_of(shape, path.back(), f);
      long long guard = wall_count(zf, yf) + m * m + 2;
      while (zf != yf) {
        if (--guard < 0) fail("BudgetExceeded", "vertex walk failed to make progress");
        Coord mx = 1;
        for (int a = 0; a < m; ++a) mx = std::max(mx, std::llabs(yf[a] - zf[a]));
        Rat eps = Rat(1) / Rat(2 * mx + 2);
        std::vector<Rat> q(m);
        for (int a = 0; a < m; ++a) q[a] = Rat(zf[a]) + eps * Rat(yf[a] - zf[a]);
        ApartmentShape local{{m}};
        Polysimplex car = carrier(local, q);
        std::optional<Slice> best;
        long long bw = 0;
        for (const Slice& u : car.parts[0]) {
          if (u == zf) continue;
          long long w = wall_count(u, yf);
          if (!best || w < bw || (w == bw && u < *best)) {
            best = u;
            bw = w;
          }
        }
        if (!best || (bw >= wall_count(zf, yf) && *best != yf))
          fail("PreconditionViolated", "vertex walk failed to make progress");
        zf = *best;
        Vertex nxt = path.back();
        for (int a = 0; a < m; ++a) nxt.x[b + a] = zf[a];
        path.push_back(make_vertex(shape, nxt.x));
      }
    }
  }
  // verify the defining clauses on the finished path
  if (!vertex_cell(shape, path.front()).is_face_of(tau))
    fail("PreconditionViolated", "path does not start at a vertex of the simplex");
  if (path.back() != y) fail("PreconditionViolated", "path does not end at the target");
  std::vector<Vertex> sbase = sigma.vertices();
  for (std::size_t i = 0; i < path.size(); ++i) {
    std::vector<Vertex> hb = sbase;
    hb.push_back(path[i]);
    if (!hull_constraints(shape, hb).contains(y))
      fail("PreconditionViolated", "target left the hull along the path");
    if (i == 0) continue;
    if (!adjacent(shape, path[i], path[i - 1]) || path[i] == path[i - 1])
      fail("PreconditionViolated", "path steps are not adjacent");
    if (!hull_constraints(shape, {y, path[i - 1]}).contains(path[i]))
      fail("PreconditionViolated", "path step left the hull toward the target");
  }
  return path;
}

std::vector<Polysimplex> simplex_path(const ApartmentShape& shape, const Polysimplex& sigma,
                                      const Polysimplex& tau, const Polysimplex& omega) {
  {
    std::vector<Vertex> base = sigma.vertices();
    for (const Vertex& v : tau.vertices()) base.push_back(v);
    if (!hull_constraints(shape, base).contains(omega))
      fail("PreconditionViolated", "endpoint simplex is not in the hull");
  }
  std::vector<Polysimplex> seq = segment_carriers(shape, barycenter(tau), barycenter(omega));
  if (seq.front() != tau || seq.back() != omega)
    fail("PreconditionViolated", "carrier sequence does not connect the simplices");
  std::vector<Vertex> sbase = sigma.vertices();
  std::vector<Vertex> obase = omega.vertices();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::vector<Vertex> hb = sbase;
    for (const Vertex& v : seq[i].vertices()) hb.push_back(v);
    if (!hull_constraints(shape, hb).contains(omega))
      fail("PreconditionViolated", "endpoint left the hull along the sequence");
    if (i == 0) continue;
    if (!(seq[i].is_face_of(seq[i - 1]) || seq[i - 1].is_face_of(seq[i])))
      fail("PreconditionViolated", "consecutive carriers are not incident");
    std::vector<Vertex> hb2 = obase;
    for (const Vertex& v : seq[i - 1].vertices()) hb2.push_back(v);
    if (!hull_constraints(shape, hb2).contains(seq[i]))
      fail("PreconditionViolated", "carrier step left the hull toward the endpoint");
  }
  return seq;
}

std::string to_string(const Vertex& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.x.size(); ++i) os << (i ? "," : "") << v.x[i];
  os << ")";
  return os.str();
}

std::string to_string(const Polysimplex& p) {
  std::ostringstream os;
  for (std::size_t f = 0; f < p.parts.size(); ++f) {
    if (f) os << "x";
    os << "<";
    for (std::size_t s = 0; s < p.parts[f].size(); ++s) {
      if (s) os << " ";
      os << "(";
      for (std::size_t a = 0; a < p.parts[f][s].size(); ++a)
        os << (a ? "," : "") << p.parts[f][s][a];
      os << ")";
    }
    os << ">";
  }
  return os.str();
}

}  // namespace btk
