#include <btk/building.hpp>

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

namespace btk {

namespace {

Int mod_inverse(Int a, const Int& m) {
  Int r0 = m, r1 = ((a % m) + m) % m, s0 = 0, s1 = 1;
  while (r1 != 0) {
    Int q = r0 / r1;
    r0 -= q * r1;
    std::swap(r0, r1);
    s0 -= q * s1;
    std::swap(s0, s1);
  }
  assert(r0 == 1);  // gcd(a, m) = 1 for every caller
  return ((s0 % m) + m) % m;
}

QMat inverse_or_fail(const QMat& a) {
  auto x = solve(a, QMat::identity(a.rows()));
  if (!x) fail("SingularMatrix", "matrix is not invertible");
  return *x;
}

bool p_integral(const Rat& q, long p) { return q == 0 || val_p(q, p) >= 0; }

bool p_integral(const QMat& m, long p) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!p_integral(m.at(i, j), p)) return false;
  return true;
}

// Column Hermite normal form over the p-local integers.  With
// homothety_normalize the lattice is first scaled so its generators have
// minimum valuation zero (canonical class representative); without it the
// input lattice is kept as-is and must already be integral.
std::vector<std::vector<Int>> hnf_columns(const LatticeContext& ctx, const QMat& gens,
                                          bool homothety_normalize) {
  const long d = ctx.d, p = ctx.p;
  if (static_cast<long>(gens.rows()) != d)
    fail("DimensionMismatch", "generator matrix must have d rows");
  const long n = static_cast<long>(gens.cols());
  if (n < d) fail("SingularMatrix", "fewer generators than the dimension");

  std::vector<std::vector<Rat>> col(n, std::vector<Rat>(d));
  bool any = false;
  long c0 = 0;
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < d; ++i) {
      col[j][i] = gens.at(i, j);
      if (col[j][i] != 0) {
        long v = val_p(col[j][i], p);
        if (!any || v < c0) c0 = v;
        any = true;
      }
    }
  if (!any) fail("SingularMatrix", "zero matrix spans no lattice");
  if (homothety_normalize && c0 != 0) {
    Rat s = pow_rat(p, -c0);
    for (auto& c : col)
      for (auto& e : c) e *= s;
  }
  if (!homothety_normalize)
    for (const auto& c : col)
      for (const auto& e : c) {
        (void)e;
        assert(p_integral(e, p));
      }

  // triangularize: pivot of column r at row r, minimum-valuation pivoting
  for (long r = 0; r < d; ++r) {
    long piv = -1, best = 0;
    for (long j = r; j < n; ++j)
      if (col[j][r] != 0) {
        long v = val_p(col[j][r], p);
        if (piv < 0 || v < best) piv = j, best = v;
      }
    if (piv < 0) fail("SingularMatrix", "generators do not span a full-rank lattice");
    std::swap(col[r], col[piv]);
    for (long j = r + 1; j < n; ++j) {
      if (col[j][r] == 0) continue;
      Rat q = col[j][r] / col[r][r];
      for (long i = r; i < d; ++i) col[j][i] -= q * col[r][i];
    }
  }

  // diagonal entries to pure p-powers
  for (long r = 0; r < d; ++r) {
    Rat u = pow_rat(p, val_p(col[r][r], p)) / col[r][r];
    if (u != 1)
      for (long i = r; i < d; ++i) col[r][i] *= u;
  }

  // below-diagonal entries to their canonical residues mod the row diagonal
  for (long j = 0; j + 1 < d; ++j)
    for (long r = j + 1; r < d; ++r) {
      long a = val_p(col[r][r], p);
      Rat cur = col[j][r];
      Rat rep = 0;
      if (a > 0 && cur != 0) {
        Int P = pow_int(Int(p), a);
        Int x = ((num(cur) % P) + P) % P;
        x = x * mod_inverse(den(cur), P) % P;
        rep = Rat(x);
      }
      if (cur != rep) {
        Rat q = (cur - rep) / col[r][r];
        for (long i = r; i < d; ++i) col[j][i] -= q * col[r][i];
      }
    }

  std::vector<std::vector<Int>> h(d, std::vector<Int>(d));
  long cmin = 0;
  bool seen = false;
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i) {
      assert(den(col[j][i]) == 1);
      h[i][j] = num(col[j][i]);
      if (h[i][j] != 0) {
        long v = val_p(h[i][j], p);
        if (!seen || v < cmin) cmin = v;
        seen = true;
      }
    }
  // a class representative always ends with minimum valuation zero because
  // the scaled generators already contain a unit coordinate
  if (homothety_normalize) assert(cmin == 0);
  return h;
}

}  // namespace

bool LatticeVertex::operator<(const LatticeVertex& o) const {
  if (h.size() != o.h.size()) return h.size() < o.h.size();
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (h[i][j] < o.h[i][j]) return true;
      if (o.h[i][j] < h[i][j]) return false;
    }
  return false;
}

QMat vertex_matrix(const LatticeVertex& v) {
  const std::size_t d = v.h.size();
  QMat m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m.at(i, j) = Rat(v.h[i][j]);
  return m;
}

LatticeVertex canonical_vertex(const LatticeContext& ctx, const QMat& m) {
  if (m.rows() != m.cols()) fail("DimensionMismatch", "lattice matrix must be square");
  return LatticeVertex{hnf_columns(ctx, m, true)};
}

LatticeVertex lattice_from_generators(const LatticeContext& ctx, const QMat& gens) {
  return LatticeVertex{hnf_columns(ctx, gens, true)};
}

LatticeVertex standard_vertex(const LatticeContext& ctx) {
  std::vector<std::vector<Int>> h(ctx.d, std::vector<Int>(ctx.d));
  for (long i = 0; i < ctx.d; ++i) h[i][i] = 1;
  return LatticeVertex{std::move(h)};
}

SmithDecomposition smith_padic(const LatticeContext& ctx, const QMat& a) {
  const long p = ctx.p;
  if (a.rows() != a.cols()) fail("DimensionMismatch", "Smith form needs a square matrix");
  const long d = static_cast<long>(a.rows());
  QMat w = a, P = QMat::identity(d), Q = QMat::identity(d);
  // invariant: a == P · w · Q with P, Q invertible over the p-local integers
  for (long r = 0; r < d; ++r) {
    long bi = -1, bj = -1, best = 0;
    for (long i = r; i < d; ++i)
      for (long j = r; j < d; ++j)
        if (w.at(i, j) != 0) {
          long v = val_p(w.at(i, j), p);
          if (bi < 0 || v < best) bi = i, bj = j, best = v;
        }
    if (bi < 0) fail("SingularMatrix", "matrix is not invertible");
    if (bi != r)
      for (long j = 0; j < d; ++j) {
        std::swap(w.at(r, j), w.at(bi, j));
        std::swap(P.at(j, r), P.at(j, bi));
      }
    if (bj != r)
      for (long i = 0; i < d; ++i) {
        std::swap(w.at(i, r), w.at(i, bj));
        std::swap(Q.at(r, i), Q.at(bj, i));
      }
    Rat u = pow_rat(p, best) / w.at(r, r);
    if (u != 1)
      for (long j = 0; j < d; ++j) {
        w.at(r, j) *= u;
        P.at(j, r) /= u;
      }
    for (long i = r + 1; i < d; ++i) {
      if (w.at(i, r) == 0) continue;
      Rat q = w.at(i, r) / w.at(r, r);
      for (long j = 0; j < d; ++j) {
        w.at(i, j) -= q * w.at(r, j);
        P.at(j, r) += q * P.at(j, i);
      }
    }
    for (long j = r + 1; j < d; ++j) {
      if (w.at(r, j) == 0) continue;
      Rat q = w.at(r, j) / w.at(r, r);
      for (long i = 0; i < d; ++i) {
        w.at(i, j) -= q * w.at(i, r);
        Q.at(r, i) += q * Q.at(j, i);
      }
    }
  }
  SmithDecomposition s;
  for (long r = 0; r < d; ++r) s.exponents.push_back(val_p(w.at(r, r), p));
  assert(std::is_sorted(s.exponents.begin(), s.exponents.end()));
  assert(p_integral(P, p) && p_integral(Q, p));
  s.left = std::move(P);
  s.right = std::move(Q);
  return s;
}

std::vector<long> relative_exponents(const LatticeContext& ctx, const LatticeVertex& v,
                                     const LatticeVertex& w) {
  if (v.dim() != ctx.d || w.dim() != ctx.d)
    fail("DimensionMismatch", "vertices do not match the context dimension");
  QMat rel = inverse_or_fail(vertex_matrix(v)) * vertex_matrix(w);
  std::vector<long> e = smith_padic(ctx, rel).exponents;
  long lo = e.front();
  for (long& x : e) x -= lo;
  return e;
}

bool adjacent(const LatticeContext& ctx, const LatticeVertex& v, const LatticeVertex& w) {
  return relative_exponents(ctx, v, w).back() <= 1;
}

long tree_distance(const LatticeContext& ctx, const LatticeVertex& v, const LatticeVertex& w) {
  if (ctx.d != 2) fail("Unsupported", "tree distance is defined for d = 2 only");
  return relative_exponents(ctx, v, w).back();
}

BuildingSimplex make_simplex(const LatticeContext& ctx, const std::vector<LatticeVertex>& vs) {
  if (vs.empty()) fail("PreconditionViolated", "a simplex needs at least one vertex");
  std::vector<LatticeVertex> verts = vs;
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());

  const QMat base = vertex_matrix(verts[0]);
  const QMat base_inv = inverse_or_fail(base);
  std::vector<QMat> reps;  // representatives pinched between p·Λ_0 and Λ_0
  for (const LatticeVertex& w : verts) {
    QMat hw = vertex_matrix(w);
    std::vector<long> e = smith_padic(ctx, base_inv * hw).exponents;
    if (e.back() - e.front() > 1)
      fail("NotAChain", "vertex classes admit no common representing chain");
    reps.push_back(hw.scaled(pow_rat(ctx.p, -e.front())));
  }

  // order by inclusion, largest lattice first; inclusion must be total
  auto contains = [&](const QMat& big, const QMat& small) {
    return p_integral(inverse_or_fail(big) * small, ctx.p);
  };
  std::vector<std::size_t> sorted;
  std::vector<bool> used(reps.size(), false);
  for (std::size_t step = 0; step < reps.size(); ++step) {
    long pick = -1;
    for (std::size_t c = 0; c < reps.size(); ++c) {
      if (used[c]) continue;
      bool top = true;
      for (std::size_t o = 0; o < reps.size(); ++o)
        if (!used[o] && o != c && !contains(reps[c], reps[o])) {
          top = false;
          break;
        }
      if (top) {
        pick = static_cast<long>(c);
        break;
      }
    }
    if (pick < 0) fail("NotAChain", "representatives are not totally ordered by inclusion");
    used[pick] = true;
    sorted.push_back(pick);
  }

  BuildingSimplex s;
  s.verts = std::move(verts);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    s.chain.push_back(hnf_columns(ctx, reps[sorted[k]], false));
    if (k > 0) assert(s.chain[k] != s.chain[k - 1]);  // distinct classes stay strict
  }
  // the whole chain is pinched above p times its largest member
  QMat top(vertex_matrix(LatticeVertex{s.chain.front()}));
  assert(p_integral(inverse_or_fail(vertex_matrix(LatticeVertex{s.chain.back()})) *
                        top.scaled(Rat(ctx.p)),
                    ctx.p));
  return s;
}

std::vector<BuildingSimplex> simplex_faces(const LatticeContext& ctx, const BuildingSimplex& s) {
  const std::size_t m = s.verts.size();
  std::vector<BuildingSimplex> out;
  for (std::size_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<LatticeVertex> sub;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) sub.push_back(s.verts[i]);
    out.push_back(make_simplex(ctx, sub));
  }
  return out;
}

LatticeVertex act(const LatticeContext& ctx, const QMat& g, const LatticeVertex& v) {
  if (rank(g) != g.rows()) fail("SingularMatrix", "group element is singular");
  return canonical_vertex(ctx, g * vertex_matrix(v));
}

BuildingSimplex act(const LatticeContext& ctx, const QMat& g, const BuildingSimplex& s) {
  std::vector<LatticeVertex> moved;
  for (const LatticeVertex& v : s.verts) moved.push_back(act(ctx, g, v));
  return make_simplex(ctx, moved);
}

void BuildingComplex::insert(const BuildingSimplex& s) {
  if (cells_.count(s)) return;
  for (const BuildingSimplex& f : simplex_faces(ctx_, s)) cells_.insert(f);
}

std::vector<LatticeVertex> BuildingComplex::vertex_list() const {
  std::vector<LatticeVertex> out;
  for (const BuildingSimplex& s : cells_)
    if (s.dim() == 0) out.push_back(s.verts[0]);
  return out;
}

std::vector<BuildingSimplex> BuildingComplex::cells_of_dim(long k) const {
  std::vector<BuildingSimplex> out;
  for (const BuildingSimplex& s : cells_)
    if (s.dim() == k) out.push_back(s);
  return out;
}

long BuildingComplex::max_dim() const {
  long m = -1;
  for (const BuildingSimplex& s : cells_) m = std::max(m, s.dim());
  return m;
}

namespace {

// proper nonzero subspaces of F_p^d as reduced row-echelon bases (k×d)
std::vector<std::vector<std::vector<long>>> proper_subspaces(long p, long d) {
  std::vector<std::vector<std::vector<long>>> out;
  for (long k = 1; k < d; ++k) {
    std::vector<long> piv(k);
    for (long i = 0; i < k; ++i) piv[i] = i;
    while (true) {
      std::vector<std::pair<long, long>> free_pos;
      auto is_piv = [&](long j) { return std::find(piv.begin(), piv.end(), j) != piv.end(); };
      for (long i = 0; i < k; ++i)
        for (long j = piv[i] + 1; j < d; ++j)
          if (!is_piv(j)) free_pos.emplace_back(i, j);
      std::vector<long> digits(free_pos.size(), 0);
      while (true) {
        std::vector<std::vector<long>> basis(k, std::vector<long>(d, 0));
        for (long i = 0; i < k; ++i) basis[i][piv[i]] = 1;
        for (std::size_t t = 0; t < free_pos.size(); ++t)
          basis[free_pos[t].first][free_pos[t].second] = digits[t];
        out.push_back(std::move(basis));
        std::size_t c = 0;
        while (c < digits.size() && digits[c] == p - 1) digits[c++] = 0;
        if (c == digits.size()) break;
        ++digits[c];
      }
      // next pivot combination
      long i = k - 1;
      while (i >= 0 && piv[i] == d - k + i) --i;
      if (i < 0) break;
      ++piv[i];
      for (long j = i + 1; j < k; ++j) piv[j] = piv[j - 1] + 1;
    }
  }
  return out;
}

// does the echelon basis `big` contain every row of `small` (mod p)?
bool subspace_contains(const std::vector<std::vector<long>>& big,
                       const std::vector<std::vector<long>>& small, long p) {
  if (big.size() <= small.size()) return false;
  const long d = static_cast<long>(big[0].size());
  std::vector<long> bigpiv;
  for (const auto& row : big) {
    long j = 0;
    while (row[j] == 0) ++j;
    bigpiv.push_back(j);
  }
  for (const auto& srow : small) {
    std::vector<long> v = srow;
    for (std::size_t i = 0; i < big.size(); ++i) {
      long c = v[bigpiv[i]] % p;
      if (c == 0) continue;
      for (long j = 0; j < d; ++j) v[j] = ((v[j] - c * big[i][j]) % p + p) % p;
    }
    for (long j = 0; j < d; ++j)
      if (v[j] % p != 0) return false;
  }
  return true;
}

// class of the lattice between p·Λ and Λ determined by a residue subspace
LatticeVertex subspace_preimage(const LatticeContext& ctx, const QMat& h,
                                const std::vector<std::vector<long>>& basis) {
  const long d = ctx.d, k = static_cast<long>(basis.size());
  QMat gens(d, k + d);
  for (long t = 0; t < k; ++t)
    for (long i = 0; i < d; ++i) {
      Rat acc = 0;
      for (long j = 0; j < d; ++j) acc += h.at(i, j) * Rat(basis[t][j]);
      gens.at(i, t) = acc;
    }
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i) gens.at(i, k + j) = h.at(i, j) * Rat(ctx.p);
  return lattice_from_generators(ctx, gens);
}

}  // namespace

std::vector<LatticeVertex> neighbors(const LatticeContext& ctx, const LatticeVertex& v) {
  QMat h = vertex_matrix(v);
  std::set<LatticeVertex> out;
  for (const auto& w : proper_subspaces(ctx.p, ctx.d)) out.insert(subspace_preimage(ctx, h, w));
  return std::vector<LatticeVertex>(out.begin(), out.end());
}

BuildingComplex ball(const LatticeContext& ctx, const LatticeVertex& center, long radius,
                     std::size_t budget) {
  if (radius < 0) fail("PreconditionViolated", "radius must be non-negative");
  const auto subspaces = proper_subspaces(ctx.p, ctx.d);

  std::set<LatticeVertex> seen{center};
  std::vector<LatticeVertex> frontier{center};
  for (long level = 1; level <= radius; ++level) {
    std::vector<LatticeVertex> next;
    for (const LatticeVertex& v : frontier) {
      QMat h = vertex_matrix(v);
      for (const auto& w : subspaces) {
        LatticeVertex m = subspace_preimage(ctx, h, w);
        if (seen.insert(m).second) {
          next.push_back(m);
          if (seen.size() > budget)
            fail("BudgetExceeded", "ball enumeration exceeded the vertex budget");
        }
      }
    }
    frontier = std::move(next);
  }

  // all strictly increasing subspace chains, as index sequences
  const std::size_t ns = subspaces.size();
  std::vector<std::vector<std::size_t>> above(ns);
  for (std::size_t a = 0; a < ns; ++a)
    for (std::size_t b = 0; b < ns; ++b)
      if (subspace_contains(subspaces[b], subspaces[a], ctx.p)) above[a].push_back(b);
  std::vector<std::vector<std::size_t>> chains;
  std::vector<std::size_t> cur;
  auto dfs = [&](auto&& self, std::size_t last) -> void {
    chains.push_back(cur);
    for (std::size_t nxt : above[last]) {
      cur.push_back(nxt);
      self(self, nxt);
      cur.pop_back();
    }
  };
  for (std::size_t a = 0; a < ns; ++a) {
    cur = {a};
    dfs(dfs, a);
  }

  BuildingComplex bc(ctx);
  for (const LatticeVertex& v : seen) {
    bc.insert(make_simplex(ctx, {v}));
    QMat h = vertex_matrix(v);
    std::vector<LatticeVertex> cls(ns);
    std::vector<bool> inside(ns);
    for (std::size_t a = 0; a < ns; ++a) {
      cls[a] = subspace_preimage(ctx, h, subspaces[a]);
      inside[a] = seen.count(cls[a]) != 0;
    }
    for (const auto& ch : chains) {
      bool ok = true;
      std::vector<LatticeVertex> vs{v};
      for (std::size_t a : ch) {
        if (!inside[a]) {
          ok = false;
          break;
        }
        vs.push_back(cls[a]);
      }
      if (ok) bc.insert(make_simplex(ctx, vs));
    }
  }
  return bc;
}

LatticeVertex standard_apartment_embed(const LatticeContext& ctx, const std::vector<Coord>& n) {
  if (static_cast<long>(n.size()) != ctx.d)
    fail("DimensionMismatch", "coordinate vector must have length d");
  QMat m(ctx.d, ctx.d);
  for (long j = 0; j < ctx.d; ++j) m.at(j, j) = pow_rat(ctx.p, n[j]);
  return canonical_vertex(ctx, m);
}

std::vector<Coord> apartment_coordinates(const LatticeContext& ctx, const LatticeVertex& v) {
  if (v.dim() != ctx.d) fail("DimensionMismatch", "vertex does not match the context");
  std::vector<Coord> out;
  for (long i = 0; i < ctx.d; ++i) {
    for (long j = 0; j < ctx.d; ++j)
      if (i != j && v.h[i][j] != 0)
        fail("NotInStandardApartment", "canonical form is not diagonal");
    long a = val_p(v.h[i][i], ctx.p);
    assert(v.h[i][i] == pow_int(Int(ctx.p), a));
    out.push_back(a);
  }
  assert(*std::min_element(out.begin(), out.end()) == 0);
  return out;
}

CommonApartment common_apartment(const LatticeContext& ctx, const LatticeVertex& v,
                                 const LatticeVertex& w) {
  const QMat hv = vertex_matrix(v);
  QMat rel = inverse_or_fail(hv) * vertex_matrix(w);
  CommonApartment ca;
  ca.coords_v.assign(ctx.d, 0);
  bool diagonal = true;
  for (long i = 0; i < ctx.d && diagonal; ++i)
    for (long j = 0; j < ctx.d; ++j)
      if (i != j && rel.at(i, j) != 0) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    ca.basis = hv;
    for (long i = 0; i < ctx.d; ++i) ca.coords_w.push_back(val_p(rel.at(i, i), ctx.p));
    return ca;
  }
  SmithDecomposition s = smith_padic(ctx, rel);
  ca.basis = hv * s.left;
  for (long e : s.exponents) ca.coords_w.push_back(e);
  return ca;
}

BuildingComplex fixed_subcomplex(const LatticeContext& ctx, const std::vector<QMat>& generators,
                                 const BuildingComplex& region) {
  std::map<LatticeVertex, bool> fixed;
  auto is_fixed = [&](const LatticeVertex& v) {
    auto it = fixed.find(v);
    if (it != fixed.end()) return it->second;
    bool f = true;
    for (const QMat& g : generators)
      if (act(ctx, g, v) != v) {
        f = false;
        break;
      }
    fixed[v] = f;
    return f;
  };
  BuildingComplex out(ctx);
  for (const BuildingSimplex& s : region.cells()) {
    bool keep = true;
    for (const LatticeVertex& v : s.verts)
      if (!is_fixed(v)) {
        keep = false;
        break;
      }
    if (keep) out.insert(s);
  }
  return out;
}

Polysimplex tree_retraction(const LatticeContext& ctx, const BuildingSimplex& chamber,
                            const BuildingSimplex& s) {
  if (ctx.d != 2) fail("Unsupported", "the retraction is implemented for d = 2 only");
  if (chamber.dim() != 1) fail("PreconditionViolated", "the center must be an edge");
  auto line = [&](const LatticeVertex& v) {
    std::vector<Coord> c = apartment_coordinates(ctx, v);
    return c[0] - c[1];
  };
  Coord l0 = line(chamber.verts[0]), l1 = line(chamber.verts[1]);
  LatticeVertex c0 = chamber.verts[0];
  if (l1 < l0) {
    std::swap(l0, l1);
    c0 = chamber.verts[1];
  }
  assert(l1 == l0 + 1);
  LatticeVertex c1 = (c0 == chamber.verts[0]) ? chamber.verts[1] : chamber.verts[0];

  ApartmentShape shape{{2}};
  std::vector<Vertex> images;
  for (const LatticeVertex& v : s.verts) {
    long r0 = tree_distance(ctx, v, c0);
    long r1 = tree_distance(ctx, v, c1);
    assert(r1 == r0 + 1 || r0 == r1 + 1);  // the tree is bipartite
    Coord n = (r1 == r0 + 1) ? l0 - r0 : l0 + r0;
    images.push_back(make_vertex(shape, {n, 0}));
  }
  return span(shape, images);
}

std::string to_string(const LatticeVertex& v) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < v.h.size(); ++i) {
    os << (i ? ",[" : "[");
    for (std::size_t j = 0; j < v.h.size(); ++j) os << (j ? "," : "") << v.h[i][j];
    os << "]";
  }
  os << "]";
  return os.str();
}

}  // namespace btk
