#include <doctest.h>

#include <btk/apartment.hpp>
#include <btk/rng.hpp>

#include <algorithm>

using namespace btk;

namespace {

const ApartmentShape A2{{3}};  // rank-2 affine factor, 3 coordinates
const ApartmentShape A3{{4}};

Vertex v2(Coord a, Coord b, Coord c) { return make_vertex(A2, {a, b, c}); }
Vertex v3(Coord a, Coord b, Coord c, Coord d) { return make_vertex(A3, {a, b, c, d}); }

Polysimplex tri(Coord ax, Coord ay, Coord bx, Coord by, Coord cx, Coord cy) {
  return span(A2, {v2(ax, ay, 0), v2(bx, by, 0), v2(cx, cy, 0)});
}

// random polysimplex: a chain of nested coordinate sets on top of a random base
Polysimplex random_cell(Rng& rng, const ApartmentShape& shape, Coord spread) {
  std::vector<Vertex> vs;
  std::vector<Coord> base(shape.total());
  for (auto& c : base) c = rng.range(-spread, spread);
  Vertex b = make_vertex(shape, base);
  vs.push_back(b);
  for (std::size_t f = 0; f < shape.factors.size(); ++f) {
    int m = shape.factors[f];
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    for (int i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    int len = static_cast<int>(rng.below(m));  // chain length in this factor
    auto [beg, end] = shape.range(f);
    (void)end;
    std::vector<Coord> cur = b.x;
    for (int s = 0; s < len; ++s) {
      ++cur[beg + perm[s]];
      vs.push_back(make_vertex(shape, cur));
    }
  }
  return span(shape, vs);
}

Vertex random_vertex(Rng& rng, const ApartmentShape& shape, Coord spread) {
  std::vector<Coord> x(shape.total());
  for (auto& c : x) c = rng.range(-spread, spread);
  return make_vertex(shape, x);
}

}  // namespace

TEST_SUITE("apartment") {
  TEST_CASE("canonical vertices and adjacency") {
    CHECK(v2(1, 2, 3) == v2(-2, -1, 0));
    CHECK(v2(5, 5, 5) == v2(0, 0, 0));
    CHECK(adjacent(A2, v2(0, 0, 0), v2(1, 0, 0)));
    CHECK(adjacent(A2, v2(0, 0, 0), v2(1, 1, 0)));
    CHECK(adjacent(A2, v2(0, 0, 0), v2(-1, 0, 0)));
    CHECK(!adjacent(A2, v2(0, 0, 0), v2(2, 1, 0)));
    CHECK(!adjacent(A2, v2(1, 0, 0), v2(0, 1, 0)));

    ApartmentShape prod{{2, 2}};
    Vertex a = make_vertex(prod, {0, 0, 0, 0});
    Vertex b = make_vertex(prod, {1, 0, 1, 0});
    Vertex c = make_vertex(prod, {2, 0, 0, 0});
    CHECK(adjacent(prod, a, b));
    CHECK(!adjacent(prod, a, c));
  }

  TEST_CASE("span, faces and vertex products") {
    Polysimplex t = tri(0, 0, 1, 0, 1, 1);
    CHECK(t.dim() == 2);
    CHECK(t.vertex_count() == 3);
    CHECK(t.faces().size() == 7);
    CHECK(t.proper_faces().size() == 6);
    CHECK_THROWS_AS(span(A2, {v2(0, 0, 0), v2(2, 1, 0)}), Error);

    ApartmentShape prod{{2, 2}};
    Polysimplex sq = span(prod, {make_vertex(prod, {0, 0, 0, 0}), make_vertex(prod, {1, 0, 0, 0}),
                                 make_vertex(prod, {0, 0, 1, 0}), make_vertex(prod, {1, 0, 1, 0})});
    CHECK(sq.dim() == 2);
    CHECK(sq.vertex_count() == 4);
    CHECK(sq.faces().size() == 9);  // 3 slice subsets per factor
    Polysimplex edge = span(prod, {make_vertex(prod, {0, 0, 0, 0}), make_vertex(prod, {1, 0, 0, 0})});
    CHECK(edge.is_face_of(sq));
    CHECK(!sq.is_face_of(edge));
  }

  TEST_CASE("hull of two vertices across a rhombus") {
    SubComplex h = hull(A2, vertex_cell(A2, v2(0, 0, 0)), vertex_cell(A2, v2(2, 1, 0)));
    CHECK(h.vertex_set().size() == 4);
    CHECK(h.size() == 11);  // 4 vertices, 5 edges, 2 triangles
    CHECK(h.contains(tri(0, 0, 1, 0, 1, 1)));
    CHECK(h.contains(tri(1, 0, 1, 1, 2, 1)));
    CHECK(h.max_dim() == 2);
    CHECK(is_convex(h).convex);
  }

  TEST_CASE("hull of a polysimplex with itself is its face set") {
    Polysimplex t = tri(0, 0, 1, 0, 1, 1);
    SubComplex h = hull(A2, t, t);
    CHECK(h.size() == 7);
    for (const Polysimplex& f : t.faces()) CHECK(h.contains(f));
  }

  TEST_CASE("box enumeration matches the hand count") {
    SubComplex b = enumerate_box(A2, {0, 0, 0}, {1, 1, 0});
    CHECK(b.vertex_set().size() == 4);
    CHECK(b.size() == 11);

    ApartmentShape prod{{2, 2}};
    SubComplex grid = enumerate_box(prod, {0, 0, 0, 0}, {1, 0, 1, 0});
    CHECK(grid.vertex_set().size() == 4);
    CHECK(grid.size() == 9);  // unit square: 4 + 4 + 1
    CHECK(grid.max_dim() == 2);
  }

  TEST_CASE("four-coordinate hull of a vertex and an edge exceeds the union over endpoints") {
    Vertex x = v3(0, 0, 0, 0), y = v3(4, 2, 2, 0);
    Vertex z1 = v3(4, 2, 1, 0), z2 = v3(4, 3, 2, 0);
    REQUIRE(adjacent(A3, z1, z2));
    Polysimplex e = span(A3, {z1, z2});

    auto vs = [&](const Polysimplex& a, const Polysimplex& b) {
      return hull_vertex_set(hull_constraints(A3, a, b), 1u << 20);
    };
    std::set<Vertex> h1 = vs(vertex_cell(A3, x), vertex_cell(A3, z1));
    std::set<Vertex> h2 = vs(vertex_cell(A3, x), vertex_cell(A3, z2));
    std::set<Vertex> he = vs(vertex_cell(A3, x), e);

    // dominant-chain descriptions, enumerated inequality by inequality:
    //   h1: w0>=w1>=w2>=0, w0<=w1+2, w1<=w2+1, w2<=1
    //   h2: same ordering,  w0<=w1+1, w1<=w2+1, w2<=2
    //   he: same ordering,  w0<=w1+2, w1<=w2+1, w2<=2, w0<=4
    std::set<Vertex> h1_expected, h2_expected, he_expected;
    for (Coord w2 = 0; w2 <= 2; ++w2)
      for (Coord w1 = w2; w1 <= w2 + 1; ++w1)
        for (Coord w0 = w1; w0 <= w1 + 2; ++w0) {
          if (w2 <= 1) h1_expected.insert(v3(w0, w1, w2, 0));
          if (w0 <= w1 + 1) h2_expected.insert(v3(w0, w1, w2, 0));
          if (w0 <= 4) he_expected.insert(v3(w0, w1, w2, 0));
        }
    CHECK(h1 == h1_expected);
    CHECK(h2 == h2_expected);
    CHECK(he == he_expected);
    CHECK(h1.size() == 12);
    CHECK(h2.size() == 12);
    CHECK(he.size() == 17);

    CHECK(!h1.count(y));
    CHECK(!h2.count(y));
    CHECK(he.count(y));

    // the hull of the edge strictly exceeds the union of the endpoint hulls
    std::set<Vertex> uni = h1;
    uni.insert(h2.begin(), h2.end());
    CHECK(uni.size() == 16);
    CHECK(std::includes(he.begin(), he.end(), uni.begin(), uni.end()));

    // the union complex separates admissibility from convexity
    SubComplex usig = complex_on_vertices(A3, uni, 1u << 20);
    CHECK(usig.size() == 137);
    CHECK(is_admissible(usig).admissible);
    CHECK(!is_convex(usig).convex);
  }

  TEST_CASE("hollow triangle: neither convex nor admissible, closure fills it") {
    SubComplex hollow(A2);
    Polysimplex t = tri(0, 0, 1, 0, 1, 1);
    for (const Polysimplex& f : t.proper_faces()) hollow.insert(f);
    CHECK(hollow.size() == 6);

    ConvexityResult cr = is_convex(hollow);
    CHECK(!cr.convex);
    REQUIRE(cr.witness.has_value());
    CHECK(cr.witness->escaped == t);

    AdmissibilityResult ar = is_admissible(hollow);
    CHECK(!ar.admissible);
    CHECK(ar.reason == "missing-span");
    CHECK(*ar.witness_cell == t);

    SubComplex cl = convex_closure(hollow);
    CHECK(cl.size() == 7);
    CHECK(cl.contains(t));
    CHECK(is_convex(cl).convex);
  }

  TEST_CASE("two disconnected vertices are not admissible") {
    SubComplex s(A2);
    s.insert(vertex_cell(A2, v2(0, 0, 0)));
    s.insert(vertex_cell(A2, v2(3, 1, 0)));
    CHECK(!is_convex(s).convex);
    AdmissibilityResult ar = is_admissible(s);
    CHECK(!ar.admissible);
    CHECK(ar.reason == "no-extension");
  }

  TEST_CASE("convex closure of two far vertices equals their hull") {
    Vertex a = v2(0, 0, 0), b = v2(3, 1, 0);
    SubComplex s(A2);
    s.insert(vertex_cell(A2, a));
    s.insert(vertex_cell(A2, b));
    SubComplex cl = convex_closure(s);
    SubComplex h = hull(A2, vertex_cell(A2, a), vertex_cell(A2, b));
    CHECK(cl == h);
    CHECK(is_convex(cl).convex);
    CHECK(is_admissible(cl).admissible);
  }

  TEST_CASE("hulls are convex and admissible on seeded pairs") {
    Rng rng(0xa9a9001);
    for (int it = 0; it < 12; ++it) {
      const ApartmentShape& shape = (it % 2 == 0) ? A2 : A3;
      Polysimplex s = random_cell(rng, shape, 2);
      Polysimplex t = random_cell(rng, shape, 2);
      SubComplex h = hull(shape, s, t);
      CAPTURE(it);
      CHECK(h.contains(s));
      CHECK(h.contains(t));
      CHECK(is_convex(h).convex);
      CHECK(is_admissible(h).admissible);
    }
  }

  TEST_CASE("closure of a seeded pair equals the one-shot hull") {
    Rng rng(0xa9a9002);
    for (int it = 0; it < 8; ++it) {
      const ApartmentShape& shape = (it % 2 == 0) ? A2 : A3;
      Polysimplex s = random_cell(rng, shape, 2);
      Polysimplex t = random_cell(rng, shape, 2);
      SubComplex pair(shape);
      pair.insert(s);
      pair.insert(t);
      CAPTURE(it);
      CHECK(convex_closure(pair) == hull(shape, s, t));
    }
  }

  TEST_CASE("segment carriers stay inside the hull of the endpoints") {
    Rng rng(0xa9a9003);
    for (int it = 0; it < 10; ++it) {
      const ApartmentShape& shape = (it % 2 == 0) ? A2 : A3;
      Vertex a = random_vertex(rng, shape, 3), b = random_vertex(rng, shape, 3);
      SubComplex h = hull(shape, vertex_cell(shape, a), vertex_cell(shape, b));
      std::vector<Rat> fa(a.x.size()), fb(b.x.size());
      for (std::size_t i = 0; i < a.x.size(); ++i) {
        fa[i] = Rat(a.x[i]);
        fb[i] = Rat(b.x[i]);
      }
      CAPTURE(it);
      for (const Polysimplex& c : segment_carriers(shape, fa, fb)) CHECK(h.contains(c));
    }
  }

  TEST_CASE("carrier of a barycenter recovers the polysimplex") {
    Rng rng(0xa9a9004);
    ApartmentShape prod{{3, 2}};
    for (int it = 0; it < 30; ++it) {
      const ApartmentShape& shape = (it % 3 == 0) ? A2 : (it % 3 == 1) ? A3 : prod;
      Polysimplex p = random_cell(rng, shape, 3);
      CAPTURE(it);
      CHECK(carrier(shape, barycenter(p)) == p);
    }
  }

  TEST_CASE("star of a vertex and of an edge") {
    SubComplex sv = star(A2, vertex_cell(A2, v2(0, 0, 0)));
    CHECK(sv.vertex_set().size() == 7);
    CHECK(sv.cells_of_dim(2).size() == 6);
    CHECK(sv.size() == 6 + 12 + 7);  // hexagon fan: 6 triangles, 12 edges, 7 vertices

    Polysimplex e = span(A2, {v2(0, 0, 0), v2(1, 0, 0)});
    SubComplex se = star(A2, e);
    CHECK(se.cells_of_dim(2).size() == 2);
    CHECK(se.size() == 11);
  }

  TEST_CASE("minimal face: known example and oracle agreement") {
    Polysimplex t = tri(0, 0, 1, 0, 1, 1);
    CHECK(minimal_face(A2, v2(2, 1, 0), t) == vertex_cell(A2, v2(0, 0, 0)));
    CHECK(minimal_face_bruteforce(A2, v2(2, 1, 0), t) == vertex_cell(A2, v2(0, 0, 0)));
    // from a vertex of the simplex itself, nothing can be shed below that vertex
    CHECK(minimal_face(A2, v2(0, 0, 0), t) == minimal_face_bruteforce(A2, v2(0, 0, 0), t));

    // x equal to a single-vertex cell: the face is that vertex, not empty
    Polysimplex pt = vertex_cell(A2, v2(0, 0, 0));
    CHECK(minimal_face(A2, v2(0, 0, 0), pt) == pt);
    CHECK(minimal_face(A2, v2(1, 1, 1), pt) == pt);  // same point, shifted coords

    Rng rng(0xa9a9005);
    ApartmentShape prod{{3, 2}};
    for (int it = 0; it < 60; ++it) {
      const ApartmentShape& shape = (it % 3 == 0) ? A2 : (it % 3 == 1) ? A3 : prod;
      Polysimplex s = random_cell(rng, shape, 3);
      Vertex x = random_vertex(rng, shape, 4);
      CAPTURE(it);
      Polysimplex got = minimal_face(shape, x, s);
      CHECK(got == minimal_face_bruteforce(shape, x, s));
      CHECK(got.is_face_of(s));
      // defining property: the simplex lies in the hull of x and the face
      std::vector<Vertex> base = got.vertices();
      base.push_back(x);
      CHECK(hull_constraints(shape, base).contains(s));
    }
  }

  TEST_CASE("maximal cone: unique maximal cell over the minimal face") {
    Rng rng(0xa9a9006);
    ApartmentShape prod{{3, 2}};
    int degenerate = 0;
    for (int it = 0; it < 60; ++it) {
      const ApartmentShape& shape = (it % 3 == 0) ? A2 : (it % 3 == 1) ? A3 : prod;
      Polysimplex t = random_cell(rng, shape, 3);
      Vertex x = random_vertex(rng, shape, 4);
      CAPTURE(it);
      MaximalConeResult mc = maximal_cone(shape, x, t);
      CHECK(t.is_face_of(mc.sigma));
      std::vector<Vertex> base = t.vertices();
      base.push_back(x);
      HullConstraints hc = hull_constraints(shape, base);
      CHECK(hc.contains(mc.sigma));
      // maximality: no strictly larger coface stays inside the hull
      SubComplex st = star(shape, mc.sigma);
      for (const Polysimplex& cf : st.cells())
        if (mc.sigma.is_face_of(cf) && cf != mc.sigma) CHECK(!hc.contains(cf));
      if (mc.sigma == t && t != vertex_cell(shape, x)) {
        ++degenerate;
        REQUIRE(mc.omega.has_value());
        std::vector<Vertex> b2 = mc.omega->vertices();
        b2.push_back(x);
        CHECK(hull_constraints(shape, b2).contains(t));
        CHECK(mc.omega->is_face_of(t));
        CHECK(*mc.omega != t);
      }
    }
    CHECK(degenerate > 0);  // the branch must actually be exercised
  }

  TEST_CASE("vertex path: known two-step walk") {
    // base polysimplex = the target vertex itself, simplex = a far vertex
    Vertex y = v2(2, 1, 0);
    std::vector<Vertex> path =
        vertex_path(A2, vertex_cell(A2, y), vertex_cell(A2, v2(0, 0, 0)), y);
    REQUIRE(path.size() == 3);
    CHECK(path[0] == v2(0, 0, 0));
    CHECK(path[1] == v2(1, 0, 0));
    CHECK(path[2] == v2(2, 1, 0));
  }

  TEST_CASE("vertex path: seeded inputs verify their clauses") {
    Rng rng(0xa9a9007);
    ApartmentShape prod{{3, 2}};
    int nontrivial = 0;
    for (int it = 0; it < 60; ++it) {
      const ApartmentShape& shape = (it % 3 == 0) ? A2 : (it % 3 == 1) ? A3 : prod;
      Polysimplex t = random_cell(rng, shape, 2);
      Polysimplex s = random_cell(rng, shape, 2);
      // targets: hull vertices adjacent to s (hypothesis of the construction)
      std::vector<Vertex> base = s.vertices();
      for (const Vertex& v : t.vertices()) base.push_back(v);
      std::vector<Vertex> cand;
      for (const Vertex& w : hull_vertex_set(hull_constraints(shape, base), 1u << 20)) {
        bool adj = true;
        for (const Vertex& v : s.vertices())
          if (!adjacent(shape, w, v)) {
            adj = false;
            break;
          }
        if (adj) cand.push_back(w);
      }
      REQUIRE(!cand.empty());  // vertices of s itself always qualify
      Vertex y = cand[rng.below(cand.size())];
      CAPTURE(it);
      // construction self-verifies all clauses; reaching here means they hold
      std::vector<Vertex> path = vertex_path(shape, s, t, y);
      CHECK(path.back() == y);
      CHECK(vertex_cell(shape, path.front()).is_face_of(t));
      CHECK(vertex_path(shape, s, t, y) == path);  // deterministic
      if (path.size() > 1) ++nontrivial;
    }
    CHECK(nontrivial > 10);
  }

  TEST_CASE("vertex path rejects a target outside the hull") {
    Polysimplex t = tri(0, 0, 1, 0, 1, 1);
    CHECK_THROWS_AS(vertex_path(A2, t, t, v2(5, -5, 0)), Error);
  }

  TEST_CASE("vertex path in four coordinates can lack a starting vertex") {
    // same configuration as the hull counterexample: the target is in the
    // hull of the vertex and the edge, but adjacent to neither, and no
    // vertex of the edge keeps it inside
    Vertex x = v3(0, 0, 0, 0), y = v3(4, 2, 2, 0);
    Polysimplex e = span(A3, {v3(4, 2, 1, 0), v3(4, 3, 2, 0)});
    try {
      vertex_path(A3, vertex_cell(A3, x), e, y);
      FAIL("expected a precondition failure");
    } catch (const Error& err) {
      CHECK(err.kind == "PreconditionViolated");
      CHECK(std::string(err.what()).find("adjacent") != std::string::npos);
    }
  }

  TEST_CASE("simplex path: simple contraction and seeded inputs") {
    Polysimplex t = tri(0, 0, 1, 0, 1, 1);
    Polysimplex x0 = vertex_cell(A2, v2(0, 0, 0));
    std::vector<Polysimplex> seq = simplex_path(A2, x0, t, x0);
    REQUIRE(seq.size() == 2);
    CHECK(seq[0] == t);
    CHECK(seq[1] == x0);

    Rng rng(0xa9a9008);
    ApartmentShape prod{{3, 2}};
    for (int it = 0; it < 40; ++it) {
      const ApartmentShape& shape = (it % 3 == 0) ? A2 : (it % 3 == 1) ? A3 : prod;
      Polysimplex tau = random_cell(rng, shape, 2);
      const auto faces = tau.faces();
      Polysimplex sig = faces[rng.below(faces.size())];
      std::vector<Vertex> base = sig.vertices();
      for (const Vertex& v : tau.vertices()) base.push_back(v);
      SubComplex h = complex_on_vertices(
          shape, hull_vertex_set(hull_constraints(shape, base), 1u << 20), 1u << 20);
      std::vector<Polysimplex> cells(h.cells().begin(), h.cells().end());
      Polysimplex om = cells[rng.below(cells.size())];
      CAPTURE(it);
      std::vector<Polysimplex> path = simplex_path(shape, sig, tau, om);
      CHECK(path.front() == tau);
      CHECK(path.back() == om);
    }
  }

  TEST_CASE("hull respects its budget") {
    CHECK_THROWS_AS(hull(A3, vertex_cell(A3, v3(0, 0, 0, 0)), vertex_cell(A3, v3(9, 6, 3, 0)), 8),
                    Error);
  }
}
