#include <doctest.h>

#include <btk/linalg.hpp>
#include <btk/rng.hpp>

using namespace btk;

namespace {

QMat random_mat(Rng& rng, std::size_t r, std::size_t c) {
  QMat m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m.at(i, j) = Rat(rng.range(-4, 4), rng.range(1, 3));
  return m;
}

// independent oracle: plain rational Gaussian elimination
std::size_t naive_rank(QMat m) {
  std::size_t rk = 0;
  for (std::size_t col = 0; col < m.cols() && rk < m.rows(); ++col) {
    std::size_t piv = rk;
    while (piv < m.rows() && m.at(piv, col) == 0) ++piv;
    if (piv == m.rows()) continue;
    for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m.at(piv, j), m.at(rk, j));
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == rk || m.at(i, col) == 0) continue;
      Rat f = m.at(i, col) / m.at(rk, col);
      for (std::size_t j = 0; j < m.cols(); ++j) m.at(i, j) -= f * m.at(rk, j);
    }
    ++rk;
  }
  return rk;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("identity, product, sum, transpose, trace") {
    QMat id = QMat::identity(3);
    CHECK(id.is_identity());
    QMat a(2, 3), b(3, 2);
    a.at(0, 0) = 1;
    a.at(0, 1) = Rat(1, 2);
    a.at(1, 2) = -3;
    b.at(0, 0) = 2;
    b.at(1, 0) = 4;
    b.at(2, 1) = Rat(1, 3);
    QMat c = a * b;
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 2);
    CHECK(c.at(0, 0) == 4);              // 1*2 + (1/2)*4
    CHECK(c.at(1, 1) == -1);             // -3 * 1/3
    CHECK((a + a).at(0, 1) == 1);
    CHECK((a - a).is_zero());
    CHECK(a.transpose().at(2, 1) == -3);
    QMat s(2, 2);
    s.at(0, 0) = Rat(1, 2);
    s.at(1, 1) = Rat(1, 3);
    CHECK(s.trace() == Rat(5, 6));
    CHECK(s.scaled(Rat(6)).trace() == 5);
  }

  TEST_CASE("rank matches an independent elimination on random matrices") {
    Rng rng(0x5eed001);
    for (int it = 0; it < 300; ++it) {
      std::size_t r = 1 + rng.below(7), c = 1 + rng.below(7);
      QMat m = random_mat(rng, r, c);
      CAPTURE(it);
      CHECK(rank(m) == naive_rank(m));
      CHECK(rank(m) == rank(m.transpose()));
    }
  }

  TEST_CASE("rank of structured matrices") {
    CHECK(rank(QMat::zero(4, 5)) == 0);
    CHECK(rank(QMat::identity(6)) == 6);
    // rank-one outer product
    QMat u(4, 1), v(1, 5);
    for (std::size_t i = 0; i < 4; ++i) u.at(i, 0) = Rat(static_cast<long long>(i) + 1);
    for (std::size_t j = 0; j < 5; ++j) v.at(0, j) = Rat(2 * static_cast<long long>(j) - 3);
    CHECK(rank(u * v) == 1);
  }

  TEST_CASE("nullspace is an exact kernel basis") {
    Rng rng(0x5eed002);
    for (int it = 0; it < 100; ++it) {
      std::size_t r = 1 + rng.below(6), c = 1 + rng.below(6);
      QMat m = random_mat(rng, r, c);
      QMat n = nullspace(m);
      CHECK(n.cols() == c - rank(m));
      if (n.cols() > 0) {
        CHECK((m * n).is_zero());
        CHECK(rank(n) == n.cols());
      }
    }
  }

  TEST_CASE("solve recovers exact solutions and detects inconsistency") {
    Rng rng(0x5eed003);
    for (int it = 0; it < 100; ++it) {
      std::size_t r = 1 + rng.below(5), c = 1 + rng.below(5), k = 1 + rng.below(3);
      QMat a = random_mat(rng, r, c);
      QMat x0 = random_mat(rng, c, k);
      QMat b = a * x0;
      auto x = solve(a, b);
      REQUIRE(x.has_value());
      CHECK(a * *x == b);
    }
    QMat a(2, 2), b(2, 1);
    a.at(0, 0) = 1;
    b.at(1, 0) = 1;  // second equation reads 0 = 1
    CHECK(!solve(a, b).has_value());
  }

  TEST_CASE("pivot columns form a deterministic column-space basis") {
    Rng rng(0x5eed004);
    for (int it = 0; it < 100; ++it) {
      std::size_t r = 1 + rng.below(6), c = 1 + rng.below(6);
      QMat m = random_mat(rng, r, c);
      auto piv = pivot_columns(m);
      CHECK(piv.size() == rank(m));
      QMat basis = column_space_basis(m);
      CHECK(basis.cols() == rank(m));
      CHECK(rank(basis) == basis.cols());
      // adding the rest of the columns must not grow the rank
      CHECK(rank(QMat::hcat(basis, m)) == rank(m));
      CHECK(pivot_columns(m) == piv);  // reproducible
    }
  }

  TEST_CASE("sum and intersection dimensions against stacked eliminations") {
    Rng rng(0x5eed005);
    for (int it = 0; it < 100; ++it) {
      std::size_t n = 2 + rng.below(5);
      QMat a = random_mat(rng, n, 1 + rng.below(4));
      QMat b = random_mat(rng, n, 1 + rng.below(4));
      CHECK(dim_sum_of_column_spaces({a, b}) == rank(QMat::hcat(a, b)));
      QMat a2 = random_mat(rng, 1 + rng.below(4), n);
      QMat b2 = random_mat(rng, 1 + rng.below(4), n);
      CHECK(dim_kernel_intersection({a2, b2}) == n - rank(QMat::vcat(a2, b2)));
    }
  }
  TEST_CASE("sparse triple matrices merge, compare, and round-trip") {
    using Tri = std::vector<std::tuple<std::size_t, std::size_t, Rat>>;
    Tri tri{{1, 0, Rat(2)}, {0, 0, Rat(1)}, {1, 0, Rat(-2)}, {2, 1, Rat(1, 3)}};
    SparseMat s = SparseMat::from_triples(3, 2, tri);
    CHECK(s.nnz() == 2);  // duplicates merged, the cancelled entry dropped
    QMat d(3, 2);
    d.at(0, 0) = 1;
    d.at(2, 1) = Rat(1, 3);
    CHECK(s.to_dense() == d);
    CHECK(SparseMat::from_dense(d) == s);
    CHECK(s.trace() == Rat(1));
    Tri other{{2, 1, Rat(1, 3)}, {0, 0, Rat(1)}};
    CHECK(SparseMat::from_triples(3, 2, other) == s);  // order-insensitive
    CHECK_FALSE(SparseMat::from_triples(3, 2, Tri{}) == s);
  }
}
