#ifndef BTK_LINALG_HPP
#define BTK_LINALG_HPP

/* Dense exact linear algebra over Q.
 *
 * Ranks and pivot columns run fraction-free (Bareiss) over big integers after
 * clearing denominators row-wise; pivot selection is deterministic (leftmost
 * column, then topmost row), so chosen bases are reproducible. Solving and
 * nullspaces use rational Gauss-Jordan. Matrix products clear denominators to
 * a global scale so the inner loops stay in integer arithmetic. */

#include <btk/numbers.hpp>

#include <cstddef>
#include <optional>
#include <tuple>
#include <vector>

namespace btk {

class QMat {
  std::size_t r_ = 0, c_ = 0;
  std::vector<Rat> a_;

 public:
  QMat() = default;
  QMat(std::size_t r, std::size_t c) : r_(r), c_(c), a_(r * c) {}

  static QMat identity(std::size_t n);
  static QMat zero(std::size_t r, std::size_t c) { return QMat(r, c); }

  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }
  Rat& at(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
  const Rat& at(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }

  bool operator==(const QMat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }
  bool is_zero() const;
  bool is_identity() const;

  QMat operator*(const QMat& o) const;
  QMat operator+(const QMat& o) const;
  QMat operator-(const QMat& o) const;
  QMat scaled(const Rat& s) const;
  QMat transpose() const;
  Rat trace() const;

  QMat col(std::size_t j) const;
  QMat cols_at(const std::vector<std::size_t>& idx) const;
  static QMat hcat(const QMat& a, const QMat& b);
  static QMat vcat(const QMat& a, const QMat& b);
};

/* Coordinate-list sparse matrix: sorted (row, col, value) triples, no zeros,
 * no duplicate positions.  Used for module operators whose dense form would
 * waste quadratic space (permutation-module idempotents). */
struct SparseMat {
  std::size_t rows = 0, cols = 0;
  std::vector<std::tuple<std::size_t, std::size_t, Rat>> entries;

  // sorts, merges duplicate positions, drops zeros
  static SparseMat from_triples(std::size_t r, std::size_t c,
                                std::vector<std::tuple<std::size_t, std::size_t, Rat>> tri);
  static SparseMat from_dense(const QMat& m);
  QMat to_dense() const;
  Rat trace() const;
  std::size_t nnz() const { return entries.size(); }
  bool operator==(const SparseMat& o) const {
    return rows == o.rows && cols == o.cols && entries == o.entries;
  }
};

std::size_t rank(const QMat& m);
std::vector<std::size_t> pivot_columns(const QMat& m);

// columns of m at its pivot indices: deterministic basis of the column space
QMat column_space_basis(const QMat& m);

// basis of {x : m x = 0} as columns (possibly 0 columns)
QMat nullspace(const QMat& m);

// exact solution X of A X = B, or nullopt if inconsistent; free variables set to 0
std::optional<QMat> solve(const QMat& a, const QMat& b);

// dimension of the sum of the column spaces of the given matrices
std::size_t dim_sum_of_column_spaces(const std::vector<QMat>& mats);

// dimension of the intersection of the kernels of the given matrices
std::size_t dim_kernel_intersection(const std::vector<QMat>& mats);

}  // namespace btk

#endif
