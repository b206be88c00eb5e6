#include <btk/linalg.hpp>

#include <algorithm>

namespace btk {

QMat QMat::identity(std::size_t n) {
  QMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

bool QMat::is_zero() const {
  for (const auto& x : a_)
    if (x != 0) return false;
  return true;
}

bool QMat::is_identity() const {
  if (r_ != c_) return false;
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j)
      if (at(i, j) != (i == j ? 1 : 0)) return false;
  return true;
}

namespace {

// lcm of denominators of a whole matrix
Int global_denominator(const QMat& m) {
  Int l = 1;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const Int d = den(m.at(i, j));
      l = boost::multiprecision::lcm(l, d);
    }
  return l;
}

std::vector<Int> to_int_scaled(const QMat& m, const Int& scale) {
  std::vector<Int> v(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const Rat& q = m.at(i, j);
      v[i * m.cols() + j] = num(q) * (scale / den(q));
    }
  return v;
}

}  // namespace

QMat QMat::operator*(const QMat& o) const {
  if (c_ != o.r_) fail("DimensionMismatch", "matrix product shape");
  const Int da = global_denominator(*this), db = global_denominator(o);
  const std::vector<Int> A = to_int_scaled(*this, da), B = to_int_scaled(o, db);
  QMat out(r_, o.c_);
  const Rat inv = Rat(1, da * db);
  std::vector<Int> row(o.c_);
  for (std::size_t i = 0; i < r_; ++i) {
    for (auto& x : row) x = 0;
    for (std::size_t k = 0; k < c_; ++k) {
      const Int& aik = A[i * c_ + k];
      if (aik == 0) continue;
      const Int* brow = &B[k * o.c_];
      for (std::size_t j = 0; j < o.c_; ++j)
        if (brow[j] != 0) row[j] += aik * brow[j];
    }
    for (std::size_t j = 0; j < o.c_; ++j)
      if (row[j] != 0) out.at(i, j) = Rat(row[j]) * inv;
  }
  return out;
}

QMat QMat::operator+(const QMat& o) const {
  if (r_ != o.r_ || c_ != o.c_) fail("DimensionMismatch", "matrix sum shape");
  QMat out(r_, c_);
  for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] + o.a_[i];
  return out;
}

QMat QMat::operator-(const QMat& o) const {
  if (r_ != o.r_ || c_ != o.c_) fail("DimensionMismatch", "matrix difference shape");
  QMat out(r_, c_);
  for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] - o.a_[i];
  return out;
}

QMat QMat::scaled(const Rat& s) const {
  QMat out(r_, c_);
  for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] * s;
  return out;
}

QMat QMat::transpose() const {
  QMat out(c_, r_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j) out.at(j, i) = at(i, j);
  return out;
}

Rat QMat::trace() const {
  if (r_ != c_) fail("DimensionMismatch", "trace of non-square matrix");
  Rat t = 0;
  for (std::size_t i = 0; i < r_; ++i) t += at(i, i);
  return t;
}

QMat QMat::col(std::size_t j) const {
  QMat out(r_, 1);
  for (std::size_t i = 0; i < r_; ++i) out.at(i, 0) = at(i, j);
  return out;
}

QMat QMat::cols_at(const std::vector<std::size_t>& idx) const {
  QMat out(r_, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j)
    for (std::size_t i = 0; i < r_; ++i) out.at(i, j) = at(i, idx[j]);
  return out;
}

QMat QMat::hcat(const QMat& a, const QMat& b) {
  if (a.rows() == 0 && a.cols() == 0) return b;
  if (b.rows() == 0 && b.cols() == 0) return a;
  if (a.rows() != b.rows()) fail("DimensionMismatch", "hcat row count");
  QMat out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
  }
  return out;
}

QMat QMat::vcat(const QMat& a, const QMat& b) {
  if (a.rows() == 0 && a.cols() == 0) return b;
  if (b.rows() == 0 && b.cols() == 0) return a;
  if (a.cols() != b.cols()) fail("DimensionMismatch", "vcat column count");
  QMat out(a.rows() + b.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out.at(a.rows() + i, j) = b.at(i, j);
  return out;
}

namespace {

// scale each row by the lcm of its denominators (rank and pivot columns unchanged)
std::vector<Int> to_int_rows(const QMat& m) {
  std::vector<Int> v(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Int l = 1;
    for (std::size_t j = 0; j < m.cols(); ++j)
      l = boost::multiprecision::lcm(l, den(m.at(i, j)));
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const Rat& q = m.at(i, j);
      v[i * m.cols() + j] = num(q) * (l / den(q));
    }
  }
  return v;
}

/* Bareiss fraction-free elimination with column scanning.  Returns the pivot
 * columns in order; rank = their count.  Divisions are exact (entries after
 * step k are (k+1)x(k+1) minors of the scaled input). */
std::vector<std::size_t> bareiss_pivots(std::vector<Int> m, std::size_t rows, std::size_t cols) {
  std::vector<std::size_t> pivots;
  auto at = [&](std::size_t i, std::size_t j) -> Int& { return m[i * cols + j]; };
  Int prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t sel = rows;
    for (std::size_t i = r; i < rows; ++i)
      if (at(i, c) != 0) { sel = i; break; }
    if (sel == rows) continue;
    if (sel != r)
      for (std::size_t j = c; j < cols; ++j) std::swap(at(sel, j), at(r, j));
    pivots.push_back(c);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j)
        at(i, j) = (at(r, c) * at(i, j) - at(i, c) * at(r, j)) / prev;
      at(i, c) = 0;
    }
    prev = at(r, c);
    ++r;
  }
  return pivots;
}

}  // namespace

std::vector<std::size_t> pivot_columns(const QMat& m) {
  if (m.rows() == 0 || m.cols() == 0) return {};
  return bareiss_pivots(to_int_rows(m), m.rows(), m.cols());
}

std::size_t rank(const QMat& m) { return pivot_columns(m).size(); }

QMat column_space_basis(const QMat& m) { return m.cols_at(pivot_columns(m)); }

namespace {

/* Rational reduced row echelon form in place. Returns pivot columns. */
std::vector<std::size_t> rref(QMat& m) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t sel = m.rows();
    for (std::size_t i = r; i < m.rows(); ++i)
      if (m.at(i, c) != 0) { sel = i; break; }
    if (sel == m.rows()) continue;
    if (sel != r)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m.at(sel, j), m.at(r, j));
    const Rat inv = Rat(1) / m.at(r, c);
    for (std::size_t j = c; j < m.cols(); ++j) m.at(r, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || m.at(i, c) == 0) continue;
      const Rat f = m.at(i, c);
      for (std::size_t j = c; j < m.cols(); ++j) m.at(i, j) -= f * m.at(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace

QMat nullspace(const QMat& m) {
  QMat e = m;
  const std::vector<std::size_t> piv = rref(e);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto c : piv) is_pivot[c] = true;
  std::vector<std::size_t> free_cols;
  for (std::size_t c = 0; c < m.cols(); ++c)
    if (!is_pivot[c]) free_cols.push_back(c);
  QMat basis(m.cols(), free_cols.size());
  for (std::size_t k = 0; k < free_cols.size(); ++k) {
    const std::size_t fc = free_cols[k];
    basis.at(fc, k) = 1;
    for (std::size_t t = 0; t < piv.size(); ++t) basis.at(piv[t], k) = -e.at(t, fc);
  }
  return basis;
}

std::optional<QMat> solve(const QMat& a, const QMat& b) {
  if (a.rows() != b.rows()) fail("DimensionMismatch", "solve shape");
  QMat aug = QMat::hcat(a, b);
  const std::vector<std::size_t> piv = rref(aug);
  // inconsistent iff some pivot lands in the B block
  for (auto c : piv)
    if (c >= a.cols()) return std::nullopt;
  QMat x(a.cols(), b.cols());
  for (std::size_t t = 0; t < piv.size(); ++t)
    for (std::size_t j = 0; j < b.cols(); ++j) x.at(piv[t], j) = aug.at(t, a.cols() + j);
  return x;
}

SparseMat SparseMat::from_triples(std::size_t r, std::size_t c,
                                  std::vector<std::tuple<std::size_t, std::size_t, Rat>> tri) {
  SparseMat m;
  m.rows = r;
  m.cols = c;
  std::sort(tri.begin(), tri.end(), [](const auto& a, const auto& b) {
    return std::make_pair(std::get<0>(a), std::get<1>(a)) <
           std::make_pair(std::get<0>(b), std::get<1>(b));
  });
  for (auto& [i, j, v] : tri) {
    if (i >= r || j >= c) fail("DimensionMismatch", "sparse triple out of range");
    if (!m.entries.empty() && std::get<0>(m.entries.back()) == i &&
        std::get<1>(m.entries.back()) == j) {
      std::get<2>(m.entries.back()) += v;
    } else {
      m.entries.emplace_back(i, j, v);
    }
  }
  std::erase_if(m.entries, [](const auto& t) { return std::get<2>(t) == 0; });
  return m;
}

SparseMat SparseMat::from_dense(const QMat& m) {
  std::vector<std::tuple<std::size_t, std::size_t, Rat>> tri;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m.at(i, j) != 0) tri.emplace_back(i, j, m.at(i, j));
  return from_triples(m.rows(), m.cols(), std::move(tri));
}

QMat SparseMat::to_dense() const {
  QMat m(rows, cols);
  for (const auto& [i, j, v] : entries) m.at(i, j) = v;
  return m;
}

Rat SparseMat::trace() const {
  Rat t = 0;
  for (const auto& [i, j, v] : entries)
    if (i == j) t += v;
  return t;
}

std::size_t dim_sum_of_column_spaces(const std::vector<QMat>& mats) {
  QMat all;
  for (const auto& m : mats) all = QMat::hcat(all, column_space_basis(m));
  if (all.rows() == 0) return 0;
  return rank(all);
}

std::size_t dim_kernel_intersection(const std::vector<QMat>& mats) {
  if (mats.empty()) fail("DimensionMismatch", "kernel intersection of empty list");
  const std::size_t n = mats[0].cols();
  // dim of the intersection of kernels = n - dim of the sum of the row spaces
  QMat all;
  for (const auto& m : mats) {
    if (m.cols() != n) fail("DimensionMismatch", "kernel intersection column count");
    all = QMat::hcat(all, column_space_basis(m.transpose()));
  }
  return n - rank(all);
}

}  // namespace btk
