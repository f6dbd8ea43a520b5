#pragma once

// Exact linear algebra over Q: ranks, kernels, canonical subspaces and the
// finite sum/intersection closure used as a test family for the dimension
// condition. No floating point anywhere in this header.

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bllab/error.hpp"
#include "bllab/rational.hpp"

namespace bllab {

class QMatrix {
 public:
  QMatrix() = default;
  QMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {}
  QMatrix(std::size_t rows, std::size_t cols, std::vector<Rational> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    require(entries_.size() == rows_ * cols_, "matrix entry count does not match its shape");
  }
  QMatrix(std::initializer_list<std::initializer_list<Rational>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      require(r.size() == cols_, "ragged matrix literal");
      entries_.insert(entries_.end(), r.begin(), r.end());
    }
  }

  static QMatrix identity(std::size_t n) {
    QMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  static QMatrix from_rows(const std::vector<std::vector<Rational>>& rows, std::size_t cols) {
    QMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i].size() == cols, "row length does not match column count");
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<Rational>& entries() const noexcept { return entries_; }

  Rational& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
  const Rational& operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

  std::vector<Rational> row(std::size_t r) const {
    return {entries_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
            entries_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
  }

  QMatrix transpose() const {
    QMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  /// Rows of `this` followed by rows of `other`.
  QMatrix stacked(const QMatrix& other) const {
    require(cols_ == other.cols_, "cannot stack matrices with different column counts");
    std::vector<Rational> e = entries_;
    e.insert(e.end(), other.entries_.begin(), other.entries_.end());
    return QMatrix(rows_ + other.rows_, cols_, std::move(e));
  }

  friend QMatrix operator*(const QMatrix& a, const QMatrix& b) {
    require(a.cols_ == b.rows_, "matrix product shape mismatch");
    QMatrix p(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const Rational& aik = a(i, k);
        if (aik == 0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) p(i, j) += aik * b(k, j);
      }
    return p;
  }

  friend bool operator==(const QMatrix& a, const QMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> entries_;
};

struct RowEchelon {
  QMatrix reduced;                  // zero rows removed
  std::vector<std::size_t> pivots;  // pivot column of each row, increasing
};

/// Gauss-Jordan elimination to reduced row echelon form.
inline RowEchelon rref(QMatrix m) {
  std::size_t lead_row = 0;
  std::vector<std::size_t> pivots;
  for (std::size_t c = 0; c < m.cols() && lead_row < m.rows(); ++c) {
    std::size_t p = lead_row;
    while (p < m.rows() && m(p, c) == 0) ++p;
    if (p == m.rows()) continue;
    if (p != lead_row)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(lead_row, j));
    Rational inv = 1 / m(lead_row, c);
    for (std::size_t j = c; j < m.cols(); ++j) m(lead_row, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == lead_row || m(i, c) == 0) continue;
      Rational f = m(i, c);
      for (std::size_t j = c; j < m.cols(); ++j) m(i, j) -= f * m(lead_row, j);
    }
    pivots.push_back(c);
    ++lead_row;
  }
  std::vector<Rational> kept(m.entries().begin(),
                             m.entries().begin() + static_cast<std::ptrdiff_t>(lead_row * m.cols()));
  return {QMatrix(lead_row, m.cols(), std::move(kept)), std::move(pivots)};
}

inline std::size_t rank(const QMatrix& m) { return rref(m).pivots.size(); }

/// A linear subspace of Q^d, stored as the RREF of a basis so that equal
/// subspaces have identical representations.
class QSubspace {
 public:
  explicit QSubspace(std::size_t ambient_dim = 1) : ambient_(ambient_dim), basis_(0, ambient_dim) {
    require(ambient_dim >= 1, "ambient dimension must be at least 1");
  }

  /// Span of the rows of `spanning` (dependent rows are fine).
  static QSubspace span(const QMatrix& spanning) {
    QSubspace s(spanning.cols());
    s.basis_ = rref(spanning).reduced;
    return s;
  }

  static QSubspace span(std::size_t ambient_dim, const std::vector<std::vector<Rational>>& vectors) {
    return span(QMatrix::from_rows(vectors, ambient_dim));
  }

  static QSubspace full(std::size_t d) { return span(QMatrix::identity(d)); }

  /// span{e_i : i in axes}
  static QSubspace coordinate(std::size_t d, const std::vector<std::size_t>& axes) {
    QMatrix m(axes.size(), d);
    for (std::size_t r = 0; r < axes.size(); ++r) {
      require(axes[r] < d, "coordinate axis out of range");
      m(r, axes[r]) = 1;
    }
    return span(m);
  }

  std::size_t ambient_dim() const noexcept { return ambient_; }
  std::size_t dim() const noexcept { return basis_.rows(); }
  const QMatrix& basis() const noexcept { return basis_; }
  bool is_zero() const noexcept { return basis_.rows() == 0; }

  friend bool operator==(const QSubspace& a, const QSubspace& b) {
    return a.ambient_ == b.ambient_ && a.basis_ == b.basis_;
  }

  /// Orders by ambient dimension, then dimension, then basis entries.
  friend bool operator<(const QSubspace& a, const QSubspace& b) {
    if (a.ambient_ != b.ambient_) return a.ambient_ < b.ambient_;
    if (a.dim() != b.dim()) return a.dim() < b.dim();
    const auto& x = a.basis_.entries();
    const auto& y = b.basis_.entries();
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] != y[i]) return x[i] < y[i];
    return false;
  }

 private:
  std::size_t ambient_;
  QMatrix basis_;
};

inline QSubspace kernel_basis(const QMatrix& m) {
  RowEchelon e = rref(m);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto p : e.pivots) is_pivot[p] = true;
  std::vector<std::vector<Rational>> vectors;
  for (std::size_t f = 0; f < m.cols(); ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(m.cols());
    v[f] = 1;
    for (std::size_t r = 0; r < e.pivots.size(); ++r) v[e.pivots[r]] = -e.reduced(r, f);
    vectors.push_back(std::move(v));
  }
  return QSubspace::span(m.cols(), vectors);
}

/// {x : <x, v> = 0 for all v in s}
inline QSubspace annihilator(const QSubspace& s) {
  if (s.is_zero()) return QSubspace::full(s.ambient_dim());
  return kernel_basis(s.basis());
}

inline QSubspace subspace_sum(const QSubspace& a, const QSubspace& b) {
  require(a.ambient_dim() == b.ambient_dim(), "subspace sum: ambient dimension mismatch");
  return QSubspace::span(a.basis().stacked(b.basis()));
}

inline QSubspace subspace_intersect(const QSubspace& a, const QSubspace& b) {
  require(a.ambient_dim() == b.ambient_dim(), "subspace intersection: ambient dimension mismatch");
  return annihilator(subspace_sum(annihilator(a), annihilator(b)));
}

/// dim P(V)
inline std::size_t image_dim(const QMatrix& p, const QSubspace& v) {
  require(p.cols() == v.ambient_dim(), "image_dim: map columns do not match subspace ambient dimension");
  if (v.is_zero()) return 0;
  return rank(v.basis() * p.transpose());
}

struct SubspaceFamily {
  std::vector<QSubspace> members;
  bool truncated = false;
};

inline constexpr std::size_t kDefaultLatticeCap = 512;

/// Closure of seeds together with {0} and the full space under sums and
/// intersections. Stops (and sets `truncated`) once `cap` members exist.
inline SubspaceFamily lattice_closure(const std::vector<QSubspace>& seeds,
                                      std::size_t cap = kDefaultLatticeCap) {
  require(!seeds.empty(), "lattice_closure needs at least one seed");
  require(cap >= seeds.size(), "lattice_closure cap is smaller than the seed count");
  const std::size_t d = seeds.front().ambient_dim();
  for (const auto& s : seeds) require(s.ambient_dim() == d, "lattice_closure: seeds have different ambient dimensions");

  SubspaceFamily out;
  std::set<QSubspace> seen;
  std::vector<QSubspace> items;
  auto add = [&](QSubspace s) {
    if (seen.count(s)) return true;
    if (items.size() >= cap) {
      out.truncated = true;
      return false;
    }
    seen.insert(s);
    items.push_back(std::move(s));
    return true;
  };

  bool ok = add(QSubspace(d)) && add(QSubspace::full(d));
  for (const auto& s : seeds) ok = ok && add(s);
  // Every new member is combined with all earlier ones exactly once.
  for (std::size_t k = 1; ok && k < items.size(); ++k) {
    for (std::size_t i = 0; ok && i < k; ++i) {
      QSubspace sum = subspace_sum(items[i], items[k]);
      QSubspace meet = subspace_intersect(items[i], items[k]);
      ok = add(std::move(sum)) && add(std::move(meet));
    }
  }
  std::sort(items.begin(), items.end());
  out.members = std::move(items);
  return out;
}

/// All 2^d coordinate subspaces span{e_i : i in S}.
inline std::vector<QSubspace> coordinate_subspaces(std::size_t d) {
  require(d <= 20, "too many coordinate subspaces");
  std::vector<QSubspace> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < d; ++i)
      if (mask & (std::size_t{1} << i)) axes.push_back(i);
    out.push_back(QSubspace::coordinate(d, axes));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Text form: one row per line, entries as p/q separated by single spaces.
inline std::string format_matrix(const QMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += to_string(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline std::vector<Rational> parse_rational_row(const std::string& line) {
  std::istringstream in(line);
  std::vector<Rational> row;
  std::string tok;
  while (in >> tok) row.push_back(parse_rational(tok));
  return row;
}

inline QMatrix parse_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<Rational>> rows;
  while (std::getline(in, line)) {
    auto row = parse_rational_row(line);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) fail_input("ragged matrix text");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "empty matrix text");
  return QMatrix::from_rows(rows, rows.front().size());
}

}  // namespace bllab
