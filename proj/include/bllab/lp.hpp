#pragma once

// Two-phase dense tableau simplex over Q with Bland's rule. Problems here have
// a handful of variables, so clarity wins over sparse factorizations.

#include <cstddef>
#include <optional>
#include <vector>

#include "bllab/error.hpp"
#include "bllab/rational.hpp"

namespace bllab {

enum class Relation { equal, greater_equal, less_equal };

struct LpRow {
  std::vector<Rational> coeffs;
  Relation rel = Relation::greater_equal;
  Rational rhs;
};

/// minimize objective . x  subject to rows, x >= 0
struct LinearProgram {
  std::size_t num_vars = 0;
  std::vector<Rational> objective;
  std::vector<LpRow> rows;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<Rational> x;
  Rational objective;
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), t_((m + 1) * (n + 1)), basis_(m) {}

  Rational& at(std::size_t i, std::size_t j) { return t_[i * (n_ + 1) + j]; }
  const Rational& at(std::size_t i, std::size_t j) const { return t_[i * (n_ + 1) + j]; }
  Rational& rhs(std::size_t i) { return at(i, n_); }
  Rational& cost(std::size_t j) { return at(m_, j); }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    Rational inv = 1 / at(r, c);
    for (std::size_t j = 0; j <= n_; ++j) at(r, j) *= inv;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r || at(i, c) == 0) continue;
      Rational f = at(i, c);
      for (std::size_t j = 0; j <= n_; ++j)
        if (at(r, j) != 0) at(i, j) -= f * at(r, j);
    }
    basis_[r] = c;
  }

  /// Loads reduced costs for `c` w.r.t. the current basis.
  void price(const std::vector<Rational>& c) {
    for (std::size_t j = 0; j <= n_; ++j) cost(j) = j < n_ ? c[j] : Rational(0);
    for (std::size_t i = 0; i < m_; ++i) {
      const Rational& cb = c[basis_[i]];
      if (cb == 0) continue;
      for (std::size_t j = 0; j <= n_; ++j) cost(j) -= cb * at(i, j);
    }
  }

  /// Bland's rule: lowest-index improving column, lowest-index leaving basic
  /// variable among ratio-test ties. Returns false if unbounded.
  bool optimize(const std::vector<bool>& allowed, std::size_t& pivots) {
    for (;;) {
      std::optional<std::size_t> enter;
      for (std::size_t j = 0; j < n_; ++j)
        if (allowed[j] && cost(j) < 0) {
          enter = j;
          break;
        }
      if (!enter) return true;
      std::optional<std::size_t> leave;
      Rational best;
      for (std::size_t i = 0; i < m_; ++i) {
        if (at(i, *enter) <= 0) continue;
        Rational ratio = at(i, n_) / at(i, *enter);
        if (!leave || ratio < best || (ratio == best && basis_[i] < basis_[*leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (!leave) return false;
      pivot(*leave, *enter);
      ++pivots;
    }
  }

  void drop_row(std::size_t r) {
    std::vector<Rational> t;
    t.reserve(m_ * (n_ + 1));
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      for (std::size_t j = 0; j <= n_; ++j) t.push_back(at(i, j));
    }
    t_ = std::move(t);
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --m_;
  }

 private:
  std::size_t m_, n_;
  std::vector<Rational> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

inline LpResult solve_lp(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars;
  require(lp.objective.size() == n, "objective length does not match variable count");
  for (const auto& r : lp.rows) require(r.coeffs.size() == n, "constraint length does not match variable count");

  std::size_t slacks = 0;
  for (const auto& r : lp.rows) slacks += r.rel != Relation::equal;
  const std::size_t m = lp.rows.size();
  const std::size_t art0 = n + slacks;
  const std::size_t cols = art0 + m;

  detail::Tableau tab(m, cols);
  std::size_t s = n;
  for (std::size_t i = 0; i < m; ++i) {
    const LpRow& row = lp.rows[i];
    Rational sign = row.rhs < 0 ? -1 : 1;
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * row.coeffs[j];
    if (row.rel != Relation::equal) {
      tab.at(i, s) = sign * (row.rel == Relation::less_equal ? 1 : -1);
      ++s;
    }
    tab.at(i, art0 + i) = 1;
    tab.rhs(i) = sign * row.rhs;
    tab.basis()[i] = art0 + i;
  }

  LpResult result;
  std::vector<Rational> phase1(cols);
  for (std::size_t j = art0; j < cols; ++j) phase1[j] = 1;
  std::vector<bool> allowed(cols, true);
  tab.price(phase1);
  tab.optimize(allowed, result.pivots);
  if (-tab.cost(cols) > 0) {
    result.status = LpStatus::infeasible;
    return result;
  }

  // Pivot zero-valued artificials out of the basis; rows where that is
  // impossible are redundant.
  for (std::size_t i = 0; i < tab.rows();) {
    if (tab.basis()[i] < art0) {
      ++i;
      continue;
    }
    std::optional<std::size_t> col;
    for (std::size_t j = 0; j < art0; ++j)
      if (tab.at(i, j) != 0) {
        col = j;
        break;
      }
    if (col) {
      tab.pivot(i, *col);
      ++result.pivots;
      ++i;
    } else {
      tab.drop_row(i);
    }
  }

  std::vector<Rational> phase2(cols);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = lp.objective[j];
  for (std::size_t j = art0; j < cols; ++j) allowed[j] = false;
  tab.price(phase2);
  if (!tab.optimize(allowed, result.pivots)) {
    result.status = LpStatus::unbounded;
    return result;
  }

  result.status = LpStatus::optimal;
  result.x.assign(n, Rational(0));
  for (std::size_t i = 0; i < tab.rows(); ++i)
    if (tab.basis()[i] < n) result.x[tab.basis()[i]] = tab.rhs(i);
  result.objective = 0;
  for (std::size_t j = 0; j < n; ++j) result.objective += lp.objective[j] * result.x[j];
  return result;
}

}  // namespace bllab
