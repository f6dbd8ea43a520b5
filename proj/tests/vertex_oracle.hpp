#pragma once

// Brute-force LP oracle: every vertex of {x >= 0, rows} is the unique solution
// of some n linearly independent tight constraints, so the minimum over all
// feasible n-subset solutions is the LP optimum (for bounded problems).
// Deliberately shares no code with the simplex: its own elimination, its own
// feasibility test.

#include <optional>
#include <vector>

#include "bllab/lp.hpp"

namespace bllab::oracle {

struct OracleResult {
  bool feasible = false;
  Rational objective;
  std::size_t vertices = 0;
};

inline std::optional<std::vector<Rational>> solve_square(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      Rational f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  std::vector<Rational> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

inline OracleResult enumerate_vertices(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars;
  // hyperplanes: every row, then x_j = 0
  std::vector<std::vector<Rational>> planes;
  std::vector<Rational> rhs;
  for (const auto& r : lp.rows) {
    planes.push_back(r.coeffs);
    rhs.push_back(r.rhs);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Rational> e(n);
    e[j] = 1;
    planes.push_back(e);
    rhs.push_back(0);
  }
  auto feasible = [&](const std::vector<Rational>& x) {
    for (const auto& v : x)
      if (v < 0) return false;
    for (const auto& r : lp.rows) {
      Rational s;
      for (std::size_t j = 0; j < n; ++j) s += r.coeffs[j] * x[j];
      if (r.rel == Relation::equal && s != r.rhs) return false;
      if (r.rel == Relation::greater_equal && s < r.rhs) return false;
      if (r.rel == Relation::less_equal && s > r.rhs) return false;
    }
    return true;
  };

  OracleResult out;
  const std::size_t total = planes.size();
  if (total < n) return out;
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  for (;;) {
    std::vector<std::vector<Rational>> a;
    std::vector<Rational> b;
    for (auto i : pick) {
      a.push_back(planes[i]);
      b.push_back(rhs[i]);
    }
    if (auto x = solve_square(a, b); x && feasible(*x)) {
      Rational obj;
      for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * (*x)[j];
      if (!out.feasible || obj < out.objective) out.objective = obj;
      out.feasible = true;
      ++out.vertices;
    }
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == total - n + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

}  // namespace bllab::oracle
