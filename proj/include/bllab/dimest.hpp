#pragma once

// Box counts, finite-scale dimension estimates and inequality verdicts.

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bllab/cubeset.hpp"
#include "bllab/error.hpp"
#include "bllab/fracgen.hpp"
#include "bllab/rational.hpp"

namespace bllab {

inline double log_integer(const Integer& z) {
  require(z > 0, "logarithm of a non-positive count");
  long e = 0;
  double m = mpz_get_d_2exp(&e, z.get_mpz_t());
  return std::log(m) + static_cast<double>(e) * std::log(2.0);
}

/// 12 significant digits, the precision of every serialized estimate.
inline std::string format_g12(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct CountRow {
  int level = 0;
  Integer count;
  double log_count = 0;
};

struct CountTable {
  int base = 2;
  std::vector<CountRow> rows;

  /// ln N(n) / (n ln b); zero at level 0.
  double slope(std::size_t i) const {
    const auto& r = rows[i];
    if (r.level == 0) return 0;
    return r.log_count / (r.level * std::log(static_cast<double>(base)));
  }

  void add(int level, Integer count) {
    require(count >= 1, "box count must be at least 1 (empty set at level " + std::to_string(level) + ")");
    require(rows.empty() || level > rows.back().level, "count table levels must increase");
    double lc = log_integer(count);
    rows.push_back({level, std::move(count), lc});
  }

  /// N(n') <= b^(d (n' - n)) N(n) between consecutive rows.
  void check_growth(int dim) const {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      Integer bound;
      mpz_ui_pow_ui(bound.get_mpz_t(), static_cast<unsigned long>(base),
                    static_cast<unsigned long>(dim * (rows[i].level - rows[i - 1].level)));
      bound *= rows[i - 1].count;
      require(rows[i].count <= bound, "count table grows faster than b^d per level at level " +
                                          std::to_string(rows[i].level));
    }
  }
};

inline std::vector<int> level_range(int lo, int hi) {
  require(lo <= hi, "empty level range");
  std::vector<int> out;
  for (int n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

inline CountTable box_counts(int base, const std::function<Integer(int)>& counter, const std::vector<int>& levels) {
  CountTable t;
  t.base = base;
  for (int n : levels) t.add(n, counter(n));
  return t;
}

inline CountTable box_counts(const std::function<CubeSet(int)>& sets_by_level, const std::vector<int>& levels) {
  CountTable t;
  bool first = true;
  for (int n : levels) {
    CubeSet s = sets_by_level(n);
    if (first) t.base = s.base();
    require(s.base() == t.base, "inconsistent base across levels");
    require(s.level() == n, "generator returned a set at the wrong level");
    first = false;
    t.add(n, Integer(static_cast<unsigned long>(s.size())));
  }
  return t;
}

/// Closed form when the generator has one, enumeration otherwise.
inline CountTable box_counts(const Generator& g, const std::vector<int>& levels,
                             std::size_t budget = kDefaultCellBudget) {
  CountTable t;
  t.base = g.base();
  for (int n : levels) {
    if (auto c = g.closed_form_count(n))
      t.add(n, *c);
    else
      t.add(n, Integer(static_cast<unsigned long>(g.at(n, budget).size())));
  }
  return t;
}

enum class DimMode { upper_box, lower_box };

/// per_level: ln N(n) / (n ln b).  increment: ln(N(n)/N(n')) / ((n - n') ln b)
/// against the previous table row, which cancels bounded multiplicative
/// distortion of the counts.
enum class SlopeStatistic { per_level, increment };

struct DimEstimate {
  DimMode mode = DimMode::upper_box;
  SlopeStatistic statistic = SlopeStatistic::per_level;
  double value = 0;
  std::pair<int, int> window{0, 0};
  std::vector<std::pair<int, double>> per_level_slope;  // (level, s(level)) inside the window
  double regression_slope = 0;                           // least-squares slope of ln N vs n ln b
};

inline DimEstimate estimate_dim(const CountTable& table, DimMode mode, std::pair<int, int> window,
                                SlopeStatistic statistic = SlopeStatistic::per_level) {
  DimEstimate e;
  e.mode = mode;
  e.statistic = statistic;
  e.window = window;
  const double lnb = std::log(static_cast<double>(table.base));
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r.level < window.first || r.level > window.second) continue;
    xs.push_back(r.level * lnb);
    ys.push_back(r.log_count);
    if (statistic == SlopeStatistic::per_level) {
      if (r.level == 0) continue;
      e.per_level_slope.emplace_back(r.level, table.slope(i));
    } else {
      if (i == 0) continue;
      const auto& prev = table.rows[i - 1];
      e.per_level_slope.emplace_back(r.level, (r.log_count - prev.log_count) / ((r.level - prev.level) * lnb));
    }
  }
  require(!e.per_level_slope.empty(), "empty estimation window [" + std::to_string(window.first) + ", " +
                                          std::to_string(window.second) + "]");
  e.value = e.per_level_slope.front().second;
  for (const auto& [n, s] : e.per_level_slope)
    e.value = mode == DimMode::upper_box ? std::max(e.value, s) : std::min(e.value, s);
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    e.regression_slope = sxx > 0 ? sxy / sxx : 0;
  }
  return e;
}

inline DimEstimate estimate_dim(const CountTable& table, DimMode mode,
                                SlopeStatistic statistic = SlopeStatistic::per_level) {
  require(!table.rows.empty(), "empty count table");
  return estimate_dim(table, mode, {table.rows.front().level, table.rows.back().level}, statistic);
}

struct AssouadEstimate {
  double value = 0;
  int coarse_level = 0;
  int fine_level = 0;
  std::vector<Coord> witness_cell;  // level-m cell with the most descendants
  std::size_t max_descendants = 0;
};

/// max over level-m cells Q of ln #(level-n cells in Q) / ((n - m) ln b)
inline AssouadEstimate assouad_estimate(const CubeSet& x, int m) {
  require(m > 0 && m < x.level(), "assouad coarse level must satisfy 0 < m < level");
  require(!x.empty(), "assouad estimate of an empty set");
  const int n = x.level();
  CubeSet shape(x.base(), m, x.dim());
  const auto div = static_cast<Coord>(checked_pow(static_cast<std::uint64_t>(x.base()), static_cast<std::uint64_t>(n - m)));
  std::map<CellKey, std::size_t> counts;
  std::vector<Coord> c(static_cast<std::size_t>(x.dim()));
  for (CellKey k : x.keys()) {
    x.decode(k, c);
    for (auto& v : c) v /= div;
    ++counts[shape.encode(c)];
  }
  AssouadEstimate a;
  a.coarse_level = m;
  a.fine_level = n;
  CellKey best = counts.begin()->first;
  for (const auto& [key, cnt] : counts)
    if (cnt > a.max_descendants) {
      a.max_descendants = cnt;
      best = key;
    }
  a.witness_cell.resize(static_cast<std::size_t>(x.dim()));
  shape.decode(best, a.witness_cell);
  a.value = std::log(static_cast<double>(a.max_descendants)) / ((n - m) * std::log(static_cast<double>(x.base())));
  return a;
}

enum class VerdictMode { upper_box, packing_as_upper, assouad, lower_box, mixed_lower, nonlinear_upper };

inline const char* to_string(VerdictMode m) {
  switch (m) {
    case VerdictMode::upper_box: return "upper_box";
    case VerdictMode::packing_as_upper: return "packing_as_upper";
    case VerdictMode::assouad: return "assouad";
    case VerdictMode::lower_box: return "lower_box";
    case VerdictMode::mixed_lower: return "mixed_lower";
    case VerdictMode::nonlinear_upper: return "nonlinear_upper";
  }
  return "?";
}

inline constexpr double kExactTolerance = 1e-6;
inline constexpr double kEstimatorTolerance = 0.05;

struct WeightedTerm {
  double weight = 0;
  double estimate = 0;
};

struct Verdict {
  VerdictMode mode = VerdictMode::upper_box;
  double lhs = 0;
  double rhs = 0;
  double slack = 0;
  bool holds = false;
  double tolerance = kExactTolerance;
};

/// rhs = sum c_i estimate_i; holds iff lhs <= rhs + tolerance. An infinite
/// estimate (empty weight polytope) makes the bound vacuous.
inline Verdict verdict(VerdictMode mode, double lhs, const std::vector<WeightedTerm>& terms, double tolerance) {
  require(tolerance >= 0, "verdict tolerance must be non-negative");
  Verdict v;
  v.mode = mode;
  v.lhs = lhs;
  v.tolerance = tolerance;
  v.rhs = 0;
  for (const auto& t : terms) {
    require(t.weight > 0, "verdict weights must be positive");
    v.rhs += t.weight * t.estimate;
  }
  v.slack = v.rhs - v.lhs;
  v.holds = v.lhs <= v.rhs + tolerance;
  return v;
}

inline std::string counts_csv(const CountTable& t) {
  std::string out = "level,count,slope\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out += std::to_string(t.rows[i].level) + "," + t.rows[i].count.get_str() + "," + format_g12(t.slope(i)) + "\n";
  return out;
}

inline std::string verdict_csv_header() { return "mode,lhs,rhs,slack,holds,tolerance\n"; }

inline std::string verdict_csv_row(const Verdict& v) {
  return std::string(to_string(v.mode)) + "," + format_g12(v.lhs) + "," + format_g12(v.rhs) + "," +
         format_g12(v.slack) + "," + (v.holds ? "true" : "false") + "," + format_g12(v.tolerance) + "\n";
}

}  // namespace bllab
