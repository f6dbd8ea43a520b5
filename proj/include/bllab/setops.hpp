#pragma once

// Linear projections of cube sets, constrained products and constrained
// sumsets.
//
// Linear images are normalized into [0,1]^k row by row: with the row scaled to
// integers a, u = (a.x - lo) / (hi - lo) where lo and hi are the sums of the
// negative and positive entries of a, i.e. the extremes of a.x over [0,1]^d.
// A source cell contributes every target cell whose interior meets the
// bounding box of its image; a degenerate box contributes its containing cell.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "bllab/bldatum.hpp"
#include "bllab/cubeset.hpp"
#include "bllab/error.hpp"
#include "bllab/fracgen.hpp"

namespace bllab {

namespace detail {

using Wide = __int128;

/// Integer-scaled rows of a rational map together with their ranges over the
/// unit cube.
struct LinearChart {
  std::vector<std::vector<std::int64_t>> rows;
  std::vector<std::int64_t> lo;
  std::vector<std::int64_t> width;

  static LinearChart of(const QMatrix& m) {
    LinearChart c;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      Integer l = 1;
      for (std::size_t j = 0; j < m.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(r, j).get_den_mpz_t());
      std::vector<std::int64_t> row;
      std::int64_t lo = 0, hi = 0;
      for (std::size_t j = 0; j < m.cols(); ++j) {
        Rational scaled = m(r, j) * l;
        require(scaled.get_num().fits_slong_p() && abs(scaled.get_num()) < (Integer(1) << 40),
                "projection entries are too large for integer cover arithmetic");
        std::int64_t a = scaled.get_num().get_si();
        row.push_back(a);
        (a < 0 ? lo : hi) += a;
      }
      require(hi > lo, "projection has a zero row");
      c.rows.push_back(std::move(row));
      c.lo.push_back(lo);
      c.width.push_back(hi - lo);
    }
    return c;
  }

  std::size_t target_dim() const { return rows.size(); }

  /// Target cell range [first, last] of source cell `c` in row r.
  std::pair<Coord, Coord> cover(std::size_t r, std::span<const Coord> c, Coord side) const {
    Wide ymin = 0, ymax = 0;
    for (std::size_t j = 0; j < rows[r].size(); ++j) {
      const std::int64_t a = rows[r][j];
      ymin += static_cast<Wide>(a) * (c[j] + (a < 0 ? 1 : 0));
      ymax += static_cast<Wide>(a) * (c[j] + (a > 0 ? 1 : 0));
    }
    const Wide shift = static_cast<Wide>(lo[r]) * side, w = width[r];
    const Wide nmin = ymin - shift, nmax = ymax - shift;
    Wide first = nmin / w;  // nmin >= 0
    Wide last = (nmax + w - 1) / w - 1;
    last = std::max(first, last);
    first = std::min<Wide>(first, side - 1);
    last = std::min<Wide>(last, side - 1);
    return {static_cast<Coord>(first), static_cast<Coord>(last)};
  }
};

/// Visit every cell of the box prod_r [lo[r], hi[r]].
template <class F>
void for_each_in_box(const std::vector<Coord>& lo, const std::vector<Coord>& hi, std::vector<Coord>& cur, F&& f) {
  cur = lo;
  for (;;) {
    f(std::span<const Coord>(cur));
    std::size_t r = lo.size();
    while (r > 0 && cur[r - 1] == hi[r - 1]) {
      cur[r - 1] = lo[r - 1];
      --r;
    }
    if (r == 0) return;
    ++cur[r - 1];
  }
}

}  // namespace detail

/// Level-n cover of P(X); coordinate projections drop coordinates exactly.
inline CubeSet project_cubes(const LinearSurjection& p, const CubeSet& x, std::size_t budget = kDefaultCellBudget) {
  require(p.ambient_dim() == static_cast<std::size_t>(x.dim()), "projection ambient dimension " +
                                                                    std::to_string(p.ambient_dim()) +
                                                                    " does not match set dimension " +
                                                                    std::to_string(x.dim()));
  const int k = static_cast<int>(p.target_dim());
  CubeSet shape(x.base(), x.level(), k);
  std::vector<Coord> c(static_cast<std::size_t>(x.dim())), t(static_cast<std::size_t>(k));
  std::vector<CellKey> keys;
  if (auto axes = p.coordinate_axes()) {
    keys.reserve(x.size());
    for (CellKey key : x.keys()) {
      x.decode(key, c);
      for (int r = 0; r < k; ++r) t[r] = c[(*axes)[r]];
      keys.push_back(shape.encode(t));
    }
    return CubeSet::from_keys(x.base(), x.level(), k, std::move(keys));
  }
  const auto chart = detail::LinearChart::of(p.matrix());
  std::vector<Coord> lo(static_cast<std::size_t>(k)), hi(static_cast<std::size_t>(k));
  for (CellKey key : x.keys()) {
    x.decode(key, c);
    for (int r = 0; r < k; ++r) std::tie(lo[r], hi[r]) = chart.cover(r, c, x.side());
    detail::for_each_in_box(lo, hi, t, [&](std::span<const Coord> cell) { keys.push_back(shape.encode(cell)); });
    if (keys.size() > 2 * budget) {
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      if (keys.size() > budget) fail_budget("projected cover exceeds the cell budget of " + std::to_string(budget));
    }
  }
  return CubeSet::from_keys(x.base(), x.level(), k, std::move(keys));
}

namespace detail {

/// One factor of a constrained product: the prescribed set with its tuples
/// reordered by increasing ambient axis and sorted lexicographically in that
/// order, so the continuations of any assigned prefix form a contiguous range.
struct ProductFactor {
  std::vector<std::size_t> axes;  // increasing
  std::size_t width = 0;
  std::vector<Coord> tuples;      // flat, `width` entries per tuple
  std::size_t count() const { return width ? tuples.size() / width : 0; }
  Coord at(std::size_t i, std::size_t depth) const { return tuples[i * width + depth]; }
};

inline std::vector<ProductFactor> product_factors(const std::vector<LinearSurjection>& projections,
                                                  const std::vector<CubeSet>& sets, std::size_t d) {
  require(!projections.empty(), "constrained product needs at least one projection");
  require(projections.size() == sets.size(), "one prescribed set per projection is required");
  std::vector<bool> covered(d, false);
  std::vector<ProductFactor> out;
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const auto& p = projections[i];
    const CubeSet& x = sets[i];
    require(p.ambient_dim() == d, "projections have different ambient dimensions");
    require(x.base() == sets.front().base() && x.level() == sets.front().level(),
            "prescribed sets must share base and level");
    require(static_cast<std::size_t>(x.dim()) == p.target_dim(),
            "prescribed set " + std::to_string(i + 1) + " has dimension " + std::to_string(x.dim()) +
                ", projection has target dimension " + std::to_string(p.target_dim()));
    auto axes = p.coordinate_axes();
    if (!axes)
      fail_domain("projection " + std::to_string(i + 1) +
                  " is not a coordinate projection; use the outer approximation");
    std::vector<std::size_t> order(axes->size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return (*axes)[a] < (*axes)[b]; });
    ProductFactor f;
    f.width = axes->size();
    for (auto o : order) {
      f.axes.push_back((*axes)[o]);
      covered[(*axes)[o]] = true;
    }
    std::vector<Coord> c(f.width);
    std::vector<std::vector<Coord>> rows;
    rows.reserve(x.size());
    for (CellKey key : x.keys()) {
      x.decode(key, c);
      std::vector<Coord> r(f.width);
      for (std::size_t s = 0; s < f.width; ++s) r[s] = c[order[s]];
      rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& r : rows) f.tuples.insert(f.tuples.end(), r.begin(), r.end());
    out.push_back(std::move(f));
  }
  for (std::size_t j = 0; j < d; ++j)
    if (!covered[j]) fail_input("coordinate " + std::to_string(j + 1) + " is not covered by any projection");
  return out;
}

}  // namespace detail

/// Upper bound on the tuples a constrained product search can produce: the
/// first prescribed set times, for every other coordinate, the fewest values
/// that coordinate takes in any prescribed set containing it.
inline Integer constrained_product_bound(const std::vector<LinearSurjection>& projections,
                                         const std::vector<CubeSet>& sets) {
  const std::size_t d = projections.empty() ? 0 : projections.front().ambient_dim();
  auto factors = detail::product_factors(projections, sets, d);
  Integer bound = static_cast<unsigned long>(factors.front().count());
  std::vector<bool> done(d, false);
  for (auto a : factors.front().axes) done[a] = true;
  for (std::size_t j = 0; j < d; ++j) {
    if (done[j]) continue;
    std::size_t best = 0;
    bool any = false;
    for (const auto& f : factors) {
      auto it = std::find(f.axes.begin(), f.axes.end(), j);
      if (it == f.axes.end()) continue;
      std::size_t depth = static_cast<std::size_t>(it - f.axes.begin());
      std::vector<Coord> values;
      for (std::size_t i = 0; i < f.count(); ++i) values.push_back(f.at(i, depth));
      std::sort(values.begin(), values.end());
      std::size_t distinct = static_cast<std::size_t>(std::unique(values.begin(), values.end()) - values.begin());
      if (!any || distinct < best) best = distinct;
      any = true;
    }
    bound *= static_cast<unsigned long>(best);
  }
  return bound;
}

/// Visit, in lexicographic order, every level-n cell z with P_i(z) in X_i for
/// all i (coordinate projections only).
template <class Visitor>
void for_each_constrained(const std::vector<LinearSurjection>& projections, const std::vector<CubeSet>& sets,
                          Visitor&& visit) {
  const std::size_t d = projections.empty() ? 0 : projections.front().ambient_dim();
  const auto factors = detail::product_factors(projections, sets, d);
  // For coordinate j: the factors containing it and j's depth in each.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> owners(d);
  for (std::size_t f = 0; f < factors.size(); ++f)
    for (std::size_t s = 0; s < factors[f].axes.size(); ++s) owners[factors[f].axes[s]].emplace_back(f, s);

  std::vector<std::pair<std::size_t, std::size_t>> range(factors.size());
  for (std::size_t f = 0; f < factors.size(); ++f) range[f] = {0, factors[f].count()};
  std::vector<Coord> cur(d);

  auto narrow = [&](std::size_t f, std::size_t depth, Coord v) {
    const auto& fac = factors[f];
    std::size_t lo = range[f].first, hi = range[f].second;
    std::size_t a = lo, b = hi;
    while (a < b) {
      std::size_t m = (a + b) / 2;
      if (fac.at(m, depth) < v) a = m + 1; else b = m;
    }
    std::size_t first = a;
    b = hi;
    while (a < b) {
      std::size_t m = (a + b) / 2;
      if (fac.at(m, depth) <= v) a = m + 1; else b = m;
    }
    return std::pair<std::size_t, std::size_t>{first, a};
  };

  auto recurse = [&](auto&& self, std::size_t j) -> void {
    if (j == d) {
      visit(std::span<const Coord>(cur));
      return;
    }
    const auto& own = owners[j];
    const auto [f0, depth0] = own.front();
    const auto saved = range;
    std::size_t i = saved[f0].first;
    while (i < saved[f0].second) {
      const Coord v = factors[f0].at(i, depth0);
      auto r0 = narrow(f0, depth0, v);
      bool ok = true;
      range[f0] = r0;
      for (std::size_t o = 1; o < own.size() && ok; ++o) {
        auto r = narrow(own[o].first, own[o].second, v);
        ok = r.first < r.second;
        range[own[o].first] = r;
      }
      if (ok) {
        cur[j] = v;
        self(self, j + 1);
      }
      for (const auto& [f, depth] : own) range[f] = saved[f];
      i = r0.second;
    }
  };
  recurse(recurse, 0);
}

/// The constrained product of prescribed sets under coordinate projections.
inline CubeSet constrained_product(const std::vector<LinearSurjection>& projections, const std::vector<CubeSet>& sets,
                                   std::size_t budget = kDefaultCellBudget) {
  Integer bound = constrained_product_bound(projections, sets);
  if (bound > Integer(static_cast<unsigned long>(budget)))
    fail_budget("constrained product search bound " + bound.get_str() + " exceeds the cell budget of " +
                std::to_string(budget));
  const int d = static_cast<int>(projections.front().ambient_dim());
  CubeSet shape(sets.front().base(), sets.front().level(), d);
  std::vector<CellKey> keys;
  for_each_constrained(projections, sets, [&](std::span<const Coord> z) { keys.push_back(shape.encode(z)); });
  return CubeSet::from_keys(shape.base(), shape.level(), d, std::move(keys));
}

/// Cell count of the constrained product. Complementary coordinate
/// projections give the Cartesian product, whose count is the product of the
/// counts; otherwise the product is enumerated.
inline Integer constrained_product_count(const std::vector<LinearSurjection>& projections,
                                         const std::vector<Integer>& counts,
                                         const std::function<std::vector<CubeSet>()>& materialize,
                                         std::size_t budget = kDefaultCellBudget) {
  require(!projections.empty() && projections.size() == counts.size(), "one count per projection is required");
  const std::size_t d = projections.front().ambient_dim();
  std::vector<int> hits(d, 0);
  bool complementary = true;
  for (const auto& p : projections) {
    auto axes = p.coordinate_axes();
    if (!axes) {
      complementary = false;
      break;
    }
    for (auto a : *axes) ++hits[a];
  }
  for (int h : hits) complementary = complementary && h == 1;
  if (complementary) {
    Integer c = 1;
    for (const auto& n : counts) c *= n;
    return c;
  }
  auto sets = materialize();
  Integer bound = constrained_product_bound(projections, sets);
  if (bound > Integer(static_cast<unsigned long>(budget)))
    fail_budget("constrained product search bound " + bound.get_str() + " exceeds the cell budget of " +
                std::to_string(budget));
  std::size_t n = 0;
  for_each_constrained(projections, sets, [&](std::span<const Coord>) { ++n; });
  return Integer(static_cast<unsigned long>(n));
}

struct OuterProduct {
  CubeSet cells;
  bool outer = true;
};

/// Outer approximation for arbitrary rational projections: a level-n cell is
/// kept if the cover of its image meets X_i for every i.
inline OuterProduct constrained_product_outer(const std::vector<LinearSurjection>& projections,
                                              const std::vector<CubeSet>& sets,
                                              std::size_t budget = kDefaultCellBudget) {
  require(!projections.empty() && projections.size() == sets.size(), "one prescribed set per projection is required");
  const int d = static_cast<int>(projections.front().ambient_dim());
  const int b = sets.front().base(), n = sets.front().level();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    require(projections[i].ambient_dim() == static_cast<std::size_t>(d), "projections have different ambient dimensions");
    require(sets[i].base() == b && sets[i].level() == n, "prescribed sets must share base and level");
    require(static_cast<std::size_t>(sets[i].dim()) == projections[i].target_dim(),
            "prescribed set dimension does not match its projection");
  }
  CubeSet shape(b, n, d);
  std::uint64_t total = checked_pow(static_cast<std::uint64_t>(shape.side()), static_cast<std::uint64_t>(d));
  if (total == 0 || total > budget)
    fail_budget("outer constrained product scans the full grid, which exceeds the cell budget of " +
                std::to_string(budget));
  std::vector<detail::LinearChart> charts;
  for (const auto& p : projections) charts.push_back(detail::LinearChart::of(p.matrix()));

  std::vector<CellKey> keys;
  std::vector<Coord> z(static_cast<std::size_t>(d)), t;
  for (CellKey key = 0; key < total; ++key) {
    shape.decode(key, z);
    bool keep = true;
    for (std::size_t i = 0; i < charts.size() && keep; ++i) {
      const std::size_t k = charts[i].target_dim();
      std::vector<Coord> lo(k), hi(k);
      for (std::size_t r = 0; r < k; ++r) std::tie(lo[r], hi[r]) = charts[i].cover(r, z, shape.side());
      bool meets = false;
      detail::for_each_in_box(lo, hi, t, [&](std::span<const Coord> cell) { meets = meets || sets[i].contains(cell); });
      keep = meets;
    }
    if (keep) keys.push_back(key);
  }
  return {CubeSet::from_keys(b, n, d, std::move(keys)), true};
}

/// Sums z_1 + ... + z_d over the constrained product of copies of X under all
/// C(d,k) coordinate k-plane projections. The cell (k_1..k_d) is mapped to
/// [S, S + d] / (d b^n) with S = sum k_j, i.e. the sum rescaled by 1/d, and
/// covered by level-n cells.
inline CubeSet constrained_sumset(const CubeSet& x, int d, std::size_t budget = kDefaultCellBudget) {
  const int k = x.dim();
  require(d > k && k >= 1, "constrained sumset needs d > k >= 1");
  auto projections = coordinate_plane_projections(static_cast<std::size_t>(d), static_cast<std::size_t>(k));
  std::vector<CubeSet> sets(projections.size(), x);
  Integer bound = constrained_product_bound(projections, sets);
  if (bound > Integer(static_cast<unsigned long>(budget)))
    fail_budget("constrained sumset enumeration bound " + bound.get_str() + " exceeds the cell budget of " +
                std::to_string(budget));
  const Coord side = x.side();
  std::vector<bool> hit(static_cast<std::size_t>(side), false);
  for_each_constrained(projections, sets, [&](std::span<const Coord> z) {
    Coord s = 0;
    for (Coord v : z) s += v;
    const Coord first = s / d;
    const Coord last = std::min<Coord>(s % d == 0 ? first : first + 1, side - 1);
    for (Coord c = first; c <= last; ++c) hit[static_cast<std::size_t>(c)] = true;
  });
  std::vector<CellKey> keys;
  for (Coord c = 0; c < side; ++c)
    if (hit[static_cast<std::size_t>(c)]) keys.push_back(static_cast<CellKey>(c));
  return CubeSet::from_keys(x.base(), x.level(), 1, std::move(keys));
}

}  // namespace bllab
