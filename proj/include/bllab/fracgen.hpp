#pragma once

// Level-indexed fractal generators with exact cell sets and, where one
// exists, a closed-form box count.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bllab/cubeset.hpp"
#include "bllab/error.hpp"
#include "bllab/rational.hpp"

namespace bllab {

inline constexpr std::size_t kDefaultCellBudget = 50'000'000;

namespace detail {

inline std::vector<int> checked_digits(int b, std::vector<int> digits) {
  require(b >= 2, "base must be at least 2");
  require(!digits.empty(), "digit set must be nonempty");
  std::sort(digits.begin(), digits.end());
  digits.erase(std::unique(digits.begin(), digits.end()), digits.end());
  for (int g : digits) require(g >= 0 && g < b, "digit " + std::to_string(g) + " outside [0, base)");
  return digits;
}

inline void check_budget(std::size_t predicted, std::size_t budget, const std::string& what) {
  if (predicted > budget)
    fail_budget(what + " would produce " + std::to_string(predicted) + " cells, budget is " +
                std::to_string(budget));
}

}  // namespace detail

/// Digit strings of length n over one digit set per position (1-D).
inline CubeSet digit_strings(int b, const std::vector<std::vector<int>>& per_level, std::size_t budget) {
  const int n = static_cast<int>(per_level.size());
  CubeSet shape(b, n, 1);
  std::size_t predicted = 1;
  for (const auto& ds : per_level) {
    if (predicted > budget / ds.size() + 1) detail::check_budget(budget + 1, budget, "digit set");
    predicted *= ds.size();
  }
  detail::check_budget(predicted, budget, "digit set");
  std::vector<CellKey> cells{0};
  for (const auto& ds : per_level) {
    std::vector<CellKey> next;
    next.reserve(cells.size() * ds.size());
    for (CellKey c : cells)
      for (int g : ds) next.push_back(c * static_cast<CellKey>(b) + static_cast<CellKey>(g));
    cells = std::move(next);
  }
  return CubeSet::from_keys(b, n, 1, std::move(cells));
}

inline CubeSet cantor_digits(int b, std::vector<int> digits, int n, std::size_t budget = kDefaultCellBudget) {
  digits = detail::checked_digits(b, std::move(digits));
  require(n >= 0, "level must be non-negative");
  return digit_strings(b, std::vector<std::vector<int>>(static_cast<std::size_t>(n), digits), budget);
}

struct DigitSchedule {
  int base = 2;
  std::vector<std::vector<int>> per_level_digits;

  int levels() const { return static_cast<int>(per_level_digits.size()); }

  void validate() const {
    require(base >= 2, "schedule base must be at least 2");
    for (const auto& ds : per_level_digits) detail::checked_digits(base, ds);
  }

  /// prod over the first `level` positions of |digit set|
  Integer count_at(int level) const {
    require(level >= 0 && level <= levels(), "schedule level out of range");
    Integer c = 1;
    for (int j = 0; j < level; ++j) c *= static_cast<unsigned long>(per_level_digits[j].size());
    return c;
  }

  /// Number of positions among the first `level` with the full digit set.
  int full_levels(int level) const {
    int t = 0;
    for (int j = 0; j < level; ++j) t += per_level_digits[j].size() == static_cast<std::size_t>(base);
    return t;
  }

  CubeSet set_at(int level, std::size_t budget = kDefaultCellBudget) const {
    require(level >= 0 && level <= levels(), "schedule level out of range");
    std::vector<std::vector<int>> prefix;
    for (int j = 0; j < level; ++j) prefix.push_back(detail::checked_digits(base, per_level_digits[j]));
    return digit_strings(base, prefix, budget);
  }
};

inline CubeSet schedule_set(const DigitSchedule& s, std::size_t budget = kDefaultCellBudget) {
  s.validate();
  return s.set_at(s.levels(), budget);
}

/// Cumulative block ends K, K+K^2, ... for `num_blocks` blocks.
inline std::vector<int> interleaved_block_ends(int block_growth, int num_blocks) {
  std::vector<int> ends;
  std::int64_t len = 1, total = 0;
  for (int t = 0; t < num_blocks; ++t) {
    len *= block_growth;
    total += len;
    require(total <= 10'000'000, "interleaved schedule is too long");
    ends.push_back(static_cast<int>(total));
  }
  return ends;
}

/// d base-2 schedules over blocks of lengths K, K^2, ...; block t (counting
/// from 1) is full for set ((t-1) mod d) + 1 and the singleton {0} for the rest.
inline std::vector<DigitSchedule> interleaved_family(int d, int block_growth, int num_blocks) {
  require(d >= 2, "interleaved family needs d >= 2");
  require(block_growth >= 2, "interleaved family needs block growth K >= 2");
  require(num_blocks >= d, "interleaved family needs at least d blocks");
  std::vector<DigitSchedule> out(static_cast<std::size_t>(d));
  for (auto& s : out) s.base = 2;
  std::int64_t len = 1;
  for (int t = 1; t <= num_blocks; ++t) {
    len *= block_growth;
    require(len <= 10'000'000, "interleaved schedule is too long");
    const int owner = (t - 1) % d;
    for (int i = 0; i < d; ++i)
      for (std::int64_t l = 0; l < len; ++l)
        out[static_cast<std::size_t>(i)].per_level_digits.push_back(i == owner ? std::vector<int>{0, 1}
                                                                               : std::vector<int>{0});
  }
  return out;
}

/// Cartesian product; dimensions add, counts multiply.
inline CubeSet product(const std::vector<CubeSet>& parts, std::size_t budget = kDefaultCellBudget) {
  require(!parts.empty(), "product of no parts");
  const int b = parts.front().base(), n = parts.front().level();
  int dim = 0;
  std::size_t predicted = 1;
  for (const auto& p : parts) {
    require(p.base() == b && p.level() == n, "product parts must share base and level");
    dim += p.dim();
    if (p.size() != 0 && predicted > budget / p.size()) detail::check_budget(budget + 1, budget, "product");
    predicted *= p.size();
  }
  detail::check_budget(predicted, budget, "product");
  if (parts.size() == 1) return parts.front();
  CubeSet shape(b, n, dim);
  std::vector<CellKey> keys{0};
  for (const auto& p : parts) {
    const auto radix = checked_pow(static_cast<std::uint64_t>(shape.side()), static_cast<std::uint64_t>(p.dim()));
    std::vector<CellKey> next;
    next.reserve(keys.size() * p.size());
    for (CellKey k : keys)
      for (CellKey q : p.keys()) next.push_back(k * radix + q);
    keys = std::move(next);
  }
  return CubeSet::from_keys(b, n, dim, std::move(keys));
}

inline CubeSet full_cube(int b, int n, int d, std::size_t budget = kDefaultCellBudget) {
  std::vector<int> all(static_cast<std::size_t>(b));
  std::iota(all.begin(), all.end(), 0);
  CubeSet axis = cantor_digits(b, all, n, budget);
  return product(std::vector<CubeSet>(static_cast<std::size_t>(d), axis), budget);
}

namespace detail {

inline void check_unit_point(const std::vector<Rational>& x) {
  for (const auto& v : x)
    if (v < 0 || v > 1) fail_input("point coordinate " + to_short_string(v) + " outside [0,1]");
}

/// floor(v * side) with v = 1 mapped to the top cell.
inline Coord containing_cell(const Rational& v, Coord side) {
  Rational s = v * side;
  Integer f;
  mpz_fdiv_q(f.get_mpz_t(), s.get_num_mpz_t(), s.get_den_mpz_t());
  Coord k = f.get_si();
  return std::min<Coord>(std::max<Coord>(k, 0), side - 1);
}

}  // namespace detail

/// Containing cell of each point; coordinate 1 maps to the top cell.
inline CubeSet finite_points(const std::vector<std::vector<Rational>>& points, int b, int n) {
  require(!points.empty(), "finite point set must be nonempty");
  const int d = static_cast<int>(points.front().size());
  CubeSet shape(b, n, d);
  std::vector<CellKey> keys;
  std::vector<Coord> c(static_cast<std::size_t>(d));
  for (const auto& p : points) {
    require(static_cast<int>(p.size()) == d, "points have different dimensions");
    detail::check_unit_point(p);
    for (int j = 0; j < d; ++j) c[j] = detail::containing_cell(p[j], shape.side());
    keys.push_back(shape.encode(c));
  }
  return CubeSet::from_keys(b, n, d, std::move(keys));
}

/// All level-n cells whose closed cube meets the closed segment [p, q].
inline CubeSet segment(const std::vector<Rational>& p, const std::vector<Rational>& q, int b, int n) {
  require(p.size() == q.size() && !p.empty(), "segment endpoints must have the same dimension");
  require(p != q, "segment endpoints coincide");
  detail::check_unit_point(p);
  detail::check_unit_point(q);
  const int d = static_cast<int>(p.size());
  CubeSet shape(b, n, d);
  const Coord side = shape.side();

  // Between consecutive breakpoints no coordinate sits on a grid line, so the
  // containing cell is constant there; sampling breakpoints and midpoints
  // therefore visits every cell the segment meets.
  std::vector<Rational> ts{Rational(0), Rational(1)};
  for (int j = 0; j < d; ++j) {
    Rational delta = q[j] - p[j];
    if (delta == 0) continue;
    Rational lo = std::min(p[j], q[j]) * side, hi = std::max(p[j], q[j]) * side;
    Integer k0, k1;
    mpz_cdiv_q(k0.get_mpz_t(), lo.get_num_mpz_t(), lo.get_den_mpz_t());
    mpz_fdiv_q(k1.get_mpz_t(), hi.get_num_mpz_t(), hi.get_den_mpz_t());
    for (Integer k = k0; k <= k1; ++k) ts.push_back((Rational(k) / side - p[j]) / delta);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<Rational> samples;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    samples.push_back(ts[i]);
    if (i + 1 < ts.size()) samples.push_back((ts[i] + ts[i + 1]) / 2);
  }

  std::vector<CellKey> keys;
  std::vector<std::vector<Coord>> options(static_cast<std::size_t>(d));
  std::vector<Coord> c(static_cast<std::size_t>(d));
  for (const auto& t : samples) {
    for (int j = 0; j < d; ++j) {
      Rational v = (p[j] + t * (q[j] - p[j])) * side;
      options[j].clear();
      if (v.get_den() == 1) {
        Coord k = v.get_num().get_si();
        if (k - 1 >= 0 && k - 1 < side) options[j].push_back(k - 1);
        if (k < side) options[j].push_back(k);
      } else {
        Integer f;
        mpz_fdiv_q(f.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
        options[j].push_back(f.get_si());
      }
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
      for (int j = 0; j < d; ++j) c[j] = options[j][idx[j]];
      keys.push_back(shape.encode(c));
      int j = d - 1;
      while (j >= 0 && ++idx[j] == options[j].size()) idx[j--] = 0;
      if (j < 0) break;
    }
  }
  return CubeSet::from_keys(b, n, d, std::move(keys));
}

/// A generator evaluated level by level.
class Generator {
 public:
  enum class Kind { cantor, schedule, full, finite_points, segment, product };

  static Generator cantor(int b, std::vector<int> digits) {
    Generator g(Kind::cantor, b, 1);
    g.digits_ = detail::checked_digits(b, std::move(digits));
    return g;
  }
  static Generator schedule(DigitSchedule s) {
    s.validate();
    Generator g(Kind::schedule, s.base, 1);
    g.schedule_ = std::move(s);
    return g;
  }
  static Generator full(int b, int d) { return Generator(Kind::full, b, d); }
  static Generator finite_points(int b, std::vector<std::vector<Rational>> points) {
    require(!points.empty(), "finite point set must be nonempty");
    for (const auto& p : points) {
      require(p.size() == points.front().size(), "points have different dimensions");
      detail::check_unit_point(p);
    }
    Generator g(Kind::finite_points, b, static_cast<int>(points.front().size()));
    g.points_ = std::move(points);
    return g;
  }
  static Generator segment(int b, std::vector<Rational> p, std::vector<Rational> q) {
    require(p.size() == q.size() && !p.empty(), "segment endpoints must have the same dimension");
    require(p != q, "segment endpoints coincide");
    detail::check_unit_point(p);
    detail::check_unit_point(q);
    Generator g(Kind::segment, b, static_cast<int>(p.size()));
    g.points_ = {std::move(p), std::move(q)};
    return g;
  }
  static Generator product(std::vector<Generator> parts) {
    require(!parts.empty(), "product of no parts");
    std::vector<Generator> flat;
    for (auto& part : parts) {
      require(part.base() == parts.front().base(), "product parts must share a base");
      if (part.kind_ == Kind::product)
        flat.insert(flat.end(), part.parts_.begin(), part.parts_.end());
      else
        flat.push_back(std::move(part));
    }
    if (flat.size() == 1) return flat.front();
    int d = 0;
    for (const auto& p : flat) d += p.dim();
    Generator g(Kind::product, flat.front().base(), d);
    g.parts_ = std::move(flat);
    return g;
  }

  /// Product of the d interleaved sets, or the single set `component` (0-based).
  static Generator interleaved(int d, int block_growth, int num_blocks, std::optional<int> component = {}) {
    auto family = interleaved_family(d, block_growth, num_blocks);
    if (component) {
      require(*component >= 0 && *component < d, "interleaved component out of range");
      return schedule(family[static_cast<std::size_t>(*component)]);
    }
    std::vector<Generator> parts;
    for (auto& s : family) parts.push_back(schedule(std::move(s)));
    return product(std::move(parts));
  }

  Kind kind() const noexcept { return kind_; }
  int base() const noexcept { return base_; }
  int dim() const noexcept { return dim_; }

  /// Largest level the generator can produce (schedules are finite).
  std::optional<int> max_level() const {
    if (kind_ == Kind::schedule) return schedule_.levels();
    if (kind_ == Kind::product) {
      std::optional<int> m;
      for (const auto& p : parts_)
        if (auto pm = p.max_level()) m = m ? std::min(*m, *pm) : *pm;
      return m;
    }
    return std::nullopt;
  }

  CubeSet at(int level, std::size_t budget = kDefaultCellBudget) const {
    require(level >= 0, "level must be non-negative");
    if (auto m = max_level()) require(level <= *m, "level " + std::to_string(level) + " exceeds schedule length");
    if (auto c = closed_form_count(level)) {
      if (*c > Integer(static_cast<unsigned long>(budget)))
        fail_budget(describe() + " at level " + std::to_string(level) + " has " + c->get_str() +
                    " cells, budget is " + std::to_string(budget));
    }
    switch (kind_) {
      case Kind::cantor: return cantor_digits(base_, digits_, level, budget);
      case Kind::schedule: return schedule_.set_at(level, budget);
      case Kind::full: return full_cube(base_, level, dim_, budget);
      case Kind::finite_points: return bllab::finite_points(points_, base_, level);
      case Kind::segment: return bllab::segment(points_[0], points_[1], base_, level);
      case Kind::product: {
        std::vector<CubeSet> sets;
        for (const auto& p : parts_) sets.push_back(p.at(level, budget));
        return bllab::product(sets, budget);
      }
    }
    fail_input("unknown generator kind");
  }

  std::optional<Integer> closed_form_count(int level) const {
    switch (kind_) {
      case Kind::cantor: {
        Integer c;
        mpz_ui_pow_ui(c.get_mpz_t(), digits_.size(), static_cast<unsigned long>(level));
        return c;
      }
      case Kind::schedule: return schedule_.count_at(level);
      case Kind::full: {
        Integer c;
        mpz_ui_pow_ui(c.get_mpz_t(), static_cast<unsigned long>(base_), static_cast<unsigned long>(level * dim_));
        return c;
      }
      case Kind::product: {
        Integer c = 1;
        for (const auto& p : parts_) {
          auto pc = p.closed_form_count(level);
          if (!pc) return std::nullopt;
          c *= *pc;
        }
        return c;
      }
      case Kind::finite_points:
      case Kind::segment: return std::nullopt;
    }
    return std::nullopt;
  }

  /// One generator per coordinate if this set is a product of 1-D sets.
  std::optional<std::vector<Generator>> axis_factors() const {
    if (dim_ == 1) return std::vector<Generator>{*this};
    if (kind_ == Kind::full) return std::vector<Generator>(static_cast<std::size_t>(dim_), full(base_, 1));
    if (kind_ != Kind::product) return std::nullopt;
    std::vector<Generator> out;
    for (const auto& p : parts_) {
      auto f = p.axis_factors();
      if (!f) return std::nullopt;
      out.insert(out.end(), f->begin(), f->end());
    }
    return out;
  }

  const std::vector<Generator>& parts() const noexcept { return parts_; }
  const DigitSchedule& schedule_data() const noexcept { return schedule_; }

  std::string describe() const {
    switch (kind_) {
      case Kind::cantor: {
        std::string s = "cantor(b=" + std::to_string(base_) + ",{";
        for (std::size_t i = 0; i < digits_.size(); ++i) s += (i ? "," : "") + std::to_string(digits_[i]);
        return s + "})";
      }
      case Kind::schedule: return "schedule(b=" + std::to_string(base_) + ",n=" + std::to_string(schedule_.levels()) + ")";
      case Kind::full: return "full(b=" + std::to_string(base_) + ",d=" + std::to_string(dim_) + ")";
      case Kind::finite_points: return "points(" + std::to_string(points_.size()) + ")";
      case Kind::segment: return "segment(d=" + std::to_string(dim_) + ")";
      case Kind::product: {
        std::string s;
        for (std::size_t i = 0; i < parts_.size(); ++i) s += (i ? " x " : "") + parts_[i].describe();
        return s;
      }
    }
    return "?";
  }

 private:
  Generator(Kind k, int b, int d) : kind_(k), base_(b), dim_(d) {
    require(b >= 2, "base must be at least 2");
    require(d >= 1, "dimension must be at least 1");
  }

  Kind kind_ = Kind::full;
  int base_ = 2;
  int dim_ = 1;
  std::vector<int> digits_;
  DigitSchedule schedule_;
  std::vector<std::vector<Rational>> points_;
  std::vector<Generator> parts_;
};

}  // namespace bllab
