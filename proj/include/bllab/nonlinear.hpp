#pragma once

// Nonlinear maps on cube sets: the two three-dimensional example families,
// radial projections, sums of coordinates and linear maps, their sampled
// images, Jacobian ranks, and the incidence guard for radial pins.
//
// Domain charts. The rational maps act on z = 1/4 + 3x/4 in [1/4, 1]^3, where
// x in [0,1]^3 is the cube-set coordinate; radial, sum and linear maps act on
// x itself.
//
// Target charts into [0,1]^k:
//   linear          the row normalization of project_cubes
//   example1 T_i    |z| (z without coordinate i) / sqrt(3), in [1/16, 1]^2
//   example2 T_i    the two products, already in [1/16, 1]^2
//   sum             (x_1 + ... + x_d) / d
//   radial, d = 2   u = (theta + pi) / (2 pi), theta = atan2 of x - pin; periodic
//   radial, d = 3   w = (x - pin)/|x - pin|. Chart 0 (w_3 <= 0) projects from
//                   the north pole, s = (w_1, w_2) / (1 - w_3), u = ((s_1 + 1)/4,
//                   (s_2 + 1)/2). Chart 1 (w_3 > 0) projects from the south
//                   pole with s = (w_1, w_2) / (1 + w_3) and adds 1/2 to u_1, so
//                   the two charts occupy disjoint halves of the square.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bllab/bldatum.hpp"
#include "bllab/cubeset.hpp"
#include "bllab/error.hpp"
#include "bllab/exactla.hpp"
#include "bllab/fracgen.hpp"
#include "bllab/setops.hpp"

namespace bllab {

class MapSpec {
 public:
  enum class Kind { linear, example1, example2, radial, sum_coordinates };

  static MapSpec linear(QMatrix m) {
    LinearSurjection p(m);  // validates rank
    MapSpec s(Kind::linear, static_cast<int>(m.cols()), static_cast<int>(m.rows()));
    s.matrix_ = std::move(m);
    return s;
  }
  static MapSpec example1(int component) { return example(Kind::example1, component); }
  static MapSpec example2(int component) { return example(Kind::example2, component); }
  static MapSpec radial(std::vector<Rational> pin) {
    const int d = static_cast<int>(pin.size());
    require(d == 2 || d == 3, "radial projections are supported in dimensions 2 and 3");
    MapSpec s(Kind::radial, d, d - 1);
    s.pin_ = std::move(pin);
    return s;
  }
  static MapSpec sum_coordinates(int d) {
    require(d >= 1, "sum of coordinates needs d >= 1");
    return MapSpec(Kind::sum_coordinates, d, 1);
  }

  Kind kind() const noexcept { return kind_; }
  int domain_dim() const noexcept { return domain_dim_; }
  int target_dim() const noexcept { return target_dim_; }
  int component() const noexcept { return component_; }
  const QMatrix& matrix() const noexcept { return matrix_; }
  const std::vector<Rational>& pin() const noexcept { return pin_; }
  bool periodic() const noexcept { return kind_ == Kind::radial && domain_dim_ == 2; }

  std::string describe() const {
    switch (kind_) {
      case Kind::linear: return "linear(" + std::to_string(target_dim_) + "x" + std::to_string(domain_dim_) + ")";
      case Kind::example1: return "example1_T" + std::to_string(component_);
      case Kind::example2: return "example2_T" + std::to_string(component_);
      case Kind::radial: {
        std::string s = "radial(";
        for (std::size_t i = 0; i < pin_.size(); ++i) s += (i ? "," : "") + to_short_string(pin_[i]);
        return s + ")";
      }
      case Kind::sum_coordinates: return "sum_coordinates(d=" + std::to_string(domain_dim_) + ")";
    }
    return "?";
  }

  /// The map itself on its natural domain (radial maps land on the sphere in R^d).
  std::vector<double> raw(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == domain_dim_, "point has the wrong dimension for " + describe());
    switch (kind_) {
      case Kind::linear: {
        std::vector<double> y(matrix_.rows(), 0.0);
        for (std::size_t r = 0; r < matrix_.rows(); ++r)
          for (std::size_t j = 0; j < matrix_.cols(); ++j) y[r] += to_double(matrix_(r, j)) * x[j];
        return y;
      }
      case Kind::example1: {
        for (double v : x)
          if (!(v > 0)) fail_domain(describe() + " is defined on the open positive octant");
        const double norm = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        std::vector<double> y;
        for (int j = 0; j < 3; ++j)
          if (j != component_ - 1) y.push_back(norm * x[j]);
        return y;
      }
      case Kind::example2: {
        for (double v : x)
          if (!(v > 0)) fail_domain(describe() + " is defined on the open positive octant");
        const double a = x[0], b = x[1], c = x[2];
        if (component_ == 1) return {a * b, a * c};
        if (component_ == 2) return {a * b, b * c};
        return {a * c, b * c};
      }
      case Kind::radial: {
        std::vector<double> w(x.begin(), x.end());
        double norm = 0;
        for (std::size_t j = 0; j < w.size(); ++j) {
          w[j] -= to_double(pin_[j]);
          norm += w[j] * w[j];
        }
        norm = std::sqrt(norm);
        if (!(norm > 0)) fail_domain(describe() + " evaluated at its pin");
        for (auto& v : w) v /= norm;
        return w;
      }
      case Kind::sum_coordinates: {
        double s = 0;
        for (double v : x) s += v;
        return {s};
      }
    }
    return {};
  }

 private:
  MapSpec(Kind k, int domain, int target) : kind_(k), domain_dim_(domain), target_dim_(target) {}
  static MapSpec example(Kind k, int component) {
    require(component >= 1 && component <= 3, "example map component must be 1, 2 or 3");
    MapSpec s(k, 3, 2);
    s.component_ = component;
    return s;
  }

  Kind kind_;
  int domain_dim_;
  int target_dim_;
  int component_ = 0;
  QMatrix matrix_;
  std::vector<Rational> pin_;
};

/// A map value in its target chart; `chart` separates the stereographic pair.
struct ChartPoint {
  std::vector<double> u;
  int chart = 0;
};

namespace detail {

inline std::vector<double> example_domain(std::span<const double> x) {
  std::vector<double> z(x.begin(), x.end());
  for (auto& v : z) v = 0.25 + 0.75 * v;
  return z;
}

}  // namespace detail

/// Evaluate a map at cube coordinates x in [0,1]^d and return chart coordinates.
inline ChartPoint chart_value(const MapSpec& t, std::span<const double> x) {
  ChartPoint out;
  switch (t.kind()) {
    case MapSpec::Kind::linear: {
      // same normalization as the exact cover
      auto chart = detail::LinearChart::of(t.matrix());
      for (std::size_t r = 0; r < chart.target_dim(); ++r) {
        double y = 0;
        for (std::size_t j = 0; j < x.size(); ++j) y += static_cast<double>(chart.rows[r][j]) * x[j];
        out.u.push_back((y - static_cast<double>(chart.lo[r])) / static_cast<double>(chart.width[r]));
      }
      return out;
    }
    case MapSpec::Kind::example1: {
      out.u = t.raw(detail::example_domain(x));
      for (auto& v : out.u) v /= std::sqrt(3.0);
      return out;
    }
    case MapSpec::Kind::example2: out.u = t.raw(detail::example_domain(x)); return out;
    case MapSpec::Kind::sum_coordinates: out.u = {t.raw(x)[0] / static_cast<double>(t.domain_dim())}; return out;
    case MapSpec::Kind::radial: {
      auto w = t.raw(x);
      if (t.domain_dim() == 2) {
        out.u = {(std::atan2(w[1], w[0]) + M_PI) / (2 * M_PI)};
        return out;
      }
      if (w[2] <= 0) {
        const double s1 = w[0] / (1 - w[2]), s2 = w[1] / (1 - w[2]);
        out.u = {(s1 + 1) / 4, (s2 + 1) / 2};
        out.chart = 0;
      } else {
        const double s1 = w[0] / (1 + w[2]), s2 = w[1] / (1 + w[2]);
        out.u = {(s1 + 1) / 4 + 0.5, (s2 + 1) / 2};
        out.chart = 1;
      }
      return out;
    }
  }
  return out;
}

struct ImageOptions {
  int pad_cells = 0;
  double lipschitz_safety = 2.0;
  std::size_t lipschitz_samples = 4096;
};

struct NonlinearImage {
  CubeSet cells;
  double lipschitz_estimate = 0;  // target cells moved per source cell step
  int radius = 0;                 // cells marked around each image point
};

namespace detail {

inline std::string cell_name(std::span<const Coord> c) {
  std::string s = "(";
  for (std::size_t j = 0; j < c.size(); ++j) s += (j ? "," : "") + std::to_string(c[j]);
  return s + ")";
}

/// Radial maps are undefined at the pin: refuse any closed cell containing it.
inline void check_map_domain(const MapSpec& t, const CubeSet& x) {
  if (t.kind() != MapSpec::Kind::radial) return;
  const auto& pin = t.pin();
  std::vector<Coord> c(static_cast<std::size_t>(x.dim()));
  for (CellKey k : x.keys()) {
    x.decode(k, c);
    bool inside = true;
    for (std::size_t j = 0; j < c.size() && inside; ++j) {
      Rational s = pin[j] * static_cast<long>(x.side());
      inside = s >= c[j] && s <= c[j] + 1;
    }
    if (inside)
      fail_domain("cell " + cell_name(c) + " at level " + std::to_string(x.level()) + " contains the pin of " +
                  t.describe());
  }
}

inline std::vector<double> center(std::span<const Coord> c, Coord side, std::span<const int> offset = {}) {
  std::vector<double> x(c.size());
  for (std::size_t j = 0; j < c.size(); ++j)
    x[j] = (static_cast<double>(c[j] + (offset.empty() ? 0 : offset[j])) + 0.5) / static_cast<double>(side);
  return x;
}

}  // namespace detail

/// Largest observed || T(x') - T(x) ||_inf / || x' - x ||_inf over neighbouring
/// cell centers of a strided sample of cells. Pairs in different charts are
/// skipped; periodic charts use the wrapped difference.
inline double lipschitz_estimate(const MapSpec& t, const CubeSet& x, std::size_t samples = 4096) {
  require(t.domain_dim() == x.dim(), "map domain dimension does not match the set");
  if (x.empty()) return 0;
  const int d = x.dim();
  const std::size_t stride = std::max<std::size_t>(1, x.size() / std::max<std::size_t>(1, samples));
  std::vector<Coord> c(static_cast<std::size_t>(d));
  std::vector<int> off(static_cast<std::size_t>(d));
  int neighbours = 1;
  for (int j = 0; j < d; ++j) neighbours *= 3;
  double best = 0;
  for (std::size_t i = 0; i < x.size(); i += stride) {
    x.decode(x.keys()[i], c);
    ChartPoint base = chart_value(t, detail::center(c, x.side()));
    for (int code = 0; code < neighbours; ++code) {
      int rest = code;
      bool zero = true;
      for (int j = 0; j < d; ++j) {
        off[j] = rest % 3 - 1;
        rest /= 3;
        zero = zero && off[j] == 0;
      }
      if (zero) continue;
      ChartPoint other;
      try {
        other = chart_value(t, detail::center(c, x.side(), off));
      } catch (const Error&) {
        continue;  // neighbour centre outside the map's domain
      }
      if (other.chart != base.chart) continue;
      double diff = 0;
      for (std::size_t r = 0; r < base.u.size(); ++r) {
        double du = std::abs(other.u[r] - base.u[r]);
        if (t.periodic()) du = std::min(du, 1 - du);
        diff = std::max(diff, du);
      }
      best = std::max(best, diff * static_cast<double>(x.side()));
    }
  }
  return best;
}

/// Mark the target cell containing T(center) for every cell of X, dilated by
/// pad_cells + ceil(lipschitz_safety * L) cells.
inline NonlinearImage nonlinear_image(const MapSpec& t, const CubeSet& x, const ImageOptions& opts = {},
                                      std::size_t budget = kDefaultCellBudget) {
  require(t.domain_dim() == x.dim(), "map " + t.describe() + " expects dimension " + std::to_string(t.domain_dim()) +
                                         ", set has dimension " + std::to_string(x.dim()));
  require(opts.pad_cells >= 0, "pad_cells must be non-negative");
  require(opts.lipschitz_safety >= 1, "lipschitz_safety must be at least 1");
  detail::check_map_domain(t, x);

  NonlinearImage out;
  out.lipschitz_estimate = lipschitz_estimate(t, x, opts.lipschitz_samples);
  out.radius = opts.pad_cells + static_cast<int>(std::ceil(opts.lipschitz_safety * out.lipschitz_estimate - 1e-9));
  const int k = t.target_dim();
  CubeSet shape(x.base(), x.level(), k);
  const Coord side = shape.side();
  double box = 1;
  for (int r = 0; r < k; ++r) box *= 2.0 * out.radius + 1;
  if (box * static_cast<double>(x.size()) > 4.0 * static_cast<double>(budget))
    fail_budget("nonlinear image marking would touch " + std::to_string(box * static_cast<double>(x.size())) +
                " cells, budget is " + std::to_string(budget));

  std::vector<Coord> c(static_cast<std::size_t>(x.dim())), lo(static_cast<std::size_t>(k)),
      hi(static_cast<std::size_t>(k)), cur;
  std::vector<CellKey> keys;
  for (CellKey key : x.keys()) {
    x.decode(key, c);
    ChartPoint p = chart_value(t, detail::center(c, side));
    for (int r = 0; r < k; ++r) {
      Coord cell = static_cast<Coord>(std::floor(p.u[r] * static_cast<double>(side)));
      cell = std::clamp<Coord>(cell, 0, side - 1);
      lo[r] = cell - out.radius;
      hi[r] = cell + out.radius;
    }
    detail::for_each_in_box(lo, hi, cur, [&](std::span<const Coord> q) {
      std::vector<Coord> cell(q.begin(), q.end());
      for (int r = 0; r < k; ++r) {
        if (t.periodic())
          cell[r] = ((cell[r] % side) + side) % side;
        else if (cell[r] < 0 || cell[r] >= side)
          return;
      }
      keys.push_back(shape.encode(cell));
    });
    if (keys.size() > 2 * budget) {
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      if (keys.size() > budget) fail_budget("nonlinear image exceeds the cell budget of " + std::to_string(budget));
    }
  }
  out.cells = CubeSet::from_keys(x.base(), x.level(), k, std::move(keys));
  return out;
}

/// Singular values of the central-difference Jacobian of the raw map at x.
inline std::vector<double> jacobian_singular_values(const MapSpec& t, const std::vector<double>& x, double h) {
  require(h > 0, "finite-difference step must be positive");
  require(static_cast<int>(x.size()) == t.domain_dim(), "point has the wrong dimension for " + t.describe());
  const auto y0 = t.raw(x);
  Eigen::MatrixXd j(static_cast<Eigen::Index>(y0.size()), static_cast<Eigen::Index>(x.size()));
  for (std::size_t c = 0; c < x.size(); ++c) {
    auto xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const auto yp = t.raw(xp), ym = t.raw(xm);
    for (std::size_t r = 0; r < y0.size(); ++r)
      j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (yp[r] - ym[r]) / (2 * h);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

/// Numerical rank: singular values above tol. Radial maps are differentiated
/// as maps into R^d, so their rank is d - 1.
inline int jacobian_rank(const MapSpec& t, const std::vector<double>& x, double h = 1e-5, double tol = 1e-6) {
  int r = 0;
  for (double s : jacobian_singular_values(t, x, h)) r += s > tol;
  return r;
}

// Radial pin incidence guard.

/// General position for d pins in R^d: affinely independent.
inline bool pins_in_general_position(const std::vector<std::vector<Rational>>& pins) {
  require(!pins.empty(), "no pins given");
  const std::size_t d = pins.front().size();
  for (const auto& p : pins) require(p.size() == d, "pins have different dimensions");
  if (pins.size() < 2) return true;
  QMatrix diffs(pins.size() - 1, d);
  for (std::size_t i = 1; i < pins.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) diffs(i - 1, j) = pins[i][j] - pins[0][j];
  return rank(diffs) == pins.size() - 1;
}

struct GuardReport {
  bool ok = true;
  std::string violation;                // names the flat and the first meeting cell
  std::vector<std::size_t> flat_pins;   // 0-based pins spanning the violated flat
  std::vector<Coord> cell;
};

namespace detail {

/// Does the closed cell [c, c+1]/side meet the affine flat through `pts`?
/// Points, lines and hyperplanes in dimension <= 3 are decided exactly.
inline bool cell_meets_flat(std::span<const Coord> c, Coord side, const std::vector<std::vector<Rational>>& pts) {
  const std::size_t d = c.size();
  auto lo = [&](std::size_t j) -> Rational { return Rational(c[j]) / side; };
  auto hi = [&](std::size_t j) -> Rational { return Rational(c[j] + 1) / side; };
  QMatrix dirs(pts.size() > 1 ? pts.size() - 1 : 1, d);
  for (std::size_t i = 1; i < pts.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) dirs(i - 1, j) = pts[i][j] - pts[0][j];
  const std::size_t dim = pts.size() > 1 ? rank(dirs) : 0;
  const auto& p = pts[0];
  if (dim == 0) {
    for (std::size_t j = 0; j < d; ++j)
      if (p[j] < lo(j) || p[j] > hi(j)) return false;
    return true;
  }
  if (dim == d - 1) {
    // hyperplane n.(y - p) = 0; the cell meets it iff corner signs are not all strict and equal
    QSubspace normal = annihilator(QSubspace::span(dirs));
    const QMatrix& nb = normal.basis();
    bool pos = false, neg = false;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      Rational v;
      for (std::size_t j = 0; j < d; ++j) v += nb(0, j) * (((mask >> j) & 1 ? hi(j) : lo(j)) - p[j]);
      if (v >= 0) pos = true;
      if (v <= 0) neg = true;
    }
    return pos && neg;
  }
  if (dim == 1) {
    // line p + t v: intersect the slabs lo_j <= p_j + t v_j <= hi_j
    std::vector<Rational> v(d);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      bool nonzero = false;
      for (std::size_t j = 0; j < d; ++j) nonzero = nonzero || pts[i][j] != p[j];
      if (nonzero) {
        for (std::size_t j = 0; j < d; ++j) v[j] = pts[i][j] - p[j];
        break;
      }
    }
    std::optional<Rational> tmin, tmax;
    for (std::size_t j = 0; j < d; ++j) {
      if (v[j] == 0) {
        if (p[j] < lo(j) || p[j] > hi(j)) return false;
        continue;
      }
      Rational a = (lo(j) - p[j]) / v[j], b = (hi(j) - p[j]) / v[j];
      if (a > b) std::swap(a, b);
      if (!tmin || a > *tmin) tmin = a;
      if (!tmax || b < *tmax) tmax = b;
    }
    return !tmin || *tmin <= *tmax;
  }
  fail_input("flat incidence is only decided for points, lines and hyperplanes");
}

}  // namespace detail

/// Checks that X meets no pin and no affine flat spanned by 2..d pins.
inline GuardReport radial_domain_guard(const CubeSet& x, const std::vector<std::vector<Rational>>& pins) {
  const std::size_t d = static_cast<std::size_t>(x.dim());
  require(d == 2 || d == 3, "the radial guard supports dimensions 2 and 3");
  require(pins.size() == d, "a radial experiment in dimension " + std::to_string(d) + " needs " +
                                std::to_string(d) + " pins, got " + std::to_string(pins.size()));
  for (const auto& p : pins) require(p.size() == d, "pin has the wrong dimension");
  GuardReport rep;
  std::vector<Coord> c(d);
  for (std::size_t mask = 1; mask < (std::size_t{1} << d); ++mask) {
    std::vector<std::vector<Rational>> pts;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < d; ++i)
      if ((mask >> i) & 1) {
        pts.push_back(pins[i]);
        ids.push_back(i);
      }
    for (CellKey k : x.keys()) {
      x.decode(k, c);
      if (!detail::cell_meets_flat(c, x.side(), pts)) continue;
      rep.ok = false;
      rep.flat_pins = ids;
      rep.cell = c;
      std::string names;
      for (auto i : ids) names += (names.empty() ? "" : ",") + std::to_string(i + 1);
      const char* what = ids.size() == 1 ? "pin" : ids.size() == 2 ? "line through pins" : "plane through pins";
      rep.violation = std::string(what) + " " + names + " meets cell " + detail::cell_name(c) + " at level " +
                      std::to_string(x.level());
      return rep;
    }
  }
  return rep;
}

}  // namespace bllab
