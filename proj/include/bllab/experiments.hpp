#pragma once

// Experiments built from the library pieces: box counts of projected sets,
// direction sweeps for exceptional projections, and radial projection
// experiments with their domain guard.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bllab/bldatum.hpp"
#include "bllab/dimest.hpp"
#include "bllab/fracgen.hpp"
#include "bllab/nonlinear.hpp"
#include "bllab/setops.hpp"

namespace bllab {

/// Count of P(X) at a level: the product of the kept factor counts when X is
/// a product of 1-D generators with closed forms and P keeps whole axes,
/// otherwise the projected cover of the materialized set.
inline Integer projected_count(const Generator& g, const LinearSurjection& p, int level,
                               std::size_t budget = kDefaultCellBudget) {
  require(p.ambient_dim() == static_cast<std::size_t>(g.dim()),
          "projection ambient dimension " + std::to_string(p.ambient_dim()) + " does not match set dimension " +
              std::to_string(g.dim()));
  auto axes = p.coordinate_axes();
  auto factors = g.axis_factors();
  if (axes && factors) {
    Integer c = 1;
    bool closed = true;
    for (auto a : *axes) {
      auto fc = (*factors)[a].closed_form_count(level);
      if (!fc) {
        closed = false;
        break;
      }
      c *= *fc;
    }
    if (closed) return c;
  }
  return Integer(static_cast<unsigned long>(project_cubes(p, g.at(level, budget), budget).size()));
}

inline CountTable projected_counts(const Generator& g, const LinearSurjection& p, const std::vector<int>& levels,
                                   std::size_t budget = kDefaultCellBudget) {
  return box_counts(g.base(), [&](int n) { return projected_count(g, p, n, budget); }, levels);
}

// Direction sweeps.

struct SweepOptions {
  double margin = 0.05;
  int min_level = 0;  // 0: ceil(n / 2)
  std::size_t budget = kDefaultCellBudget;
};

struct SweepResult {
  int dim = 2;
  std::vector<std::vector<double>> parameters;  // angle in R^2; unit kernel direction in R^3
  std::vector<double> estimates;
  double set_estimate = 0;
  double reference = 0;  // min(set_estimate, target dimension)
  double threshold = 0;  // threshold_fraction * reference
  double margin = 0;
  std::size_t below_threshold_count = 0;
  std::vector<std::size_t> below;
  std::pair<int, int> window{0, 0};
};

namespace detail {

constexpr double kDirectionScale = 65536.0;

inline std::int64_t round_scaled(double v) { return static_cast<std::int64_t>(std::llround(kDirectionScale * v)); }

/// Integer rows spanning the orthogonal complement of an integer vector in R^3.
inline QMatrix complement_rows(const std::vector<std::int64_t>& k) {
  std::size_t big = 0;
  for (std::size_t j = 1; j < 3; ++j)
    if (std::llabs(k[j]) > std::llabs(k[big])) big = j;
  std::vector<std::vector<Rational>> rows;
  for (std::size_t j = 0; j < 3; ++j) {
    if (j == big) continue;
    std::vector<Rational> r(3, Rational(0));
    r[j] = static_cast<long>(k[big]);
    r[big] = static_cast<long>(-k[j]);
    rows.push_back(r);
  }
  return QMatrix::from_rows(rows, 3);
}

}  // namespace detail

/// Projects X onto num_directions lines (d = 2, angles k pi / N) or planes
/// (d = 3, kernels on a Fibonacci lattice of the upper hemisphere), then
/// compares each image's upper box estimate over levels [min_level, n] with
/// threshold_fraction * min(dim X, k). Directions are rounded to integer
/// vectors at scale 2^16 so the covers stay exact.
inline SweepResult sweep_directions(const CubeSet& x, int num_directions, double threshold_fraction,
                                    const SweepOptions& opts = {}) {
  require(x.dim() == 2 || x.dim() == 3, "direction sweeps need a set in dimension 2 or 3");
  require(num_directions >= 3, "a sweep needs at least 3 directions");
  require(threshold_fraction > 0 && threshold_fraction <= 1, "threshold fraction must lie in (0, 1]");
  require(!x.empty(), "cannot sweep an empty set");
  const int n = x.level();
  const int lo = opts.min_level > 0 ? opts.min_level : (n + 1) / 2;
  require(lo >= 1 && lo <= n, "sweep window must lie within 1..level");
  std::vector<CubeSet> levels;
  for (int m = lo; m <= n; ++m) levels.push_back(x.coarsen(m));

  SweepResult out;
  out.dim = x.dim();
  out.margin = opts.margin;
  out.window = {lo, n};
  auto estimate = [&](const std::function<CubeSet(const CubeSet&)>& f) {
    CountTable t;
    t.base = x.base();
    for (const auto& s : levels) t.add(s.level(), Integer(static_cast<unsigned long>(f(s).size())));
    return estimate_dim(t, DimMode::upper_box, out.window).value;
  };
  out.set_estimate = estimate([](const CubeSet& s) { return s; });
  const double k = static_cast<double>(x.dim() - 1);
  out.reference = std::min(out.set_estimate, k);
  out.threshold = threshold_fraction * out.reference;

  for (int i = 0; i < num_directions; ++i) {
    QMatrix m;
    if (x.dim() == 2) {
      const double theta = M_PI * i / num_directions;
      out.parameters.push_back({theta});
      m = QMatrix{{static_cast<long>(detail::round_scaled(std::cos(theta))),
                   static_cast<long>(detail::round_scaled(std::sin(theta)))}};
    } else {
      // kernel directions z_i = 1 - (i + 1/2)/N, spiralling by the golden angle
      const double z = 1.0 - (i + 0.5) / num_directions;
      const double r = std::sqrt(std::max(0.0, 1 - z * z));
      const double phi = M_PI * (3.0 - std::sqrt(5.0)) * i;
      std::vector<double> w{r * std::cos(phi), r * std::sin(phi), z};
      out.parameters.push_back(w);
      m = detail::complement_rows({detail::round_scaled(w[0]), detail::round_scaled(w[1]), detail::round_scaled(w[2])});
    }
    LinearSurjection p(m);
    double e = estimate([&](const CubeSet& s) { return project_cubes(p, s, opts.budget); });
    out.estimates.push_back(e);
    if (e < out.threshold - opts.margin) {
      out.below.push_back(static_cast<std::size_t>(i));
      ++out.below_threshold_count;
    }
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& s) {
  std::string out = s.dim == 2 ? "index,angle,estimate,below\n" : "index,kx,ky,kz,estimate,below\n";
  for (std::size_t i = 0; i < s.estimates.size(); ++i) {
    out += std::to_string(i);
    for (double v : s.parameters[i]) out += "," + format_g12(v);
    const bool below = std::find(s.below.begin(), s.below.end(), i) != s.below.end();
    out += "," + format_g12(s.estimates[i]) + "," + (below ? "true" : "false") + "\n";
  }
  return out;
}

// Radial projection experiments.

struct RadialOptions {
  bool expect_guard_failure = false;
  ImageOptions image;
  double tolerance = kEstimatorTolerance;
  SlopeStatistic statistic = SlopeStatistic::increment;
  std::size_t budget = kDefaultCellBudget;
};

struct RadialPinResult {
  std::vector<Rational> pin;
  CountTable counts;
  DimEstimate estimate;
  int radius = 0;
  double lipschitz = 0;
};

struct RadialReport {
  int dim = 0;
  CountTable set_counts;
  DimEstimate set_estimate;
  std::vector<RadialPinResult> pins;
  GuardReport guard;
  bool counterexample = false;  // the guard tripped and the run is the exhibit
  Verdict verdict;
  double witness_threshold = 0;  // (d-1)/d dim X
  std::size_t witness_pin = 0;   // pin with the largest image estimate
  bool witness_found = false;
};

/// Runs the radial projection inequality dim X <= 1/(d-1) sum_z dim R_z(X)
/// on the sets produced for `levels`. The guard uses the finest level.
inline RadialReport radial_experiment(const std::function<CubeSet(int)>& sets, const std::vector<int>& levels,
                                      const std::vector<std::vector<Rational>>& pins,
                                      const RadialOptions& opts = {}) {
  require(levels.size() >= 2, "a radial experiment needs at least two levels");
  require(!pins.empty(), "no pins given");
  const std::size_t d = pins.front().size();
  require(d == 2 || d == 3, "radial experiments support dimensions 2 and 3");
  require(pins.size() == d, "a radial experiment in dimension " + std::to_string(d) + " needs " + std::to_string(d) +
                                " pins, got " + std::to_string(pins.size()));
  for (const auto& p : pins) require(p.size() == d, "pins have different dimensions");
  require(pins_in_general_position(pins), "pins are not in general position");
  const CubeSet finest = sets(levels.back());
  require(static_cast<std::size_t>(finest.dim()) == d, "pins and set have different dimensions");

  RadialReport rep;
  rep.dim = static_cast<int>(d);
  rep.guard = radial_domain_guard(finest, pins);
  if (!rep.guard.ok && !opts.expect_guard_failure)
    fail_domain("radial domain guard failed: " + rep.guard.violation);
  rep.counterexample = !rep.guard.ok;

  std::vector<CubeSet> xs;
  for (int n : levels) xs.push_back(n == levels.back() ? finest : sets(n));
  const std::pair<int, int> window{levels[1], levels.back()};
  rep.set_counts.base = finest.base();
  for (const auto& x : xs) rep.set_counts.add(x.level(), Integer(static_cast<unsigned long>(x.size())));
  rep.set_estimate = estimate_dim(rep.set_counts, DimMode::upper_box, window, opts.statistic);

  std::vector<WeightedTerm> terms;
  const double w = 1.0 / static_cast<double>(d - 1);
  for (const auto& z : pins) {
    RadialPinResult r;
    r.pin = z;
    MapSpec t = MapSpec::radial(z);
    r.counts.base = finest.base();
    for (const auto& x : xs) {
      NonlinearImage img = nonlinear_image(t, x, opts.image, opts.budget);
      r.counts.add(x.level(), Integer(static_cast<unsigned long>(img.cells.size())));
      r.radius = img.radius;
      r.lipschitz = img.lipschitz_estimate;
    }
    r.estimate = estimate_dim(r.counts, DimMode::upper_box, window, opts.statistic);
    terms.push_back({w, r.estimate.value});
    rep.pins.push_back(std::move(r));
  }
  rep.verdict = verdict(VerdictMode::nonlinear_upper, rep.set_estimate.value, terms, opts.tolerance);
  rep.witness_threshold = static_cast<double>(d - 1) / static_cast<double>(d) * rep.set_estimate.value;
  for (std::size_t i = 0; i < rep.pins.size(); ++i)
    if (rep.pins[i].estimate.value > rep.pins[rep.witness_pin].estimate.value) rep.witness_pin = i;
  rep.witness_found = rep.pins[rep.witness_pin].estimate.value >= rep.witness_threshold - opts.tolerance;
  return rep;
}

inline std::string format_radial_report(const RadialReport& r) {
  auto pin_name = [](const std::vector<Rational>& z) {
    std::string s = "(";
    for (std::size_t j = 0; j < z.size(); ++j) s += (j ? "," : "") + to_short_string(z[j]);
    return s + ")";
  };
  std::string out;
  out += "radial projections in dimension " + std::to_string(r.dim) + "\n";
  out += "guard: " + std::string(r.guard.ok ? "ok" : "tripped, " + r.guard.violation) + "\n";
  out += "dim X estimate: " + format_g12(r.set_estimate.value) + " over levels " +
         std::to_string(r.set_estimate.window.first) + ".." + std::to_string(r.set_estimate.window.second) + "\n";
  for (std::size_t i = 0; i < r.pins.size(); ++i) {
    const auto& p = r.pins[i];
    out += "pin " + std::to_string(i + 1) + " " + pin_name(p.pin) + ": estimate " + format_g12(p.estimate.value) +
           ", padding radius " + std::to_string(p.radius) + ", lipschitz " + format_g12(p.lipschitz) + "\n";
  }
  out += "bound: " + format_g12(r.verdict.lhs) + " <= " + format_g12(r.verdict.rhs) + " (1/" +
         std::to_string(r.dim - 1) + " times the sum) " + (r.verdict.holds ? "holds" : "fails") + "\n";
  out += "large image witness: pin " + std::to_string(r.witness_pin + 1) + " with " +
         format_g12(r.pins[r.witness_pin].estimate.value) + " against " + format_g12(r.witness_threshold) +
         (r.witness_found ? " (found)" : " (none)") + "\n";
  if (r.counterexample)
    out += "counterexample: the guard assumption is violated; expected bound (d-2)/(d-1) = " +
           format_g12(static_cast<double>(r.dim - 2) / (r.dim - 1)) + " < dim X\n";
  return out;
}

}  // namespace bllab
