#pragma once

// Brascamp-Lieb data: scaling and dimension conditions, the finite subspace
// families they are tested against, and exact LPs over the weight polytope.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bllab/error.hpp"
#include "bllab/exactla.hpp"
#include "bllab/lp.hpp"
#include "bllab/rational.hpp"

namespace bllab {

class LinearSurjection {
 public:
  LinearSurjection() = default;
  explicit LinearSurjection(QMatrix matrix) : matrix_(std::move(matrix)) {
    require(matrix_.rows() >= 1 && matrix_.cols() >= 1, "projection matrix must be nonempty");
    require(matrix_.rows() <= matrix_.cols(), "projection target dimension exceeds ambient dimension");
    require(rank(matrix_) == matrix_.rows(), "projection matrix is not surjective (rank < rows)");
  }

  const QMatrix& matrix() const noexcept { return matrix_; }
  std::size_t target_dim() const noexcept { return matrix_.rows(); }
  std::size_t ambient_dim() const noexcept { return matrix_.cols(); }

  /// Axis list if every row is a distinct standard basis vector.
  std::optional<std::vector<std::size_t>> coordinate_axes() const {
    std::vector<std::size_t> axes;
    std::set<std::size_t> used;
    for (std::size_t r = 0; r < matrix_.rows(); ++r) {
      std::optional<std::size_t> axis;
      for (std::size_t c = 0; c < matrix_.cols(); ++c) {
        const Rational& v = matrix_(r, c);
        if (v == 0) continue;
        if (v != 1 || axis) return std::nullopt;
        axis = c;
      }
      if (!axis || !used.insert(*axis).second) return std::nullopt;
      axes.push_back(*axis);
    }
    return axes;
  }

  friend bool operator==(const LinearSurjection& a, const LinearSurjection& b) {
    return a.matrix_ == b.matrix_;
  }

 private:
  QMatrix matrix_;
};

/// Projection x -> (x_{axes[0]}, x_{axes[1]}, ...).
inline LinearSurjection coordinate_projection(std::size_t d, const std::vector<std::size_t>& axes) {
  QMatrix m(axes.size(), d);
  for (std::size_t r = 0; r < axes.size(); ++r) {
    require(axes[r] < d, "coordinate axis out of range");
    m(r, axes[r]) = 1;
  }
  return LinearSurjection(std::move(m));
}

/// All C(d,k) projections onto coordinate k-planes, axes increasing, in
/// lexicographic order of the kept axes.
inline std::vector<LinearSurjection> coordinate_plane_projections(std::size_t d, std::size_t k) {
  require(k >= 1 && k <= d, "coordinate plane dimension out of range");
  std::vector<LinearSurjection> out;
  std::vector<std::size_t> axes(k);
  for (std::size_t i = 0; i < k; ++i) axes[i] = i;
  for (;;) {
    out.push_back(coordinate_projection(d, axes));
    std::size_t i = k;
    while (i > 0 && axes[i - 1] == d - k + (i - 1)) --i;
    if (i == 0) break;
    ++axes[i - 1];
    for (std::size_t j = i; j < k; ++j) axes[j] = axes[j - 1] + 1;
  }
  return out;
}

/// The weight d / (C(d,k) k) that makes the coordinate k-plane family a datum.
inline Rational coordinate_plane_weight(std::size_t d, std::size_t k) {
  Integer binom;
  mpz_bin_uiui(binom.get_mpz_t(), d, k);
  return make_rational(Integer(static_cast<unsigned long>(d)), binom * static_cast<unsigned long>(k));
}

struct BLDatum {
  std::vector<LinearSurjection> projections;
  std::vector<Rational> weights;

  std::size_t ambient_dim() const { return projections.front().ambient_dim(); }

  void validate() const {
    require(!projections.empty(), "datum has no projections");
    require(weights.size() == projections.size(), "datum weight count does not match projection count");
    for (const auto& p : projections)
      require(p.ambient_dim() == ambient_dim(), "datum projections have different ambient dimensions");
    for (const auto& w : weights) require(w > 0, "datum weights must be positive");
  }
};

struct ConditionReport {
  bool scaling_ok = false;
  bool dimension_ok = false;
  std::optional<QSubspace> violating_subspace;
  std::size_t family_size = 0;
  bool family_truncated = false;
};

struct WeightSolution {
  std::vector<Rational> weights;
  std::optional<Rational> objective;  // nullopt encodes +infinity
  bool feasible = false;
  bool all_positive = false;
  // empty polytope: a family member whose constraint alone contradicts scaling
  std::optional<QSubspace> violating_subspace;
};

inline bool check_scaling(const BLDatum& datum) {
  datum.validate();
  Rational total;
  for (std::size_t i = 0; i < datum.projections.size(); ++i)
    total += datum.weights[i] * static_cast<unsigned long>(datum.projections[i].target_dim());
  return total == static_cast<unsigned long>(datum.ambient_dim());
}

inline ConditionReport check_dimension_condition(const BLDatum& datum, const SubspaceFamily& family) {
  ConditionReport report;
  report.scaling_ok = check_scaling(datum);
  report.family_size = family.members.size();
  report.family_truncated = family.truncated;
  report.dimension_ok = true;
  for (const auto& v : family.members) {
    require(v.ambient_dim() == datum.ambient_dim(), "family subspace has the wrong ambient dimension");
    Rational rhs;
    for (std::size_t i = 0; i < datum.projections.size(); ++i)
      rhs += datum.weights[i] * static_cast<unsigned long>(image_dim(datum.projections[i].matrix(), v));
    if (Rational(static_cast<unsigned long>(v.dim())) > rhs) {
      report.dimension_ok = false;
      report.violating_subspace = v;
      break;
    }
  }
  return report;
}

inline ConditionReport check_dimension_condition(const BLDatum& datum, const std::vector<QSubspace>& family) {
  return check_dimension_condition(datum, SubspaceFamily{family, false});
}

/// Pseudo-random subspace of Q^d spanned by `k` small-integer vectors.
inline QSubspace random_subspace(std::size_t d, std::size_t k, std::mt19937_64& rng, int magnitude = 3) {
  std::vector<std::vector<Rational>> vectors(k, std::vector<Rational>(d));
  const auto span = static_cast<std::uint64_t>(2 * magnitude + 1);
  for (auto& v : vectors)
    for (auto& x : v) x = static_cast<long>(rng() % span) - magnitude;
  return QSubspace::span(d, vectors);
}

struct CriticalOptions {
  bool include_coordinate = true;
  std::size_t random_samples = 0;
  std::size_t cap = kDefaultLatticeCap;
  std::uint64_t seed = 1;
};

/// Kernel lattice, then coordinate subspaces (d <= 6), then seeded random
/// falsifiers; deduplicated and capped.
inline SubspaceFamily critical_subspaces(const std::vector<LinearSurjection>& projections,
                                         const CriticalOptions& opts = {}) {
  require(!projections.empty(), "critical_subspaces needs at least one projection");
  const std::size_t d = projections.front().ambient_dim();
  for (const auto& p : projections) require(p.ambient_dim() == d, "projections have different ambient dimensions");
  require(opts.cap >= 1, "family cap must be positive");

  std::vector<QSubspace> kernels;
  for (const auto& p : projections) kernels.push_back(kernel_basis(p.matrix()));
  // The closure itself may be truncated by the cap; kernel count can exceed a
  // tiny cap, so clamp the seed list first.
  SubspaceFamily out;
  if (kernels.size() > opts.cap) {
    kernels.resize(opts.cap);
    out.truncated = true;
  }
  SubspaceFamily closure = lattice_closure(kernels, opts.cap);
  out.truncated = out.truncated || closure.truncated;
  std::set<QSubspace> seen(closure.members.begin(), closure.members.end());
  out.members = std::move(closure.members);

  auto append = [&](QSubspace s) {
    if (seen.count(s)) return;
    if (out.members.size() >= opts.cap) {
      out.truncated = true;
      return;
    }
    seen.insert(s);
    out.members.push_back(std::move(s));
  };
  if (opts.include_coordinate && d <= 6)
    for (auto& s : coordinate_subspaces(d)) append(std::move(s));
  if (opts.random_samples > 0 && d >= 2) {
    std::mt19937_64 rng(opts.seed);
    for (std::size_t i = 0; i < opts.random_samples; ++i) {
      std::size_t k = 1 + static_cast<std::size_t>(rng() % (d - 1));
      append(random_subspace(d, k, rng));
    }
  }
  return out;
}

namespace detail {

inline void add_polytope_rows(LinearProgram& lp, const std::vector<LinearSurjection>& projections,
                              const SubspaceFamily& family) {
  const std::size_t m = projections.size();
  const std::size_t d = projections.front().ambient_dim();
  LpRow scaling;
  scaling.coeffs.assign(lp.num_vars, Rational(0));
  for (std::size_t i = 0; i < m; ++i) scaling.coeffs[i] = static_cast<unsigned long>(projections[i].target_dim());
  scaling.rel = Relation::equal;
  scaling.rhs = static_cast<unsigned long>(d);
  lp.rows.push_back(std::move(scaling));
  for (const auto& v : family.members) {
    require(v.ambient_dim() == d, "family subspace has the wrong ambient dimension");
    if (v.is_zero()) continue;
    LpRow row;
    row.coeffs.assign(lp.num_vars, Rational(0));
    for (std::size_t i = 0; i < m; ++i)
      row.coeffs[i] = static_cast<unsigned long>(image_dim(projections[i].matrix(), v));
    row.rel = Relation::greater_equal;
    row.rhs = static_cast<unsigned long>(v.dim());
    lp.rows.push_back(std::move(row));
  }
}

inline void check_projection_family(const std::vector<LinearSurjection>& projections,
                                    const SubspaceFamily& family) {
  require(!projections.empty(), "no projections given");
  require(!family.members.empty(), "subspace family is empty");
  for (const auto& p : projections)
    require(p.ambient_dim() == projections.front().ambient_dim(), "projections have different ambient dimensions");
}

}  // namespace detail

/// min sum c_i s_i over the weight polytope cut out by `family`.
inline WeightSolution optimize_weights(const std::vector<LinearSurjection>& projections,
                                       const std::vector<Rational>& s, const SubspaceFamily& family) {
  detail::check_projection_family(projections, family);
  require(s.size() == projections.size(), "one dimension value per projection is required");
  for (const auto& v : s) require(v >= 0, "dimension values must be non-negative");

  LinearProgram lp;
  lp.num_vars = projections.size();
  lp.objective = s;
  detail::add_polytope_rows(lp, projections, family);
  LpResult r = solve_lp(lp);

  WeightSolution out;
  if (r.status == LpStatus::infeasible) {
    for (const auto& v : family.members) {
      if (v.is_zero()) continue;
      LinearProgram one;
      one.num_vars = projections.size();
      one.objective.assign(one.num_vars, Rational(0));
      detail::add_polytope_rows(one, projections, SubspaceFamily{{v}, false});
      if (solve_lp(one).status == LpStatus::infeasible) {
        out.violating_subspace = v;
        break;
      }
    }
  }
  if (r.status != LpStatus::optimal) return out;
  out.feasible = true;
  out.weights = r.x;
  out.objective = r.objective;
  out.all_positive = true;
  for (const auto& c : r.x) out.all_positive = out.all_positive && c > 0;
  return out;
}

struct FeasibilityResult {
  bool feasible = false;
  std::vector<Rational> witness;  // weights attaining the largest min_i c_i
  Rational min_weight;
};

/// Feasible iff some point of the polytope has every c_i > 0, found by
/// maximizing t subject to c_i >= t.
inline FeasibilityResult bl_feasibility(const std::vector<LinearSurjection>& projections,
                                        const SubspaceFamily& family) {
  detail::check_projection_family(projections, family);
  const std::size_t m = projections.size();
  LinearProgram lp;
  lp.num_vars = m + 1;
  lp.objective.assign(m + 1, Rational(0));
  lp.objective[m] = -1;
  detail::add_polytope_rows(lp, projections, family);
  for (std::size_t i = 0; i < m; ++i) {
    LpRow row;
    row.coeffs.assign(m + 1, Rational(0));
    row.coeffs[i] = 1;
    row.coeffs[m] = -1;
    row.rel = Relation::greater_equal;
    row.rhs = 0;
    lp.rows.push_back(std::move(row));
  }
  LpResult r = solve_lp(lp);
  FeasibilityResult out;
  if (r.status != LpStatus::optimal) return out;
  out.min_weight = r.x[m];
  out.feasible = out.min_weight > 0;
  out.witness.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(m));
  return out;
}

inline bool is_bl_feasible(const std::vector<LinearSurjection>& projections, const SubspaceFamily& family) {
  return bl_feasibility(projections, family).feasible;
}

}  // namespace bllab
