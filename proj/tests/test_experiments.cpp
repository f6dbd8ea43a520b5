#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bllab/experiments.hpp"

using namespace bllab;

namespace {

const double kCantor = std::log(2.0) / std::log(3.0);

Generator cantor_gen() { return Generator::cantor(3, {0, 2}); }

CubeSet cantor2(int n) { return product({cantor_digits(3, {0, 2}, n), cantor_digits(3, {0, 2}, n)}); }

// Image cells of a closed cell under a rational row, computed from the exact
// corner values: cells whose open interior meets the normalized interval.
std::set<Coord> exact_row_image(const CubeSet& x, const std::vector<Rational>& row) {
  Rational lo, hi;
  for (const auto& a : row) (a < 0 ? lo : hi) += a;
  std::set<Coord> out;
  const Coord side = x.side();
  for (const auto& c : x.cells()) {
    Rational ymin, ymax;
    for (std::size_t j = 0; j < row.size(); ++j) {
      Rational a = row[j] * c[j], b = row[j] * (c[j] + 1);
      ymin += std::min(a, b);
      ymax += std::max(a, b);
    }
    Rational u0 = (ymin - lo * side) / (hi - lo), u1 = (ymax - lo * side) / (hi - lo);
    for (Coord t = 0; t < side; ++t)
      if ((u0 < t + 1 && u1 > t) || (u0 == u1 && u0 >= t && u0 <= t + 1)) out.insert(t);
  }
  return out;
}

}  // namespace

TEST(ProjectedCounts, ClosedFormMatchesEnumeration) {
  Generator x = Generator::product({cantor_gen(), cantor_gen(), cantor_gen()});
  for (const auto& p : coordinate_plane_projections(3, 2))
    for (int n = 1; n <= 5; ++n) {
      Integer closed = projected_count(x, p, n);
      EXPECT_EQ(closed, Integer(1) << (2 * n));
      EXPECT_EQ(closed, Integer(static_cast<unsigned long>(project_cubes(p, x.at(n)).size())));
    }
  // a non-coordinate map falls back to the cover
  LinearSurjection sum(QMatrix{{1, 1, 1}});
  EXPECT_EQ(projected_count(x, sum, 3), Integer(static_cast<unsigned long>(project_cubes(sum, x.at(3)).size())));
  EXPECT_THROW(projected_count(x, coordinate_projection(2, {0}), 2), Error);
}

TEST(Sweep, CantorSquareHasAtMostOneSmallDirection) {
  CubeSet x = cantor2(7);
  SweepResult s = sweep_directions(x, 180, 0.5);
  ASSERT_EQ(s.estimates.size(), 180u);
  EXPECT_NEAR(s.set_estimate, 2 * kCantor, 1e-12);
  EXPECT_LE(s.below_threshold_count, 1u);
  // axis directions give C itself
  EXPECT_NEAR(s.estimates[0], kCantor, 1e-12);
  EXPECT_NEAR(s.estimates[90], kCantor, 1e-12);
}

TEST(Sweep, EstimatesMatchExactCornerImages) {
  CubeSet x = cantor2(6);
  SweepResult s = sweep_directions(x, 12, 0.5, SweepOptions{0.05, 3});
  for (int i = 0; i < 12; ++i) {
    const double theta = M_PI * i / 12;
    std::vector<Rational> row{Rational(static_cast<long>(std::llround(65536 * std::cos(theta)))),
                              Rational(static_cast<long>(std::llround(65536 * std::sin(theta))))};
    double best = 0;
    for (int m = 3; m <= 6; ++m) {
      double count = static_cast<double>(exact_row_image(x.coarsen(m), row).size());
      best = std::max(best, std::log(count) / (m * std::log(3.0)));
    }
    EXPECT_NEAR(s.estimates[static_cast<std::size_t>(i)], best, 1e-12) << "direction " << i;
  }
}

TEST(Sweep, FullSquareHasNoSmallDirections) {
  SweepResult s = sweep_directions(full_cube(2, 8, 2), 36, 0.9);
  EXPECT_NEAR(s.reference, 1.0, 1e-12);
  EXPECT_EQ(s.below_threshold_count, 0u);
}

TEST(Sweep, AxisSegmentHasOnlyThePerpendicularBelow) {
  CubeSet seg = segment({0, Rational(1, 3)}, {1, Rational(1, 3)}, 2, 12);
  SweepResult s = sweep_directions(seg, 180, 0.5);
  ASSERT_EQ(s.below_threshold_count, 1u);
  EXPECT_EQ(s.below.front(), 90u);
  EXPECT_NE(sweep_csv(s).find("90,1.57079632679,"), std::string::npos);
}

TEST(Sweep, PlanesInThreeDimensions) {
  SweepResult full = sweep_directions(full_cube(2, 6, 3), 20, 0.9);
  EXPECT_EQ(full.parameters.front().size(), 3u);
  EXPECT_EQ(full.below_threshold_count, 0u);
  for (double e : full.estimates) EXPECT_GT(e, 1.85);
  SweepResult c3 = sweep_directions(product({cantor_digits(3, {0, 2}, 5), cantor_digits(3, {0, 2}, 5),
                                             cantor_digits(3, {0, 2}, 5)}),
                                    20, 2.0 / 3.0);
  EXPECT_EQ(c3.below_threshold_count, 0u);
  EXPECT_THROW(sweep_directions(full_cube(2, 3, 1), 10, 0.5), Error);
  EXPECT_THROW(sweep_directions(full_cube(2, 3, 2), 2, 0.5), Error);
}

TEST(Radial, CantorSquareWithPinsInGeneralPosition) {
  RadialReport r = radial_experiment(cantor2, level_range(3, 8), {{-1, 2}, {2, 2}});
  EXPECT_TRUE(r.guard.ok);
  EXPECT_FALSE(r.counterexample);
  EXPECT_NEAR(r.set_estimate.value, 2 * kCantor, 1e-12);
  for (const auto& p : r.pins) EXPECT_GE(p.estimate.value, kCantor);
  EXPECT_TRUE(r.verdict.holds);
  EXPECT_GE(r.verdict.slack, 0.05);
  EXPECT_TRUE(r.witness_found);
}

TEST(Radial, SegmentCollinearWithTwoPinsBreaksTheBound) {
  auto seg = [](int n) {
    return segment({Rational(1, 2), Rational(1, 2), Rational(1, 16)}, {Rational(1, 2), Rational(1, 2), Rational(15, 16)},
                   2, n);
  };
  std::vector<std::vector<Rational>> pins{{Rational(1, 2), Rational(1, 2), Rational(-1, 2)},
                                          {Rational(1, 2), Rational(1, 2), Rational(3, 2)},
                                          {0, 0, Rational(1, 2)}};
  EXPECT_THROW(radial_experiment(seg, level_range(5, 10), pins), Error);
  RadialOptions o;
  o.expect_guard_failure = true;
  RadialReport r = radial_experiment(seg, level_range(5, 10), pins, o);
  EXPECT_TRUE(r.counterexample);
  EXPECT_EQ(r.guard.flat_pins, (std::vector<std::size_t>{0, 1}));
  EXPECT_LE(r.pins[0].estimate.value, 0.05);
  EXPECT_LE(r.pins[1].estimate.value, 0.05);
  EXPECT_GE(r.pins[2].estimate.value, 0.95);
  EXPECT_NEAR(r.set_estimate.value, 1.0, 0.05);
  EXPECT_NEAR(r.verdict.rhs, 0.5, 0.05);
  EXPECT_FALSE(r.verdict.holds);
  EXPECT_NE(format_radial_report(r).find("(d-2)/(d-1) = 0.5"), std::string::npos);
}

TEST(Radial, DegeneratePinsFailBeforeCounting) {
  int calls = 0;
  auto sets = [&](int n) {
    ++calls;
    return cantor2(n);
  };
  EXPECT_THROW(radial_experiment(sets, level_range(3, 5), {{-1, 2}, {-1, 2}}), Error);
  EXPECT_THROW(radial_experiment(sets, level_range(3, 5), {{-1, 2}}), Error);
  EXPECT_EQ(calls, 0);
}
