#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bllab/dimest.hpp"

using namespace bllab;

namespace {

const double kCantorDim = std::log(2.0) / std::log(3.0);

Generator middle_thirds() { return Generator::cantor(3, {0, 2}); }

CountTable at_levels(const Generator& g, const std::vector<int>& levels) { return box_counts(g, levels); }

}  // namespace

TEST(BoxCounts, KnownTables) {
  CountTable c = box_counts([](int n) { return cantor_digits(3, {0, 2}, n); }, level_range(1, 8));
  ASSERT_EQ(c.rows.size(), 8u);
  for (const auto& r : c.rows) EXPECT_EQ(r.count, Integer(1) << r.level);
  EXPECT_EQ(c.base, 3);

  CountTable sq = box_counts(Generator::full(2, 2), level_range(0, 6));
  for (const auto& r : sq.rows) EXPECT_EQ(r.count, Integer(1) << (2 * r.level));

  CountTable pt = box_counts(Generator::finite_points(2, {{Rational(1, 3), Rational(2, 7)}}), level_range(0, 9));
  for (const auto& r : pt.rows) EXPECT_EQ(r.count, 1);
}

TEST(BoxCounts, RejectsInconsistentBase) {
  auto mixed = [](int n) { return n % 2 ? cantor_digits(3, {0, 2}, n) : cantor_digits(2, {0}, n); };
  EXPECT_THROW(box_counts(mixed, level_range(1, 3)), Error);
}

TEST(CountTable, GrowthCheck) {
  CountTable t;
  t.base = 2;
  t.add(1, 2);
  t.add(2, 4);
  EXPECT_NO_THROW(t.check_growth(1));
  t.add(3, 9);
  EXPECT_THROW(t.check_growth(1), Error);
  EXPECT_NO_THROW(t.check_growth(2));
  EXPECT_THROW(t.add(3, 1), Error);
  EXPECT_THROW(t.add(4, 0), Error);
}

TEST(EstimateDim, CantorSlopeIsConstant) {
  CountTable c = at_levels(middle_thirds(), level_range(1, 8));
  for (auto mode : {DimMode::upper_box, DimMode::lower_box}) {
    DimEstimate e = estimate_dim(c, mode, {3, 8});
    EXPECT_NEAR(e.value, kCantorDim, 1e-12);
    EXPECT_EQ(format_g12(e.value), "0.630929753571");
    EXPECT_NEAR(e.regression_slope, kCantorDim, 1e-12);
    EXPECT_EQ(e.per_level_slope.size(), 6u);
  }
  EXPECT_THROW(estimate_dim(c, DimMode::upper_box, {9, 12}), Error);
}

TEST(EstimateDim, SinglePointHasDimensionZero) {
  CountTable t = at_levels(Generator::finite_points(2, {{0, 1}}), level_range(0, 10));
  EXPECT_EQ(estimate_dim(t, DimMode::upper_box).value, 0);
  EXPECT_EQ(estimate_dim(t, DimMode::lower_box).value, 0);
}

TEST(EstimateDim, InterleavedFactorAtBlockEnds) {
  std::vector<int> ends = interleaved_block_ends(4, 4);
  CountTable a1 = at_levels(Generator::interleaved(2, 4, 4, 0), ends);
  CountTable a2 = at_levels(Generator::interleaved(2, 4, 4, 1), ends);
  CountTable prod = at_levels(Generator::interleaved(2, 4, 4), ends);
  EXPECT_NEAR(estimate_dim(a1, DimMode::lower_box, {20, 340}).value, 0.2, 1e-12);
  EXPECT_NEAR(estimate_dim(a1, DimMode::lower_box).value, 0.2, 1e-12);
  EXPECT_NEAR(estimate_dim(a2, DimMode::lower_box).value, 0.0, 1e-12);
  EXPECT_NEAR(estimate_dim(a1, DimMode::upper_box).value, 1.0, 1e-12);
  EXPECT_NEAR(estimate_dim(a2, DimMode::upper_box).value, 0.8, 1e-12);
  for (std::size_t i = 0; i < prod.rows.size(); ++i) EXPECT_NEAR(prod.slope(i), 1.0, 1e-12);
}

TEST(EstimateDim, IncrementStatisticCancelsConstantFactors) {
  CountTable t;
  t.base = 2;
  for (int n = 1; n <= 10; ++n) t.add(n, Integer(5) << n);
  DimEstimate e = estimate_dim(t, DimMode::upper_box, {2, 10}, SlopeStatistic::increment);
  EXPECT_NEAR(e.value, 1.0, 1e-12);
  EXPECT_GT(estimate_dim(t, DimMode::upper_box, {2, 10}).value, 1.2);
}

TEST(Assouad, SelfSimilarCantor) {
  AssouadEstimate a = assouad_estimate(cantor_digits(3, {0, 2}, 12), 4);
  EXPECT_NEAR(a.value, kCantorDim, 1e-12);
  EXPECT_EQ(a.max_descendants, 256u);
  EXPECT_EQ(a.witness_cell.size(), 1u);
  EXPECT_THROW(assouad_estimate(cantor_digits(3, {0, 2}, 5), 5), Error);
  EXPECT_THROW(assouad_estimate(cantor_digits(3, {0, 2}, 5), 0), Error);
}

TEST(Assouad, SegmentIsCloseToOne) {
  // 21 y 2^n = 7 2^n + 3k is never divisible by 3, so this segment passes
  // through no grid corner and every column meets one or two rows.
  CubeSet s = segment({0, Rational(1, 3)}, {1, Rational(10, 21)}, 2, 10);
  EXPECT_NEAR(assouad_estimate(s, 3).value, 1.0, 0.1);
}

TEST(Assouad, FinitePointsGiveZero) {
  CubeSet x = finite_points({{0, 0}, {1, 1}, {Rational(1, 2), Rational(1, 5)}}, 2, 9);
  EXPECT_EQ(assouad_estimate(x, 3).value, 0);
}

TEST(Verdict, LoomisWhitneyEqualityOnCantorCube) {
  Generator c = middle_thirds();
  Generator ccc = Generator::product({c, c, c});
  Generator cc = Generator::product({c, c});
  double lhs = estimate_dim(at_levels(ccc, level_range(1, 8)), DimMode::upper_box).value;
  double img = estimate_dim(at_levels(cc, level_range(1, 8)), DimMode::upper_box).value;
  Verdict v = verdict(VerdictMode::upper_box, lhs, {{0.5, img}, {0.5, img}, {0.5, img}}, kExactTolerance);
  EXPECT_TRUE(v.holds);
  EXPECT_NEAR(v.lhs, 3 * kCantorDim, 1e-12);
  EXPECT_NEAR(v.rhs, 3 * kCantorDim, 1e-12);
  EXPECT_LT(std::abs(v.slack), 1e-9);
}

TEST(Verdict, AllLowerBoxFailsButMixedHolds) {
  std::vector<int> ends = interleaved_block_ends(4, 4);
  double a1_lo = estimate_dim(at_levels(Generator::interleaved(2, 4, 4, 0), ends), DimMode::lower_box).value;
  double a2_lo = estimate_dim(at_levels(Generator::interleaved(2, 4, 4, 1), ends), DimMode::lower_box).value;
  double a2_up = estimate_dim(at_levels(Generator::interleaved(2, 4, 4, 1), ends), DimMode::upper_box).value;
  double prod_lo = estimate_dim(at_levels(Generator::interleaved(2, 4, 4), ends), DimMode::lower_box).value;

  Verdict all_lower = verdict(VerdictMode::lower_box, prod_lo, {{1, a1_lo}, {1, a2_lo}}, kExactTolerance);
  EXPECT_FALSE(all_lower.holds);
  EXPECT_LE(all_lower.slack, -0.5);

  Verdict mixed = verdict(VerdictMode::mixed_lower, prod_lo, {{1, a1_lo}, {1, a2_up}}, kExactTolerance);
  EXPECT_TRUE(mixed.holds);
  EXPECT_NEAR(mixed.slack, 0.0, 1e-9);
}

TEST(Verdict, InfiniteTermIsVacuousAndWeightsMustBePositive) {
  Verdict v = verdict(VerdictMode::upper_box, 2.0, {{1, std::numeric_limits<double>::infinity()}}, 0);
  EXPECT_TRUE(v.holds);
  EXPECT_THROW(verdict(VerdictMode::upper_box, 1.0, {{0, 1}}, 0), Error);
  EXPECT_THROW(verdict(VerdictMode::upper_box, 1.0, {{1, 1}}, -1), Error);
}

TEST(Csv, FixedColumnsAndPrecision) {
  CountTable c = at_levels(middle_thirds(), level_range(1, 2));
  EXPECT_EQ(counts_csv(c), "level,count,slope\n1,2,0.630929753571\n2,4,0.630929753571\n");
  Verdict v = verdict(VerdictMode::assouad, 1.0, {{0.5, 1.5}}, kEstimatorTolerance);
  EXPECT_EQ(verdict_csv_header(), "mode,lhs,rhs,slack,holds,tolerance\n");
  EXPECT_EQ(verdict_csv_row(v), "assouad,1,0.75,-0.25,false,0.05\n");
}

TEST(DimestProperties, LowerNeverExceedsUpper) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    CountTable t;
    t.base = 2 + static_cast<int>(rng() % 3);
    Integer n = 1;
    for (int lvl = 1; lvl <= 12; ++lvl) {
      n *= 1 + static_cast<unsigned long>(rng() % static_cast<unsigned long>(t.base * t.base));
      t.add(lvl, n);
    }
    int lo = 2 + static_cast<int>(rng() % 5), hi = lo + static_cast<int>(rng() % 6);
    for (auto stat : {SlopeStatistic::per_level, SlopeStatistic::increment})
      EXPECT_LE(estimate_dim(t, DimMode::lower_box, {lo, hi}, stat).value,
                estimate_dim(t, DimMode::upper_box, {lo, hi}, stat).value);
  }
}

TEST(DimestProperties, ConstantSlopeTablesAddUnderProducts) {
  std::vector<Generator> factors{Generator::cantor(3, {0, 2}), Generator::cantor(3, {1}), Generator::cantor(3, {0, 1, 2}),
                                 Generator::cantor(3, {0})};
  for (std::size_t i = 0; i < factors.size(); ++i)
    for (std::size_t j = 0; j < factors.size(); ++j) {
      auto levels = level_range(1, 10);
      double sum = estimate_dim(at_levels(factors[i], levels), DimMode::upper_box).value +
                   estimate_dim(at_levels(factors[j], levels), DimMode::upper_box).value;
      Generator p = Generator::product({factors[i], factors[j]});
      EXPECT_NEAR(estimate_dim(at_levels(p, levels), DimMode::upper_box).value, sum, 1e-12);
      EXPECT_NEAR(estimate_dim(at_levels(p, levels), DimMode::lower_box).value, sum, 1e-12);
    }
}

TEST(DimestProperties, AssouadDominatesUpperBoxOnSelfSimilarSets) {
  std::vector<Generator> gens{Generator::cantor(3, {0, 2}), Generator::cantor(5, {1, 3, 4}), Generator::full(2, 1),
                              Generator::product({Generator::cantor(3, {0, 2}), Generator::cantor(3, {1})}),
                              Generator::segment(2, {0, Rational(1, 3)}, {1, Rational(10, 21)})};
  for (const auto& g : gens) {
    const int n = 12, m = n / 3;
    double upper = estimate_dim(box_counts(g, level_range(m, n)), DimMode::upper_box).value;
    EXPECT_GE(assouad_estimate(g.at(n), m).value, upper - 0.05) << g.describe();
  }
}

TEST(DimestProperties, HoldsIsMonotoneInTolerance) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    double lhs = u(rng), est = u(rng), t1 = u(rng) / 4, t2 = t1 + u(rng) / 4;
    Verdict a = verdict(VerdictMode::upper_box, lhs, {{1, est}}, t1);
    Verdict b = verdict(VerdictMode::upper_box, lhs, {{1, est}}, t2);
    if (a.holds) {
      EXPECT_TRUE(b.holds);
    }
  }
}
