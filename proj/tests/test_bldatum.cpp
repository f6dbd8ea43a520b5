#include <gtest/gtest.h>

#include <random>

#include "bllab/bldatum.hpp"
#include "bllab/datum_io.hpp"
#include "test_support.hpp"

using namespace bllab;

namespace {

std::vector<LinearSurjection> loomis_whitney() { return coordinate_plane_projections(3, 2); }

LinearSurjection drop_z() { return coordinate_projection(3, {0, 1}); }

SubspaceFamily coordinate_family(std::size_t d) { return {coordinate_subspaces(d), false}; }

}  // namespace

TEST(LinearSurjection, RejectsRankDeficientMatrices) {
  EXPECT_THROW(LinearSurjection(QMatrix{{1, 2}, {2, 4}}), Error);
  EXPECT_THROW(LinearSurjection(QMatrix{{1, 0}, {0, 1}, {1, 1}}), Error);
  auto axes = drop_z().coordinate_axes();
  ASSERT_TRUE(axes);
  EXPECT_EQ(*axes, (std::vector<std::size_t>{0, 1}));
  EXPECT_FALSE(LinearSurjection(QMatrix{{1, 1, 0}}).coordinate_axes());
}

TEST(Scaling, CoordinatePlaneWeightsSatisfyScaling) {
  EXPECT_EQ(coordinate_plane_weight(3, 2), Rational(1, 2));
  EXPECT_TRUE(check_scaling({loomis_whitney(), {Rational(1, 2), Rational(1, 2), Rational(1, 2)}}));
  EXPECT_FALSE(check_scaling({loomis_whitney(), {1, 1, 1}}));
  EXPECT_TRUE(check_scaling({{LinearSurjection(QMatrix::identity(4))}, {1}}));
}

TEST(DimensionCondition, LoomisWhitneyPassesOnKernelLattice) {
  std::vector<LinearSurjection> p = loomis_whitney();
  std::vector<QSubspace> kernels;
  for (const auto& q : p) kernels.push_back(kernel_basis(q.matrix()));
  SubspaceFamily fam = lattice_closure(kernels);
  ConditionReport r = check_dimension_condition({p, {Rational(1, 2), Rational(1, 2), Rational(1, 2)}}, fam);
  EXPECT_TRUE(r.scaling_ok);
  EXPECT_TRUE(r.dimension_ok);
  EXPECT_FALSE(r.violating_subspace);
  EXPECT_EQ(r.family_size, 8u);
}

TEST(DimensionCondition, KernelOfSingleProjectionViolates) {
  ConditionReport r = check_dimension_condition({{drop_z()}, {Rational(3, 2)}}, {QSubspace::coordinate(3, {2})});
  EXPECT_TRUE(r.scaling_ok);
  EXPECT_FALSE(r.dimension_ok);
  ASSERT_TRUE(r.violating_subspace);
  EXPECT_EQ(*r.violating_subspace, QSubspace::coordinate(3, {2}));
}

TEST(DimensionCondition, ZeroSubspaceAlwaysPasses) {
  EXPECT_TRUE(check_dimension_condition({{drop_z()}, {1}}, {QSubspace(3)}).dimension_ok);
}

TEST(CriticalSubspaces, FamiliesFromKernelsAndCoordinates) {
  SubspaceFamily lw = critical_subspaces(loomis_whitney());
  EXPECT_EQ(lw.members, coordinate_subspaces(3));
  EXPECT_FALSE(lw.truncated);

  CriticalOptions no_coord;
  no_coord.include_coordinate = false;
  LinearSurjection sum(QMatrix{{1, 1, 1}});
  SubspaceFamily single = critical_subspaces({sum}, no_coord);
  ASSERT_EQ(single.members.size(), 3u);
  EXPECT_TRUE(single.members[0].is_zero());
  EXPECT_EQ(single.members[1], kernel_basis(sum.matrix()));
  EXPECT_EQ(single.members[2], QSubspace::full(3));

  CriticalOptions tiny;
  tiny.cap = 2;
  EXPECT_TRUE(critical_subspaces(loomis_whitney(), tiny).truncated);
}

TEST(CriticalSubspaces, RandomFalsifiersAreReproducible) {
  CriticalOptions o;
  o.random_samples = 20;
  o.seed = 99;
  EXPECT_EQ(critical_subspaces(loomis_whitney(), o).members, critical_subspaces(loomis_whitney(), o).members);
  EXPECT_GT(critical_subspaces(loomis_whitney(), o).members.size(), 8u);
}

TEST(OptimizeWeights, LoomisWhitneyAllOnes) {
  WeightSolution w = optimize_weights(loomis_whitney(), {1, 1, 1}, coordinate_family(3));
  ASSERT_TRUE(w.feasible);
  EXPECT_EQ(w.weights, (std::vector<Rational>{Rational(1, 2), Rational(1, 2), Rational(1, 2)}));
  ASSERT_TRUE(w.objective);
  EXPECT_EQ(*w.objective, Rational(3, 2));
  EXPECT_TRUE(w.all_positive);
}

TEST(OptimizeWeights, LoomisWhitneyPolytopeIsASinglePoint) {
  // Pairwise c_i + c_j >= 1 and c_1 + c_2 + c_3 = 3/2 leave only (1/2,1/2,1/2).
  WeightSolution w = optimize_weights(loomis_whitney(), {1, 1, 0}, coordinate_family(3));
  ASSERT_TRUE(w.feasible);
  EXPECT_EQ(*w.objective, 1);
  EXPECT_EQ(w.weights, (std::vector<Rational>{Rational(1, 2), Rational(1, 2), Rational(1, 2)}));
}

TEST(OptimizeWeights, EmptyPolytopeHasInfiniteObjective) {
  WeightSolution w = optimize_weights({drop_z()}, {Rational(7, 3)}, critical_subspaces({drop_z()}));
  EXPECT_FALSE(w.feasible);
  EXPECT_FALSE(w.objective.has_value());
  ASSERT_TRUE(w.violating_subspace);
  EXPECT_EQ(*w.violating_subspace, QSubspace::coordinate(3, {2}));
}

TEST(Feasibility, KnownFamilies) {
  EXPECT_TRUE(is_bl_feasible(loomis_whitney(), coordinate_family(3)));
  EXPECT_FALSE(is_bl_feasible({drop_z()}, critical_subspaces({drop_z()})));
  FeasibilityResult r = bl_feasibility(coordinate_plane_projections(4, 3), coordinate_family(4));
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.witness, std::vector<Rational>(4, Rational(1, 3)));
}

TEST(BldatumProperties, CoordinateHyperplanesFeasibleUpToSix) {
  for (std::size_t d = 2; d <= 6; ++d) {
    auto p = coordinate_plane_projections(d, d - 1);
    EXPECT_TRUE(is_bl_feasible(p, critical_subspaces(p))) << "d = " << d;
  }
}

TEST(BldatumProperties, OptimalWeightsFormAValidDatum) {
  std::mt19937_64 rng(21);
  int feasible = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t d = 2 + rng() % 3, m = 2 + rng() % 3;
    std::vector<LinearSurjection> p;
    while (p.size() < m) {
      std::size_t k = 1 + rng() % (d - 1);
      QMatrix a = oracle::random_matrix(k, d, rng);
      if (rank(a) == k) p.emplace_back(a);
    }
    std::vector<Rational> s;
    for (std::size_t i = 0; i < m; ++i) s.push_back(make_rational(Integer(static_cast<long>(rng() % 10)), Integer(4)));
    SubspaceFamily fam = critical_subspaces(p);
    WeightSolution w = optimize_weights(p, s, fam);
    if (!w.feasible) continue;
    ++feasible;
    // Optimal vertices may have zero weights, which a datum forbids, so check
    // the constraints on the LP point itself.
    Rational total;
    for (std::size_t i = 0; i < m; ++i) total += w.weights[i] * static_cast<unsigned long>(p[i].target_dim());
    EXPECT_EQ(total, static_cast<unsigned long>(d));
    for (const auto& v : fam.members) {
      Rational rhs;
      for (std::size_t i = 0; i < m; ++i) rhs += w.weights[i] * static_cast<unsigned long>(image_dim(p[i].matrix(), v));
      EXPECT_LE(Rational(static_cast<unsigned long>(v.dim())), rhs);
    }
    if (w.all_positive) {
      ConditionReport r = check_dimension_condition({p, w.weights}, fam);
      EXPECT_TRUE(r.scaling_ok);
      EXPECT_TRUE(r.dimension_ok);
    }
  }
  EXPECT_GT(feasible, 5);
}

TEST(BldatumProperties, EnlargingTheFamilyIsMonotone) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t d = 3;
    std::vector<LinearSurjection> p;
    while (p.size() < 3) {
      QMatrix a = oracle::random_matrix(2, d, rng);
      if (rank(a) == 2) p.emplace_back(a);
    }
    std::vector<Rational> s{1, Rational(1, 2), Rational(3, 4)};
    CriticalOptions small;
    small.include_coordinate = false;
    CriticalOptions large;
    large.random_samples = 10;
    large.seed = static_cast<std::uint64_t>(trial);
    SubspaceFamily f1 = critical_subspaces(p, small), f2 = critical_subspaces(p, large);
    WeightSolution w1 = optimize_weights(p, s, f1), w2 = optimize_weights(p, s, f2);
    if (!w1.feasible) {
      EXPECT_FALSE(w2.feasible);
    } else if (w2.feasible) {
      EXPECT_GE(*w2.objective, *w1.objective);
    }
  }
}

TEST(DatumFile, ParsesAndRoundTrips) {
  const std::string text =
      "# Loomis-Whitney\n"
      "ambient 3\n"
      "projection 2\n1 0 0\n0 1 0\n"
      "projection 2\n1 0 0\n0 0 1\n"
      "projection 2\n0 1 0\n0 0 1\n"
      "weights 0.5 1/2 2/4\n";
  DatumFile f = parse_datum(text);
  EXPECT_EQ(f.ambient_dim, 3u);
  EXPECT_EQ(f.projections.size(), 3u);
  EXPECT_TRUE(check_scaling(f.datum()));
  std::string once = format_datum(f);
  EXPECT_EQ(format_datum(parse_datum(once)), once);
  EXPECT_NE(once.find("weights 1/2 1/2 1/2"), std::string::npos);
}

TEST(DatumFile, ErrorsNameTheLine) {
  try {
    parse_datum("ambient 3\nprojection 1\n1 0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::input);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_datum("ambient 2\nprojection 1\n0 0\n"), Error);
  EXPECT_THROW(parse_datum("ambient 2\nbogus\n"), Error);
  EXPECT_THROW(parse_datum("ambient 2\nprojection 1\n1 0\nweights 1 2\n"), Error);
}
