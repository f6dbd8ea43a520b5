#include <gtest/gtest.h>

#include <random>
#include <set>

#include "bllab/fracgen.hpp"
#include "bllab/setops.hpp"
#include "test_support.hpp"

using namespace bllab;

namespace {

CubeSet cantor(int n) { return cantor_digits(3, {0, 2}, n); }

CubeSet cantor2(int n) { return product({cantor(n), cantor(n)}); }

// Exact image interval of a closed cell under a rational row, normalized so
// the unit cube maps onto [0, 1], in target cell units.
std::pair<Rational, Rational> exact_interval(const std::vector<Rational>& row, const std::vector<Coord>& c, Coord side) {
  Rational lo, hi, ymin, ymax;
  for (std::size_t j = 0; j < row.size(); ++j) {
    (row[j] < 0 ? lo : hi) += row[j];
    Rational a = row[j] * c[j], b = row[j] * (c[j] + 1);
    ymin += std::min(a, b);
    ymax += std::max(a, b);
  }
  Rational w = hi - lo;
  return {(ymin - lo * side) / w, (ymax - lo * side) / w};
}

CubeSet random_set(int b, int n, int d, double p, std::mt19937_64& rng) {
  CubeSet shape(b, n, d);
  std::uint64_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::uint64_t>(shape.side());
  std::bernoulli_distribution keep(p);
  std::vector<CellKey> keys;
  for (CellKey k = 0; k < total; ++k)
    if (keep(rng)) keys.push_back(k);
  if (keys.empty()) keys.push_back(0);
  return CubeSet::from_keys(b, n, d, keys);
}

// Every cell of the d-dimensional grid whose coordinate projections lie in the sets.
CubeSet brute_product(const std::vector<LinearSurjection>& ps, const std::vector<CubeSet>& sets, int d) {
  CubeSet shape(sets.front().base(), sets.front().level(), d);
  std::uint64_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::uint64_t>(shape.side());
  std::vector<CellKey> keys;
  std::vector<Coord> z(static_cast<std::size_t>(d));
  for (CellKey k = 0; k < total; ++k) {
    shape.decode(k, z);
    bool ok = true;
    for (std::size_t i = 0; i < ps.size() && ok; ++i) {
      std::vector<Coord> img;
      const auto axes = *ps[i].coordinate_axes();
      for (auto a : axes) img.push_back(z[a]);
      ok = sets[i].contains(img);
    }
    if (ok) keys.push_back(k);
  }
  return CubeSet::from_keys(shape.base(), shape.level(), d, keys);
}

}  // namespace

TEST(ProjectCubes, DroppingACoordinateOfTheCantorCube) {
  for (int n = 1; n <= 5; ++n) {
    CubeSet c3 = product({cantor(n), cantor(n), cantor(n)});
    CubeSet img = project_cubes(coordinate_projection(3, {0, 1}), c3);
    EXPECT_EQ(img.size(), std::size_t{1} << (2 * n));
    EXPECT_EQ(img, cantor2(n));
  }
}

TEST(ProjectCubes, CornerPointsCollapseToTheDiagonal) {
  CubeSet pts = finite_points({{0, 0, 0}, {1, 1, 1}}, 2, 2);
  CubeSet img = project_cubes(coordinate_projection(3, {0, 1}), pts);
  EXPECT_EQ(img, CubeSet::from_cells(2, 2, 2, {{0, 0}, {3, 3}}));
}

TEST(ProjectCubes, NormalizedSumOfCantorSquareMatchesOracle) {
  LinearSurjection sum(QMatrix{{1, 1}});
  for (int n = 1; n <= 7; ++n) {
    CubeSet x = cantor2(n);
    CubeSet img = project_cubes(sum, x);
    std::set<Coord> want;
    for (const auto& c : x.cells()) {
      // [i + j, i + j + 2] / 2 in cell units; keep cells meeting its interior
      Coord s = c[0] + c[1];
      want.insert(s / 2);
      if (s % 2 == 1) want.insert(s / 2 + 1);
    }
    std::vector<std::vector<Coord>> cells;
    for (Coord v : want)
      if (v < x.side()) cells.push_back({v});
    EXPECT_EQ(img, CubeSet::from_cells(3, n, 1, cells)) << "n = " << n;
    // C + C = [0, 2], so the image fills a fixed fraction of the line
    EXPECT_GE(img.size() * 2, static_cast<std::size_t>(x.side()));
  }
}

TEST(ProjectCubes, CoverMatchesExactIntervalOnRandomCells) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t d = 2 + rng() % 3;
    QMatrix m = oracle::random_matrix(1, d, rng);
    bool nonzero = false;
    for (std::size_t j = 0; j < d; ++j) nonzero = nonzero || m(0, j) != 0;
    if (!nonzero) continue;
    int b = 2 + static_cast<int>(rng() % 3), n = 1 + static_cast<int>(rng() % 4);
    CubeSet shape(b, n, static_cast<int>(d));
    std::vector<Coord> c(d);
    for (auto& v : c) v = static_cast<Coord>(rng() % static_cast<std::uint64_t>(shape.side()));
    auto chart = detail::LinearChart::of(m);
    auto [first, last] = chart.cover(0, c, shape.side());
    auto [lo, hi] = exact_interval(m.row(0), c, shape.side());
    for (Coord t = 0; t < shape.side(); ++t) {
      bool interior = lo < t + 1 && hi > t;
      bool degenerate = lo == hi && lo >= t && lo <= t + 1;
      bool in_range = t >= first && t <= last;
      if (interior) {
        EXPECT_TRUE(in_range) << "cell " << t << " meets the interior of the image";
      }
      if (in_range) {
        EXPECT_TRUE(interior || degenerate) << "cell " << t << " is outside the image";
      }
    }
  }
}

TEST(ProjectCubes, RejectsMismatchedSets) {
  EXPECT_THROW(project_cubes(coordinate_projection(3, {0}), cantor2(2)), Error);
}

TEST(ConstrainedProduct, LoomisWhitneyOfCantorSquares) {
  for (int n = 1; n <= 4; ++n) {
    auto lw = coordinate_plane_projections(3, 2);
    CubeSet x = constrained_product(lw, {cantor2(n), cantor2(n), cantor2(n)});
    EXPECT_EQ(x, product({cantor(n), cantor(n), cantor(n)}));
  }
}

TEST(ConstrainedProduct, ComplementaryProjectionsGiveCartesianProduct) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    CubeSet a = random_set(3, 2, 1, 0.5, rng), b = random_set(3, 2, 2, 0.3, rng);
    auto ps = std::vector<LinearSurjection>{coordinate_projection(3, {1}), coordinate_projection(3, {0, 2})};
    CubeSet got = constrained_product(ps, {a, b});
    EXPECT_EQ(got, brute_product(ps, {a, b}, 3));
    EXPECT_EQ(got.size(), a.size() * b.size());
    EXPECT_EQ(constrained_product_count(ps, {Integer(static_cast<unsigned long>(a.size())),
                                             Integer(static_cast<unsigned long>(b.size()))},
                                        [&] { return std::vector<CubeSet>{a, b}; }),
              Integer(static_cast<unsigned long>(got.size())));
  }
}

TEST(ConstrainedProduct, IncompatibleSetsGiveEmptyProduct) {
  auto ps = std::vector<LinearSurjection>{coordinate_projection(3, {0, 1}), coordinate_projection(3, {0, 2})};
  CubeSet a = CubeSet::from_cells(2, 1, 2, {{0, 0}}), b = CubeSet::from_cells(2, 1, 2, {{1, 1}});
  EXPECT_TRUE(constrained_product(ps, {a, b}).empty());
}

TEST(ConstrainedProduct, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 rng(9);
  auto lw = coordinate_plane_projections(3, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CubeSet> sets;
    for (int i = 0; i < 3; ++i) sets.push_back(random_set(2, 3, 2, 0.6, rng));
    CubeSet got = constrained_product(lw, sets);
    EXPECT_EQ(got, brute_product(lw, sets, 3));
    // every projection of the product lands back inside its prescribed set
    for (std::size_t i = 0; i < lw.size(); ++i) {
      CubeSet back = project_cubes(lw[i], got);
      for (const auto& c : back.cells()) EXPECT_TRUE(sets[i].contains(c));
    }
    auto count = constrained_product_count(lw, {0, 0, 0}, [&] { return sets; });
    EXPECT_EQ(count, Integer(static_cast<unsigned long>(got.size())));
  }
}

TEST(ConstrainedProduct, SearchBoundCoversTheProduct) {
  auto lw = coordinate_plane_projections(3, 2);
  std::vector<CubeSet> sets(3, cantor2(5));
  EXPECT_EQ(constrained_product_bound(lw, sets), Integer(1) << 15);
  EXPECT_GE(constrained_product_bound(lw, sets), Integer(static_cast<unsigned long>(constrained_product(lw, sets).size())));
  try {
    constrained_product(lw, sets, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::budget);
  }
}

TEST(ConstrainedProduct, NonCoordinateProjectionsNeedTheOuterVariant) {
  auto ps = std::vector<LinearSurjection>{LinearSurjection(QMatrix{{1, 1}}), coordinate_projection(2, {0})};
  std::vector<CubeSet> sets{full_cube(2, 2, 1), cantor_digits(2, {0}, 2)};
  try {
    constrained_product(ps, sets);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
  OuterProduct o = constrained_product_outer(ps, sets);
  EXPECT_TRUE(o.outer);
  // x digit fixed at 0 keeps the first column; every sum cell is allowed
  EXPECT_EQ(o.cells.size(), 4u);
}

TEST(ConstrainedProduct, OuterVariantIsExactForCoordinateProjections) {
  std::mt19937_64 rng(10);
  auto lw = coordinate_plane_projections(3, 2);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<CubeSet> sets;
    for (int i = 0; i < 3; ++i) sets.push_back(random_set(3, 2, 2, 0.5, rng));
    EXPECT_EQ(constrained_product_outer(lw, sets).cells, constrained_product(lw, sets));
  }
}

TEST(ConstrainedSumset, MatchesSumOracle) {
  for (int n = 1; n <= 5; ++n) {
    CubeSet c = cantor(n);
    CubeSet got = constrained_sumset(c, 2);
    std::set<Coord> want;
    for (const auto& a : c.cells())
      for (const auto& b : c.cells()) {
        Coord s = a[0] + b[0];
        want.insert(s / 2);
        if (s % 2) want.insert(s / 2 + 1);
      }
    std::vector<std::vector<Coord>> cells;
    for (Coord v : want)
      if (v < c.side()) cells.push_back({v});
    EXPECT_EQ(got, CubeSet::from_cells(3, n, 1, cells));
  }
}

TEST(ConstrainedSumset, PlaneProjectionsInThreeDimensions) {
  CubeSet x = cantor2(3);
  auto lw = coordinate_plane_projections(3, 2);
  CubeSet prod = constrained_product(lw, {x, x, x});
  std::set<Coord> want;
  for (const auto& z : prod.cells()) {
    Coord s = z[0] + z[1] + z[2];
    want.insert(s / 3);
    if (s % 3) want.insert(s / 3 + 1);
  }
  CubeSet got = constrained_sumset(x, 3);
  EXPECT_EQ(got.size(), want.size());
  for (Coord v : want) EXPECT_TRUE(got.contains(std::vector<Coord>{v}));
  EXPECT_THROW(constrained_sumset(x, 2), Error);
}
