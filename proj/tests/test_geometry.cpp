#include <gtest/gtest.h>

#include <random>

#include "craqreg/error.hpp"
#include "craqreg/geometry.hpp"
#include "oracles.hpp"

using namespace craqreg;

namespace {

std::vector<Correspondence> transfer(const Homography& h, const std::vector<Point2>& b) {
  std::vector<Correspondence> c;
  for (const auto& p : b) c.push_back({apply(h, p), p});
  return c;
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no craqreg::Error thrown";
  return ErrorKind::Io;
}

}  // namespace

TEST(Homography, ApplyDiagonal) {
  const Homography h = Homography::scaling(2, 2);
  const Point2 p = apply(h, {3, 4});
  EXPECT_EQ(p.x, 6.0);
  EXPECT_EQ(p.y, 8.0);
}

TEST(Homography, ApplyAtInfinityThrows) {
  const Homography h({1, 0, 0, 0, 1, 0, 1, 0, 1});
  EXPECT_EQ(kind_of([&] { apply(h, {-1, 5}); }), ErrorKind::DegeneratePoint);
}

TEST(Homography, NormalizedOnConstruction) {
  const Homography h({2, 0, 4, 0, 2, 6, 0, 0, 2});
  EXPECT_EQ(h(2, 2), 1.0);
  EXPECT_EQ(h(0, 2), 2.0);
  const Homography z({0, 1, 0, -1, 0, 1, 0.5, 0, 0});
  EXPECT_EQ(z(2, 2), 0.0);
  double norm = 0;
  for (double v : z.matrix()) norm += v * v;
  EXPECT_NEAR(norm, 1.0, 1e-15);
  EXPECT_GT(z(0, 1), 0.0);
}

TEST(Homography, RejectsSingular) {
  EXPECT_EQ(kind_of([] { Homography({1, 2, 3, 2, 4, 6, 0, 0, 1}).inverse(); }),
            ErrorKind::DegenerateHomography);
  EXPECT_EQ(kind_of([] { Homography({0, 0, 0, 0, 0, 0, 0, 0, 0}); }),
            ErrorKind::DegenerateHomography);
}

TEST(Homography, InverseAndComposition) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Homography h = oracle::random_homography(rng, 800, 600);
    const auto probes = grid_points(800, 600, 5);
    EXPECT_LT(max_transfer_difference(h * h.inverse(), Homography::identity(), probes), 1e-9);
    const Homography g = oracle::random_homography(rng, 800, 600);
    for (const auto& p : probes) {
      const Point2 a = apply(h * g, p);
      const Point2 b = apply(h, apply(g, p));
      EXPECT_NEAR(a.x, b.x, 1e-8);
      EXPECT_NEAR(a.y, b.y, 1e-8);
    }
  }
}

TEST(Dlt, MatchesFourPointOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1000);
  for (int t = 0; t < 200; ++t) {
    const Homography h = oracle::random_homography(rng, 1000, 1000);
    std::array<Correspondence, 4> c;
    for (auto& ci : c) {
      ci.b = {u(rng), u(rng)};
      ci.a = apply(h, ci.b);
    }
    std::array<Point2, 4> pts{c[0].b, c[1].b, c[2].b, c[3].b};
    if (has_collinear_triple(pts)) continue;
    const Homography est = estimate_dlt(c);
    const Homography ref(oracle::homography_from_4(c));
    EXPECT_LT(max_transfer_difference(est, ref, grid_points(1000, 1000, 5)), 1e-6);
  }
}

TEST(Dlt, EightExactPointsRecoverHeldOutGrid) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1000);
  const Homography h = oracle::random_homography(rng, 1000, 1000);
  std::vector<Point2> b;
  for (int i = 0; i < 8; ++i) b.push_back({u(rng), u(rng)});
  const Homography est = estimate_dlt(transfer(h, b));
  const auto held_out = grid_points(1000, 1000, 5);
  ASSERT_EQ(held_out.size(), 25u);
  EXPECT_LT(max_transfer_difference(est, h, held_out), 1e-6);
}

TEST(Dlt, DegenerateInputs) {
  const std::vector<Correspondence> three{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
  EXPECT_EQ(kind_of([&] { estimate_dlt(three); }), ErrorKind::DegenerateConfiguration);
  std::vector<Correspondence> line;
  for (int i = 0; i < 6; ++i) line.push_back({{double(i), 2.0 * i}, {double(i), 2.0 * i}});
  EXPECT_EQ(kind_of([&] { estimate_dlt(line); }), ErrorKind::DegenerateConfiguration);
  const std::vector<Correspondence> collinear4{
      {{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}, {{0, 5}, {0, 5}}};
  EXPECT_EQ(kind_of([&] { estimate_dlt(collinear4); }), ErrorKind::DegenerateConfiguration);
}

TEST(Dlt, WeightedIgnoresZeroWeights) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 500);
  const Homography h = oracle::random_homography(rng, 500, 500);
  std::vector<Point2> b;
  for (int i = 0; i < 12; ++i) b.push_back({u(rng), u(rng)});
  auto c = transfer(h, b);
  std::vector<double> w(c.size(), 1.0);
  c[3].a.x += 80;
  c[7].a.y -= 55;
  w[3] = w[7] = 0.0;
  EXPECT_LT(max_transfer_difference(estimate_dlt_weighted(c, w), h, grid_points(500, 500, 5)), 1e-6);
  std::vector<double> bad(c.size() - 1, 1.0);
  EXPECT_EQ(kind_of([&] { estimate_dlt_weighted(c, bad); }), ErrorKind::InvalidInput);
}

TEST(Reprojection, TranslationExample) {
  EXPECT_DOUBLE_EQ(reprojection_error(Homography::translation(1, 0), {{2, 0}, {0, 0}}), 1.0);
}

TEST(Collinearity, Triples) {
  EXPECT_TRUE(has_collinear_triple({{{0, 0}, {1, 1}, {2, 2}, {5, 0}}}));
  EXPECT_FALSE(has_collinear_triple({{{0, 0}, {10, 0}, {0, 10}, {10, 10}}}));
  EXPECT_TRUE(has_collinear_triple({{{0, 0}, {0, 0}, {3, 4}, {5, 0}}}));
}

TEST(GridPoints, CoversFrame) {
  const auto g = grid_points(100, 50, 3);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g.front(), (Point2{0, 0}));
  EXPECT_EQ(g.back(), (Point2{100, 50}));
}
