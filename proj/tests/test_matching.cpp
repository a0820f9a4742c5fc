#include <gtest/gtest.h>

#include <random>

#include "craqreg/error.hpp"
#include "craqreg/matching.hpp"
#include "oracles.hpp"

using namespace craqreg;

namespace {

Descriptor axis(int k, float scale = 1.f) {
  Descriptor d{};
  d[k] = scale;
  return d;
}

}  // namespace

TEST(MutualNN, IdentitySets) {
  std::vector<Descriptor> a{axis(0), axis(1), axis(2), axis(3)};
  const auto m = match_mutual_nn(a, a);
  ASSERT_EQ(m.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(m[i], (Match{i, i, 0.0}));
}

TEST(MutualNN, SwappedPair) {
  std::vector<Descriptor> a{axis(0), axis(1), axis(2)};
  std::vector<Descriptor> b{axis(0), axis(2), axis(1)};
  const auto m = match_mutual_nn(a, b);
  EXPECT_EQ(m, oracle::mutual_nn(a, b));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[1], (Match{1, 2, 0.0}));
  EXPECT_EQ(m[2], (Match{2, 1, 0.0}));
}

TEST(MutualNN, NonMutualExcluded) {
  // a0 and a1 both prefer b0, and b0 prefers a1: only (1, 0) survives.
  Descriptor a0 = axis(0, 0.6f);
  a0[1] = 0.8f;
  const std::vector<Descriptor> a{a0, axis(0)};
  const std::vector<Descriptor> b{axis(0), axis(2)};
  const auto m = match_mutual_nn(a, b);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].idx_ref, 1);
  EXPECT_EQ(m[0].idx_mov, 0);
}

TEST(MutualNN, EmptyIsNoMatches) {
  const std::vector<Descriptor> a{axis(0)};
  const std::vector<Descriptor> none;
  try {
    match_mutual_nn(a, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoMatches);
  }
}

TEST(MutualNN, OracleAndSymmetry) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng() % 50), m = 1 + static_cast<int>(rng() % 50);
    std::vector<Descriptor> a, b;
    for (int i = 0; i < n; ++i) a.push_back(oracle::random_descriptor(rng));
    for (int i = 0; i < m; ++i) b.push_back(i % 5 == 0 && i / 5 < n ? a[i / 5] : oracle::random_descriptor(rng));
    const auto got = match_mutual_nn(a, b, Exec::serial());
    EXPECT_EQ(got, oracle::mutual_nn(a, b));
    EXPECT_EQ(got, match_mutual_nn(a, b, Exec::threads(4)));
    auto swapped = match_mutual_nn(b, a);
    std::set<std::pair<int, int>> x, y;
    for (const auto& mm : got) x.insert({mm.idx_ref, mm.idx_mov});
    for (const auto& mm : swapped) y.insert({mm.idx_mov, mm.idx_ref});
    EXPECT_EQ(x, y);
  }
}

TEST(NearestNeighbors, SerialEqualsParallelLarge) {
  std::mt19937_64 rng(5);
  std::vector<Descriptor> a, b;
  for (int i = 0; i < 900; ++i) a.push_back(oracle::random_descriptor(rng));
  for (int i = 0; i < 700; ++i) b.push_back(oracle::random_descriptor(rng));
  b[17] = a[3];
  b[18] = a[3];  // tie: a3's nearest must be the smaller index
  const auto s = nearest_neighbors(a, b, Exec::serial());
  const auto p = nearest_neighbors(a, b, Exec::threads(4));
  EXPECT_EQ(s.ref_to_mov, p.ref_to_mov);
  EXPECT_EQ(s.mov_to_ref, p.mov_to_ref);
  EXPECT_EQ(s.ref_to_mov_d2, p.ref_to_mov_d2);
  EXPECT_EQ(s.ref_to_mov[3], 17);
}
