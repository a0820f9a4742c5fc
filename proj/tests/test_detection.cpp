#include <gtest/gtest.h>

#include <random>

#include "craqreg/detection.hpp"
#include "craqreg/error.hpp"
#include "craqreg/junction_backend.hpp"
#include "craqreg/synthetic.hpp"
#include "oracles.hpp"

using namespace craqreg;

namespace {

ScalarMap random_heatmap(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<float> u(0.f, 1.f);
  ScalarMap m(w, h);
  // Quantized values produce plenty of ties; a share of zeros exercises the
  // positive-only rule.
  for (float& v : m.values()) {
    const float r = u(rng);
    v = r < 0.2f ? 0.f : std::floor(r * 16.f) / 16.f;
  }
  return m;
}

}  // namespace

TEST(PlanPatches, ClampedSingleRow) {
  const PatchGrid g = plan_patches(1500, 1000, 1024);
  ASSERT_EQ(g.origins.size(), 2u);
  EXPECT_EQ(g.origins[0], (PatchOrigin{0, 0}));
  EXPECT_EQ(g.origins[1], (PatchOrigin{476, 0}));
  EXPECT_EQ(g.patch_width(), 1024);
  EXPECT_EQ(g.patch_height(), 1000);
}

TEST(PlanPatches, CoversImageExactly) {
  for (auto [w, h, p] : {std::tuple{2048, 2048, 1024}, {3000, 1100, 1024}, {700, 500, 1024},
                         {1025, 64, 64}}) {
    const PatchGrid g = plan_patches(w, h, p);
    std::vector<std::uint8_t> cover(static_cast<std::size_t>(w) * h, 0);
    for (const auto& o : g.origins) {
      EXPECT_LE(o.x + g.patch_width(), w);
      EXPECT_LE(o.y + g.patch_height(), h);
      for (int y = o.y; y < o.y + g.patch_height(); ++y)
        for (int x = o.x; x < o.x + g.patch_width(); ++x) cover[std::size_t(y) * w + x] = 1;
    }
    EXPECT_EQ(std::count(cover.begin(), cover.end(), 1), static_cast<long>(w) * h);
  }
  EXPECT_EQ(plan_patches(2048, 2048, 1024).origins.size(), 4u);
}

TEST(Nms, WindowExamples) {
  ScalarMap h(32, 32);
  h.at(10, 10) = 0.9f;
  h.at(13, 10) = 0.8f;
  auto kp = nms(h, 4);
  ASSERT_EQ(kp.size(), 1u);
  EXPECT_EQ(kp[0].pos, (Point2{10, 10}));
  h.at(13, 10) = 0.f;
  h.at(19, 10) = 0.8f;
  kp = nms(h, 4);
  EXPECT_EQ(kp.size(), 2u);
}

TEST(Nms, PlateauKeepsFirstInScanOrder) {
  ScalarMap h(10, 10);
  h.at(3, 4) = h.at(5, 4) = h.at(4, 5) = 0.5f;
  const auto kp = nms(h, 4);
  ASSERT_EQ(kp.size(), 1u);
  EXPECT_EQ(kp[0].pos, (Point2{3, 4}));
}

TEST(Nms, MatchesOracleOnRandomMaps) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    const ScalarMap h = random_heatmap(rng, 40 + t % 7, 30 + t % 5);
    EXPECT_EQ(nms(h, 4), oracle::nms(h, 4));
  }
}

TEST(Merge, Invariants) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 300);
  std::uniform_real_distribution<double> s(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<Keypoint> c;
    for (int i = 0; i < 400; ++i) c.push_back({{std::floor(u(rng)), std::floor(u(rng))}, s(rng)});
    const double tau = t % 2 ? 0.3 : 0.0;
    const int n_max = t % 3 ? 50 : 10000;
    const auto kept = merge_keypoints(c, 4, tau, n_max);
    EXPECT_LE(kept.size(), static_cast<std::size_t>(n_max));
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_GT(c[kept[i]].score, tau);
      if (i) EXPECT_GE(c[kept[i - 1]].score, c[kept[i]].score);
      for (std::size_t j = 0; j < i; ++j) {
        const bool close = std::abs(c[kept[i]].pos.x - c[kept[j]].pos.x) <= 4 &&
                           std::abs(c[kept[i]].pos.y - c[kept[j]].pos.y) <= 4;
        EXPECT_FALSE(close);
      }
    }
  }
}

TEST(SampleDescriptor, BilinearWeights) {
  DenseDescriptorGrid g(2, 2);
  for (int k = 0; k < 4; ++k) {
    Descriptor d{};
    d[k] = 1.f;
    g.set(k % 2, k / 2, d);  // node (i, j) carries e_{i + 2j}
  }
  const auto w = oracle::bilinear_weights(0.25, 0.75);
  EXPECT_DOUBLE_EQ(w[0], 0.1875);
  EXPECT_DOUBLE_EQ(w[1], 0.5625);
  EXPECT_DOUBLE_EQ(w[2], 0.0625);
  EXPECT_DOUBLE_EQ(w[3], 0.1875);
  const Descriptor d = sample_descriptor(g, {0.25 * kHeadStride, 0.75 * kHeadStride});
  const double norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2] + w[3] * w[3]);
  EXPECT_NEAR(d[0], w[0] / norm, 1e-6);  // (x0, y0)
  EXPECT_NEAR(d[2], w[1] / norm, 1e-6);  // (x0, y1)
  EXPECT_NEAR(d[1], w[2] / norm, 1e-6);  // (x1, y0)
  EXPECT_NEAR(d[3], w[3] / norm, 1e-6);  // (x1, y1)
}

TEST(Backend, UnknownNameIsConfigError) {
  try {
    make_backend("superpoint");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "backend");
  }
}

TEST(Backend, YCrackPeakNearJunction) {
  const ImageBuffer y = synth::y_crack(128, 128, {64, 64});
  const auto pred = make_backend("junction")->detect_patch(y, Exec::serial());
  ASSERT_EQ(pred.heatmap.width(), 32);
  int bx = 0, by = 0;
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i)
      if (pred.heatmap.at(i, j) > pred.heatmap.at(bx, by)) bx = i, by = j;
  EXPECT_GT(pred.heatmap.at(bx, by), 0.f);
  EXPECT_LE(std::hypot(bx - 16.0, by - 16.0), 2.0);
}

TEST(Backend, InversionRobust) {
  const auto pair = synth::make_pair(256, 256, synth::Modality::IdentityNoise, 9);
  ImageBuffer inv = pair.reference;
  for (auto& v : inv.samples()) v = static_cast<std::uint8_t>(255 - v);
  const auto backend = make_backend("junction");
  const auto a = backend->detect_patch(pair.reference, {}).heatmap;
  const auto b = backend->detect_patch(inv, {}).heatmap;
  double diff = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) diff += std::abs(a.values()[i] - b.values()[i]);
  EXPECT_LE(diff / a.values().size(), 0.05);
}

TEST(DetectImage, JunctionFieldRecall) {
  const auto f = synth::y_junction_field(640, 480, 20, 4);
  RegistrationConfig cfg;
  const DetectionResult r = detect_image(f.image, cfg);
  EXPECT_GE(r.size(), 16u);
  EXPECT_LE(r.size(), 24u);
  // Pooling to the 4 px grid and the (y, x) tie rule move a peak by up to
  // 2 px per axis; the skeleton junction adds up to 1 px per axis.
  const double bound = std::hypot(3.0, 3.0);
  int within3 = 0;
  for (const auto& kp : r.keypoints) {
    double best = 1e9;
    for (const auto& j : f.junctions) best = std::min(best, std::hypot(kp.pos.x - j.x, kp.pos.y - j.y));
    EXPECT_LE(best, bound) << kp.pos.x << "," << kp.pos.y;
    within3 += best <= 3.0;
  }
  EXPECT_GE(within3, static_cast<int>(std::ceil(0.8 * f.junctions.size())));
  for (const auto& d : r.descriptors) {
    double n = 0;
    for (float v : d) n += double(v) * v;
    EXPECT_NEAR(n, 1.0, 1e-5);
  }

  cfg.n_max = 5;
  const DetectionResult top = detect_image(f.image, cfg);
  ASSERT_EQ(top.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(top.keypoints[i], r.keypoints[i]);
}

TEST(DetectImage, BlankImageFails) {
  try {
    detect_image(ImageBuffer(300, 200, 1, 128), RegistrationConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyDetection);
  }
}

TEST(DetectImage, SerialEqualsParallel) {
  const auto pair = synth::make_pair(600, 450, synth::Modality::GammaBlur, 3);
  RegistrationConfig cfg;
  for (int patch : {1024, 256}) {
    cfg.patch_size = patch;
    cfg.workers = 1;
    const DetectionResult serial = detect_image(pair.moving, cfg);
    cfg.workers = 4;
    EXPECT_EQ(serial, detect_image(pair.moving, cfg)) << "patch " << patch;
  }
}

TEST(DetectImage, OverlapMergeLeavesNoNeighbors) {
  const auto pair = synth::make_pair(500, 500, synth::Modality::IdentityNoise, 5);
  RegistrationConfig cfg;
  cfg.patch_size = 128;
  const DetectionResult r = detect_image(pair.reference, cfg);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      EXPECT_FALSE(std::abs(r.keypoints[i].pos.x - r.keypoints[j].pos.x) <= kNmsRadius &&
                   std::abs(r.keypoints[i].pos.y - r.keypoints[j].pos.y) <= kNmsRadius);
}
