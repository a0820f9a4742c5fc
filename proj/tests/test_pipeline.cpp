#include <gtest/gtest.h>

#include "craqreg/error.hpp"
#include "craqreg/evaluation.hpp"
#include "craqreg/pipeline.hpp"
#include "craqreg/synthetic.hpp"
#include "craqreg/zip.hpp"

using namespace craqreg;

namespace {

double grid_me(const Homography& a, const Homography& b, double w, double h) {
  const auto g = grid_points(w, h, 10);
  double s = 0;
  for (const auto& p : g) {
    const Point2 x = apply(a, p), y = apply(b, p);
    s += std::hypot(x.x - y.x, x.y - y.y);
  }
  return s / g.size();
}

}  // namespace

TEST(ResizePolicy, SameWidth) {
  const ResizedPair r = apply_resize_policy(ImageBuffer(2000, 1500, 1), ImageBuffer(1000, 800, 1),
                                            ResizePolicy::same_width());
  EXPECT_EQ(r.mov.width(), 2000);
  EXPECT_EQ(r.mov.height(), 1600);
  EXPECT_DOUBLE_EQ(r.s_mov, 2.0);
  EXPECT_DOUBLE_EQ(r.s_ref, 1.0);
}

TEST(ResizePolicy, CustomHeight) {
  const ResizedPair r = apply_resize_policy(ImageBuffer(3000, 2000, 1), ImageBuffer(1000, 4000, 1),
                                            ResizePolicy::custom_height(2000));
  EXPECT_EQ(r.mov.width(), 500);
  EXPECT_EQ(r.mov.height(), 2000);
  EXPECT_DOUBLE_EQ(r.s_mov, 0.5);
  try {
    apply_resize_policy(ImageBuffer(8, 8, 1), ImageBuffer(8, 8, 1), ResizePolicy::custom_height(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidPolicy);
  }
}

TEST(Register, SelfRegistrationIsIdentity) {
  const auto pair = synth::make_pair(400, 300, synth::Modality::IdentityNoise, 12);
  RegistrationConfig cfg;
  cfg.resize = ResizePolicy::none();
  const auto out = register_pair(pair.reference, pair.reference, cfg);
  EXPECT_LT(grid_me(out.h_original, Homography::identity(), 400, 300), 0.5);
}

TEST(Register, SyntheticGroundTruth) {
  for (auto m : {synth::Modality::IdentityNoise, synth::Modality::Inverted, synth::Modality::GammaBlur}) {
    const auto pair = synth::make_pair(480, 480, m, 31);
    const auto out = register_pair(pair.reference, pair.moving, RegistrationConfig{});
    EXPECT_LT(grid_me(out.h_original, pair.h_true, 480, 480), 3.0);
    EXPECT_EQ(out.warped_moving.width(), 480);
    EXPECT_EQ(out.warped_moving.height(), 480);
  }
}

TEST(Register, OriginalHomographyComposesScalings) {
  const auto pair = synth::make_pair(400, 400, synth::Modality::IdentityNoise, 14);
  const ImageBuffer small = resize_bilinear(pair.moving, 300, 300);
  const auto out = register_pair(pair.reference, small, RegistrationConfig{});
  EXPECT_DOUBLE_EQ(out.working_scale_mov, 400.0 / 300.0);
  const Homography expected = Homography::scaling(1 / out.working_scale_ref, 1 / out.working_scale_ref) *
                              out.h_working *
                              Homography::scaling(out.working_scale_mov, out.working_scale_mov);
  EXPECT_LT(max_transfer_difference(out.h_original, expected, grid_points(300, 300, 5)), 1e-9);
  // Ground truth for the small image: h_true composed with the downscale.
  const Homography truth = pair.h_true * Homography::scaling(400.0 / 300.0, 400.0 / 300.0);
  EXPECT_LT(grid_me(out.h_original, truth, 300, 300), 3.0);
  EXPECT_EQ(out.warped_moving.width(), 400);
}

TEST(Register, StageFailuresCarryKinds) {
  const auto pair = synth::make_pair(300, 300, synth::Modality::IdentityNoise, 2);
  try {
    register_pair(pair.reference, ImageBuffer(300, 300, 1, 90), RegistrationConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyDetection);
    EXPECT_EQ(failing_stage(e.kind()), "detection");
  }
  EXPECT_EQ(failing_stage(ErrorKind::NoMatches), "matching");
  EXPECT_EQ(failing_stage(ErrorKind::EstimationFailed), "estimation");
}

TEST(Warp, TranslationLeavesBlackBorder) {
  ImageBuffer img(12, 6, 1, 200);
  const ImageBuffer out = warp_image(img, Homography::translation(5, 0), 12, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 12; ++x) EXPECT_EQ(out.at(x, y), x < 5 ? 0 : 200);
}

TEST(Warp, ScaleTwoChecker) {
  ImageBuffer checker(2, 2, 1);
  checker.at(1, 0) = checker.at(0, 1) = 255;
  const ImageBuffer out = warp_image(checker, Homography::scaling(2, 2), 4, 4);
  EXPECT_EQ(out.at(0, 0), 0);
  EXPECT_EQ(out.at(2, 0), 255);
  EXPECT_EQ(out.at(0, 2), 255);
  EXPECT_EQ(out.at(2, 2), 0);
  EXPECT_EQ(out.at(1, 0), 128);  // 127.5 rounded
  EXPECT_EQ(out.at(1, 1), 128);
  EXPECT_EQ(out.at(3, 0), 0);  // beyond the source: black
}

TEST(Overlay, RedCyanAndBlend) {
  ImageBuffer ref(3, 1, 1, 10), warped(3, 1, 1, 250);
  const ImageBuffer rc = overlay_redcyan(ref, warped);
  EXPECT_EQ(rc.at(1, 0, 0), 10);
  EXPECT_EQ(rc.at(1, 0, 1), 250);
  EXPECT_EQ(rc.at(1, 0, 2), 250);
  EXPECT_EQ(overlay_blend(ref, warped, 0.0), ref);
  EXPECT_EQ(overlay_blend(ref, warped, 1.0), warped);
  EXPECT_EQ(overlay_blend(ref, warped, 0.5).at(0, 0), 130);
  EXPECT_EQ(overlay_blend(ref, to_rgb(warped), 0.25).channels(), 3);
  try {
    overlay_blend(ref, warped, 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AlphaOutOfRange);
  }
  try {
    overlay_redcyan(ref, ImageBuffer(2, 1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(RenderMatches, LineOffsetByReferenceWidth) {
  const ImageBuffer ref(50, 40, 1, 0), mov(60, 30, 1, 0);
  const std::vector<Keypoint> a{{{10, 10}, 1.0}}, b{{{20, 20}, 1.0}};
  const std::vector<Match> m{{0, 0, 0.0}};
  const std::vector<std::uint8_t> inl{1};
  const ImageBuffer c = render_matches(ref, mov, a, b, m, inl);
  EXPECT_EQ(c.width(), 110);
  EXPECT_EQ(c.height(), 40);
  for (auto [x, y] : {std::pair{10, 10}, {70, 20}, {40, 15}}) {
    EXPECT_EQ(c.at(x, y, 0), 255) << x;
    EXPECT_EQ(c.at(x, y, 1), 255) << x;
    EXPECT_EQ(c.at(x, y, 2), 0) << x;
  }
  // Keypoint circle (radius 3) in blue, away from the line.
  EXPECT_EQ(c.at(10, 13, 2), 255);
  EXPECT_EQ(c.at(10, 13, 0), 0);
  const ImageBuffer none = render_matches(ref, mov, a, b, m, std::vector<std::uint8_t>{0});
  EXPECT_EQ(none.at(40, 15, 0), 0);
}

TEST(Bundle, FilesListAndDeterminism) {
  const auto pair = synth::make_pair(320, 320, synth::Modality::Inverted, 8);
  RegistrationConfig cfg;
  cfg.visualize_matches = true;
  const auto out1 = register_pair(pair.reference, pair.moving, cfg);
  const auto out2 = register_pair(pair.reference, pair.moving, cfg);
  EXPECT_EQ(result_json(out1, cfg, false).dump(), result_json(out2, cfg, false).dump());
  EXPECT_EQ(out1.warped_moving, out2.warped_moving);

  const auto bundle = make_bundle(out1, pair.reference, cfg);
  std::vector<std::string> names;
  for (const auto& f : bundle) names.push_back(f.name);
  const auto j = nlohmann::json::parse(std::string(bundle.back().bytes.begin(), bundle.back().bytes.end()));
  EXPECT_EQ(j.at("files").get<std::vector<std::string>>(), names);
  EXPECT_EQ(zip_entry_names(make_zip(bundle)), names);
  EXPECT_TRUE(j.at("timings_ms").contains("detection"));
  EXPECT_EQ(j.at("warp").at("out_of_bounds_fill"), "black");
  EXPECT_EQ(make_zip(bundle), make_zip(make_bundle(out1, pair.reference, cfg)));
}
