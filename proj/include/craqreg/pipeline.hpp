#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "craqreg/config.hpp"
#include "craqreg/detection.hpp"
#include "craqreg/error.hpp"
#include "craqreg/estimation.hpp"
#include "craqreg/geometry.hpp"
#include "craqreg/image.hpp"
#include "craqreg/matching.hpp"

namespace craqreg {

struct ResizedPair {
  ImageBuffer ref;
  ImageBuffer mov;
  double s_ref = 1.0;  // working = s * original
  double s_mov = 1.0;
};

/// same-width: moving resized to the reference width; custom-height: both
/// resized to the given height; none: untouched. Aspect ratio preserved,
/// bilinear. Throws InvalidPolicy for a non-positive custom height.
ResizedPair apply_resize_policy(const ImageBuffer& ref, const ImageBuffer& mov,
                                const ResizePolicy& policy, Exec exec = {});

/// Wall-clock duration of each pipeline stage, in execution order.
using StageTimings = std::vector<std::pair<std::string, double>>;

struct RegistrationOutput {
  Homography h_original;  // moving original -> reference original
  Homography h_working;   // moving working -> reference working
  ImageBuffer warped_moving;
  ImageBuffer overlay_redcyan;
  EstimationReport report;
  std::optional<ImageBuffer> matches_visualization;
  double working_scale_ref = 1.0;
  double working_scale_mov = 1.0;
  DetectionResult detections_ref;
  DetectionResult detections_mov;
  std::vector<Match> matches;
  StageTimings timings_ms;
};

/// Pipeline stage a failure belongs to: "detection" (EmptyDetection),
/// "matching" (NoMatches), "estimation" (EstimationFailed), otherwise "input".
std::string_view failing_stage(ErrorKind kind);

/// Full registration of `mov` onto `ref`.
RegistrationOutput register_pair(const ImageBuffer& ref, const ImageBuffer& mov,
                                 const RegistrationConfig& cfg);

/// Output pixel p samples `mov` at h^-1 p (bilinear, black outside).
ImageBuffer warp_image(const ImageBuffer& mov, const Homography& h, int out_w, int out_h,
                       Exec exec = {});

/// R = luma(ref), G = B = luma(warped).
ImageBuffer overlay_redcyan(const ImageBuffer& ref, const ImageBuffer& warped);

/// (1 - alpha) * ref + alpha * warped per channel, rounded to nearest.
/// A grayscale input is promoted to RGB when the other one is color.
ImageBuffer overlay_blend(const ImageBuffer& ref, const ImageBuffer& warped, double alpha);

/// Side-by-side canvas with blue keypoint circles (radius 3) and yellow
/// lines for inlier matches.
ImageBuffer render_matches(const ImageBuffer& ref, const ImageBuffer& mov,
                           std::span<const Keypoint> kps_ref, std::span<const Keypoint> kps_mov,
                           std::span<const Match> matches, std::span<const std::uint8_t> inlier_mask);

/// Bundle manifest. Timings are omitted when include_timings is false.
nlohmann::json result_json(const RegistrationOutput& out, const RegistrationConfig& cfg,
                           bool include_timings = true);

struct BundleFile {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

/// Encodes the result bundle in memory: reference.png, warped.png,
/// overlay_redcyan.png, matches.png (when present) and result.json, whose
/// "files" member lists exactly these names.
std::vector<BundleFile> make_bundle(const RegistrationOutput& out, const ImageBuffer& reference,
                                    const RegistrationConfig& cfg);
void write_bundle(const std::vector<BundleFile>& files, const std::filesystem::path& dir);

}  // namespace craqreg
