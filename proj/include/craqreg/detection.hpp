#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "craqreg/config.hpp"
#include "craqreg/geometry.hpp"
#include "craqreg/image.hpp"
#include "craqreg/kernels.hpp"

namespace craqreg {

inline constexpr int kDescriptorDim = 128;
/// Resolution ratio between the image and the backend's output grids.
inline constexpr int kHeadStride = 4;
inline constexpr int kNmsRadius = 4;

using Descriptor = std::array<float, kDescriptorDim>;

struct Keypoint {
  Point2 pos;  // full-resolution image coordinates
  double score = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Keypoints sorted by descending score with index-aligned unit descriptors.
struct DetectionResult {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;

  std::size_t size() const noexcept { return keypoints.size(); }
  friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

struct PatchOrigin {
  int x = 0;
  int y = 0;
  friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

struct PatchGrid {
  int patch_size = 1024;
  int image_width = 0;
  int image_height = 0;
  std::vector<PatchOrigin> origins;  // row-major order

  /// Patch extent after clamping to the image (images smaller than a patch
  /// yield a single patch equal to the image).
  int patch_width() const noexcept { return std::min(patch_size, image_width); }
  int patch_height() const noexcept { return std::min(patch_size, image_height); }
};

PatchGrid plan_patches(int width, int height, int patch_size);

/// Dense grid of descriptors at head resolution. Node (i, j) sits at
/// full-resolution position (4 i, 4 j).
class DescriptorField {
 public:
  virtual ~DescriptorField() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  /// Unit-norm descriptor at grid node (i, j), 0 <= i < width(), 0 <= j < height().
  virtual Descriptor node(int i, int j) const = 0;
};

/// Materialized descriptor grid.
class DenseDescriptorGrid final : public DescriptorField {
 public:
  DenseDescriptorGrid(int width, int height);
  int width() const override { return width_; }
  int height() const override { return height_; }
  Descriptor node(int i, int j) const override { return nodes_[index(i, j)]; }
  void set(int i, int j, const Descriptor& d) { nodes_[index(i, j)] = d; }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * width_ + i; }
  int width_;
  int height_;
  std::vector<Descriptor> nodes_;
};

/// What a backend produces for one patch: a heatmap in [0, 1] and a
/// descriptor field, both at 1/4 of the patch resolution.
struct PatchPrediction {
  ScalarMap heatmap;
  std::shared_ptr<const DescriptorField> descriptors;
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::string name() const = 0;
  /// `patch` dimensions are multiples of 4. Must be safe to call concurrently;
  /// `exec` governs the backend's internal kernels.
  virtual PatchPrediction detect_patch(const ImageBuffer& patch, Exec exec) const = 0;
};

/// Backend registry; throws ConfigError("backend") for unknown names.
std::unique_ptr<DetectorBackend> make_backend(const std::string& name);

/// Runs a backend on a patch of any size, padding it to a multiple of 4 by
/// edge replication first.
PatchPrediction detect_patch(const DetectorBackend& backend, const ImageBuffer& patch,
                             Exec exec = {});

ScalarMap upsample_heatmap(const ScalarMap& h, int factor = kHeadStride, Exec exec = {});

/// Keeps positive pixels that are the strict maximum of their
/// (2r+1)x(2r+1) window; equal values are resolved in favor of the smallest
/// (y, x). Output is in row-major scan order.
std::vector<Keypoint> nms(const ScalarMap& h, int radius = kNmsRadius);

/// Bilinear interpolation of the four grid nodes around pos / 4, renormalized.
Descriptor sample_descriptor(const DescriptorField& field, const Point2& pos);

/// Greedy suppression over keypoints from overlapping patches: strongest
/// first, a keypoint is dropped if a kept one lies within the
/// (2r+1)x(2r+1) window. Then filtered to score > tau_kp, sorted by
/// descending score (ties by (y, x)) and truncated to n_max. Returns the
/// indices of the surviving input keypoints, in output order.
std::vector<std::size_t> merge_keypoints(std::span<const Keypoint> candidates, int radius,
                                         double tau_kp, int n_max);

/// Patch-wise detection and description of a whole image. Patches run in
/// parallel according to cfg.workers. Throws EmptyDetection when nothing
/// passes tau_kp.
DetectionResult detect_image(const ImageBuffer& img, const RegistrationConfig& cfg);
DetectionResult detect_image(const ImageBuffer& img, const RegistrationConfig& cfg,
                             const DetectorBackend& backend);

}  // namespace craqreg
