#pragma once

// Classical crack-junction backend. Cracks are thin dark or bright ridges;
// their branching points are found on the skeleton of the ridge map and
// described by gradient-orientation histograms of the ridge map itself, so
// the result does not depend on the crack's polarity in a given modality.

#include <cstdint>
#include <memory>
#include <vector>

#include "craqreg/detection.hpp"

namespace craqreg {

inline constexpr int kCrackDiskRadius = 3;
inline constexpr int kThresholdWindow = 31;
inline constexpr float kThresholdOffset = 0.05f;
inline constexpr double kStrengthPercentile = 0.995;
inline constexpr int kDescriptorWindow = 32;
inline constexpr double kDescriptorSigma = 8.0;
inline constexpr float kDescriptorClamp = 0.2f;

/// max(black-hat, white-top-hat) of the luma with a radius-3 disk,
/// normalized by its 99.5th percentile and clipped to [0, 1].
ScalarMap crack_strength(const ImageBuffer& patch, Exec exec = {});

/// Binary mask (0/1) of pixels exceeding the 31x31 local mean by 0.05.
std::vector<std::uint8_t> crack_mask(const ScalarMap& strength, Exec exec = {});

/// Zhang-Suen thinning of a 0/1 mask in place; pixels outside the image
/// count as background.
void thin_zhang_suen(std::vector<std::uint8_t>& mask, int width, int height, Exec exec = {});

/// Skeleton pixels where at least three branches meet: >= 3 set pixels in
/// the 8-neighborhood and >= 3 background-to-skeleton transitions around it.
bool is_junction(const std::vector<std::uint8_t>& skeleton, int width, int height, int x, int y);

/// Full-resolution junction map: crack strength at junction pixels, 0 elsewhere.
ScalarMap junction_map(const ScalarMap& strength, Exec exec = {});

/// Quarter-resolution heatmap: 4x4 max pooling of junction_map.
ScalarMap junction_heatmap(const ScalarMap& strength, Exec exec = {});

/// 4x4 spatial cells x 8 orientation bins over a 32x32 window of the
/// strength map, Gaussian weighted (sigma 8), trilinear binning, clamped at
/// 0.2 and renormalized. Flat neighborhoods give the uniform unit vector.
Descriptor junction_descriptor(const ScalarMap& strength, const Point2& pos);

/// Descriptor field evaluated on demand from a strength map.
class JunctionDescriptorField final : public DescriptorField {
 public:
  explicit JunctionDescriptorField(std::shared_ptr<const ScalarMap> strength);
  int width() const override;
  int height() const override;
  Descriptor node(int i, int j) const override;

 private:
  std::shared_ptr<const ScalarMap> strength_;
};

class JunctionBackend final : public DetectorBackend {
 public:
  std::string name() const override { return "junction"; }
  PatchPrediction detect_patch(const ImageBuffer& patch, Exec exec) const override;
};

}  // namespace craqreg
