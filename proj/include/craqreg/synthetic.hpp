#pragma once

// Procedural craquelure fixtures with known geometry, used by the tests,
// the acceptance suite, the benchmarks and `craqreg synth`.

#include <cstdint>
#include <vector>

#include "craqreg/evaluation.hpp"
#include "craqreg/geometry.hpp"
#include "craqreg/image.hpp"

namespace craqreg::synth {

/// Gray image (background 200) with three dark 1-px lines of the given arm
/// length meeting at `center`.
ImageBuffer y_crack(int width, int height, Point2 center, double arm_length = 40.0);

struct JunctionFixture {
  ImageBuffer image;
  std::vector<Point2> junctions;
};

/// `count` isolated Y-shaped cracks on a regular layout with randomized arm
/// directions, centered on integer pixels; `junctions` holds the meeting points.
JunctionFixture y_junction_field(int width, int height, int count, std::uint64_t seed);

/// How the moving image's modality differs from the reference.
enum class Modality { IdentityNoise, Inverted, GammaBlur };

/// Procedural painting: a Voronoi crack network (curved by a smooth
/// displacement field) over low-frequency "paint" that depends on the
/// modality seed. Defined on the whole plane, so any view can be rendered
/// exactly.
class CraquelureScene {
 public:
  explicit CraquelureScene(std::uint64_t seed, double cell_size = 36.0);

  /// Gray value of the reference modality at (x, y).
  double reference_value(double x, double y) const;
  /// Crack darkening in [0, 1] at (x, y).
  double crack(double x, double y) const;
  /// Background intensity for a given paint seed.
  double paint(double x, double y, std::uint64_t paint_seed) const;

  /// Renders the reference modality; pixel (x, y) shows the scene at (x, y).
  ImageBuffer render_reference(int width, int height) const;
  /// Renders a view whose pixel p shows the scene at h(p), in the given modality.
  ImageBuffer render_moving(int width, int height, const Homography& h, Modality modality,
                            std::uint64_t seed) const;

 private:
  std::uint64_t seed_;
  double cell_;
  double warp_amp_[4];
  double warp_freq_[4];
  double warp_phase_[4];
};

/// Rotation (<= 3 deg), scale (0.92..1.08), shift (<= 15 px) and perspective
/// terms (<= 5e-5) around the image center. Maps moving to reference.
Homography mild_homography(int width, int height, std::uint64_t seed);

struct SyntheticPair {
  ImageBuffer reference;
  ImageBuffer moving;
  Homography h_true;  // moving -> reference
  ControlPointAnnotation annotation;
};

SyntheticPair make_pair(int width, int height, Modality modality, std::uint64_t seed,
                        int control_points = 40);

/// Applies a modality transform to an image: noise, inversion, gamma 1.8 +
/// Gaussian blur.
ImageBuffer apply_modality(const ImageBuffer& img, Modality modality, std::uint64_t seed);

}  // namespace craqreg::synth
