#pragma once

// Data-parallel image kernels. Every kernel takes an Exec; Exec::serial() runs
// the plain loop and is the reference the OpenMP path is tested against
// (results must be bit-identical).

#include "craqreg/geometry.hpp"
#include "craqreg/image.hpp"

namespace craqreg {

struct Exec {
  /// 0: OpenMP default thread count; 1: serial reference path; n: n threads.
  int workers = 0;

  static Exec serial() { return Exec{1}; }
  static Exec threads(int n) { return Exec{n}; }

  bool parallel() const noexcept { return workers != 1; }
  int thread_count() const;
};

/// Grayscale dilation / erosion with a disk structuring element
/// (all offsets with dx^2 + dy^2 <= r^2), border replicated.
ScalarMap dilate_disk(const ScalarMap& in, int radius, Exec exec = {});
ScalarMap erode_disk(const ScalarMap& in, int radius, Exec exec = {});

/// Mean over a (window x window) box centered at each pixel; the box is
/// clipped at the border and the mean taken over the pixels inside.
ScalarMap box_mean(const ScalarMap& in, int window, Exec exec = {});

/// Catmull-Rom (a = -0.5) bicubic upsampling by an integer factor with
/// pixel-center alignment, border replicated, clamped to [lo, hi].
ScalarMap upsample_bicubic(const ScalarMap& in, int factor, float lo, float hi, Exec exec = {});

/// Bilinear resize with pixel-center alignment.
ImageBuffer resize_bilinear(const ImageBuffer& in, int width, int height, Exec exec = {});

/// Inverse-mapping warp: out(p) = in(inverse_map(p)), bilinear, black outside.
ImageBuffer warp_inverse(const ImageBuffer& in, const Homography& inverse_map, int width,
                         int height, Exec exec = {});

/// 4x4 (factor x factor) max pooling; the input is padded by replication to a
/// multiple of factor.
ScalarMap max_pool(const ScalarMap& in, int factor, Exec exec = {});

}  // namespace craqreg
