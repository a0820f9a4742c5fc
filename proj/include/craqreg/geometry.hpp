#pragma once

#include <array>
#include <span>
#include <vector>

namespace craqreg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// A pair of corresponding points: `a` in the reference image, `b` in the
/// moving image.
struct Correspondence {
  Point2 a;
  Point2 b;
};

/// 3x3 projective transform mapping moving-image coordinates to
/// reference-image coordinates.
///
/// Always stored normalized: m[2][2] == 1 when |m[2][2]| > 1e-9, otherwise
/// unit Frobenius norm with the first nonzero entry made positive. The
/// constructor rejects non-finite or singular matrices with
/// DegenerateHomography.
class Homography {
 public:
  using Matrix = std::array<double, 9>;  // row-major

  Homography();  // identity
  explicit Homography(const Matrix& row_major);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);
  static Homography scaling(double sx, double sy);

  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int row, int col) const noexcept { return m_[row * 3 + col]; }

  double determinant() const noexcept;
  Homography inverse() const;

  /// Composition: (lhs * rhs)(p) == lhs(rhs(p)).
  friend Homography operator*(const Homography& lhs, const Homography& rhs);

 private:
  Matrix m_;
};

/// Projective transfer of a point. Throws DegeneratePoint when the
/// homogeneous denominator vanishes (|w| <= 1e-12).
Point2 apply(const Homography& h, const Point2& p);

/// Normalized DLT on >= 4 correspondences. Solves for H with a ~ H b.
/// Throws DegenerateConfiguration for rank-deficient or collinear minimal
/// configurations.
Homography estimate_dlt(std::span<const Correspondence> c);

/// Weighted normalized DLT: minimizes sum_i w_i * |A_i h|^2. Entries with
/// zero weight are ignored; at least 4 positive weights are required.
Homography estimate_dlt_weighted(std::span<const Correspondence> c,
                                 std::span<const double> weights);

/// Forward transfer error |apply(h, c.b) - c.a| in reference pixels.
double reprojection_error(const Homography& h, const Correspondence& c);

/// True when any three of the four points are (numerically) collinear.
bool has_collinear_triple(const std::array<Point2, 4>& pts);

/// Largest transfer discrepancy between two homographies over a set of
/// probe points.
double max_transfer_difference(const Homography& h1, const Homography& h2,
                               std::span<const Point2> probes);

/// Regular n x n grid of probe points covering [0, width] x [0, height].
std::vector<Point2> grid_points(double width, double height, int n);

}  // namespace craqreg
