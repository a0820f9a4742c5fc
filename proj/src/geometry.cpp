#include "craqreg/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "craqreg/error.hpp"

namespace craqreg {

namespace {

constexpr double kDetEps = 1e-12;
constexpr double kScaleEps = 1e-9;
constexpr double kRankRatio = 1e-10;
constexpr double kCollinearSin = 1e-6;

Homography::Matrix normalized(Homography::Matrix m) {
  for (double v : m) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::DegenerateHomography, "homography has non-finite entries");
    }
  }
  if (std::abs(m[8]) > kScaleEps) {
    const double s = m[8];
    for (double& v : m) v /= s;
    m[8] = 1.0;
  } else {
    double norm = 0.0;
    for (double v : m) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      throw Error(ErrorKind::DegenerateHomography, "zero homography");
    }
    // Fix the sign so the representation is unique.
    const auto lead = std::find_if(m.begin(), m.end(), [](double v) { return std::abs(v) > 0.0; });
    const double s = (*lead < 0.0 ? -norm : norm);
    for (double& v : m) v /= s;
  }
  return m;
}

double det3(const Homography::Matrix& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

// Similarity that moves the centroid to the origin and the mean distance
// from it to sqrt(2).
Eigen::Matrix3d hartley_transform(const std::vector<Point2>& pts) {
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(ErrorKind::DegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0;
  return t;
}

Eigen::Vector2d transform(const Eigen::Matrix3d& t, const Point2& p) {
  return {t(0, 0) * p.x + t(0, 2), t(1, 1) * p.y + t(1, 2)};
}

Homography solve_dlt(std::span<const Correspondence> c, std::span<const double> weights) {
  std::vector<Point2> pa;
  std::vector<Point2> pb;
  std::vector<double> w;
  pa.reserve(c.size());
  pb.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double wi = weights.empty() ? 1.0 : weights[i];
    if (!(wi > 0.0)) continue;
    const auto& ci = c[i];
    if (!std::isfinite(ci.a.x) || !std::isfinite(ci.a.y) || !std::isfinite(ci.b.x) ||
        !std::isfinite(ci.b.y)) {
      throw Error(ErrorKind::DegenerateConfiguration, "non-finite correspondence");
    }
    pa.push_back(ci.a);
    pb.push_back(ci.b);
    w.push_back(wi);
  }
  const auto n = static_cast<Eigen::Index>(pa.size());
  if (n < 4) {
    throw Error(ErrorKind::DegenerateConfiguration,
                "at least 4 correspondences are required, got " + std::to_string(n));
  }
  if (n == 4) {
    if (has_collinear_triple({pa[0], pa[1], pa[2], pa[3]}) ||
        has_collinear_triple({pb[0], pb[1], pb[2], pb[3]})) {
      throw Error(ErrorKind::DegenerateConfiguration, "three of four points are collinear");
    }
  }

  const Eigen::Matrix3d ta = hartley_transform(pa);
  const Eigen::Matrix3d tb = hartley_transform(pb);

  // At least 9 rows so the singular value spectrum always has 9 entries.
  const Eigen::Index rows = std::max<Eigen::Index>(2 * n, 9);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d ra = transform(ta, pa[i]);
    const Eigen::Vector2d rb = transform(tb, pb[i]);
    const double u = ra.x();
    const double v = ra.y();
    const double x = rb.x();
    const double y = rb.y();
    const double s = std::sqrt(w[i]);
    a.row(2 * i) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u;
    a.row(2 * i) *= s;
    a.row(2 * i + 1) *= s;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(7) / sv(0) < kRankRatio) {
    throw Error(ErrorKind::DegenerateConfiguration, "design matrix is rank deficient");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = ta.inverse() * hn * tb;

  Homography::Matrix m{};
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) m[r * 3 + col] = full(r, col);
  try {
    return Homography(m);
  } catch (const Error& e) {
    throw Error(ErrorKind::DegenerateConfiguration, e.what());
  }
}

}  // namespace

Homography::Homography() : m_{1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0} {}

Homography::Homography(const Matrix& row_major) : m_(normalized(row_major)) {
  if (!(std::abs(det3(m_)) > kDetEps)) {
    throw Error(ErrorKind::DegenerateHomography, "homography is not invertible");
  }
}

Homography Homography::translation(double tx, double ty) {
  return Homography({1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0});
}

Homography Homography::scaling(double sx, double sy) {
  return Homography({sx, 0.0, 0.0, 0.0, sy, 0.0, 0.0, 0.0, 1.0});
}

double Homography::determinant() const noexcept { return det3(m_); }

Homography Homography::inverse() const {
  const auto& m = m_;
  // Adjugate; the scale is irrelevant after normalization.
  Matrix adj{m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
             m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
             m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3]};
  const double det = det3(m);
  for (double& v : adj) v /= det;
  return Homography(adj);
}

Homography operator*(const Homography& lhs, const Homography& rhs) {
  Homography::Matrix out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += lhs(r, k) * rhs(k, c);
      out[r * 3 + c] = s;
    }
  }
  return Homography(out);
}

Point2 apply(const Homography& h, const Point2& p) {
  const auto& m = h.matrix();
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  if (!(std::abs(w) > kDetEps)) {
    throw Error(ErrorKind::DegeneratePoint, "point maps to infinity");
  }
  return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

Homography estimate_dlt(std::span<const Correspondence> c) { return solve_dlt(c, {}); }

Homography estimate_dlt_weighted(std::span<const Correspondence> c,
                                 std::span<const double> weights) {
  if (weights.size() != c.size()) {
    throw Error(ErrorKind::InvalidInput, "weights and correspondences differ in length");
  }
  return solve_dlt(c, weights);
}

double reprojection_error(const Homography& h, const Correspondence& c) {
  const Point2 t = apply(h, c.b);
  return std::hypot(t.x - c.a.x, t.y - c.a.y);
}

bool has_collinear_triple(const std::array<Point2, 4>& pts) {
  static constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : kTriples) {
    const Point2& p0 = pts[t[0]];
    const double ux = pts[t[1]].x - p0.x;
    const double uy = pts[t[1]].y - p0.y;
    const double vx = pts[t[2]].x - p0.x;
    const double vy = pts[t[2]].y - p0.y;
    const double cross = ux * vy - uy * vx;
    const double scale = std::hypot(ux, uy) * std::hypot(vx, vy);
    if (!(std::abs(cross) > kCollinearSin * scale) || scale == 0.0) return true;
  }
  return false;
}

double max_transfer_difference(const Homography& h1, const Homography& h2,
                               std::span<const Point2> probes) {
  double worst = 0.0;
  for (const auto& p : probes) {
    const Point2 q1 = apply(h1, p);
    const Point2 q2 = apply(h2, p);
    worst = std::max(worst, std::hypot(q1.x - q2.x, q1.y - q2.y));
  }
  return worst;
}

std::vector<Point2> grid_points(double width, double height, int n) {
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double fx = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
      const double fy = n > 1 ? static_cast<double>(j) / (n - 1) : 0.5;
      out.push_back({fx * width, fy * height});
    }
  }
  return out;
}

}  // namespace craqreg
