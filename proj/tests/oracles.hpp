#pragma once

// Reference implementations used only by the tests. Each one is written
// from the definition, independently of the library code it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "craqreg/detection.hpp"
#include "craqreg/geometry.hpp"
#include "craqreg/image.hpp"
#include "craqreg/matching.hpp"

namespace oracle {

using craqreg::Correspondence;
using craqreg::Descriptor;
using craqreg::Homography;
using craqreg::Point2;

inline Point2 apply(const std::array<double, 9>& m, Point2 p) {
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

/// Solves the 8x8 system with h22 = 1 for exactly four correspondences
/// by Gaussian elimination with partial pivoting in long double.
inline std::array<double, 9> homography_from_4(const std::array<Correspondence, 4>& c) {
  long double a[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const long double x = c[i].b.x, y = c[i].b.y, u = c[i].a.x, v = c[i].a.y;
    long double* r0 = a[2 * i];
    long double* r1 = a[2 * i + 1];
    r0[0] = x, r0[1] = y, r0[2] = 1, r0[6] = -u * x, r0[7] = -u * y, r0[8] = u;
    r1[3] = x, r1[4] = y, r1[5] = 1, r1[6] = -v * x, r1[7] = -v * y, r1[8] = v;
  }
  for (int col = 0; col < 8; ++col) {
    int piv = col;
    for (int r = col + 1; r < 8; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    for (int k = 0; k < 9; ++k) std::swap(a[col][k], a[piv][k]);
    for (int r = 0; r < 8; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (int k = col; k < 9; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::array<double, 9> h{};
  for (int i = 0; i < 8; ++i) h[i] = static_cast<double>(a[i][8] / a[i][i]);
  h[8] = 1.0;
  return h;
}

/// Random homography around a w x h frame with bounded distortion; the
/// 3x3 matrix condition number stays far below 1e3 after normalization.
inline Homography random_homography(std::mt19937_64& rng, double w, double h) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double th = u(rng) * 0.5;
  const double s = 1.0 + 0.3 * u(rng);
  const double cx = w / 2, cy = h / 2;
  const double g = 4e-4 * u(rng), k = 4e-4 * u(rng);
  const Homography core({s * std::cos(th), -s * std::sin(th) + 0.1 * u(rng), 0.0,
                         s * std::sin(th), s * std::cos(th) + 0.1 * u(rng), 0.0, g, k, 1.0});
  return Homography::translation(cx + 30 * u(rng), cy + 30 * u(rng)) * core *
         Homography::translation(-cx, -cy);
}

/// Mutual nearest neighbors from the full distance matrix.
inline std::vector<craqreg::Match> mutual_nn(const std::vector<Descriptor>& a,
                                             const std::vector<Descriptor>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (int k = 0; k < craqreg::kDescriptorDim; ++k) {
        const double t = static_cast<double>(a[i][k]) - static_cast<double>(b[j][k]);
        s += t * t;
      }
      d[i][j] = s;
    }
  std::vector<craqreg::Match> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = 0;
    for (std::size_t jj = 1; jj < m; ++jj)
      if (d[i][jj] < d[i][j]) j = jj;
    std::size_t back = 0;
    for (std::size_t ii = 1; ii < n; ++ii)
      if (d[ii][j] < d[back][j]) back = ii;
    if (back == i) out.push_back({static_cast<int>(i), static_cast<int>(j), std::sqrt(d[i][j])});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.dist != y.dist ? x.dist < y.dist : x.idx_ref < y.idx_ref;
  });
  return out;
}

/// Window maxima by exhaustive comparison.
inline std::vector<craqreg::Keypoint> nms(const craqreg::ScalarMap& h, int r) {
  std::vector<craqreg::Keypoint> out;
  for (int y = 0; y < h.height(); ++y)
    for (int x = 0; x < h.width(); ++x) {
      const float v = h.at(x, y);
      if (v <= 0) continue;
      bool best = true;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if ((dx == 0 && dy == 0) || xx < 0 || yy < 0 || xx >= h.width() || yy >= h.height())
            continue;
          const float q = h.at(xx, yy);
          const bool earlier = yy < y || (yy == y && xx < x);
          if (q > v || (q == v && earlier)) best = false;
        }
      if (best) out.push_back({{double(x), double(y)}, v});
    }
  return out;
}

inline float replicate(const craqreg::ScalarMap& m, int x, int y) {
  return m.at(std::clamp(x, 0, m.width() - 1), std::clamp(y, 0, m.height() - 1));
}

inline craqreg::ScalarMap dilate(const craqreg::ScalarMap& in, int r, bool max) {
  craqreg::ScalarMap out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      float best = replicate(in, x, y);
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if (dx * dx + dy * dy > r * r) continue;
          const float v = replicate(in, x + dx, y + dy);
          best = max ? std::max(best, v) : std::min(best, v);
        }
      out.at(x, y) = best;
    }
  return out;
}

inline craqreg::ScalarMap box_mean(const craqreg::ScalarMap& in, int window) {
  const int r = window / 2;
  craqreg::ScalarMap out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double s = 0;
      int n = 0;
      for (int yy = std::max(0, y - r); yy <= std::min(in.height() - 1, y + r); ++yy)
        for (int xx = std::max(0, x - r); xx <= std::min(in.width() - 1, x + r); ++xx) {
          s += in.at(xx, yy);
          ++n;
        }
      out.at(x, y) = static_cast<float>(s / n);
    }
  return out;
}

inline double catmull_rom(double t) {
  t = std::fabs(t);
  if (t < 1) return 1.5 * t * t * t - 2.5 * t * t + 1;
  if (t < 2) return -0.5 * t * t * t + 2.5 * t * t - 4 * t + 2;
  return 0;
}

/// Direct 2-D evaluation of the separable Catmull-Rom upsampler.
inline double bicubic_at(const craqreg::ScalarMap& in, int factor, int X, int Y) {
  const double sx = (X + 0.5) / factor - 0.5;
  const double sy = (Y + 0.5) / factor - 0.5;
  const int ix = static_cast<int>(std::floor(sx));
  const int iy = static_cast<int>(std::floor(sy));
  double acc = 0;
  for (int j = iy - 1; j <= iy + 2; ++j)
    for (int i = ix - 1; i <= ix + 2; ++i)
      acc += catmull_rom(sx - i) * catmull_rom(sy - j) * replicate(in, i, j);
  return acc;
}

/// out(p) = in(m p) with bilinear interpolation and black outside.
inline double warp_sample(const craqreg::ImageBuffer& in, const std::array<double, 9>& m, int x,
                          int y, int c) {
  const Point2 q = apply(m, {double(x), double(y)});
  if (q.x < -1e-6 || q.y < -1e-6 || q.x > in.width() - 1 + 1e-6 || q.y > in.height() - 1 + 1e-6)
    return 0;
  const double qx = std::clamp(q.x, 0.0, in.width() - 1.0);
  const double qy = std::clamp(q.y, 0.0, in.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(qx)), y0 = static_cast<int>(std::floor(qy));
  const int x1 = std::min(x0 + 1, in.width() - 1), y1 = std::min(y0 + 1, in.height() - 1);
  const double fx = qx - x0, fy = qy - y0;
  return (1 - fx) * (1 - fy) * in.at(x0, y0, c) + fx * (1 - fy) * in.at(x1, y0, c) +
         (1 - fx) * fy * in.at(x0, y1, c) + fx * fy * in.at(x1, y1, c);
}

/// Bilinear tap weights for a fractional offset, ordered
/// (x0,y0), (x0,y1), (x1,y0), (x1,y1).
inline std::array<double, 4> bilinear_weights(double fx, double fy) {
  return {(1 - fx) * (1 - fy), (1 - fx) * fy, fx * (1 - fy), fx * fy};
}

inline Descriptor random_descriptor(std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.f, 1.f);
  Descriptor d;
  double s = 0;
  for (float& v : d) {
    v = n(rng);
    s += double(v) * v;
  }
  for (float& v : d) v = static_cast<float>(v / std::sqrt(s));
  return d;
}

}  // namespace oracle
