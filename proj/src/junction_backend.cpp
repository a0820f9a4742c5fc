#include "craqreg/junction_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "craqreg/error.hpp"

namespace craqreg {

ScalarMap crack_strength(const ImageBuffer& patch, Exec exec) {
  const ScalarMap gray = to_gray_map(patch);
  const ScalarMap closed = erode_disk(dilate_disk(gray, kCrackDiskRadius, exec), kCrackDiskRadius, exec);
  const ScalarMap opened = dilate_disk(erode_disk(gray, kCrackDiskRadius, exec), kCrackDiskRadius, exec);

  ScalarMap out(gray.width(), gray.height());
  auto g = gray.values();
  auto c = closed.values();
  auto o = opened.values();
  auto s = out.values();
  const auto n = static_cast<std::ptrdiff_t>(s.size());
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const float black_hat = c[i] - g[i];
    const float top_hat = g[i] - o[i];
    s[i] = std::max(black_hat, top_hat);
  }

  std::vector<float> sorted(s.begin(), s.end());
  const auto rank = static_cast<std::ptrdiff_t>(std::floor(kStrengthPercentile * (n - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + rank, sorted.end());
  float scale = sorted[rank];
  if (!(scale > 0.0f)) scale = *std::max_element(sorted.begin(), sorted.end());
  if (!(scale > 0.0f)) return out;  // flat patch
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (std::ptrdiff_t i = 0; i < n; ++i) s[i] = std::min(1.0f, s[i] / scale);
  return out;
}

std::vector<std::uint8_t> crack_mask(const ScalarMap& strength, Exec exec) {
  const ScalarMap mean = box_mean(strength, kThresholdWindow, exec);
  const auto s = strength.values();
  const auto m = mean.values();
  std::vector<std::uint8_t> mask(s.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(s.size());
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (std::ptrdiff_t i = 0; i < n; ++i) mask[i] = s[i] > m[i] + kThresholdOffset ? 1 : 0;
  return mask;
}

namespace {

// Neighbors P2..P9 clockwise from north.
constexpr int kDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

void ring(const std::vector<std::uint8_t>& m, int w, int h, int x, int y, int (&p)[8]) {
  for (int k = 0; k < 8; ++k) {
    const int xx = x + kDx[k];
    const int yy = y + kDy[k];
    p[k] = (xx >= 0 && yy >= 0 && xx < w && yy < h) ? m[static_cast<std::size_t>(yy) * w + xx] : 0;
  }
}

int transitions(const int (&p)[8]) {
  int a = 0;
  for (int k = 0; k < 8; ++k) a += (p[k] == 0 && p[(k + 1) % 8] == 1);
  return a;
}

}  // namespace

void thin_zhang_suen(std::vector<std::uint8_t>& mask, int width, int height, Exec exec) {
  if (mask.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::InvalidInput, "mask size mismatch");
  }
  std::vector<std::uint8_t> remove(mask.size(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      int removed = 0;
#pragma omp parallel for schedule(static) reduction(+ : removed) num_threads(exec.thread_count()) if (exec.parallel())
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * width + x;
          remove[i] = 0;
          if (!mask[i]) continue;
          int p[8];
          ring(mask, width, height, x, y, p);
          const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
          if (b < 2 || b > 6 || transitions(p) != 1) continue;
          // p[0]=N, p[2]=E, p[4]=S, p[6]=W
          const bool ok = pass == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                    : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
          if (ok) {
            remove[i] = 1;
            ++removed;
          }
        }
      }
      if (removed == 0) continue;
      changed = true;
      const auto n = static_cast<std::ptrdiff_t>(mask.size());
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (remove[i]) mask[i] = 0;
      }
    }
  }
}

bool is_junction(const std::vector<std::uint8_t>& skeleton, int width, int height, int x, int y) {
  if (!skeleton[static_cast<std::size_t>(y) * width + x]) return false;
  int p[8];
  ring(skeleton, width, height, x, y, p);
  const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
  return b >= 3 && transitions(p) >= 3;
}

ScalarMap junction_map(const ScalarMap& strength, Exec exec) {
  const int w = strength.width();
  const int h = strength.height();
  std::vector<std::uint8_t> skeleton = crack_mask(strength, exec);
  thin_zhang_suen(skeleton, w, h, exec);
  ScalarMap out(w, h);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (is_junction(skeleton, w, h, x, y)) out.at(x, y) = strength.at(x, y);
    }
  }
  return out;
}

ScalarMap junction_heatmap(const ScalarMap& strength, Exec exec) {
  return max_pool(junction_map(strength, exec), kHeadStride, exec);
}

Descriptor junction_descriptor(const ScalarMap& strength, const Point2& pos) {
  constexpr int kCells = 4;
  constexpr int kBins = 8;
  constexpr int kHalf = kDescriptorWindow / 2;
  constexpr double kCellSize = static_cast<double>(kDescriptorWindow) / kCells;
  const int cx = static_cast<int>(std::lround(pos.x));
  const int cy = static_cast<int>(std::lround(pos.y));

  std::array<double, kDescriptorDim> hist{};
  for (int iy = 0; iy < kDescriptorWindow; ++iy) {
    const int py = cy - kHalf + iy;
    const double ry = iy - kHalf + 0.5;  // offset of the pixel center from the window center
    for (int ix = 0; ix < kDescriptorWindow; ++ix) {
      const int px = cx - kHalf + ix;
      const double rx = ix - kHalf + 0.5;
      const double gx = 0.5 * (strength.clamped(px + 1, py) - strength.clamped(px - 1, py));
      const double gy = 0.5 * (strength.clamped(px, py + 1) - strength.clamped(px, py - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      const double weight =
          mag * std::exp(-(rx * rx + ry * ry) / (2.0 * kDescriptorSigma * kDescriptorSigma));

      double ori = std::atan2(gy, gx) / (2.0 * std::numbers::pi) * kBins;
      if (ori < 0.0) ori += kBins;
      const double bx = (rx + kHalf) / kCellSize - 0.5;
      const double by = (ry + kHalf) / kCellSize - 0.5;
      const int x0 = static_cast<int>(std::floor(bx));
      const int y0 = static_cast<int>(std::floor(by));
      const int o0 = static_cast<int>(std::floor(ori));
      const double fx = bx - x0;
      const double fy = by - y0;
      const double fo = ori - o0;
      for (int dy = 0; dy < 2; ++dy) {
        const int cyb = y0 + dy;
        if (cyb < 0 || cyb >= kCells) continue;
        const double wy = dy ? fy : 1.0 - fy;
        for (int dx = 0; dx < 2; ++dx) {
          const int cxb = x0 + dx;
          if (cxb < 0 || cxb >= kCells) continue;
          const double wx = dx ? fx : 1.0 - fx;
          for (int dor = 0; dor < 2; ++dor) {
            const int ob = (o0 + dor) % kBins;
            const double wo = dor ? fo : 1.0 - fo;
            hist[(cyb * kCells + cxb) * kBins + ob] += weight * wx * wy * wo;
          }
        }
      }
    }
  }

  const auto normalize = [&hist]() {
    double norm = 0.0;
    for (double v : hist) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) return false;
    for (double& v : hist) v /= norm;
    return true;
  };
  Descriptor out;
  if (!normalize()) {
    out.fill(static_cast<float>(1.0 / std::sqrt(static_cast<double>(kDescriptorDim))));
    return out;
  }
  for (double& v : hist) v = std::min(v, static_cast<double>(kDescriptorClamp));
  normalize();
  for (int k = 0; k < kDescriptorDim; ++k) out[k] = static_cast<float>(hist[k]);
  return out;
}

JunctionDescriptorField::JunctionDescriptorField(std::shared_ptr<const ScalarMap> strength)
    : strength_(std::move(strength)) {}

int JunctionDescriptorField::width() const {
  return (strength_->width() + kHeadStride - 1) / kHeadStride;
}

int JunctionDescriptorField::height() const {
  return (strength_->height() + kHeadStride - 1) / kHeadStride;
}

Descriptor JunctionDescriptorField::node(int i, int j) const {
  return junction_descriptor(*strength_, {static_cast<double>(i * kHeadStride),
                                          static_cast<double>(j * kHeadStride)});
}

PatchPrediction JunctionBackend::detect_patch(const ImageBuffer& patch, Exec exec) const {
  auto strength = std::make_shared<const ScalarMap>(crack_strength(patch, exec));
  PatchPrediction pred;
  pred.heatmap = junction_heatmap(*strength, exec);
  pred.descriptors = std::make_shared<JunctionDescriptorField>(std::move(strength));
  return pred;
}

}  // namespace craqreg
