#include "craqreg/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "craqreg/error.hpp"

namespace craqreg {

int Exec::thread_count() const {
  if (workers == 1) return 1;
  if (workers > 1) return workers;
  return omp_get_max_threads();
}

namespace {

// Horizontal running extremum over [x-k, x+k] for k = 0..radius, built
// incrementally from k-1; clamping the neighbor index replicates the border.
template <typename Pick>
ScalarMap morph_disk(const ScalarMap& in, int radius, Exec exec, Pick pick) {
  if (radius < 0) throw Error(ErrorKind::InvalidInput, "negative morphology radius");
  const int w = in.width();
  const int h = in.height();
  std::vector<ScalarMap> rows(static_cast<std::size_t>(radius) + 1);
  rows[0] = in;
  for (int k = 1; k <= radius; ++k) {
    const ScalarMap& prev = rows[k - 1];
    ScalarMap cur(w, h);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float l = prev.at(std::max(x - 1, 0), y);
        const float r = prev.at(std::min(x + 1, w - 1), y);
        cur.at(x, y) = pick(prev.at(x, y), pick(l, r));
      }
    }
    rows[k] = std::move(cur);
  }

  std::vector<int> half_width(2 * static_cast<std::size_t>(radius) + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    half_width[dy + radius] = static_cast<int>(std::floor(std::sqrt(
        static_cast<double>(radius * radius - dy * dy)) + 1e-9));
  }

  ScalarMap out(w, h);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float v = in.at(x, y);
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        v = pick(v, rows[half_width[dy + radius]].at(x, yy));
      }
      out.at(x, y) = v;
    }
  }
  return out;
}

float cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return static_cast<float>((a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0);
  if (t < 2.0) return static_cast<float>(a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a);
  return 0.0f;
}

}  // namespace

ScalarMap dilate_disk(const ScalarMap& in, int radius, Exec exec) {
  return morph_disk(in, radius, exec, [](float a, float b) { return std::max(a, b); });
}

ScalarMap erode_disk(const ScalarMap& in, int radius, Exec exec) {
  return morph_disk(in, radius, exec, [](float a, float b) { return std::min(a, b); });
}

ScalarMap box_mean(const ScalarMap& in, int window, Exec exec) {
  if (window < 1) throw Error(ErrorKind::InvalidInput, "box window must be positive");
  const int w = in.width();
  const int h = in.height();
  // Integral image with a zero guard row/column.
  std::vector<double> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * (w + 1) + x; };
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += in.at(x, y);
      integral[idx(x + 1, y + 1)] = integral[idx(x + 1, y)] + row;
    }
  }
  const int half = window / 2;
  ScalarMap out(w, h);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half);
    const int y1 = std::min(h, y + half + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half);
      const int x1 = std::min(w, x + half + 1);
      const double sum = integral[idx(x1, y1)] - integral[idx(x0, y1)] - integral[idx(x1, y0)] +
                         integral[idx(x0, y0)];
      out.at(x, y) = static_cast<float>(sum / static_cast<double>((x1 - x0) * (y1 - y0)));
    }
  }
  return out;
}

ScalarMap upsample_bicubic(const ScalarMap& in, int factor, float lo, float hi, Exec exec) {
  if (factor < 1) throw Error(ErrorKind::InvalidInput, "upsampling factor must be >= 1");
  if (factor == 1) return in;
  const int w = in.width();
  const int h = in.height();
  const int ow = w * factor;
  const int oh = h * factor;

  // Every output coordinate falls into one of `factor` phases relative to the
  // source grid; each phase has a fixed base offset and 4 tap weights.
  struct Phase {
    int base;
    std::array<float, 4> weight;
  };
  std::vector<Phase> phases(static_cast<std::size_t>(factor));
  for (int p = 0; p < factor; ++p) {
    const double src = (p + 0.5) / factor - 0.5;
    const int x0 = static_cast<int>(std::floor(src));
    const double t = src - x0;
    phases[p].base = x0;
    for (int k = 0; k < 4; ++k) phases[p].weight[k] = cubic_weight(t - (k - 1));
  }

  ScalarMap horiz(ow, h);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int y = 0; y < h; ++y) {
    for (int ox = 0; ox < ow; ++ox) {
      const Phase& ph = phases[ox % factor];
      const int base = ox / factor + ph.base;
      float acc = 0.0f;
      for (int k = 0; k < 4; ++k) acc += ph.weight[k] * in.clamped(base + k - 1, y);
      horiz.at(ox, y) = acc;
    }
  }

  ScalarMap out(ow, oh);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int oy = 0; oy < oh; ++oy) {
    const Phase& ph = phases[oy % factor];
    const int base = oy / factor + ph.base;
    for (int ox = 0; ox < ow; ++ox) {
      float acc = 0.0f;
      for (int k = 0; k < 4; ++k) acc += ph.weight[k] * horiz.clamped(ox, base + k - 1);
      out.at(ox, oy) = std::clamp(acc, lo, hi);
    }
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& in, int width, int height, Exec exec) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidInput, "invalid resize target");
  if (width == in.width() && height == in.height()) return in;
  ImageBuffer out(width, height, in.channels());
  const double sx = static_cast<double>(in.width()) / width;
  const double sy = static_cast<double>(in.height()) / height;
  const int ch = in.channels();
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(in.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(in.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < ch; ++c) {
        const double top = (1.0 - tx) * in.at(x0, y0, c) + tx * in.at(x1, y0, c);
        const double bottom = (1.0 - tx) * in.at(x0, y1, c) + tx * in.at(x1, y1, c);
        const double v = (1.0 - ty) * top + ty * bottom;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

ImageBuffer warp_inverse(const ImageBuffer& in, const Homography& inverse_map, int width,
                         int height, Exec exec) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidInput, "invalid warp target");
  constexpr double kEdge = 1e-6;
  const auto& m = inverse_map.matrix();
  const int ch = in.channels();
  const double max_x = in.width() - 1;
  const double max_y = in.height() - 1;
  ImageBuffer out(width, height, ch, 0);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double w = m[6] * x + m[7] * y + m[8];
      if (!(std::abs(w) > 1e-12)) continue;
      double qx = (m[0] * x + m[1] * y + m[2]) / w;
      double qy = (m[3] * x + m[4] * y + m[5]) / w;
      if (!(qx >= -kEdge && qx <= max_x + kEdge && qy >= -kEdge && qy <= max_y + kEdge)) continue;
      qx = std::clamp(qx, 0.0, max_x);
      qy = std::clamp(qy, 0.0, max_y);
      const int x0 = static_cast<int>(qx);
      const int y0 = static_cast<int>(qy);
      const int x1 = std::min(x0 + 1, in.width() - 1);
      const int y1 = std::min(y0 + 1, in.height() - 1);
      const double tx = qx - x0;
      const double ty = qy - y0;
      for (int c = 0; c < ch; ++c) {
        const double top = (1.0 - tx) * in.at(x0, y0, c) + tx * in.at(x1, y0, c);
        const double bottom = (1.0 - tx) * in.at(x0, y1, c) + tx * in.at(x1, y1, c);
        const double v = (1.0 - ty) * top + ty * bottom;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

ScalarMap max_pool(const ScalarMap& in, int factor, Exec exec) {
  if (factor < 1) throw Error(ErrorKind::InvalidInput, "pooling factor must be >= 1");
  const int ow = (in.width() + factor - 1) / factor;
  const int oh = (in.height() + factor - 1) / factor;
  ScalarMap out(ow, oh);
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) if (exec.parallel())
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      float v = in.clamped(ox * factor, oy * factor);
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx)
          v = std::max(v, in.clamped(ox * factor + dx, oy * factor + dy));
      out.at(ox, oy) = v;
    }
  }
  return out;
}

}  // namespace craqreg
