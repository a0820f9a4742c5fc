#include "craqreg/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "craqreg/error.hpp"
#include "craqreg/junction_backend.hpp"

namespace craqreg {

namespace {

std::vector<int> axis_origins(int extent, int patch) {
  if (extent <= patch) return {0};
  std::vector<int> out;
  for (int o = 0; o + patch < extent; o += patch) out.push_back(o);
  const int last = extent - patch;
  if (out.back() != last) out.push_back(last);
  return out;
}

int round_up(int v, int m) { return (v + m - 1) / m * m; }

bool scored_before(const Keypoint& a, const Keypoint& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.pos.y != b.pos.y) return a.pos.y < b.pos.y;
  return a.pos.x < b.pos.x;
}

struct PatchKeypoints {
  std::vector<Keypoint> keypoints;  // global coordinates
  std::vector<Descriptor> descriptors;
};

PatchKeypoints detect_in_patch(const ImageBuffer& img, const PatchGrid& grid,
                               const PatchOrigin& origin, const DetectorBackend& backend,
                               double tau_kp, Exec exec) {
  const int pw = grid.patch_width();
  const int ph = grid.patch_height();
  const ImageBuffer patch = crop(img, origin.x, origin.y, pw, ph);
  const PatchPrediction pred = detect_patch(backend, patch, exec);
  const ScalarMap up = upsample_heatmap(pred.heatmap, kHeadStride, exec);

  PatchKeypoints out;
  for (const Keypoint& kp : nms(up, kNmsRadius)) {
    // Drop maxima in the replicated padding and anything at or below tau_kp.
    if (kp.pos.x >= pw || kp.pos.y >= ph || !(kp.score > tau_kp)) continue;
    out.descriptors.push_back(sample_descriptor(*pred.descriptors, kp.pos));
    out.keypoints.push_back({{kp.pos.x + origin.x, kp.pos.y + origin.y}, kp.score});
  }
  return out;
}

}  // namespace

PatchGrid plan_patches(int width, int height, int patch_size) {
  if (width < 1 || height < 1 || patch_size < 1) {
    throw Error(ErrorKind::InvalidInput, "plan_patches needs positive sizes");
  }
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.image_width = width;
  grid.image_height = height;
  for (int y : axis_origins(height, patch_size))
    for (int x : axis_origins(width, patch_size)) grid.origins.push_back({x, y});
  return grid;
}

DenseDescriptorGrid::DenseDescriptorGrid(int width, int height)
    : width_(width), height_(height),
      nodes_(static_cast<std::size_t>(width) * height, Descriptor{}) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidInput, "invalid descriptor grid");
}

std::unique_ptr<DetectorBackend> make_backend(const std::string& name) {
  if (name == "junction") return std::make_unique<JunctionBackend>();
  throw ConfigError("backend", "unknown backend '" + name + "'");
}

PatchPrediction detect_patch(const DetectorBackend& backend, const ImageBuffer& patch, Exec exec) {
  const int w = round_up(patch.width(), kHeadStride);
  const int h = round_up(patch.height(), kHeadStride);
  if (w == patch.width() && h == patch.height()) return backend.detect_patch(patch, exec);
  return backend.detect_patch(pad_replicate(patch, w, h), exec);
}

ScalarMap upsample_heatmap(const ScalarMap& h, int factor, Exec exec) {
  return upsample_bicubic(h, factor, 0.0f, 1.0f, exec);
}

std::vector<Keypoint> nms(const ScalarMap& h, int radius) {
  if (radius < 1) throw Error(ErrorKind::InvalidInput, "nms radius must be >= 1");
  std::vector<Keypoint> out;
  const int w = h.width();
  const int ht = h.height();
  for (int y = 0; y < ht; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = h.at(x, y);
      if (!(v > 0.0f)) continue;
      bool keep = true;
      const int y0 = std::max(0, y - radius);
      const int y1 = std::min(ht - 1, y + radius);
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w - 1, x + radius);
      for (int yy = y0; yy <= y1 && keep; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          const float q = h.at(xx, yy);
          // A neighbor wins if larger, or equal and earlier in (y, x) order.
          if (q > v || (q == v && (yy < y || (yy == y && xx < x)))) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.push_back({{static_cast<double>(x), static_cast<double>(y)}, v});
    }
  }
  return out;
}

Descriptor sample_descriptor(const DescriptorField& field, const Point2& pos) {
  const double gx = std::clamp(pos.x / kHeadStride, 0.0, static_cast<double>(field.width() - 1));
  const double gy = std::clamp(pos.y / kHeadStride, 0.0, static_cast<double>(field.height() - 1));
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const int x1 = std::min(x0 + 1, field.width() - 1);
  const int y1 = std::min(y0 + 1, field.height() - 1);
  const double fx = gx - x0;
  const double fy = gy - y0;

  struct Tap {
    int i, j;
    double w;
  };
  const Tap taps[4] = {{x0, y0, (1 - fx) * (1 - fy)},
                       {x1, y0, fx * (1 - fy)},
                       {x0, y1, (1 - fx) * fy},
                       {x1, y1, fx * fy}};
  std::array<double, kDescriptorDim> acc{};
  const Tap* strongest = &taps[0];
  for (const Tap& t : taps) {
    if (t.w > strongest->w) strongest = &t;
    if (t.w == 0.0) continue;
    const Descriptor d = field.node(t.i, t.j);
    for (int k = 0; k < kDescriptorDim; ++k) acc[k] += t.w * d[k];
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 1e-12)) return field.node(strongest->i, strongest->j);
  Descriptor out;
  for (int k = 0; k < kDescriptorDim; ++k) out[k] = static_cast<float>(acc[k] / norm);
  return out;
}

std::vector<std::size_t> merge_keypoints(std::span<const Keypoint> candidates, int radius,
                                         double tau_kp, int n_max) {
  if (radius < 1) throw Error(ErrorKind::InvalidInput, "merge radius must be >= 1");
  std::vector<std::size_t> order;
  order.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].score > tau_kp) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored_before(candidates[a], candidates[b]);
  });

  // Buckets of side `radius`: any kept point within the window of a
  // candidate lies in one of the 3x3 neighboring buckets.
  const double cell = radius;
  const auto key = [](long long cx, long long cy) { return (cx << 32) ^ (cy & 0xffffffffLL); };
  std::unordered_map<long long, std::vector<std::size_t>> buckets;
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (n_max >= 0 && kept.size() >= static_cast<std::size_t>(n_max)) break;
    const Point2& p = candidates[idx].pos;
    const auto cx = static_cast<long long>(std::floor(p.x / cell));
    const auto cy = static_cast<long long>(std::floor(p.y / cell));
    bool suppressed = false;
    for (long long dy = -1; dy <= 1 && !suppressed; ++dy) {
      for (long long dx = -1; dx <= 1 && !suppressed; ++dx) {
        const auto it = buckets.find(key(cx + dx, cy + dy));
        if (it == buckets.end()) continue;
        for (std::size_t other : it->second) {
          const Point2& q = candidates[other].pos;
          if (std::abs(q.x - p.x) <= radius && std::abs(q.y - p.y) <= radius) {
            suppressed = true;
            break;
          }
        }
      }
    }
    if (suppressed) continue;
    buckets[key(cx, cy)].push_back(idx);
    kept.push_back(idx);
  }
  return kept;
}

DetectionResult detect_image(const ImageBuffer& img, const RegistrationConfig& cfg) {
  const auto backend = make_backend(cfg.backend);
  return detect_image(img, cfg, *backend);
}

DetectionResult detect_image(const ImageBuffer& img, const RegistrationConfig& cfg,
                             const DetectorBackend& backend) {
  const PatchGrid grid = plan_patches(img.width(), img.height(), cfg.patch_size);
  const Exec exec{cfg.workers};
  const int n_patches = static_cast<int>(grid.origins.size());
  // Patches are the unit of parallelism when there are several; a single
  // patch parallelizes inside the backend kernels instead.
  const bool across_patches = exec.parallel() && n_patches > 1;
  const Exec inner = across_patches ? Exec::serial() : exec;

  std::vector<PatchKeypoints> per_patch(grid.origins.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(exec.thread_count()) if (across_patches)
  for (int i = 0; i < n_patches; ++i) {
    per_patch[i] = detect_in_patch(img, grid, grid.origins[i], backend, cfg.tau_kp, inner);
  }

  std::vector<Keypoint> candidates;
  std::vector<Descriptor> descriptors;
  for (auto& p : per_patch) {
    candidates.insert(candidates.end(), p.keypoints.begin(), p.keypoints.end());
    descriptors.insert(descriptors.end(), p.descriptors.begin(), p.descriptors.end());
  }
  const auto kept = merge_keypoints(candidates, kNmsRadius, cfg.tau_kp, cfg.n_max);
  if (kept.empty()) {
    throw Error(ErrorKind::EmptyDetection, "no keypoint scored above tau_kp");
  }
  DetectionResult out;
  out.keypoints.reserve(kept.size());
  out.descriptors.reserve(kept.size());
  for (std::size_t idx : kept) {
    out.keypoints.push_back(candidates[idx]);
    out.descriptors.push_back(descriptors[idx]);
  }
  return out;
}

}  // namespace craqreg
