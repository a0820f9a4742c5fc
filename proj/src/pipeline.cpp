#include "craqreg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "craqreg/error.hpp"

namespace craqreg {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

int scaled_extent(int extent, double s) {
  return std::max(1, static_cast<int>(std::lround(extent * s)));
}

void require_same_size(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::DimensionMismatch,
                "image sizes differ: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                    " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

void put_pixel(ImageBuffer& img, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  img.at(x, y, 0) = r;
  img.at(x, y, 1) = g;
  img.at(x, y, 2) = b;
}

void draw_circle(ImageBuffer& img, int cx, int cy, int r) {
  // Midpoint circle outline.
  int x = r;
  int y = 0;
  int err = 1 - r;
  while (x >= y) {
    const int pts[8][2] = {{x, y}, {y, x}, {-y, x}, {-x, y}, {-x, -y}, {-y, -x}, {y, -x}, {x, -y}};
    for (const auto& p : pts) put_pixel(img, cx + p[0], cy + p[1], 0, 0, 255);
    ++y;
    if (err < 0) {
      err += 2 * y + 1;
    } else {
      --x;
      err += 2 * (y - x) + 1;
    }
  }
}

void draw_line(ImageBuffer& img, int x0, int y0, int x1, int y1) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put_pixel(img, x0, y0, 255, 255, 0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

nlohmann::json matrix_json(const Homography& h) {
  return nlohmann::json(std::vector<double>(h.matrix().begin(), h.matrix().end()));
}

}  // namespace

ResizedPair apply_resize_policy(const ImageBuffer& ref, const ImageBuffer& mov,
                                const ResizePolicy& policy, Exec exec) {
  ResizedPair out;
  switch (policy.kind) {
    case ResizePolicy::Kind::None:
      out.ref = ref;
      out.mov = mov;
      break;
    case ResizePolicy::Kind::SameWidth: {
      out.ref = ref;
      out.s_mov = static_cast<double>(ref.width()) / mov.width();
      out.mov = resize_bilinear(mov, ref.width(), scaled_extent(mov.height(), out.s_mov), exec);
      break;
    }
    case ResizePolicy::Kind::CustomHeight: {
      if (policy.height <= 0) {
        throw Error(ErrorKind::InvalidPolicy, "custom height must be positive");
      }
      out.s_ref = static_cast<double>(policy.height) / ref.height();
      out.s_mov = static_cast<double>(policy.height) / mov.height();
      out.ref = resize_bilinear(ref, scaled_extent(ref.width(), out.s_ref), policy.height, exec);
      out.mov = resize_bilinear(mov, scaled_extent(mov.width(), out.s_mov), policy.height, exec);
      break;
    }
  }
  return out;
}

std::string_view failing_stage(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyDetection: return "detection";
    case ErrorKind::NoMatches: return "matching";
    case ErrorKind::EstimationFailed: return "estimation";
    default: return "input";
  }
}

RegistrationOutput register_pair(const ImageBuffer& ref, const ImageBuffer& mov,
                                 const RegistrationConfig& cfg) {
  validate(cfg);
  const Exec exec{cfg.workers};
  const auto backend = make_backend(cfg.backend);
  RegistrationOutput out;
  const auto total = Clock::now();

  auto t = Clock::now();
  ResizedPair work = apply_resize_policy(ref, mov, cfg.resize, exec);
  out.working_scale_ref = work.s_ref;
  out.working_scale_mov = work.s_mov;
  out.timings_ms.emplace_back("resize", elapsed_ms(t));

  t = Clock::now();
  out.detections_ref = detect_image(work.ref, cfg, *backend);
  out.detections_mov = detect_image(work.mov, cfg, *backend);
  out.timings_ms.emplace_back("detection", elapsed_ms(t));

  t = Clock::now();
  out.matches = match_mutual_nn(out.detections_ref, out.detections_mov, exec);
  out.timings_ms.emplace_back("matching", elapsed_ms(t));

  t = Clock::now();
  std::vector<Point2> pts_ref;
  std::vector<Point2> pts_mov;
  for (const auto& k : out.detections_ref.keypoints) pts_ref.push_back(k.pos);
  for (const auto& k : out.detections_mov.keypoints) pts_mov.push_back(k.pos);
  out.report = estimate_homography(out.matches, pts_ref, pts_mov, cfg.estimator, exec);
  out.h_working = out.report.h;
  out.h_original = Homography::scaling(1.0 / work.s_ref, 1.0 / work.s_ref) * out.h_working *
                   Homography::scaling(work.s_mov, work.s_mov);
  out.timings_ms.emplace_back("estimation", elapsed_ms(t));

  t = Clock::now();
  out.warped_moving = warp_image(mov, out.h_original, ref.width(), ref.height(), exec);
  out.timings_ms.emplace_back("warping", elapsed_ms(t));

  t = Clock::now();
  out.overlay_redcyan = overlay_redcyan(ref, out.warped_moving);
  if (cfg.visualize_matches) {
    out.matches_visualization =
        render_matches(work.ref, work.mov, out.detections_ref.keypoints,
                       out.detections_mov.keypoints, out.matches, out.report.inlier_mask);
  }
  out.timings_ms.emplace_back("visualization", elapsed_ms(t));
  out.timings_ms.emplace_back("total", elapsed_ms(total));
  return out;
}

ImageBuffer warp_image(const ImageBuffer& mov, const Homography& h, int out_w, int out_h, Exec exec) {
  return warp_inverse(mov, h.inverse(), out_w, out_h, exec);
}

ImageBuffer overlay_redcyan(const ImageBuffer& ref, const ImageBuffer& warped) {
  require_same_size(ref, warped);
  ImageBuffer out(ref.width(), ref.height(), 3);
  for (int y = 0; y < ref.height(); ++y) {
    for (int x = 0; x < ref.width(); ++x) {
      const std::uint8_t r = luma_u8(ref, x, y);
      const std::uint8_t c = luma_u8(warped, x, y);
      out.at(x, y, 0) = r;
      out.at(x, y, 1) = c;
      out.at(x, y, 2) = c;
    }
  }
  return out;
}

ImageBuffer overlay_blend(const ImageBuffer& ref, const ImageBuffer& warped, double alpha) {
  require_same_size(ref, warped);
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in [0, 1]");
  }
  const bool color = ref.channels() == 3 || warped.channels() == 3;
  const ImageBuffer a = color ? to_rgb(ref) : ref;
  const ImageBuffer b = color ? to_rgb(warped) : warped;
  ImageBuffer out(a.width(), a.height(), a.channels());
  auto sa = a.samples();
  auto sb = b.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < so.size(); ++i) {
    const double v = (1.0 - alpha) * sa[i] + alpha * sb[i];
    so[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
  }
  return out;
}

ImageBuffer render_matches(const ImageBuffer& ref, const ImageBuffer& mov,
                           std::span<const Keypoint> kps_ref, std::span<const Keypoint> kps_mov,
                           std::span<const Match> matches, std::span<const std::uint8_t> inlier_mask) {
  if (!inlier_mask.empty() && inlier_mask.size() != matches.size()) {
    throw Error(ErrorKind::InvalidInput, "inlier mask does not match the match list");
  }
  const int offset = ref.width();
  ImageBuffer canvas(ref.width() + mov.width(), std::max(ref.height(), mov.height()), 3, 0);
  const ImageBuffer ra = to_rgb(ref);
  const ImageBuffer rb = to_rgb(mov);
  for (int y = 0; y < ra.height(); ++y)
    for (int x = 0; x < ra.width(); ++x)
      for (int c = 0; c < 3; ++c) canvas.at(x, y, c) = ra.at(x, y, c);
  for (int y = 0; y < rb.height(); ++y)
    for (int x = 0; x < rb.width(); ++x)
      for (int c = 0; c < 3; ++c) canvas.at(offset + x, y, c) = rb.at(x, y, c);

  const auto px = [](double v) { return static_cast<int>(std::lround(v)); };
  for (const auto& k : kps_ref) draw_circle(canvas, px(k.pos.x), px(k.pos.y), 3);
  for (const auto& k : kps_mov) draw_circle(canvas, offset + px(k.pos.x), px(k.pos.y), 3);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (inlier_mask.empty() || !inlier_mask[i]) continue;
    const auto& m = matches[i];
    if (m.idx_ref < 0 || m.idx_mov < 0 || static_cast<std::size_t>(m.idx_ref) >= kps_ref.size() ||
        static_cast<std::size_t>(m.idx_mov) >= kps_mov.size()) {
      throw Error(ErrorKind::InvalidInput, "match index out of range");
    }
    const Point2& a = kps_ref[m.idx_ref].pos;
    const Point2& b = kps_mov[m.idx_mov].pos;
    draw_line(canvas, px(a.x), px(a.y), offset + px(b.x), px(b.y));
  }
  return canvas;
}

nlohmann::json result_json(const RegistrationOutput& out, const RegistrationConfig& cfg,
                           bool include_timings) {
  nlohmann::json j;
  j["homography_original"] = matrix_json(out.h_original);
  j["homography_working"] = matrix_json(out.h_working);
  j["working_scale_ref"] = out.working_scale_ref;
  j["working_scale_mov"] = out.working_scale_mov;
  j["report"] = {{"method", out.report.method},
                 {"iterations", out.report.iterations_run},
                 {"inliers", out.report.inlier_count()},
                 {"matches", out.matches.size()},
                 {"score", out.report.score},
                 {"homography", matrix_json(out.report.h)}};
  j["keypoints"] = {{"reference", out.detections_ref.size()},
                    {"moving", out.detections_mov.size()}};
  j["warp"] = {{"width", out.warped_moving.width()},
               {"height", out.warped_moving.height()},
               {"out_of_bounds_fill", "black"}};
  j["config"] = to_json(cfg);
  if (include_timings) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [stage, ms] : out.timings_ms) t[stage] = ms;
    j["timings_ms"] = t;
  }
  return j;
}

std::vector<BundleFile> make_bundle(const RegistrationOutput& out, const ImageBuffer& reference,
                                    const RegistrationConfig& cfg) {
  std::vector<BundleFile> files;
  files.push_back({"reference.png", encode_png(reference)});
  files.push_back({"warped.png", encode_png(out.warped_moving)});
  files.push_back({"overlay_redcyan.png", encode_png(out.overlay_redcyan)});
  if (out.matches_visualization) {
    files.push_back({"matches.png", encode_png(*out.matches_visualization)});
  }
  nlohmann::json j = result_json(out, cfg);
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.name);
  names.emplace_back("result.json");
  j["files"] = names;
  const std::string text = j.dump(2) + "\n";
  files.push_back({"result.json", std::vector<std::uint8_t>(text.begin(), text.end())});
  return files;
}

void write_bundle(const std::vector<BundleFile>& files, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& f : files) {
    std::ofstream o(dir / f.name, std::ios::binary);
    if (!o) throw Error(ErrorKind::Io, "cannot write " + (dir / f.name).string());
    o.write(reinterpret_cast<const char*>(f.bytes.data()), static_cast<std::streamsize>(f.bytes.size()));
  }
}

}  // namespace craqreg
