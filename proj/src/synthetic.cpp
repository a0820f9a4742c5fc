#include "craqreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "craqreg/error.hpp"

namespace craqreg::synth {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_hash(std::uint64_t seed, std::int64_t i, std::int64_t j, int k) {
  std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(i) * 0x100000001b3ULL ^
                                   mix(static_cast<std::uint64_t>(j) + 17 * static_cast<std::uint64_t>(k))));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

void draw_arms(ImageBuffer& img, Point2 center, const double (&angles)[3], double length,
               std::uint8_t value) {
  for (double ang : angles) {
    const Point2 end{center.x + length * std::cos(ang), center.y + length * std::sin(ang)};
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(center.x, end.x))) - 1);
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(std::max(center.x, end.x))) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(center.y, end.y))) - 1);
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(std::max(center.y, end.y))) + 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (segment_distance({static_cast<double>(x), static_cast<double>(y)}, center, end) <= 0.5)
          img.at(x, y) = value;
  }
}

// Low-frequency paint layer: a few long-wavelength sinusoids.
struct Paint {
  double amp[4], fx[4], fy[4], phase[4];
  double base;

  explicit Paint(std::uint64_t seed) {
    std::mt19937_64 rng(mix(seed ^ 0x5eedULL));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    base = 150.0 + 20.0 * u(rng);
    for (int k = 0; k < 4; ++k) {
      amp[k] = 8.0 + 14.0 * u(rng);
      const double wavelength = 180.0 + 420.0 * u(rng);
      const double dir = 2.0 * kPi * u(rng);
      fx[k] = 2.0 * kPi / wavelength * std::cos(dir);
      fy[k] = 2.0 * kPi / wavelength * std::sin(dir);
      phase[k] = 2.0 * kPi * u(rng);
    }
  }

  double operator()(double x, double y) const {
    double v = base;
    for (int k = 0; k < 4; ++k) v += amp[k] * std::sin(fx[k] * x + fy[k] * y + phase[k]);
    return v;
  }
};

constexpr double kCrackDepth = 95.0;
constexpr double kCrackHalfWidth = 0.9;

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

ImageBuffer y_crack(int width, int height, Point2 center, double arm_length) {
  ImageBuffer img(width, height, 1, 200);
  const double angles[3] = {kPi / 2.0, kPi / 2.0 + 2.0 * kPi / 3.0, kPi / 2.0 + 4.0 * kPi / 3.0};
  draw_arms(img, center, angles, arm_length, 60);
  return img;
}

JunctionFixture y_junction_field(int width, int height, int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorKind::InvalidInput, "junction count must be positive");
  JunctionFixture f{ImageBuffer(width, height, 1, 200), {}};
  const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(count * static_cast<double>(width) / height))));
  const int rows = (count + cols - 1) / cols;
  const double sx = static_cast<double>(width) / cols;
  const double sy = static_cast<double>(height) / rows;
  const double arm = 0.3 * std::min(sx, sy);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < count; ++n) {
    const int r = n / cols;
    const int c = n % cols;
    const Point2 center{std::round((c + 0.5) * sx + 6.0 * (u(rng) - 0.5)),
                        std::round((r + 0.5) * sy + 6.0 * (u(rng) - 0.5))};
    const double a0 = 2.0 * kPi * u(rng);
    const double a1 = a0 + 2.0 * kPi / 3.0 + (u(rng) - 0.5) * 0.6;
    const double a2 = a1 + 2.0 * kPi / 3.0 + (u(rng) - 0.5) * 0.6;
    const double angles[3] = {a0, a1, a2};
    draw_arms(f.image, center, angles, arm, 60);
    f.junctions.push_back(center);
  }
  return f;
}

CraquelureScene::CraquelureScene(std::uint64_t seed, double cell_size) : seed_(seed), cell_(cell_size) {
  std::mt19937_64 rng(mix(seed ^ 0xc0ffeeULL));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 4; ++k) {
    warp_amp_[k] = 1.5 + 2.0 * u(rng);
    warp_freq_[k] = 2.0 * kPi / (90.0 + 120.0 * u(rng));
    warp_phase_[k] = 2.0 * kPi * u(rng);
  }
}

double CraquelureScene::crack(double x, double y) const {
  // Displace the sample point so the Voronoi edges become gently curved.
  const double qx = x + warp_amp_[0] * std::sin(warp_freq_[0] * y + warp_phase_[0]) +
                    warp_amp_[1] * std::sin(warp_freq_[1] * (x + y) + warp_phase_[1]);
  const double qy = y + warp_amp_[2] * std::sin(warp_freq_[2] * x + warp_phase_[2]) +
                    warp_amp_[3] * std::sin(warp_freq_[3] * (x - y) + warp_phase_[3]);
  const auto ci = static_cast<std::int64_t>(std::floor(qx / cell_));
  const auto cj = static_cast<std::int64_t>(std::floor(qy / cell_));
  double d1 = 1e300, d2 = 1e300;
  double s1x = 0, s1y = 0, s2x = 0, s2y = 0;
  for (std::int64_t j = cj - 2; j <= cj + 2; ++j) {
    for (std::int64_t i = ci - 2; i <= ci + 2; ++i) {
      const double sx = (static_cast<double>(i) + 0.1 + 0.8 * unit_hash(seed_, i, j, 0)) * cell_;
      const double sy = (static_cast<double>(j) + 0.1 + 0.8 * unit_hash(seed_, i, j, 1)) * cell_;
      const double d = (qx - sx) * (qx - sx) + (qy - sy) * (qy - sy);
      if (d < d1) {
        d2 = d1;
        s2x = s1x;
        s2y = s1y;
        d1 = d;
        s1x = sx;
        s1y = sy;
      } else if (d < d2) {
        d2 = d;
        s2x = sx;
        s2y = sy;
      }
    }
  }
  const double sep = std::hypot(s1x - s2x, s1y - s2y);
  const double boundary = (d2 - d1) / (2.0 * sep);
  return std::clamp(1.0 - boundary / kCrackHalfWidth, 0.0, 1.0);
}

double CraquelureScene::paint(double x, double y, std::uint64_t paint_seed) const {
  return Paint(paint_seed)(x, y);
}

double CraquelureScene::reference_value(double x, double y) const {
  return paint(x, y, seed_) - kCrackDepth * crack(x, y);
}

ImageBuffer CraquelureScene::render_reference(int width, int height) const {
  const Paint paint(seed_);
  ImageBuffer img(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      img.at(x, y) = to_u8(paint(x, y) - kCrackDepth * crack(x, y));
  return img;
}

ImageBuffer CraquelureScene::render_moving(int width, int height, const Homography& h,
                                           Modality modality, std::uint64_t seed) const {
  // The identity modality shares the reference paint; the others see
  // different content over the same cracks.
  const Paint paint(modality == Modality::IdentityNoise ? seed_ : mix(seed_ ^ seed ^ 0xa11ceULL));
  ImageBuffer img(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point2 q = apply(h, {static_cast<double>(x), static_cast<double>(y)});
      img.at(x, y) = to_u8(paint(q.x, q.y) - kCrackDepth * crack(q.x, q.y));
    }
  }
  return apply_modality(img, modality, seed);
}

Homography mild_homography(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed ^ 0x40a0ULL));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double theta = u(rng) * 3.0 * kPi / 180.0;
  const double s = 1.0 + 0.08 * u(rng);
  const double tx = 15.0 * u(rng);
  const double ty = 15.0 * u(rng);
  const double gx = 5e-5 * u(rng);
  const double gy = 5e-5 * u(rng);
  const double cx = width / 2.0;
  const double cy = height / 2.0;
  const Homography to_origin = Homography::translation(-cx, -cy);
  const Homography back = Homography::translation(cx + tx, cy + ty);
  const Homography rot_scale({s * std::cos(theta), -s * std::sin(theta), 0.0, s * std::sin(theta),
                              s * std::cos(theta), 0.0, 0.0, 0.0, 1.0});
  const Homography persp({1.0, 0.0, 0.0, 0.0, 1.0, 0.0, gx, gy, 1.0});
  return back * rot_scale * persp * to_origin;
}

ImageBuffer apply_modality(const ImageBuffer& img, Modality modality, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed ^ 0x9015eULL));
  const int w = img.width();
  const int h = img.height();
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[static_cast<std::size_t>(y) * w + x] = img.at(x, y);

  double noise_sigma = 3.0;
  switch (modality) {
    case Modality::IdentityNoise: break;
    case Modality::Inverted:
      for (double& p : v) p = 255.0 - p;
      break;
    case Modality::GammaBlur: {
      for (double& p : v) p = 255.0 * std::pow(std::clamp(p, 0.0, 255.0) / 255.0, 1.8);
      // Separable Gaussian blur, sigma 1, radius 3, replicated border.
      double k[7];
      double ks = 0.0;
      for (int i = -3; i <= 3; ++i) ks += (k[i + 3] = std::exp(-0.5 * i * i));
      for (double& kv : k) kv /= ks;
      std::vector<double> tmp(v.size());
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int i = -3; i <= 3; ++i)
            acc += k[i + 3] * v[static_cast<std::size_t>(y) * w + std::clamp(x + i, 0, w - 1)];
          tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int i = -3; i <= 3; ++i)
            acc += k[i + 3] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
          v[static_cast<std::size_t>(y) * w + x] = acc;
        }
      noise_sigma = 2.0;
      break;
    }
  }
  std::normal_distribution<double> noise(0.0, noise_sigma);
  ImageBuffer out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = to_u8(v[static_cast<std::size_t>(y) * w + x] + noise(rng));
  return out;
}

SyntheticPair make_pair(int width, int height, Modality modality, std::uint64_t seed,
                        int control_points) {
  const CraquelureScene scene(seed);
  SyntheticPair pair{apply_modality(scene.render_reference(width, height), Modality::IdentityNoise,
                                    mix(seed ^ 0x7efULL)),
                     {},
                     mild_homography(width, height, seed),
                     {}};
  pair.moving = scene.render_moving(width, height, pair.h_true, modality, seed);
  pair.annotation.pair_id = "synthetic-" + std::to_string(seed);
  std::mt19937_64 rng(mix(seed ^ 0xa770ULL));
  std::uniform_real_distribution<double> ux(0.1 * width, 0.9 * width);
  std::uniform_real_distribution<double> uy(0.1 * height, 0.9 * height);
  while (static_cast<int>(pair.annotation.points.size()) < control_points) {
    const Point2 b{ux(rng), uy(rng)};
    const Point2 a = apply(pair.h_true, b);
    if (a.x < 0 || a.y < 0 || a.x > width - 1 || a.y > height - 1) continue;
    pair.annotation.points.push_back({a, b});
  }
  return pair;
}

}  // namespace craqreg::synth
