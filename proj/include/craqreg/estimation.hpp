#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "craqreg/config.hpp"
#include "craqreg/geometry.hpp"
#include "craqreg/kernels.hpp"
#include "craqreg/matching.hpp"

namespace craqreg {

struct EstimationReport {
  Homography h;
  std::vector<std::uint8_t> inlier_mask;  // one entry per match, 1 = inlier
  int iterations_run = 0;
  std::string method;
  double score = 0.0;

  int inlier_count() const;
};

/// Seeded sampling source: std::mt19937_64 (sequence fixed by the standard)
/// with an unbiased rejection draw, so samples agree across platforms.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// k distinct indices in [0, n), in draw order.
  std::vector<int> distinct(int k, int n);

 private:
  std::mt19937_64 engine_;
};

/// Iterations needed to draw one all-inlier 4-sample with the given
/// confidence: log(1 - confidence) / log(1 - w^4), capped at max_iters.
int adaptive_iterations(double inlier_ratio, double confidence, int max_iters);

/// Per-correspondence forward transfer errors; +inf where the transfer is
/// undefined.
void transfer_errors(const Homography& h, std::span<const Correspondence> c,
                     std::span<double> out, Exec exec = {});

/// Contribution of one residual to the threshold-free score:
/// max(0, 1 - e^2 / tau_max^2).
double truncated_quadratic(double error, double tau_max);
double magsac_score(const Homography& h, std::span<const Correspondence> c, double tau_max);

/// Builds the correspondence list (reference point, moving point) of each match.
std::vector<Correspondence> correspondences(std::span<const Match> matches,
                                            std::span<const Point2> pts_ref,
                                            std::span<const Point2> pts_mov);

EstimationReport estimate_ransac(std::span<const Match> matches, std::span<const Point2> pts_ref,
                                 std::span<const Point2> pts_mov, const EstimatorConfig& cfg,
                                 Exec exec = {});
EstimationReport estimate_lo_ransac(std::span<const Match> matches, std::span<const Point2> pts_ref,
                                    std::span<const Point2> pts_mov, const EstimatorConfig& cfg,
                                    Exec exec = {});
EstimationReport estimate_magsac_simplified(std::span<const Match> matches,
                                            std::span<const Point2> pts_ref,
                                            std::span<const Point2> pts_mov,
                                            const EstimatorConfig& cfg, Exec exec = {});

/// Dispatches on cfg.method.
EstimationReport estimate_homography(std::span<const Match> matches,
                                     std::span<const Point2> pts_ref,
                                     std::span<const Point2> pts_mov, const EstimatorConfig& cfg,
                                     Exec exec = {});

}  // namespace craqreg
