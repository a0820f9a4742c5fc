#include "craqreg/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "craqreg/error.hpp"

namespace craqreg {

namespace {

constexpr int kSampleSize = 4;
constexpr int kLoRounds = 10;
constexpr int kWeightedRefits = 3;
constexpr double kTauMaxFactor = 3.0;
// Below this many correspondences the per-hypothesis scoring stays serial.
constexpr std::ptrdiff_t kParallelScoringMin = 2048;

enum class Variant { Ransac, LoRansac, Magsac };

struct Evaluation {
  Homography h;
  std::vector<std::uint8_t> inliers;
  int count = 0;
  double mean_error = std::numeric_limits<double>::infinity();
  double score = 0.0;  // threshold-free score (magsac only)
};

class Scorer {
 public:
  Scorer(std::span<const Correspondence> c, const EstimatorConfig& cfg, Exec exec)
      : c_(c), tau_(cfg.tau_reproj), tau_max_(kTauMaxFactor * cfg.tau_reproj), exec_(exec),
        errors_(c.size()) {}

  Evaluation evaluate(const Homography& h) {
    transfer_errors(h, c_, errors_, exec_);
    Evaluation ev{h, std::vector<std::uint8_t>(c_.size(), 0)};
    double sum = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      const double e = errors_[i];
      if (e < tau_) {
        ev.inliers[i] = 1;
        ++ev.count;
        sum += e;
      }
      ev.score += truncated_quadratic(e, tau_max_);
    }
    if (ev.count > 0) ev.mean_error = sum / ev.count;
    return ev;
  }

  std::span<const double> last_errors() const { return errors_; }
  double tau_max() const { return tau_max_; }
  std::span<const Correspondence> data() const { return c_; }

 private:
  std::span<const Correspondence> c_;
  double tau_;
  double tau_max_;
  Exec exec_;
  std::vector<double> errors_;
};

bool better_by_count(const Evaluation& cand, const std::optional<Evaluation>& best) {
  if (!best) return true;
  if (cand.count != best->count) return cand.count > best->count;
  return cand.mean_error < best->mean_error;
}

bool better_by_score(const Evaluation& cand, const std::optional<Evaluation>& best) {
  return !best || cand.score > best->score;
}

std::optional<Homography> fit_on(std::span<const Correspondence> c,
                                 const std::vector<std::uint8_t>& mask) {
  std::vector<Correspondence> subset;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (mask[i]) subset.push_back(c[i]);
  if (subset.size() < kSampleSize) return std::nullopt;
  try {
    return estimate_dlt(subset);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateConfiguration || e.kind() == ErrorKind::DegenerateHomography)
      return std::nullopt;
    throw;
  }
}

// Iterated refit on the consensus set until it stops changing.
Evaluation local_optimization(Scorer& scorer, const Evaluation& start) {
  Evaluation current = start;
  for (int round = 0; round < kLoRounds; ++round) {
    const auto refit = fit_on(scorer.data(), current.inliers);
    if (!refit) break;
    Evaluation next = scorer.evaluate(*refit);
    const bool stable = next.inliers == current.inliers;
    current = std::move(next);
    if (stable) break;
  }
  return current;
}

EstimationReport run(Variant variant, std::span<const Match> matches,
                     std::span<const Point2> pts_ref, std::span<const Point2> pts_mov,
                     const EstimatorConfig& cfg, Exec exec) {
  if (!(cfg.tau_reproj > 0.0) || !(cfg.confidence > 0.0 && cfg.confidence < 1.0) ||
      cfg.max_iters < 1) {
    throw ConfigError("estimator", "invalid estimator configuration");
  }
  if (matches.size() < kSampleSize) {
    throw Error(ErrorKind::EstimationFailed,
                "at least 4 matches are required, got " + std::to_string(matches.size()));
  }
  const std::vector<Correspondence> corr = correspondences(matches, pts_ref, pts_mov);
  const int n = static_cast<int>(corr.size());
  Scorer scorer(corr, cfg, exec);
  SampleRng rng(cfg.seed);

  std::optional<Evaluation> best;
  int needed = cfg.max_iters;
  int iterations = 0;
  while (iterations < needed) {
    ++iterations;
    const std::vector<int> idx = rng.distinct(kSampleSize, n);
    const std::array<Point2, 4> sa{corr[idx[0]].a, corr[idx[1]].a, corr[idx[2]].a, corr[idx[3]].a};
    const std::array<Point2, 4> sb{corr[idx[0]].b, corr[idx[1]].b, corr[idx[2]].b, corr[idx[3]].b};
    if (has_collinear_triple(sa) || has_collinear_triple(sb)) continue;
    std::optional<Homography> model;
    try {
      const Correspondence sample[4] = {corr[idx[0]], corr[idx[1]], corr[idx[2]], corr[idx[3]]};
      model = estimate_dlt(sample);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateConfiguration && e.kind() != ErrorKind::DegenerateHomography)
        throw;
    }
    if (!model) continue;

    Evaluation ev = scorer.evaluate(*model);
    const bool improved =
        variant == Variant::Magsac ? better_by_score(ev, best) : better_by_count(ev, best);
    if (!improved) continue;
    if (variant == Variant::LoRansac && ev.count >= kSampleSize) {
      Evaluation lo = local_optimization(scorer, ev);
      if (lo.count > ev.count) ev = std::move(lo);
    }
    best = std::move(ev);
    needed = std::min(cfg.max_iters,
                      std::max(iterations, adaptive_iterations(static_cast<double>(best->count) / n,
                                                               cfg.confidence, cfg.max_iters)));
  }

  if (!best || best->count < kSampleSize) {
    throw Error(ErrorKind::EstimationFailed,
                "no model reached 4 inliers after " + std::to_string(iterations) + " iterations");
  }

  Evaluation final_ev = *best;
  if (variant == Variant::Magsac) {
    // Iteratively reweighted DLT with the truncated-quadratic weights.
    Evaluation current = *best;
    std::vector<double> weights(corr.size());
    for (int round = 0; round < kWeightedRefits; ++round) {
      transfer_errors(current.h, corr, weights, exec);
      for (double& w : weights) w = truncated_quadratic(w, scorer.tau_max());
      std::optional<Homography> refit;
      try {
        refit = estimate_dlt_weighted(corr, weights);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateConfiguration && e.kind() != ErrorKind::DegenerateHomography)
          throw;
      }
      if (!refit) break;
      current = scorer.evaluate(*refit);
    }
    if (current.score >= best->score && current.count >= kSampleSize) final_ev = std::move(current);
  } else {
    if (const auto refit = fit_on(corr, best->inliers)) {
      Evaluation ev = scorer.evaluate(*refit);
      if (ev.count >= best->count) final_ev = std::move(ev);
    }
  }

  EstimationReport report{final_ev.h, std::move(final_ev.inliers), iterations, {}, 0.0};
  switch (variant) {
    case Variant::Ransac: report.method = "ransac"; break;
    case Variant::LoRansac: report.method = "lo-ransac"; break;
    case Variant::Magsac: report.method = "magsac-simplified"; break;
  }
  report.score = variant == Variant::Magsac ? final_ev.score : static_cast<double>(final_ev.count);
  return report;
}

}  // namespace

int EstimationReport::inlier_count() const {
  return static_cast<int>(std::count(inlier_mask.begin(), inlier_mask.end(), std::uint8_t{1}));
}

std::uint64_t SampleRng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidInput, "empty sampling range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::vector<int> SampleRng::distinct(int k, int n) {
  if (k > n) throw Error(ErrorKind::InvalidInput, "sample larger than population");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  while (static_cast<int>(out.size()) < k) {
    const int r = static_cast<int>(below(static_cast<std::uint64_t>(n)));
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

int adaptive_iterations(double inlier_ratio, double confidence, int max_iters) {
  if (inlier_ratio <= 0.0) return max_iters;
  if (inlier_ratio >= 1.0) return 1;
  const double p_good = std::pow(inlier_ratio, kSampleSize);
  const double denom = std::log1p(-p_good);
  if (!(denom < 0.0)) return max_iters;
  const double n = std::ceil(std::log(1.0 - confidence) / denom);
  if (!(n < static_cast<double>(max_iters))) return max_iters;
  return std::max(1, static_cast<int>(n));
}

void transfer_errors(const Homography& h, std::span<const Correspondence> c,
                     std::span<double> out, Exec exec) {
  if (out.size() != c.size()) throw Error(ErrorKind::InvalidInput, "output size mismatch");
  const auto& m = h.matrix();
  const auto n = static_cast<std::ptrdiff_t>(c.size());
#pragma omp parallel for schedule(static) num_threads(exec.thread_count()) \
    if (exec.parallel() && n >= kParallelScoringMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Point2& b = c[i].b;
    const double w = m[6] * b.x + m[7] * b.y + m[8];
    if (!(std::abs(w) > 1e-12)) {
      out[i] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double x = (m[0] * b.x + m[1] * b.y + m[2]) / w;
    const double y = (m[3] * b.x + m[4] * b.y + m[5]) / w;
    out[i] = std::hypot(x - c[i].a.x, y - c[i].a.y);
  }
}

double truncated_quadratic(double error, double tau_max) {
  if (!std::isfinite(error)) return 0.0;
  return std::max(0.0, 1.0 - (error * error) / (tau_max * tau_max));
}

double magsac_score(const Homography& h, std::span<const Correspondence> c, double tau_max) {
  std::vector<double> errors(c.size());
  transfer_errors(h, c, errors, Exec::serial());
  double s = 0.0;
  for (double e : errors) s += truncated_quadratic(e, tau_max);
  return s;
}

std::vector<Correspondence> correspondences(std::span<const Match> matches,
                                            std::span<const Point2> pts_ref,
                                            std::span<const Point2> pts_mov) {
  std::vector<Correspondence> out;
  out.reserve(matches.size());
  for (const Match& m : matches) {
    if (m.idx_ref < 0 || m.idx_mov < 0 || static_cast<std::size_t>(m.idx_ref) >= pts_ref.size() ||
        static_cast<std::size_t>(m.idx_mov) >= pts_mov.size()) {
      throw Error(ErrorKind::InvalidInput, "match index out of range");
    }
    out.push_back({pts_ref[m.idx_ref], pts_mov[m.idx_mov]});
  }
  return out;
}

EstimationReport estimate_ransac(std::span<const Match> matches, std::span<const Point2> pts_ref,
                                 std::span<const Point2> pts_mov, const EstimatorConfig& cfg,
                                 Exec exec) {
  return run(Variant::Ransac, matches, pts_ref, pts_mov, cfg, exec);
}

EstimationReport estimate_lo_ransac(std::span<const Match> matches, std::span<const Point2> pts_ref,
                                    std::span<const Point2> pts_mov, const EstimatorConfig& cfg,
                                    Exec exec) {
  return run(Variant::LoRansac, matches, pts_ref, pts_mov, cfg, exec);
}

EstimationReport estimate_magsac_simplified(std::span<const Match> matches,
                                            std::span<const Point2> pts_ref,
                                            std::span<const Point2> pts_mov,
                                            const EstimatorConfig& cfg, Exec exec) {
  return run(Variant::Magsac, matches, pts_ref, pts_mov, cfg, exec);
}

EstimationReport estimate_homography(std::span<const Match> matches,
                                     std::span<const Point2> pts_ref,
                                     std::span<const Point2> pts_mov, const EstimatorConfig& cfg,
                                     Exec exec) {
  switch (cfg.method) {
    case EstimatorMethod::Ransac: return estimate_ransac(matches, pts_ref, pts_mov, cfg, exec);
    case EstimatorMethod::LoRansac: return estimate_lo_ransac(matches, pts_ref, pts_mov, cfg, exec);
    case EstimatorMethod::MagsacSimplified:
      return estimate_magsac_simplified(matches, pts_ref, pts_mov, cfg, exec);
  }
  throw ConfigError("estimator.method", "unknown estimator");
}

}  // namespace craqreg
