#include "craqreg/matching.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "craqreg/error.hpp"

namespace craqreg {

double squared_distance(const Descriptor& a, const Descriptor& b) {
  double s = 0.0;
  for (int k = 0; k < kDescriptorDim; ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return s;
}

namespace {

// (distance, index) lexicographic minimum; associative, so per-thread
// partial minima reduce to the serial answer.
inline void take_min(double d, int idx, double& best_d, int& best_idx) {
  if (d < best_d || (d == best_d && idx < best_idx)) {
    best_d = d;
    best_idx = idx;
  }
}

}  // namespace

NearestNeighbors nearest_neighbors(std::span<const Descriptor> ref, std::span<const Descriptor> mov,
                                   Exec exec) {
  const int n = static_cast<int>(ref.size());
  const int m = static_cast<int>(mov.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  NearestNeighbors nn;
  nn.ref_to_mov.assign(n, -1);
  nn.ref_to_mov_d2.assign(n, kInf);
  nn.mov_to_ref.assign(m, -1);
  nn.mov_to_ref_d2.assign(m, kInf);

  if (!exec.parallel()) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double d = squared_distance(ref[i], mov[j]);
        take_min(d, j, nn.ref_to_mov_d2[i], nn.ref_to_mov[i]);
        take_min(d, i, nn.mov_to_ref_d2[j], nn.mov_to_ref[j]);
      }
    }
    return nn;
  }

  const int threads = exec.thread_count();
  std::vector<std::vector<double>> col_d(threads, std::vector<double>(m, kInf));
  std::vector<std::vector<int>> col_i(threads, std::vector<int>(m, -1));
#pragma omp parallel num_threads(threads)
  {
    const int t = omp_get_thread_num();
    auto& cd = col_d[t];
    auto& ci = col_i[t];
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double d = squared_distance(ref[i], mov[j]);
        take_min(d, j, nn.ref_to_mov_d2[i], nn.ref_to_mov[i]);
        take_min(d, i, cd[j], ci[j]);
      }
    }
  }
  for (int t = 0; t < threads; ++t) {
    for (int j = 0; j < m; ++j) {
      if (col_i[t][j] >= 0) take_min(col_d[t][j], col_i[t][j], nn.mov_to_ref_d2[j], nn.mov_to_ref[j]);
    }
  }
  return nn;
}

std::vector<Match> match_mutual_nn(std::span<const Descriptor> ref, std::span<const Descriptor> mov,
                                   Exec exec) {
  if (ref.empty() || mov.empty()) {
    throw Error(ErrorKind::NoMatches, "cannot match an empty descriptor set");
  }
  const NearestNeighbors nn = nearest_neighbors(ref, mov, exec);
  std::vector<Match> out;
  for (int i = 0; i < static_cast<int>(ref.size()); ++i) {
    const int j = nn.ref_to_mov[i];
    if (j >= 0 && nn.mov_to_ref[j] == i) out.push_back({i, j, std::sqrt(nn.ref_to_mov_d2[i])});
  }
  if (out.empty()) throw Error(ErrorKind::NoMatches, "no mutual nearest neighbors");
  std::stable_sort(out.begin(), out.end(), [](const Match& a, const Match& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.idx_ref < b.idx_ref;
  });
  return out;
}

std::vector<Match> match_mutual_nn(const DetectionResult& ref, const DetectionResult& mov, Exec exec) {
  return match_mutual_nn(std::span<const Descriptor>(ref.descriptors),
                         std::span<const Descriptor>(mov.descriptors), exec);
}

}  // namespace craqreg
