#pragma once

#include <span>
#include <vector>

#include "craqreg/detection.hpp"
#include "craqreg/kernels.hpp"

namespace craqreg {

struct Match {
  int idx_ref = 0;
  int idx_mov = 0;
  double dist = 0.0;  // L2 distance between the two descriptors

  friend bool operator==(const Match&, const Match&) = default;
};

/// Squared L2 distance accumulated in double, in index order.
double squared_distance(const Descriptor& a, const Descriptor& b);

/// Nearest neighbor of every descriptor of one set in the other set, in
/// both directions; ties resolve to the smaller index. A single pass over
/// the distance matrix; the parallel path keeps per-thread column minima and
/// reduces them, giving the same result as the serial path.
struct NearestNeighbors {
  std::vector<int> ref_to_mov;
  std::vector<double> ref_to_mov_d2;
  std::vector<int> mov_to_ref;
  std::vector<double> mov_to_ref_d2;
};
NearestNeighbors nearest_neighbors(std::span<const Descriptor> ref, std::span<const Descriptor> mov,
                                   Exec exec = {});

/// Mutual nearest neighbor matching sorted by ascending distance (ties by
/// idx_ref). Throws NoMatches when either input is empty or nothing is mutual.
std::vector<Match> match_mutual_nn(const DetectionResult& ref, const DetectionResult& mov,
                                   Exec exec = {});
std::vector<Match> match_mutual_nn(std::span<const Descriptor> ref, std::span<const Descriptor> mov,
                                   Exec exec = {});

}  // namespace craqreg
