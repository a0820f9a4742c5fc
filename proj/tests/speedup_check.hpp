#pragma once

#include <chrono>
#include <string>
#include <thread>

#include "craqreg/detection.hpp"
#include "craqreg/synthetic.hpp"

namespace speedup {

struct Result {
  bool measured = false;
  double serial_s = 0.0;
  double parallel_s = 0.0;
  double ratio() const { return serial_s / parallel_s; }
};

inline unsigned hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Detection time of a 2048x2048 image with 1 and 4 workers (best of 2).
inline Result measure(int workers = 4) {
  Result r;
  if (hardware_threads() < static_cast<unsigned>(workers)) return r;
  const craqreg::synth::CraquelureScene scene(2048);
  const craqreg::ImageBuffer img = scene.render_reference(2048, 2048);
  const auto time = [&](int w) {
    craqreg::RegistrationConfig cfg;
    cfg.workers = w;
    double best = 1e300;
    for (int rep = 0; rep < 2; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)craqreg::detect_image(img, cfg);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  r.serial_s = time(1);
  r.parallel_s = time(workers);
  r.measured = true;
  return r;
}

}  // namespace speedup
