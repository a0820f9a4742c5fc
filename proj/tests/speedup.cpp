// Parallel patch detection speedup at 4 workers. Exits 77 (skipped) on
// machines with fewer than 4 hardware threads.

#include <cstdio>

#include "speedup_check.hpp"

int main() {
  const auto r = speedup::measure(4);
  if (!r.measured) {
    std::printf("SKIP perf_parallel_speedup: needs 4 hardware threads, found %u\n",
                speedup::hardware_threads());
    return 77;
  }
  const bool pass = r.ratio() >= 1.5;
  std::printf("%s perf_parallel_speedup: %.2fx (serial %.2f s, 4 workers %.2f s, need >= 1.5x)\n",
              pass ? "PASS" : "FAIL", r.ratio(), r.serial_s, r.parallel_s);
  return pass ? 0 : 1;
}
