// Throughput comparison between the serial reference replica loop and the
// OpenMP batch path, plus the raw stepping rate. The two paths must produce
// identical numbers; this target reports how much time the parallel path
// saves (nothing, on a single hardware thread).

#include <chrono>
#include <cstdio>
#include <vector>

#include "qtraj/kernel.hpp"
#include "qtraj/reference.hpp"
#include "qtraj/stats.hpp"
#include "qtraj/trajectory.hpp"

using namespace qtraj;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count() / 1e6;
}

double run_batch(const TrajectoryConfig& cfg, long n, int replicas, int threads, bool parallel,
                 double* checksum) {
  Observable pop = Observable::population(cfg.family.dim, 0);
  std::vector<double> sums(static_cast<std::size_t>(replicas), 0.0);
  auto body = [&](int r) {
    TrajectoryConfig c = cfg;
    c.replica_index = static_cast<std::uint64_t>(r);
    TrajectoryWalker walker(c);
    double s = 0.0;
    for (long k = 0; k < n; ++k) {
      s += pop.value_at(walker.state_data(), walker.dim());
      walker.step();
    }
    sums[static_cast<std::size_t>(r)] = s;
  };
  Clock::time_point t0 = Clock::now();
  if (parallel) {
    for_each_replica_parallel(replicas, threads, body);
  } else {
    for_each_replica_serial(replicas, body);
  }
  double elapsed = seconds_since(t0);
  *checksum = 0.0;
  for (double s : sums) *checksum += s;  // fixed-order reduction
  return elapsed;
}

}  // namespace

int main() {
  KeepSwitchModel model = build_keep_switch(0.3);
  TrajectoryConfig cfg;
  cfg.family = model.family;
  cfg.initial_state = uniform_superposition(2);
  cfg.master_seed = 12345;

  int threads = resolve_threads(0);
  std::printf("replica batch benchmark, %d thread(s)\n", threads);
  std::printf("%-10s %-10s %-12s %-12s %-9s %-10s\n", "replicas", "steps", "serial[s]",
              "parallel[s]", "speedup", "identical");

  for (auto [replicas, n] : std::vector<std::pair<int, long>>{{64, 20000}, {256, 20000},
                                                              {64, 200000}}) {
    double sum_serial = 0.0, sum_parallel = 0.0;
    double t_serial = run_batch(cfg, n, replicas, threads, false, &sum_serial);
    double t_parallel = run_batch(cfg, n, replicas, threads, true, &sum_parallel);
    std::printf("%-10d %-10ld %-12.3f %-12.3f %-9.2f %-10s\n", replicas, n, t_serial, t_parallel,
                t_serial / t_parallel, sum_serial == sum_parallel ? "yes" : "NO");
  }

  // Raw stepping rate for sizing longer experiments.
  {
    TrajectoryWalker walker(cfg);
    const long n = 5000000;
    Clock::time_point t0 = Clock::now();
    for (long k = 0; k < n; ++k) walker.step();
    double elapsed = seconds_since(t0);
    std::printf("single walker: %.1f Msteps/s\n", n / elapsed / 1e6);
  }
  return 0;
}
