// Wall-clock comparison of the OpenMP sample map against its serial twin on
// the two batch kernels that dominate real campaigns. The parallel map must
// reproduce the serial results bit for bit — the benchmark fails loudly if it
// does not, so it doubles as a determinism stress test at full width.
//
// Usage: diolab_bench [samples] [horizon]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "diolab/campaign.hpp"
#include "diolab/parallel.hpp"

using namespace diolab;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct KernelResult {
  double serial_s = 0.0;
  double parallel_s = 0.0;
  bool identical = false;
};

template <class Fn>
KernelResult race(std::size_t count, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto serial = sample_map_serial(count, fn);
  const double serial_s = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  const auto parallel = sample_map(count, fn);
  const double parallel_s = seconds_since(t1);

  return {serial_s, parallel_s, serial == parallel};
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-22s serial=%8.3fs  parallel=%8.3fs  speedup=%.2fx  identical=%s\n", name,
              serial_s, parallel_s, serial_s / parallel_s, identical ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t samples = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 24;
  const double horizon = argc > 2 ? std::strtod(argv[2], nullptr) : 150.0;
  std::printf("workers=%d samples=%zu horizon=%.0f\n", worker_count(), samples, horizon);

  const std::vector<Mat> thetas = sample_thetas(5150, samples, 1, 1);
  const IMat gamma = class_gamma(std::vector<long long>{1, 1}, 2);
  bool all_identical = true;

  {
    const auto run = race(samples, [&](std::size_t i) {
      OrbitSpec sp;
      sp.theta = thetas[i];
      sp.gamma = gamma;
      sp.modulus = 2;
      sp.t_grid = uniform_grid(0.0, horizon, 0.05);
      EnumBudget budget{100'000'000, 0};
      const std::vector<DeltaSample> series = orbit_delta_series(sp, budget);
      std::vector<double> deltas(series.size());
      for (std::size_t k = 0; k < series.size(); ++k) deltas[k] = series[k].delta;
      return deltas;
    });
    report("orbit delta series", run.serial_s, run.parallel_s, run.identical);
    all_identical = all_identical && run.identical;
  }

  {
    const ApproxFunction psi = ApproxFunction::power_law(1.0, 1.0);
    const SearchClass cls{4, {1, 2}};
    const std::vector<long long> grid = {1000, 10000, 100000};
    const auto run = race(samples, [&](std::size_t i) {
      std::vector<long long> counts;
      for (const GrowthPoint& p : count_growth(thetas[i], psi, cls, grid))
        counts.push_back(p.count);
      return counts;
    });
    report("solution-count growth", run.serial_s, run.parallel_s, run.identical);
    all_identical = all_identical && run.identical;
  }

  if (!all_identical) {
    std::printf("FAILURE: parallel results diverged from the serial reference\n");
    return 1;
  }
  return 0;
}
