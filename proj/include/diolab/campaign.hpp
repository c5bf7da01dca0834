#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diolab/diosearch.hpp"
#include "diolab/flowlab.hpp"
#include "diolab/rng.hpp"

namespace diolab {

// The theta sample list for a seeded batch. Sample i is drawn from fork(i)
// of the seed stream, so the list never depends on how work is sharded.
std::vector<Mat> sample_thetas(std::uint64_t seed, std::size_t count, int m, int n);

// Per-theta cumulative solution counts at the thresholds in q_grid.
std::vector<std::vector<GrowthPoint>> growth_campaign(std::span<const Mat> thetas,
                                                      const ApproxFunction& psi,
                                                      const SearchClass& cls,
                                                      std::span<const long long> q_grid,
                                                      const EnumerateOptions& opts = {});

// Per-theta two-speed witness reports.
std::vector<SimultaneousReport> simultaneous_campaign(std::span<const Mat> thetas,
                                                      std::span<const SearchClass> classes,
                                                      double c, double delta, long long q_max,
                                                      const SimultaneousOptions& opts = {});

// Per-theta weighted witness reports.
std::vector<WeightedReport> weighted_campaign(std::span<const Mat> thetas,
                                              std::span<const WeightedClassSpec> classes,
                                              double eps, double q_max,
                                              const WeightedOptions& opts = {});

// One membership-implies-witness case; the batch runs each independently.
struct CorollaryCase {
  OrbitSpec spec;
  double eps = 0.5;
  double t = 1.0;
};
std::vector<CorollaryCheck> corollary_campaign(std::span<const CorollaryCase> cases,
                                               long long node_budget = 10'000'000);

}  // namespace diolab
