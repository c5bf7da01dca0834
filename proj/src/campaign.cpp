#include "diolab/campaign.hpp"

#include "diolab/parallel.hpp"

namespace diolab {

std::vector<Mat> sample_thetas(std::uint64_t seed, std::size_t count, int m, int n) {
  const CounterRng root(seed);
  std::vector<Mat> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_theta(root.fork(i), m, n));
  return out;
}

std::vector<std::vector<GrowthPoint>> growth_campaign(std::span<const Mat> thetas,
                                                      const ApproxFunction& psi,
                                                      const SearchClass& cls,
                                                      std::span<const long long> q_grid,
                                                      const EnumerateOptions& opts) {
  return sample_map(thetas.size(), [&](std::size_t i) {
    return count_growth(thetas[i], psi, cls, q_grid, opts);
  });
}

std::vector<SimultaneousReport> simultaneous_campaign(std::span<const Mat> thetas,
                                                      std::span<const SearchClass> classes,
                                                      double c, double delta, long long q_max,
                                                      const SimultaneousOptions& opts) {
  return sample_map(thetas.size(), [&](std::size_t i) {
    return simultaneous_witnesses(thetas[i], classes, c, delta, q_max, opts);
  });
}

std::vector<WeightedReport> weighted_campaign(std::span<const Mat> thetas,
                                              std::span<const WeightedClassSpec> classes,
                                              double eps, double q_max,
                                              const WeightedOptions& opts) {
  return sample_map(thetas.size(), [&](std::size_t i) {
    return weighted_witnesses(thetas[i], classes, eps, q_max, opts);
  });
}

std::vector<CorollaryCheck> corollary_campaign(std::span<const CorollaryCase> cases,
                                               long long node_budget) {
  return sample_map(cases.size(), [&](std::size_t i) {
    EnumBudget budget{node_budget, 0};
    return crosscheck_corollary(cases[i].spec, cases[i].eps, cases[i].t, budget);
  });
}

}  // namespace diolab
