#pragma once

#include <span>
#include <vector>

#include "diolab/dani.hpp"
#include "diolab/numkit.hpp"

namespace diolab {

// One congruence class at a single modulus, in dimension d = m + n
// (first m residues constrain p, the last n constrain q).
struct SearchClass {
  long long modulus = 1;
  std::vector<long long> residues;
};

struct SolutionRecord {
  std::vector<long long> p, q;
  double residual = 0.0;  // norm of theta q + p (sup, or the class quasi-norm)
  double qnorm = 0.0;     // norm of q
  double scale = 0.0;     // qnorm^n for the equal-weight searches, else 0
};

// The p in the class minimizing every |(theta q + p)_j| independently
// (nearest class point per coordinate, ties toward the smaller p).
std::vector<long long> best_p_for_q(const Mat& theta, std::span<const long long> q,
                                    std::span<const long long> p_residues, long long modulus);

struct EnumerateOptions {
  bool primitive_only = false;       // insist on primitive (p, q), scanning nearby p
  long long box_guard = 50'000'000;  // abort if the q-box would exceed this many points
};

// All solutions of ||theta q + p||_sup^m <= psi(||q||_sup^n) with q in the
// class, 0 < ||q||_sup <= q_max, one record per admissible q (its best p),
// sorted by (||q||_sup, lex q). Scales below psi's x0 are skipped.
std::vector<SolutionRecord> enumerate_solutions(const Mat& theta, const ApproxFunction& psi,
                                                const SearchClass& cls, long long q_max,
                                                const EnumerateOptions& opts = {});

struct GrowthPoint {
  long long q_threshold = 0;
  long long count = 0;
};

// Cumulative solution counts at the given thresholds (ascending).
std::vector<GrowthPoint> count_growth(const Mat& theta, const ApproxFunction& psi,
                                      const SearchClass& cls,
                                      std::span<const long long> q_grid,
                                      const EnumerateOptions& opts = {});

struct WitnessRecord {
  double q_threshold = 0.0;
  std::vector<SolutionRecord> chosen;  // one record per class
};

struct SimultaneousReport {
  std::vector<WitnessRecord> witnesses;
  long long thresholds = 0;
  long long witness_count = 0;  // may exceed witnesses.size() if the store cap hit
};

struct SimultaneousOptions {
  long long box_guard = 50'000'000;
  size_t store_cap = 100000;
};

// Two-speed simultaneous scan over integer thresholds Q = 1..q_max: class 0
// must reach residual^m <= c Q^{-n} and every further class
// residual^m <= c Q^{-delta n}, all with ||q||_sup <= Q and q in its class.
// Requires 0 < delta <= 1.
SimultaneousReport simultaneous_witnesses(const Mat& theta,
                                          std::span<const SearchClass> classes, double c,
                                          double delta, long long q_max,
                                          const SimultaneousOptions& opts = {});

struct WeightedClassSpec {
  SearchClass cls;
  WeightPair weights;
  double kappa = 1.0;
};

struct WeightedOptions {
  double grid_step = 0.05;        // thresholds Q = e^{h k}
  bool require_primitive = false;
  bool require_distinct = false;  // distinct (p, q) across classes (forces primitive sets)
  int set_cap = 8;                // stored solutions per class when checking distinctness
  long long box_guard = 50'000'000;
  size_t store_cap = 100000;
};

struct WeightedReport {
  std::vector<WitnessRecord> witnesses;
  long long thresholds = 0;
  long long witness_count = 0;
  bool exponent_gap_warning = false;  // the componentwise exponent ordering failed
};

// Weighted multi-class scan over the geometric grid Q = e^{h k} <= q_max:
// a witness is a threshold where every class i admits (p_i, q_i) with
// ||theta q_i + p_i||_{alpha_i} <= eps Q^{-kappa_i} and
// ||q_i||_{beta_i} <= eps Q^{kappa_i}. The zero vector never counts.
WeightedReport weighted_witnesses(const Mat& theta,
                                  std::span<const WeightedClassSpec> classes, double eps,
                                  double q_max, const WeightedOptions& opts = {});

}  // namespace diolab
