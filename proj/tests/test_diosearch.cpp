#include <algorithm>
#include <cmath>
#include <vector>

#include "diolab/diosearch.hpp"
#include "diolab/lattice.hpp"
#include "diolab/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace diolab;

namespace {

const double kSqrt2Frac = 0.41421356237309515;  // sqrt(2) - 1

// Independent one-dimensional reference: scan every q, scan p directly.
struct BruteRecord {
  long long q = 0, p = 0;
  double residual = 0.0;
};

std::vector<BruteRecord> brute_solutions_1d(double theta, const ApproxFunction& psi,
                                            const SearchClass& cls, long long q_max) {
  std::vector<BruteRecord> out;
  const long long n = cls.modulus;
  for (long long q = -q_max; q <= q_max; ++q) {
    if (q == 0) continue;
    if (((q % n) + n) % n != cls.residues[1]) continue;
    const double target = -theta * static_cast<double>(q);
    long long best_p = 0;
    double best = -1.0;
    // Nearest class points on both sides of the target, plus margin.
    const long long base = static_cast<long long>(std::floor(target / static_cast<double>(n))) * n +
                           cls.residues[0];
    for (long long p = base - 3 * n; p <= base + 3 * n; p += n) {
      const double res = std::abs(theta * static_cast<double>(q) + static_cast<double>(p));
      if (best < 0.0 || res < best || (res == best && p < best_p)) {
        best = res;
        best_p = p;
      }
    }
    const double scale = std::abs(static_cast<double>(q));
    if (scale < psi.x0()) continue;
    if (best <= psi.eval(scale)) out.push_back({q, best_p, best});
  }
  std::sort(out.begin(), out.end(), [](const BruteRecord& a, const BruteRecord& b) {
    const long long na = std::llabs(a.q), nb = std::llabs(b.q);
    if (na != nb) return na < nb;
    return a.q < b.q;
  });
  return out;
}

}  // namespace

TEST_CASE("best_p_for_q picks the per-coordinate nearest class point") {
  Mat th(1, 1);
  th(0, 0) = 0.3;
  const std::vector<long long> q = {1};
  SUBCASE("free class") {
    const std::vector<long long> pr = {0};
    CHECK(best_p_for_q(th, q, pr, 1) == std::vector<long long>{0});
  }
  SUBCASE("constrained class") {
    const std::vector<long long> pr = {1};
    CHECK(best_p_for_q(th, q, pr, 2) == std::vector<long long>{-1});
  }
  SUBCASE("exact tie goes to the smaller p") {
    Mat half(1, 1);
    half(0, 0) = 0.5;
    const std::vector<long long> pr = {0};
    CHECK(best_p_for_q(half, q, pr, 1) == std::vector<long long>{-1});
  }
}

TEST_CASE("enumerate_solutions reproduces the sqrt(2)-1 convergents") {
  Mat th(1, 1);
  th(0, 0) = kSqrt2Frac;
  const SearchClass cls{1, {0, 0}};
  const ApproxFunction psi = ApproxFunction::power_law(1.0, 1.0, 1.0);
  const std::vector<SolutionRecord> sols = enumerate_solutions(th, psi, cls, 30);
  REQUIRE(sols.size() == 16);

  std::vector<long long> qs;
  for (const auto& s : sols) qs.push_back(s.q[0]);
  const std::vector<long long> expect = {-1, 1, -2, 2, -3, 3, -5, 5, -7, 7, -12, 12, -17, 17, -29, 29};
  CHECK(qs == expect);

  for (const auto& s : sols) {
    CHECK(s.qnorm == std::abs(static_cast<double>(s.q[0])));
    CHECK(s.scale == s.qnorm);
    CHECK(s.residual ==
          std::abs(kSqrt2Frac * static_cast<double>(s.q[0]) + static_cast<double>(s.p[0])));
    CHECK(s.residual <= psi.eval(s.scale) * (1.0 + 1e-12));
  }

  // The classical convergent denominators all appear.
  for (long long q : {1, 2, 5, 12, 29}) {
    CHECK(std::count(qs.begin(), qs.end(), q) == 1);
  }
}

TEST_CASE("enumerate_solutions agrees with a direct two-sided scan") {
  CounterRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const double theta = rng.uniform01();
    const long long n = 1 + static_cast<long long>(rng.next() % 4);
    SearchClass cls{n, {static_cast<long long>(rng.next() % static_cast<std::uint64_t>(n)),
                        static_cast<long long>(rng.next() % static_cast<std::uint64_t>(n))}};
    if (n > 1 && cls.residues[0] == 0 && cls.residues[1] == 0) cls.residues[1] = 1;
    const ApproxFunction psi = ApproxFunction::power_law(0.5 + rng.uniform01(), 1.0, 1.0);
    Mat th(1, 1);
    th(0, 0) = theta;
    const std::vector<SolutionRecord> lib = enumerate_solutions(th, psi, cls, 60);
    const std::vector<BruteRecord> ref = brute_solutions_1d(theta, psi, cls, 60);
    REQUIRE(lib.size() == ref.size());
    for (size_t i = 0; i < lib.size(); ++i) {
      CHECK(lib[i].q[0] == ref[i].q);
      CHECK(lib[i].p[0] == ref[i].p);
      CHECK(lib[i].residual == ref[i].residual);
    }
  }
}

TEST_CASE("primitive_only filters and repairs solutions") {
  Mat th(1, 1);
  th(0, 0) = kSqrt2Frac;
  const SearchClass cls{1, {0, 0}};
  const ApproxFunction psi = ApproxFunction::power_law(1.0, 1.0, 1.0);
  EnumerateOptions opts;
  opts.primitive_only = true;
  const std::vector<SolutionRecord> sols = enumerate_solutions(th, psi, cls, 30, opts);
  for (const auto& s : sols) {
    std::vector<long long> w = {s.p[0], s.q[0]};
    CHECK(oracle::primitive(w));
    CHECK(s.residual <= psi.eval(s.qnorm) * (1.0 + 1e-12));
  }
}

TEST_CASE("count_growth equals enumeration prefix counts") {
  Mat th(1, 1);
  th(0, 0) = kSqrt2Frac;
  const SearchClass cls{2, {1, 0}};
  const ApproxFunction psi = ApproxFunction::power_law(1.0, 1.0, 1.0);
  const std::vector<long long> grid = {5, 10, 30};
  const std::vector<GrowthPoint> growth = count_growth(th, psi, cls, grid);
  REQUIRE(growth.size() == 3);
  for (size_t i = 0; i < grid.size(); ++i) {
    CHECK(growth[i].q_threshold == grid[i]);
    const auto sols = enumerate_solutions(th, psi, cls, grid[i]);
    CHECK(growth[i].count == static_cast<long long>(sols.size()));
  }
}

TEST_CASE("enumerate_solutions honors the box guard") {
  Mat th(1, 1);
  th(0, 0) = kSqrt2Frac;
  const SearchClass cls{1, {0, 0}};
  const ApproxFunction psi = ApproxFunction::power_law(1.0, 1.0, 1.0);
  EnumerateOptions opts;
  opts.box_guard = 2;
  CHECK_THROWS_AS(static_cast<void>(enumerate_solutions(th, psi, cls, 100, opts)),
                  BudgetExhausted);
}

TEST_CASE("simultaneous_witnesses: Dirichlet gives a witness at every threshold") {
  Mat th(1, 1);
  th(0, 0) = kSqrt2Frac;
  const SearchClass cls{1, {0, 0}};
  const SimultaneousReport rep =
      simultaneous_witnesses(th, std::span(&cls, 1), 1.0, 1.0, 50);
  CHECK(rep.thresholds == 50);
  CHECK(rep.witness_count == 50);
  REQUIRE(rep.witnesses.size() == 50);
  for (const auto& w : rep.witnesses) {
    REQUIRE(w.chosen.size() == 1);
    const SolutionRecord& s = w.chosen[0];
    CHECK(s.qnorm <= w.q_threshold);
    CHECK(s.residual <= 1.0 / w.q_threshold);
  }
}

TEST_CASE("simultaneous_witnesses enforces the per-class residue conditions") {
  CounterRng rng(32);
  Mat th(1, 1);
  th(0, 0) = rng.uniform01();
  const std::vector<SearchClass> classes = {{2, {1, 1}}, {3, {1, 2}}};
  const double c = 4.0, delta = 0.5;
  const SimultaneousReport rep = simultaneous_witnesses(th, classes, c, delta, 400);
  CHECK(rep.witness_count > 0);
  for (const auto& w : rep.witnesses) {
    REQUIRE(w.chosen.size() == 2);
    const double q = w.q_threshold;
    CHECK(w.chosen[0].residual <= c / q * (1.0 + 1e-12));
    CHECK(w.chosen[1].residual <= c * std::pow(q, -delta) * (1.0 + 1e-12));
    for (size_t i = 0; i < 2; ++i) {
      const long long n = classes[i].modulus;
      CHECK(((w.chosen[i].p[0] % n) + n) % n == classes[i].residues[0]);
      CHECK(((w.chosen[i].q[0] % n) + n) % n == classes[i].residues[1]);
      CHECK(w.chosen[i].qnorm <= q);
    }
  }
  CHECK_THROWS(static_cast<void>(simultaneous_witnesses(th, classes, c, 0.0, 10)));
  CHECK_THROWS(static_cast<void>(simultaneous_witnesses(th, classes, c, 1.5, 10)));
}

TEST_CASE("weighted_witnesses: Dirichlet at eps = 1 and the exponent order warning") {
  Mat th(1, 1);
  th(0, 0) = kSqrt2Frac;
  const WeightedClassSpec leg{SearchClass{1, {0, 0}}, WeightPair::uniform(1, 1), 1.0};

  SUBCASE("single equal-weight class") {
    const WeightedReport rep = weighted_witnesses(th, std::span(&leg, 1), 1.0, 200.0);
    CHECK(rep.thresholds > 0);
    CHECK(rep.witness_count == rep.thresholds);
    CHECK_FALSE(rep.exponent_gap_warning);
    for (const auto& w : rep.witnesses) {
      REQUIRE(w.chosen.size() == 1);
      const SolutionRecord& s = w.chosen[0];
      CHECK(s.residual <= 1.0 / w.q_threshold * (1.0 + 1e-12));
      CHECK(s.qnorm <= w.q_threshold * (1.0 + 1e-12));
    }
  }
  SUBCASE("decreasing speeds trip the warning") {
    WeightedClassSpec fast = leg;
    fast.kappa = 1.5;
    std::vector<WeightedClassSpec> legs = {fast, leg};
    const WeightedReport rep = weighted_witnesses(th, legs, 0.7, 100.0);
    CHECK(rep.exponent_gap_warning);
  }
  SUBCASE("increasing speeds do not") {
    WeightedClassSpec fast = leg;
    fast.kappa = 1.5;
    std::vector<WeightedClassSpec> legs = {leg, fast};
    const WeightedReport rep = weighted_witnesses(th, legs, 0.7, 100.0);
    CHECK_FALSE(rep.exponent_gap_warning);
  }
}

TEST_CASE("weighted_witnesses distinctness cannot outnumber the plain scan") {
  CounterRng rng(33);
  for (int trial = 0; trial < 6; ++trial) {
    Mat th(1, 1);
    th(0, 0) = rng.uniform01();
    const WeightedClassSpec leg{SearchClass{3, {1, 1}}, WeightPair::uniform(1, 1), 1.0};
    std::vector<WeightedClassSpec> legs = {leg, leg};

    WeightedOptions plain;
    WeightedOptions strict;
    strict.require_primitive = true;
    strict.require_distinct = true;
    const WeightedReport loose = weighted_witnesses(th, legs, 0.8, 2000.0, plain);
    const WeightedReport tight = weighted_witnesses(th, legs, 0.8, 2000.0, strict);
    CHECK(tight.witness_count <= loose.witness_count);
    for (const auto& w : tight.witnesses) {
      REQUIRE(w.chosen.size() == 2);
      const bool same_p = w.chosen[0].p == w.chosen[1].p;
      const bool same_q = w.chosen[0].q == w.chosen[1].q;
      CHECK_FALSE((same_p && same_q));
    }
  }
}
