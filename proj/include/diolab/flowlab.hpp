#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "diolab/dani.hpp"
#include "diolab/diosearch.hpp"
#include "diolab/lattice.hpp"
#include "diolab/numkit.hpp"

namespace diolab {

// One diagonal-flow orbit over a fixed congruence class: at time t the point
// is a_{alpha,beta}(kappa t) u(theta) with the class gamma e1 mod N attached.
// gamma enters only through its first column: multiplying the marked class by
// gamma is the same as tracking residues gamma e1 mod N, so the orbit never
// multiplies gamma into the matrix.
struct OrbitSpec {
  Mat theta;                   // m x n
  IMat gamma;                  // integer, det 1; selects the class gamma e1 mod N
  long long modulus = 1;       // N >= 1
  WeightPair weights = WeightPair::uniform(1, 1);  // block weights of the flow
  double kappa = 1.0;          // time dilation, > 0
  std::vector<double> t_grid;  // strictly increasing sample times
};

// Uniform grid t0, t0+dt, ..., covering [t0, t1] (the last point may
// overshoot t1 by less than dt).
std::vector<double> uniform_grid(double t0, double t1, double dt);

struct DeltaSample {
  double t = 0.0;
  double delta = 0.0;  // -log of the minimal sup-norm over the marked class
};

// Excursion height along the orbit. The class is pushed by an incrementally
// re-reduced frame, so horizons far beyond direct matrix range are fine; the
// first grid point must still be directly representable. While the orbit
// matrix is representable, values are re-evaluated from it exactly, matching
// an independent per-time computation bit for bit.
std::vector<DeltaSample> orbit_delta_series(const OrbitSpec& spec, EnumBudget& budget);

// Same walk, also reporting the minimizing class vector at each time. Meant
// for desk-scale diagnostics: throws std::overflow_error if a minimizer
// exceeds machine integers.
struct OrbitPoint {
  double t = 0.0;
  double delta = 0.0;
  std::vector<long long> w;
};
std::vector<OrbitPoint> orbit_trace(const OrbitSpec& spec, EnumBudget& budget);

// A time-then-sample average of one observable along orbits.
struct ErgodicEstimate {
  double horizon = 0.0;
  std::string observable;
  double value = 0.0;  // in [0, 1] for indicator observables
  std::size_t theta_samples = 0;
  std::size_t grid_points = 0;
};

struct CuspMassOptions {
  double dt = 0.05;
  long long node_budget = 10'000'000;  // enumeration budget per theta sample
};

// Haar mass of the eps-thin part, estimated as the time average of the
// sup-norm cusp indicator (shortest marked sup-image < eps) along the
// equal-weight flow, then averaged over the theta samples. Requires at least
// 100 grid points on [0, t_horizon].
ErgodicEstimate estimate_cusp_mass(std::span<const Mat> theta_samples, long long modulus,
                                   const IMat& gamma, double t_horizon, double eps,
                                   const CuspMassOptions& opts = {});

// Shared-series variant: one orbit pass per theta, every eps read off it.
// Estimates are ordered like eps_list.
std::vector<ErgodicEstimate> estimate_cusp_mass_profile(std::span<const Mat> theta_samples,
                                                        long long modulus, const IMat& gamma,
                                                        double t_horizon,
                                                        std::span<const double> eps_list,
                                                        const CuspMassOptions& opts = {});

struct JointOptions {
  double dt = 0.05;
  long long node_budget = 10'000'000;  // per leg
};

struct JointReport {
  double horizon = 0.0;
  std::size_t grid_points = 0;
  double joint = 0.0;             // time average of the product of indicators
  std::vector<double> marginals;  // per-leg time averages
  double marginal_product = 1.0;
  // Set when the legs' scaled weights (kappa_i alpha_i, kappa_i beta_i) fail
  // to increase strictly componentwise from one leg to the next; the run
  // still completes (that regime is exactly what the probe is for).
  bool exponent_order_warning = false;
};

// Couple several flows through one theta and compare the joint cusp-indicator
// average with the product of the marginal averages (sup-norm convention,
// one eps per leg). All specs must share theta; t grids are replaced by the
// uniform grid on [0, t_horizon].
JointReport joint_average(std::span<const OrbitSpec> specs, std::span<const double> eps,
                          double t_horizon, const JointOptions& opts = {});

// One membership-implies-witness consistency case. `fired` is the exact
// Euclidean thin-part membership at a(kappa t) u(theta); when it fires, an
// independent box search must produce a primitive class pair (p, q) with
//   |theta q + p|_alpha < eps e^{-kappa t}  and  |q|_beta < eps e^{kappa t}
// (both strict). The implication is one-directional: a witness without
// membership is fine, a firing without witness is a bug.
struct CorollaryCheck {
  double t = 0.0;
  double eps = 0.0;
  bool fired = false;
  bool witness_found = false;
  bool pass = true;  // !fired || witness_found
  std::vector<long long> p, q;  // witness blocks when found
};
CorollaryCheck crosscheck_corollary(const OrbitSpec& spec, double eps, double t,
                                    EnumBudget& budget);

struct DaniOptions {
  double dt = 0.05;
  // Slack allowed when mapping a solution to a flow crossing; the exact
  // correspondence degrades to r(t) - c under perturbations of the base point.
  double slack = 0.69314718055994531;  // log 2
  long long node_budget = 10'000'000;
  long long box_guard = 50'000'000;
};

// A grid time with delta(t) >= r(t). `matched` when some enumerated solution
// has scale <= e^{lambda(t)} (the scale the crossing predicts); `subdomain`
// when the minimizing vector's q block sits below psi's domain (q = 0 or
// |q|^n < x0), where the correspondence makes no claim.
struct DaniCrossing {
  double t = 0.0;
  double delta = 0.0;
  double rate = 0.0;
  double scale_bound = 0.0;
  bool matched = false;
  bool subdomain = false;
};

// A solution pushed back onto the flow: at t* with e^{lambda(t*)} = |q|^n the
// excursion must reach r(t*) - slack.
struct DaniSolutionCheck {
  SolutionRecord record;
  double t_star = 0.0;
  double delta_at_t = 0.0;
  double rate_minus_slack = 0.0;
  bool pass = false;
};

struct DaniReport {
  RateFunction rate;
  std::vector<DaniCrossing> crossings;
  std::vector<DaniSolutionCheck> solutions;
  std::size_t crossing_failures = 0;  // neither matched nor subdomain
  std::size_t solution_failures = 0;
  bool pass = true;
};

// Two-sided consistency between the psi-inequality search and the flow
// excursions, equal weights, on [t0(psi), t_max]. Every solution must map to
// a crossing (with slack); every grid crossing must be explained by a
// solution at the predicted scale or by a sub-domain vector.
DaniReport crosscheck_dani(const Mat& theta, const IMat& gamma, long long modulus,
                           const ApproxFunction& psi, double t_max,
                           const DaniOptions& opts = {});

}  // namespace diolab
