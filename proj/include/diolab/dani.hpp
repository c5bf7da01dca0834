#pragma once

#include <span>
#include <string>
#include <vector>

namespace diolab {

// Nonincreasing positive function psi on [x0, oo), either a power law
// c * x^(-delta) or a table with log-linear interpolation. Tables extend
// past the last breakpoint by continuing the final log-log slope.
class ApproxFunction {
 public:
  enum class Kind { kPowerLaw, kTabulated };

  static ApproxFunction power_law(double c, double delta, double x0 = 1.0);
  static ApproxFunction tabulated(std::vector<double> xs, std::vector<double> psis);

  Kind kind() const { return kind_; }
  double x0() const { return x0_; }
  // Throws std::domain_error below x0.
  double eval(double x) const;
  // Constant psi(x0) below x0; used when solving the matching equation.
  double eval_clamped(double x) const;

  double power_c() const { return c_; }
  double power_delta() const { return delta_; }
  const std::vector<double>& table_x() const { return xs_; }
  const std::vector<double>& table_psi() const { return psis_; }

  std::string describe() const;

 private:
  ApproxFunction() = default;
  double eval_log(double logx) const;

  Kind kind_ = Kind::kPowerLaw;
  double x0_ = 1.0;
  double c_ = 1.0, delta_ = 1.0;        // power law
  std::vector<double> xs_, psis_;       // tabulated (kept for round trips)
  std::vector<double> logx_, logpsi_;   // interpolation data
};

// Rate function r(t) for the diagonal excursion picture, with the split
// (m, n) it was built for. Derived quantities:
//   lambda(t) = t - n r(t)   (strictly increasing)
//   ell(t)    = t + m r(t)   (nondecreasing)
// Values below t0 are formal extensions of the first segment.
class RateFunction {
 public:
  static RateFunction affine(int m, int n, double slope, double intercept, double t0);
  static RateFunction sampled(int m, int n, double t0, double dt, std::vector<double> values);

  int m() const { return m_; }
  int n() const { return n_; }
  double t0() const { return t0_; }
  // Last grid point for sampled rates; +infinity for affine ones.
  double t_end() const;
  bool is_affine() const { return affine_; }
  double slope() const { return slope_; }
  double intercept() const { return intercept_; }
  double grid_step() const { return dt_; }
  const std::vector<double>& values() const { return values_; }

  double r(double t) const;
  double lambda(double t) const { return t - n_ * r(t); }
  double ell(double t) const { return t + m_ * r(t); }
  // t such that lambda(t) = s. Throws below lambda(t0).
  double lambda_inverse(double s) const;

 private:
  RateFunction() = default;

  int m_ = 1, n_ = 1;
  bool affine_ = true;
  double t0_ = 0.0;
  double slope_ = 0.0, intercept_ = 0.0;  // affine case
  double dt_ = 0.0;                       // sampled case
  std::vector<double> values_;
};

// Closed-form rate matched to the power law c * x^(-delta):
//   r(t) = ((delta - 1) t - ln c) / (m + delta n).
RateFunction power_law_rate(double c, double delta, int m, int n, double x0 = 1.0);

struct RateSolveOptions {
  double grid_step = 0.01;
  double t_span = 30.0;       // grid covers [t0, t0 + t_span]
  double bisect_tol = 1e-12;  // absolute tolerance on r at each grid point
};

// Solve psi(e^{t - n r}) = e^{-t - m r} for r on a uniform t-grid by
// bisection; the left side is evaluated with the clamped extension so the
// mismatch F is strictly increasing in r and has a unique root.
RateFunction psi_to_rate(const ApproxFunction& f, int m, int n,
                         const RateSolveOptions& opts = {});

// Inverse direction. Affine rates map to power laws exactly; sampled rates
// map to tables whose log-linear interpolation matches segment for segment.
ApproxFunction rate_to_psi(const RateFunction& rate);

// |psi(e^{lambda(t)}) - e^{-ell(t)}|, the defect in the matching equation.
double matching_residual(const ApproxFunction& f, const RateFunction& rate, double t);

enum class TailVerdict { kDiverges, kConverges, kInconclusive };

struct DivergenceReport {
  std::vector<double> psi_partials;   // integral of psi over [x0 2^k, x0 2^(k+1)]
  std::vector<double> rate_partials;  // integral of e^{-(m+n) r} over matching t-windows
  TailVerdict psi_verdict = TailVerdict::kInconclusive;
  TailVerdict rate_verdict = TailVerdict::kInconclusive;
  TailVerdict verdict = TailVerdict::kInconclusive;  // combined
};

struct DivergenceOptions {
  int doublings = 32;
  double rel_tol = 1e-6;  // adaptive quadrature tolerance per window
};

// Probe whether the tail sum of psi diverges, on both sides of the
// correspondence, by watching the growth of dyadic partial integrals.
DivergenceReport divergence_probe(const ApproxFunction& f, int m, int n,
                                  const DivergenceOptions& opts = {});

}  // namespace diolab
