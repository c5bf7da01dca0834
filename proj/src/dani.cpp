#include "diolab/dani.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace diolab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

// ====== ApproxFunction ======

ApproxFunction ApproxFunction::power_law(double c, double delta, double x0) {
  require(c > 0.0, "power_law: c must be positive");
  require(delta >= 0.0, "power_law: delta must be nonnegative");
  require(x0 > 0.0, "power_law: x0 must be positive");
  ApproxFunction f;
  f.kind_ = Kind::kPowerLaw;
  f.c_ = c;
  f.delta_ = delta;
  f.x0_ = x0;
  return f;
}

ApproxFunction ApproxFunction::tabulated(std::vector<double> xs, std::vector<double> psis) {
  require(xs.size() >= 2, "tabulated: need at least two breakpoints");
  require(xs.size() == psis.size(), "tabulated: xs/psis size mismatch");
  for (size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] > 0.0 && psis[i] > 0.0, "tabulated: values must be positive");
    if (i > 0) {
      require(xs[i] > xs[i - 1], "tabulated: breakpoints must increase strictly");
      require(psis[i] <= psis[i - 1], "tabulated: values must be nonincreasing");
    }
  }
  ApproxFunction f;
  f.kind_ = Kind::kTabulated;
  f.x0_ = xs.front();
  f.xs_ = std::move(xs);
  f.psis_ = std::move(psis);
  f.logx_.reserve(f.xs_.size());
  f.logpsi_.reserve(f.xs_.size());
  for (size_t i = 0; i < f.xs_.size(); ++i) {
    f.logx_.push_back(std::log(f.xs_[i]));
    f.logpsi_.push_back(std::log(f.psis_[i]));
  }
  return f;
}

double ApproxFunction::eval_log(double logx) const {
  if (kind_ == Kind::kPowerLaw) return std::exp(std::log(c_) - delta_ * logx);
  // Locate the segment; past the last breakpoint continue the final slope.
  const size_t k = logx_.size();
  size_t hi = std::upper_bound(logx_.begin(), logx_.end(), logx) - logx_.begin();
  if (hi <= 1) hi = 1;
  if (hi >= k) hi = k - 1;
  const size_t lo = hi - 1;
  const double span = logx_[hi] - logx_[lo];
  const double u = (logx - logx_[lo]) / span;
  return std::exp(logpsi_[lo] + u * (logpsi_[hi] - logpsi_[lo]));
}

double ApproxFunction::eval(double x) const {
  if (!(x >= x0_)) throw std::domain_error("ApproxFunction: argument below x0");
  return eval_log(std::log(x));
}

double ApproxFunction::eval_clamped(double x) const {
  if (x < x0_) x = x0_;
  return eval_log(std::log(x));
}

std::string ApproxFunction::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::kPowerLaw)
    os << "power_law(c=" << c_ << ", delta=" << delta_ << ", x0=" << x0_ << ")";
  else
    os << "tabulated(" << xs_.size() << " points, x0=" << x0_ << ")";
  return os.str();
}

// ====== RateFunction ======

RateFunction RateFunction::affine(int m, int n, double slope, double intercept, double t0) {
  require(m >= 1 && n >= 1, "RateFunction: m, n must be >= 1");
  // lambda strictly increasing needs slope < 1/n; ell nondecreasing needs
  // slope >= -1/m.
  require(1.0 - n * slope > 0.0, "RateFunction: lambda would fail to increase");
  require(1.0 + m * slope >= -1e-12, "RateFunction: ell would decrease");
  RateFunction r;
  r.m_ = m;
  r.n_ = n;
  r.affine_ = true;
  r.slope_ = slope;
  r.intercept_ = intercept;
  r.t0_ = t0;
  return r;
}

RateFunction RateFunction::sampled(int m, int n, double t0, double dt,
                                   std::vector<double> values) {
  require(m >= 1 && n >= 1, "RateFunction: m, n must be >= 1");
  require(dt > 0.0, "RateFunction: grid step must be positive");
  require(values.size() >= 2, "RateFunction: need at least two samples");
  for (size_t i = 1; i < values.size(); ++i) {
    const double dr = values[i] - values[i - 1];
    require(dt - n * dr > 1e-15 * (1.0 + std::abs(values[i])),
            "RateFunction: lambda must increase strictly on every segment");
    require(dt + m * dr >= -1e-9 * (1.0 + std::abs(values[i])),
            "RateFunction: ell must be nondecreasing on every segment");
  }
  RateFunction r;
  r.m_ = m;
  r.n_ = n;
  r.affine_ = false;
  r.t0_ = t0;
  r.dt_ = dt;
  r.values_ = std::move(values);
  return r;
}

double RateFunction::t_end() const {
  if (affine_) return std::numeric_limits<double>::infinity();
  return t0_ + dt_ * static_cast<double>(values_.size() - 1);
}

double RateFunction::r(double t) const {
  if (affine_) return slope_ * t + intercept_;
  const double u = (t - t0_) / dt_;
  const size_t last = values_.size() - 1;
  size_t lo = 0;  // below the grid: extend the first segment formally
  if (u > 0.0) {
    lo = static_cast<size_t>(u);
    if (lo >= last) lo = last - 1;  // beyond the grid: extend the last segment
  }
  const double frac = u - static_cast<double>(lo);
  return values_[lo] + frac * (values_[lo + 1] - values_[lo]);
}

double RateFunction::lambda_inverse(double s) const {
  if (affine_) {
    // lambda(t) = t(1 - n a) - n b
    return (s + n_ * intercept_) / (1.0 - n_ * slope_);
  }
  const double s0 = lambda(t0_);
  if (s < s0 - 1e-9 * (1.0 + std::abs(s0)))
    throw std::domain_error("lambda_inverse: value below lambda(t0)");
  // lambda at the grid nodes is strictly increasing; locate the segment and
  // invert the linear piece (the last segment extends past the grid).
  const size_t last = values_.size() - 1;
  size_t lo = 0, hi = last;
  auto lam = [&](size_t i) { return t0_ + dt_ * i - n_ * values_[i]; };
  if (s >= lam(last)) {
    lo = last - 1;
  } else {
    while (hi - lo > 1) {
      const size_t mid = (lo + hi) / 2;
      if (lam(mid) <= s)
        lo = mid;
      else
        hi = mid;
    }
  }
  const double l0 = lam(lo), l1 = lam(lo + 1);
  const double u = (s - l0) / (l1 - l0);
  return t0_ + dt_ * (static_cast<double>(lo) + u);
}

// ====== conversions ======

RateFunction power_law_rate(double c, double delta, int m, int n, double x0) {
  require(c > 0.0 && delta >= 0.0 && x0 > 0.0, "power_law_rate: bad parameters");
  const double denom = m + delta * n;
  if (denom <= 0.0) throw std::domain_error("power_law_rate: m + delta n must be positive");
  const double slope = (delta - 1.0) / denom;
  const double intercept = -std::log(c) / denom;
  // t0 balances the two sides at x0.
  const double psi0 = c * std::pow(x0, -delta);
  const double t0 = (m * std::log(x0) - n * std::log(psi0)) / static_cast<double>(m + n);
  return RateFunction::affine(m, n, slope, intercept, t0);
}

RateFunction psi_to_rate(const ApproxFunction& f, int m, int n, const RateSolveOptions& opts) {
  require(m >= 1 && n >= 1, "psi_to_rate: m, n must be >= 1");
  require(opts.grid_step > 0.0 && opts.t_span > 0.0, "psi_to_rate: bad grid options");
  const double psi0 = f.eval_clamped(f.x0());
  const double t0 = (m * std::log(f.x0()) - n * std::log(psi0)) / static_cast<double>(m + n);
  const size_t count = static_cast<size_t>(std::ceil(opts.t_span / opts.grid_step)) + 1;
  std::vector<double> values(count);
  for (size_t i = 0; i < count; ++i) {
    const double t = t0 + opts.grid_step * static_cast<double>(i);
    // F(rho) = psi(e^{t - n rho}) - e^{-t - m rho} is strictly increasing in
    // rho (clamped psi is nonincreasing, the second term strictly decreasing).
    auto mismatch = [&](double rho) {
      return f.eval_clamped(std::exp(t - n * rho)) - std::exp(-t - m * rho);
    };
    double b = 10.0 + std::abs(t);
    double lo = -b, hi = b;
    for (int widen = 0; widen < 6 && !(mismatch(lo) < 0.0 && mismatch(hi) > 0.0); ++widen) {
      lo *= 2.0;
      hi *= 2.0;
    }
    if (!(mismatch(lo) < 0.0 && mismatch(hi) > 0.0))
      throw std::runtime_error("psi_to_rate: failed to bracket the matching root");
    while (hi - lo > opts.bisect_tol) {
      const double mid = 0.5 * (lo + hi);
      if (mismatch(mid) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    values[i] = 0.5 * (lo + hi);
  }
  return RateFunction::sampled(m, n, t0, opts.grid_step, std::move(values));
}

ApproxFunction rate_to_psi(const RateFunction& rate) {
  const int m = rate.m(), n = rate.n();
  if (rate.is_affine()) {
    // r = a t + b pairs with the power law whose exponent solves
    // a = (delta - 1)/(m + delta n).
    const double a = rate.slope(), b = rate.intercept();
    const double delta = (1.0 + m * a) / (1.0 - n * a);
    const double c = std::exp(-b * (m + delta * n));
    const double x0 = std::exp(rate.lambda(rate.t0()));
    return ApproxFunction::power_law(c, delta, x0);
  }
  const auto& rv = rate.values();
  std::vector<double> xs(rv.size()), psis(rv.size());
  for (size_t i = 0; i < rv.size(); ++i) {
    const double t = rate.t0() + rate.grid_step() * static_cast<double>(i);
    xs[i] = std::exp(rate.lambda(t));
    psis[i] = std::exp(-rate.ell(t));
  }
  // Guard against rounding bumps in the nonincreasing requirement.
  for (size_t i = 1; i < psis.size(); ++i)
    if (psis[i] > psis[i - 1]) psis[i] = psis[i - 1];
  return ApproxFunction::tabulated(std::move(xs), std::move(psis));
}

double matching_residual(const ApproxFunction& f, const RateFunction& rate, double t) {
  return std::abs(f.eval_clamped(std::exp(rate.lambda(t))) - std::exp(-rate.ell(t)));
}

// ====== divergence probe ======

namespace {

template <class Fn>
double simpson(Fn&& fn, double a, double b) {
  return (b - a) / 6.0 * (fn(a) + 4.0 * fn(0.5 * (a + b)) + fn(b));
}

template <class Fn>
double adaptive_simpson(Fn&& fn, double a, double b, double tol, int depth) {
  const double whole = simpson(fn, a, b);
  const double mid = 0.5 * (a + b);
  const double left = simpson(fn, a, mid);
  const double right = simpson(fn, mid, b);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(fn, a, mid, 0.5 * tol, depth - 1) +
         adaptive_simpson(fn, mid, b, 0.5 * tol, depth - 1);
}

TailVerdict classify_tail(const std::vector<double>& partials) {
  // Geometric growth test on the last few dyadic windows: ratios near or
  // above 1 mean the tail sum keeps accumulating.
  const size_t k = partials.size();
  if (k < 6) return TailVerdict::kInconclusive;
  double ratio_sum = 0.0;
  int counted = 0;
  for (size_t i = k - 5; i < k; ++i) {
    if (partials[i - 1] <= 0.0) return TailVerdict::kInconclusive;
    ratio_sum += partials[i] / partials[i - 1];
    ++counted;
  }
  const double ratio = ratio_sum / counted;
  if (ratio >= 0.999) return TailVerdict::kDiverges;
  if (ratio <= 0.95) return TailVerdict::kConverges;
  return TailVerdict::kInconclusive;
}

}  // namespace

DivergenceReport divergence_probe(const ApproxFunction& f, int m, int n,
                                  const DivergenceOptions& opts) {
  require(m >= 1 && n >= 1, "divergence_probe: m, n must be >= 1");
  require(opts.doublings >= 6, "divergence_probe: need at least 6 doublings");
  DivergenceReport rep;
  const double x0 = f.x0();

  // psi side: integrals over [x0 2^k, x0 2^(k+1)].
  for (int k = 0; k < opts.doublings; ++k) {
    const double a = x0 * std::pow(2.0, k);
    const double b = 2.0 * a;
    const double scale = f.eval_clamped(a) * (b - a);
    const double tol = opts.rel_tol * std::max(scale, 1e-300);
    rep.psi_partials.push_back(
        adaptive_simpson([&](double x) { return f.eval_clamped(x); }, a, b, tol, 30));
  }

  // rate side: e^{-(m+n) r(t)} over the lambda-preimages of the same windows.
  const double log_xmax = std::log(x0) + opts.doublings * std::log(2.0);
  RateSolveOptions ropt;
  ropt.t_span = 8.0;
  RateFunction rate = psi_to_rate(f, m, n, ropt);
  while (rate.lambda(rate.t_end()) < log_xmax && ropt.t_span < 4096.0) {
    ropt.t_span *= 2.0;
    rate = psi_to_rate(f, m, n, ropt);
  }
  for (int k = 0; k < opts.doublings; ++k) {
    const double ta = rate.lambda_inverse(std::log(x0) + k * std::log(2.0));
    const double tb = rate.lambda_inverse(std::log(x0) + (k + 1) * std::log(2.0));
    auto integrand = [&](double t) { return std::exp(-(m + n) * rate.r(t)); };
    const double scale = integrand(ta) * (tb - ta);
    const double tol = opts.rel_tol * std::max(scale, 1e-300);
    rep.rate_partials.push_back(adaptive_simpson(integrand, ta, tb, tol, 30));
  }

  rep.psi_verdict = classify_tail(rep.psi_partials);
  rep.rate_verdict = classify_tail(rep.rate_partials);
  rep.verdict = (rep.psi_verdict == rep.rate_verdict) ? rep.psi_verdict
                                                      : TailVerdict::kInconclusive;
  return rep;
}

}  // namespace diolab
