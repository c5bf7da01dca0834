#include "diolab/flowlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <utility>

#include "diolab/parallel.hpp"

namespace diolab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// While |kappa t| stays under this bound (scaled by the largest inverse
// weight) the orbit matrix is representable and values are re-evaluated from
// it exactly; past the bound only the incrementally reduced frame is used.
constexpr double kDirectGuard = 700.0;
// Flow-time window (in units of s * (amax + bmax + wmax)) inside which the
// direct product evaluation stays far above its cancellation noise; see
// walk_orbit. 2^-53 ulps cross e^{-s wmax} near 36.7, kept with margin.
constexpr double kCancelWindow = 30.0;

struct OrbitShape {
  int m = 0, n = 0, d = 0;
  std::vector<long long> residues;  // gamma e1 mod N, canonical in [0, N)
};

OrbitShape check_spec(const OrbitSpec& spec, bool need_grid) {
  OrbitShape sh;
  sh.m = spec.theta.rows();
  sh.n = spec.theta.cols();
  require(sh.m >= 1 && sh.n >= 1, "orbit: theta must have at least one row and column");
  sh.d = sh.m + sh.n;
  require(spec.weights.dim() == sh.d, "orbit: weight split does not match theta");
  require(spec.weights.m() == sh.m, "orbit: weight split does not match theta");
  require(spec.modulus >= 1, "orbit: modulus must be >= 1");
  require(std::isfinite(spec.kappa) && spec.kappa > 0.0, "orbit: kappa must be positive");
  require(spec.gamma.rows() == sh.d && spec.gamma.cols() == sh.d,
          "orbit: gamma dimension mismatch");
  require(spec.gamma.det_exact() == 1, "orbit: gamma must have determinant 1");
  if (need_grid) {
    require(!spec.t_grid.empty(), "orbit: empty time grid");
    for (size_t k = 0; k < spec.t_grid.size(); ++k) {
      require(std::isfinite(spec.t_grid[k]), "orbit: non-finite grid time");
      if (k > 0)
        require(spec.t_grid[k] > spec.t_grid[k - 1], "orbit: time grid must strictly increase");
    }
  }
  sh.residues.resize(static_cast<size_t>(sh.d));
  for (int i = 0; i < sh.d; ++i) {
    long long r = spec.gamma(i, 0) % spec.modulus;
    if (r < 0) r += spec.modulus;
    sh.residues[static_cast<size_t>(i)] = r;
  }
  return sh;
}

// Row factors carrying a_{alpha,beta}(kappa t) to a_{alpha,beta}(kappa (t+dt)).
void step_factors(const WeightPair& wp, double kappa, double dt, std::vector<double>& f) {
  for (int i = 0; i < wp.m(); ++i) f[static_cast<size_t>(i)] = std::exp(kappa * dt * wp.alpha[i]);
  for (int j = 0; j < wp.n(); ++j)
    f[static_cast<size_t>(wp.m() + j)] = std::exp(-kappa * dt * wp.beta[j]);
}

// Drive the frame along the grid, handing each minimizer to the sink as
// (index, t, delta, w). The first grid point must be directly representable.
template <class Sink>
void walk_orbit(const OrbitSpec& spec, EnumBudget& budget, Sink&& sink) {
  const OrbitShape sh = check_spec(spec, /*need_grid=*/true);
  const Mat u = u_matrix(spec.theta);
  const Mat g0 = a_matrix(spec.kappa * spec.t_grid.front(), spec.weights) * u;
  CosetFrame frame(g0, spec.modulus, sh.residues);
  std::vector<double> factors(static_cast<size_t>(sh.d));
  const double inv_w = spec.weights.max_inverse_weight();
  // Early in the flow, candidate values are re-evaluated through the plain
  // product a(s) u(theta) w, so they agree bit for bit with an independent
  // evaluation of the same expression. That product computes a small number
  // by cancellation of e^{s alpha}-sized terms, and its absolute rounding
  // error grows like e^{s (amax + bmax)} ulp while the minimum can shrink
  // like e^{-s wmax}; once the two scales approach, the direct route would
  // drown the minimum in noise. Past the window the frame's incremental
  // values (accurate in relative terms at any time) stand alone.
  double amax = 0.0, bmax = 0.0;
  for (int i = 0; i < spec.weights.m(); ++i) amax = std::max(amax, spec.weights.alpha[i]);
  for (int j = 0; j < spec.weights.n(); ++j) bmax = std::max(bmax, spec.weights.beta[j]);
  const double cancel_rate = amax + bmax + std::max(amax, bmax);
  for (size_t k = 0; k < spec.t_grid.size(); ++k) {
    const double t = spec.t_grid[k];
    if (k > 0) {
      step_factors(spec.weights, spec.kappa, t - spec.t_grid[k - 1], factors);
      frame.apply_diagonal(factors);
    }
    const double s = spec.kappa * t;
    ClassEval eval;
    if (std::abs(s) * cancel_rate <= kCancelWindow && std::abs(s) * inv_w <= kDirectGuard)
      eval = exact_norm_eval(a_matrix(s, spec.weights) * u, NormSpec::sup());
    const CosetFrame::FrameVec best =
        frame.min_vector(NormSpec::sup(), budget, eval ? &eval : nullptr);
    sink(k, t, -std::log(best.value), best.w);
  }
}

std::vector<long long> to_machine(const std::vector<mpz_class>& w, const char* what) {
  std::vector<long long> out(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    if (!w[i].fits_slong_p()) throw std::overflow_error(what);
    out[i] = w[i].get_si();
  }
  return out;
}

void charge(EnumBudget& budget, long long amount, const char* what) {
  budget.used += amount;
  if (budget.used > budget.max_nodes) throw BudgetExhausted(what);
}

}  // namespace

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  require(std::isfinite(t0) && std::isfinite(t1) && t1 >= t0, "grid: need t1 >= t0");
  require(std::isfinite(dt) && dt > 0.0, "grid: step must be positive");
  const double steps_real = std::ceil((t1 - t0) / dt - 1e-9);
  require(steps_real < 5e8, "grid: too many points");
  const long long steps = std::llround(steps_real);
  std::vector<double> g(static_cast<size_t>(steps) + 1);
  for (long long k = 0; k <= steps; ++k)
    g[static_cast<size_t>(k)] = t0 + static_cast<double>(k) * dt;
  return g;
}

std::vector<DeltaSample> orbit_delta_series(const OrbitSpec& spec, EnumBudget& budget) {
  std::vector<DeltaSample> out(spec.t_grid.size());
  walk_orbit(spec, budget,
             [&](size_t k, double t, double delta, const std::vector<mpz_class>&) {
               out[k] = DeltaSample{t, delta};
             });
  return out;
}

std::vector<OrbitPoint> orbit_trace(const OrbitSpec& spec, EnumBudget& budget) {
  std::vector<OrbitPoint> out(spec.t_grid.size());
  walk_orbit(spec, budget,
             [&](size_t k, double t, double delta, const std::vector<mpz_class>& w) {
               out[k] = OrbitPoint{
                   t, delta, to_machine(w, "orbit_trace: minimizer exceeds machine integers")};
             });
  return out;
}

std::vector<ErgodicEstimate> estimate_cusp_mass_profile(std::span<const Mat> theta_samples,
                                                        long long modulus, const IMat& gamma,
                                                        double t_horizon,
                                                        std::span<const double> eps_list,
                                                        const CuspMassOptions& opts) {
  require(!theta_samples.empty(), "cusp mass: need at least one theta sample");
  require(!eps_list.empty(), "cusp mass: need at least one eps");
  for (double e : eps_list) require(e > 0.0 && e < 1.0, "cusp mass: eps must lie in (0,1)");
  const int m = theta_samples[0].rows();
  const int n = theta_samples[0].cols();
  for (const Mat& th : theta_samples)
    require(th.rows() == m && th.cols() == n, "cusp mass: theta samples must share a shape");
  const std::vector<double> grid = uniform_grid(0.0, t_horizon, opts.dt);
  require(grid.size() >= 100, "cusp mass: horizon too small (fewer than 100 grid points)");

  std::vector<double> thresholds(eps_list.size());
  for (size_t e = 0; e < eps_list.size(); ++e) thresholds[e] = -std::log(eps_list[e]);
  const WeightPair wp = WeightPair::uniform(m, n);

  // One orbit pass per theta; every eps threshold is read off the same
  // delta series. Results combine in fixed theta order, so worker count
  // cannot change the estimate.
  const std::vector<std::vector<double>> per_theta =
      sample_map(theta_samples.size(), [&](size_t i) {
        OrbitSpec sp{theta_samples[i], gamma, modulus, wp, 1.0, grid};
        EnumBudget budget{opts.node_budget, 0};
        const std::vector<DeltaSample> series = orbit_delta_series(sp, budget);
        std::vector<double> indicator(series.size());
        std::vector<double> means(eps_list.size());
        for (size_t e = 0; e < eps_list.size(); ++e) {
          for (size_t k = 0; k < series.size(); ++k)
            indicator[k] = series[k].delta > thresholds[e] ? 1.0 : 0.0;
          means[e] = pairwise_sum(indicator) / static_cast<double>(series.size());
        }
        return means;
      });

  std::vector<ErgodicEstimate> out;
  out.reserve(eps_list.size());
  std::vector<double> across(theta_samples.size());
  for (size_t e = 0; e < eps_list.size(); ++e) {
    for (size_t i = 0; i < per_theta.size(); ++i) across[i] = per_theta[i][e];
    char label[64];
    std::snprintf(label, sizeof label, "sup-cusp indicator eps=%.17g", eps_list[e]);
    out.push_back(ErgodicEstimate{t_horizon, label,
                                  pairwise_sum(across) / static_cast<double>(across.size()),
                                  theta_samples.size(), grid.size()});
  }
  return out;
}

ErgodicEstimate estimate_cusp_mass(std::span<const Mat> theta_samples, long long modulus,
                                   const IMat& gamma, double t_horizon, double eps,
                                   const CuspMassOptions& opts) {
  const double eps_list[1] = {eps};
  return estimate_cusp_mass_profile(theta_samples, modulus, gamma, t_horizon, eps_list,
                                    opts)[0];
}

JointReport joint_average(std::span<const OrbitSpec> specs, std::span<const double> eps,
                          double t_horizon, const JointOptions& opts) {
  require(!specs.empty(), "joint: need at least one leg");
  require(specs.size() == eps.size(), "joint: one eps per leg");
  for (double e : eps) require(e > 0.0 && e < 1.0, "joint: eps must lie in (0,1)");
  const Mat& th = specs[0].theta;
  for (const OrbitSpec& sp : specs) {
    require(sp.theta.rows() == th.rows() && sp.theta.cols() == th.cols(),
            "joint: legs must share theta");
    for (int i = 0; i < th.rows(); ++i)
      for (int j = 0; j < th.cols(); ++j)
        require(sp.theta(i, j) == th(i, j), "joint: legs must share theta");
  }
  const std::vector<double> grid = uniform_grid(0.0, t_horizon, opts.dt);
  require(grid.size() >= 2, "joint: horizon too small");

  // The probe is well posed whenever the scaled weights grow strictly from
  // leg to leg; otherwise flag it and run anyway.
  bool warn = false;
  for (size_t i = 1; i < specs.size(); ++i) {
    const WeightPair& a = specs[i - 1].weights;
    const WeightPair& b = specs[i].weights;
    if (a.m() != b.m() || a.n() != b.n()) {
      warn = true;
      continue;
    }
    for (int j = 0; j < a.m(); ++j)
      if (specs[i].kappa * b.alpha[j] <= specs[i - 1].kappa * a.alpha[j]) warn = true;
    for (int j = 0; j < a.n(); ++j)
      if (specs[i].kappa * b.beta[j] <= specs[i - 1].kappa * a.beta[j]) warn = true;
  }

  std::vector<std::vector<double>> indicator(specs.size());
  for (size_t leg = 0; leg < specs.size(); ++leg) {
    OrbitSpec sp = specs[leg];
    sp.t_grid = grid;
    EnumBudget budget{opts.node_budget, 0};
    const double threshold = -std::log(eps[leg]);
    const std::vector<DeltaSample> series = orbit_delta_series(sp, budget);
    indicator[leg].resize(series.size());
    for (size_t k = 0; k < series.size(); ++k)
      indicator[leg][k] = series[k].delta > threshold ? 1.0 : 0.0;
  }

  JointReport rep;
  rep.horizon = t_horizon;
  rep.grid_points = grid.size();
  rep.exponent_order_warning = warn;
  std::vector<double> product(grid.size(), 1.0);
  for (const std::vector<double>& ind : indicator)
    for (size_t k = 0; k < ind.size(); ++k) product[k] *= ind[k];
  rep.joint = pairwise_sum(product) / static_cast<double>(grid.size());
  rep.marginal_product = 1.0;
  for (const std::vector<double>& ind : indicator) {
    const double mean = pairwise_sum(ind) / static_cast<double>(grid.size());
    rep.marginals.push_back(mean);
    rep.marginal_product *= mean;
  }
  return rep;
}

CorollaryCheck crosscheck_corollary(const OrbitSpec& spec, double eps, double t,
                                    EnumBudget& budget) {
  const OrbitShape sh = check_spec(spec, /*need_grid=*/false);
  require(eps > 0.0 && eps < 1.0, "crosscheck: eps must lie in (0,1)");
  require(std::isfinite(t), "crosscheck: time must be finite");

  CorollaryCheck out;
  out.t = t;
  out.eps = eps;
  const double s = spec.kappa * t;
  const Mat g = a_matrix(s, spec.weights) * u_matrix(spec.theta);
  out.fired = in_eps_cusp(CongruenceClassPoint{g, spec.modulus, sh.residues}, eps, budget);
  if (!out.fired) {
    out.pass = true;
    return out;
  }

  // Independent witness search: q runs over its quasi-ball intersected with
  // the class progression, p over the per-coordinate windows around -theta q.
  const WeightPair& wp = spec.weights;
  const long long N = spec.modulus;
  const double rv = eps * std::exp(-s);  // residual quasi-ball radius
  const double rq = eps * std::exp(s);   // q quasi-ball radius
  const int m = sh.m, n = sh.n;

  std::vector<long long> qlo(static_cast<size_t>(n)), qcount(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double h = std::pow(rq, wp.beta[j]) * (1.0 + 1e-12);
    const long long res = sh.residues[static_cast<size_t>(m + j)];
    const long long klo =
        static_cast<long long>(std::floor((-h - static_cast<double>(res)) / static_cast<double>(N))) - 1;
    const long long khi =
        static_cast<long long>(std::ceil((h - static_cast<double>(res)) / static_cast<double>(N))) + 1;
    qlo[static_cast<size_t>(j)] = klo;
    qcount[static_cast<size_t>(j)] = khi - klo + 1;
    require(qcount[static_cast<size_t>(j)] > 0, "crosscheck: empty q range");
  }

  std::vector<long long> q(static_cast<size_t>(n)), kidx(static_cast<size_t>(n), 0);
  std::vector<double> tq(static_cast<size_t>(m)), res_vec(static_cast<size_t>(m));
  std::vector<std::vector<long long>> pchoices(static_cast<size_t>(m));
  std::vector<size_t> pick(static_cast<size_t>(m));
  std::vector<long long> w(static_cast<size_t>(m + n));
  std::vector<double> qd(static_cast<size_t>(n));

  bool done = false;
  while (!done) {
    charge(budget, 1, "crosscheck_corollary: box budget exhausted");
    for (int j = 0; j < n; ++j)
      q[static_cast<size_t>(j)] =
          sh.residues[static_cast<size_t>(m + j)] +
          N * (qlo[static_cast<size_t>(j)] + kidx[static_cast<size_t>(j)]);

    for (int j = 0; j < n; ++j) qd[static_cast<size_t>(j)] = static_cast<double>(q[static_cast<size_t>(j)]);
    if (quasi_norm(qd, wp.beta) < rq) {
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += spec.theta(i, j) * qd[static_cast<size_t>(j)];
        tq[static_cast<size_t>(i)] = acc;
      }
      bool feasible = true;
      for (int i = 0; i < m && feasible; ++i) {
        const double win = std::pow(rv, wp.alpha[i]) * (1.0 + 1e-12);
        const long long res = sh.residues[static_cast<size_t>(i)];
        const long long klo = static_cast<long long>(
                                  std::floor((-win - tq[static_cast<size_t>(i)] - static_cast<double>(res)) /
                                             static_cast<double>(N))) -
                              1;
        const long long khi = static_cast<long long>(
                                  std::ceil((win - tq[static_cast<size_t>(i)] - static_cast<double>(res)) /
                                            static_cast<double>(N))) +
                              1;
        std::vector<long long>& cand = pchoices[static_cast<size_t>(i)];
        cand.clear();
        for (long long k = klo; k <= khi; ++k) {
          const long long p = res + N * k;
          if (std::abs(tq[static_cast<size_t>(i)] + static_cast<double>(p)) <= win) cand.push_back(p);
        }
        if (cand.empty()) feasible = false;
      }
      if (feasible) {
        std::fill(pick.begin(), pick.end(), 0);
        bool pdone = false;
        while (!pdone) {
          charge(budget, 1, "crosscheck_corollary: box budget exhausted");
          for (int i = 0; i < m; ++i) {
            w[static_cast<size_t>(i)] = pchoices[static_cast<size_t>(i)][pick[static_cast<size_t>(i)]];
            res_vec[static_cast<size_t>(i)] =
                tq[static_cast<size_t>(i)] + static_cast<double>(w[static_cast<size_t>(i)]);
          }
          for (int j = 0; j < n; ++j) w[static_cast<size_t>(m + j)] = q[static_cast<size_t>(j)];
          if (quasi_norm(res_vec, wp.alpha) < rv && quasi_norm(qd, wp.beta) < rq && is_primitive(w)) {
            out.witness_found = true;
            out.p.assign(w.begin(), w.begin() + m);
            out.q.assign(w.begin() + m, w.end());
            done = true;
            break;
          }
          // advance the p odometer
          int i = 0;
          for (; i < m; ++i) {
            if (++pick[static_cast<size_t>(i)] < pchoices[static_cast<size_t>(i)].size()) break;
            pick[static_cast<size_t>(i)] = 0;
          }
          if (i == m) pdone = true;
        }
      }
    }
    if (done) break;
    // advance the q odometer
    int j = 0;
    for (; j < n; ++j) {
      if (++kidx[static_cast<size_t>(j)] < qcount[static_cast<size_t>(j)]) break;
      kidx[static_cast<size_t>(j)] = 0;
    }
    if (j == n) done = true;
  }

  out.pass = !out.fired || out.witness_found;
  return out;
}

DaniReport crosscheck_dani(const Mat& theta, const IMat& gamma, long long modulus,
                           const ApproxFunction& psi, double t_max, const DaniOptions& opts) {
  const int m = theta.rows();
  const int n = theta.cols();
  require(m >= 1 && n >= 1, "dani crosscheck: theta must be nonempty");
  require(opts.dt > 0.0 && std::isfinite(opts.dt), "dani crosscheck: step must be positive");
  require(opts.slack >= 0.0, "dani crosscheck: slack must be nonnegative");

  DaniReport rep{psi_to_rate(psi, m, n), {}, {}};
  require(t_max > rep.rate.t0(), "dani crosscheck: t_max at or below the matching time t0");

  const WeightPair wp = WeightPair::uniform(m, n);
  OrbitSpec spec{theta, gamma, modulus, wp, 1.0,
                 uniform_grid(rep.rate.t0(), t_max, opts.dt)};
  const OrbitShape sh = check_spec(spec, /*need_grid=*/true);

  // Every solution the flow could predict on [t0, t_max]: |q| up to
  // e^{lambda(t_max)/n}, primitive, in the class.
  const long long q_max = std::max<long long>(
      1, static_cast<long long>(std::floor(std::exp(rep.rate.lambda(t_max) / n))));
  EnumerateOptions eopts;
  eopts.primitive_only = true;
  eopts.box_guard = opts.box_guard;
  const SearchClass cls{modulus, sh.residues};
  const std::vector<SolutionRecord> sols = enumerate_solutions(theta, psi, cls, q_max, eopts);

  EnumBudget budget{opts.node_budget, 0};
  const double x0 = psi.x0();

  walk_orbit(spec, budget, [&](size_t, double t, double delta, const std::vector<mpz_class>& w) {
    const double rate_t = rep.rate.r(t);
    if (delta < rate_t) return;
    DaniCrossing c;
    c.t = t;
    c.delta = delta;
    c.rate = rate_t;
    c.scale_bound = std::exp(rep.rate.lambda(t));
    c.matched = !sols.empty() && sols.front().scale <= c.scale_bound * (1.0 + 1e-9);
    if (!c.matched) {
      // Fall back to the minimizer itself: below the psi domain the
      // correspondence makes no claim; inside it, verify directly.
      double q_sup = 0.0;
      bool fits = true;
      for (int j = 0; j < n; ++j) {
        const mpz_class& qc = w[static_cast<size_t>(m + j)];
        if (!qc.fits_slong_p()) fits = false;
        q_sup = std::max(q_sup, std::abs(qc.get_d()));
      }
      const double scale = std::pow(q_sup, n);
      if (q_sup == 0.0 || scale < x0 * (1.0 + 1e-9)) {
        c.subdomain = true;
      } else if (fits) {
        std::vector<long long> wi(w.size());
        for (size_t i = 0; i < w.size(); ++i) wi[i] = w[i].get_si();
        double resid = 0.0;
        for (int i = 0; i < m; ++i) {
          double acc = static_cast<double>(wi[static_cast<size_t>(i)]);
          for (int j = 0; j < n; ++j)
            acc += theta(i, j) * static_cast<double>(wi[static_cast<size_t>(m + j)]);
          resid = std::max(resid, std::abs(acc));
        }
        c.matched = scale <= c.scale_bound * (1.0 + 1e-9) &&
                    std::pow(resid, m) <= psi.eval_clamped(scale) * (1.0 + 1e-9);
      }
    }
    if (!c.matched && !c.subdomain) ++rep.crossing_failures;
    rep.crossings.push_back(std::move(c));
  });

  for (const SolutionRecord& rec : sols) {
    DaniSolutionCheck chk;
    chk.record = rec;
    double t_star = rep.rate.lambda_inverse(std::log(rec.scale));
    t_star = std::min(std::max(t_star, rep.rate.t0()), t_max);
    chk.t_star = t_star;
    const Mat g = a_matrix(t_star, wp) * u_matrix(theta);
    const DeltaResult dv = delta_value(CongruenceClassPoint{g, modulus, sh.residues}, budget);
    chk.delta_at_t = dv.delta;
    chk.rate_minus_slack = rep.rate.r(t_star) - opts.slack;
    chk.pass = chk.delta_at_t >= chk.rate_minus_slack - 1e-9;
    if (!chk.pass) ++rep.solution_failures;
    rep.solutions.push_back(std::move(chk));
  }

  rep.pass = rep.crossing_failures == 0 && rep.solution_failures == 0;
  return rep;
}

}  // namespace diolab
