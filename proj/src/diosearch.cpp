#include "diolab/diosearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "diolab/lattice.hpp"

namespace diolab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

long long fdiv(long long a, long long b) {  // floor division, b > 0
  long long q = a / b, r = a % b;
  return (r != 0 && r < 0) ? q - 1 : q;
}

long long cdiv(long long a, long long b) {  // ceil division, b > 0
  return fdiv(a + b - 1, b);
}

std::vector<long long> canonical(std::span<const long long> v, long long n) {
  std::vector<long long> out(v.begin(), v.end());
  for (auto& x : out) x = ((x % n) + n) % n;
  return out;
}

// Visit every integer vector congruent to res mod n inside [lo_j, hi_j],
// in lexicographic order. Returns false if fn aborted the walk.
template <class Fn>
bool for_each_class_point(std::span<const long long> lo, std::span<const long long> hi,
                          std::span<const long long> res, long long n, long long box_guard,
                          Fn&& fn) {
  const int d = static_cast<int>(lo.size());
  std::vector<long long> start(d), count(d), q(d);
  double volume = 1.0;
  for (int j = 0; j < d; ++j) {
    start[j] = res[j] + n * cdiv(lo[j] - res[j], n);
    if (start[j] > hi[j]) return true;  // empty box
    count[j] = fdiv(hi[j] - start[j], n) + 1;
    volume *= static_cast<double>(count[j]);
    q[j] = start[j];
  }
  if (volume > static_cast<double>(box_guard))
    throw BudgetExhausted("search box exceeds the configured guard");
  for (;;) {
    if (!fn(std::span<const long long>(q))) return false;
    int j = d - 1;
    while (j >= 0) {
      q[j] += n;
      if (q[j] <= hi[j]) break;
      q[j] = start[j];
      --j;
    }
    if (j < 0) return true;
  }
}

bool is_zero(std::span<const long long> v) {
  for (long long x : v)
    if (x != 0) return false;
  return true;
}

// theta q as doubles.
std::vector<double> image(const Mat& theta, std::span<const long long> q) {
  return theta.apply(q);
}

// Minimal primitive (p, q) residual where each |(theta q + p)_j| <= window_j;
// ties resolved toward the lexicographically smaller p. norm_of maps the
// residual coordinates to the scalar being minimized.
template <class NormFn>
bool best_primitive_p(const Mat& theta, std::span<const long long> q,
                      std::span<const long long> p_res, long long n,
                      std::span<const double> window, long long box_guard, NormFn&& norm_of,
                      double& out_res, std::vector<long long>& out_p,
                      double* second_res = nullptr, std::vector<long long>* second_p = nullptr) {
  const int m = theta.rows();
  const std::vector<double> r = image(theta, q);
  std::vector<long long> lo(m), hi(m);
  for (int j = 0; j < m; ++j) {
    const double a = -r[j] - window[j], b = -r[j] + window[j];
    if (!(a <= b) || std::abs(a) > 9e15 || std::abs(b) > 9e15)
      throw std::invalid_argument("best_primitive_p: window out of range");
    lo[j] = static_cast<long long>(std::ceil(a - 1e-9));
    hi[j] = static_cast<long long>(std::floor(b + 1e-9));
  }
  bool found = false;
  std::vector<double> x(m);
  std::vector<long long> vec(m + q.size());
  for_each_class_point(lo, hi, p_res, n, box_guard, [&](std::span<const long long> p) {
    for (int j = 0; j < m; ++j) x[j] = r[j] + static_cast<double>(p[j]);
    const double value = norm_of(std::span<const double>(x));
    std::copy(p.begin(), p.end(), vec.begin());
    std::copy(q.begin(), q.end(), vec.begin() + m);
    if (is_zero(vec) || !is_primitive(vec)) return true;
    if (!found || value < out_res) {
      if (found && second_res && out_res < *second_res) {
        *second_res = out_res;
        *second_p = out_p;
      }
      found = true;
      out_res = value;
      out_p.assign(p.begin(), p.end());
    } else if (second_res && value < *second_res &&
               !std::equal(p.begin(), p.end(), out_p.begin())) {
      *second_res = value;
      second_p->assign(p.begin(), p.end());
    }
    return true;
  });
  return found;
}

double sup_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

std::vector<long long> best_p_for_q(const Mat& theta, std::span<const long long> q,
                                    std::span<const long long> p_residues, long long modulus) {
  require(modulus >= 1, "best_p_for_q: modulus must be >= 1");
  require(static_cast<int>(q.size()) == theta.cols(), "best_p_for_q: q dimension mismatch");
  require(static_cast<int>(p_residues.size()) == theta.rows(),
          "best_p_for_q: residue dimension mismatch");
  const std::vector<double> r = image(theta, q);
  std::vector<long long> p(theta.rows());
  for (int j = 0; j < theta.rows(); ++j) {
    const double u = (-r[j] - static_cast<double>(p_residues[j])) / static_cast<double>(modulus);
    const double kd = std::ceil(u - 0.5);  // ties toward the smaller p
    if (!(std::abs(kd) < 9e15)) throw std::invalid_argument("best_p_for_q: out of range");
    p[j] = p_residues[j] + modulus * static_cast<long long>(kd);
  }
  return p;
}

std::vector<SolutionRecord> enumerate_solutions(const Mat& theta, const ApproxFunction& psi,
                                                const SearchClass& cls, long long q_max,
                                                const EnumerateOptions& opts) {
  const int m = theta.rows(), n = theta.cols();
  require(q_max >= 1, "enumerate_solutions: q_max must be >= 1");
  require(static_cast<int>(cls.residues.size()) == m + n,
          "enumerate_solutions: class dimension mismatch");
  require(cls.modulus >= 1, "enumerate_solutions: modulus must be >= 1");
  const std::vector<long long> res = canonical(cls.residues, cls.modulus);
  const std::span<const long long> p_res(res.data(), static_cast<size_t>(m));
  const std::span<const long long> q_res(res.data() + m, static_cast<size_t>(n));

  std::vector<SolutionRecord> out;
  std::vector<long long> lo(n, -q_max), hi(n, q_max);
  std::vector<double> x(m);
  for_each_class_point(lo, hi, q_res, cls.modulus, opts.box_guard,
                       [&](std::span<const long long> q) {
    if (is_zero(q)) return true;
    double qn = 0.0;
    for (long long v : q) qn = std::max(qn, static_cast<double>(std::llabs(v)));
    const double scale = std::pow(qn, n);
    if (scale < psi.x0()) return true;  // psi undefined below its x0
    const double bound = std::pow(psi.eval(scale), 1.0 / m);
    SolutionRecord rec;
    rec.q.assign(q.begin(), q.end());
    rec.qnorm = qn;
    rec.scale = scale;
    if (opts.primitive_only) {
      std::vector<double> window(m, bound);
      double best;
      std::vector<long long> bp;
      if (!best_primitive_p(theta, q, p_res, cls.modulus, window, opts.box_guard, sup_of,
                            best, bp))
        return true;
      rec.p = std::move(bp);
      rec.residual = best;
    } else {
      rec.p = best_p_for_q(theta, q, p_res, cls.modulus);
      const std::vector<double> r = image(theta, q);
      for (int j = 0; j < m; ++j) x[j] = r[j] + static_cast<double>(rec.p[j]);
      rec.residual = sup_of(x);
    }
    if (rec.residual <= bound) out.push_back(std::move(rec));
    return true;
  });
  std::sort(out.begin(), out.end(), [](const SolutionRecord& a, const SolutionRecord& b) {
    if (a.qnorm != b.qnorm) return a.qnorm < b.qnorm;
    return a.q < b.q;
  });
  return out;
}

std::vector<GrowthPoint> count_growth(const Mat& theta, const ApproxFunction& psi,
                                      const SearchClass& cls,
                                      std::span<const long long> q_grid,
                                      const EnumerateOptions& opts) {
  require(!q_grid.empty(), "count_growth: empty grid");
  for (size_t i = 1; i < q_grid.size(); ++i)
    require(q_grid[i] > q_grid[i - 1], "count_growth: grid must increase");
  const auto sols = enumerate_solutions(theta, psi, cls, q_grid.back(), opts);
  std::vector<GrowthPoint> out;
  size_t k = 0;
  long long count = 0;
  for (long long threshold : q_grid) {
    while (k < sols.size() && sols[k].qnorm <= static_cast<double>(threshold)) {
      ++count;
      ++k;
    }
    out.push_back(GrowthPoint{threshold, count});
  }
  return out;
}

// ====== witness scans ======

namespace {

struct Cand {
  double qnorm = 0.0;
  double res_plain = std::numeric_limits<double>::infinity();
  double res_prim = std::numeric_limits<double>::infinity();
  double res_prim2 = std::numeric_limits<double>::infinity();
  std::vector<long long> q, p_plain, p_prim, p_prim2;
};

struct ClassScan {
  std::vector<Cand> cands;  // sorted by (qnorm, lex q)
  std::vector<double> pre_plain, pre_prim;
  std::vector<int> idx_plain, idx_prim;

  void finalize() {
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.qnorm != b.qnorm) return a.qnorm < b.qnorm;
      return a.q < b.q;
    });
    const size_t k = cands.size();
    pre_plain.assign(k, std::numeric_limits<double>::infinity());
    pre_prim.assign(k, std::numeric_limits<double>::infinity());
    idx_plain.assign(k, -1);
    idx_prim.assign(k, -1);
    double mp = std::numeric_limits<double>::infinity();
    double mr = std::numeric_limits<double>::infinity();
    int ip = -1, ir = -1;
    for (size_t i = 0; i < k; ++i) {
      if (cands[i].res_plain < mp) {
        mp = cands[i].res_plain;
        ip = static_cast<int>(i);
      }
      if (cands[i].res_prim < mr) {
        mr = cands[i].res_prim;
        ir = static_cast<int>(i);
      }
      pre_plain[i] = mp;
      idx_plain[i] = ip;
      pre_prim[i] = mr;
      idx_prim[i] = ir;
    }
  }

  // Largest index with qnorm <= bound; -1 if none.
  int cut(double bound) const {
    size_t lo = 0, hi = cands.size();
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (cands[mid].qnorm <= bound)
        lo = mid + 1;
      else
        hi = mid;
    }
    return static_cast<int>(lo) - 1;
  }
};

SolutionRecord make_record(const Cand& c, bool primitive) {
  SolutionRecord rec;
  rec.q = c.q;
  rec.p = primitive ? c.p_prim : c.p_plain;
  rec.residual = primitive ? c.res_prim : c.res_plain;
  rec.qnorm = c.qnorm;
  rec.scale = 0.0;
  return rec;
}

// System-of-distinct-representatives search: pick one solution per class,
// all pairwise different as integer vectors.
bool pick_distinct(const std::vector<std::vector<SolutionRecord>>& sets, size_t at,
                   std::vector<SolutionRecord>& chosen) {
  if (at == sets.size()) return true;
  for (const SolutionRecord& cand : sets[at]) {
    bool clash = false;
    for (size_t i = 0; i < at; ++i)
      if (chosen[i].p == cand.p && chosen[i].q == cand.q) {
        clash = true;
        break;
      }
    if (clash) continue;
    chosen[at] = cand;
    if (pick_distinct(sets, at + 1, chosen)) return true;
  }
  return false;
}

}  // namespace

SimultaneousReport simultaneous_witnesses(const Mat& theta,
                                          std::span<const SearchClass> classes, double c,
                                          double delta, long long q_max,
                                          const SimultaneousOptions& opts) {
  const int m = theta.rows(), n = theta.cols();
  require(!classes.empty(), "simultaneous_witnesses: no classes");
  require(c > 0.0, "simultaneous_witnesses: c must be positive");
  require(delta > 0.0 && delta <= 1.0, "simultaneous_witnesses: delta must lie in (0, 1]");
  require(q_max >= 1, "simultaneous_witnesses: q_max must be >= 1");

  std::vector<ClassScan> scans(classes.size());
  for (size_t i = 0; i < classes.size(); ++i) {
    const SearchClass& cls = classes[i];
    require(static_cast<int>(cls.residues.size()) == m + n,
            "simultaneous_witnesses: class dimension mismatch");
    const std::vector<long long> res = canonical(cls.residues, cls.modulus);
    const std::span<const long long> p_res(res.data(), static_cast<size_t>(m));
    const std::span<const long long> q_res(res.data() + m, static_cast<size_t>(n));
    std::vector<long long> lo(n, -q_max), hi(n, q_max);
    std::vector<double> x(m);
    for_each_class_point(lo, hi, q_res, cls.modulus, opts.box_guard,
                         [&](std::span<const long long> q) {
      if (is_zero(q)) return true;
      Cand cand;
      cand.q.assign(q.begin(), q.end());
      for (long long v : q)
        cand.qnorm = std::max(cand.qnorm, static_cast<double>(std::llabs(v)));
      cand.p_plain = best_p_for_q(theta, q, p_res, cls.modulus);
      const std::vector<double> r = image(theta, q);
      for (int j = 0; j < m; ++j) x[j] = r[j] + static_cast<double>(cand.p_plain[j]);
      cand.res_plain = sup_of(x);
      scans[i].cands.push_back(std::move(cand));
      return true;
    });
    scans[i].finalize();
  }

  SimultaneousReport rep;
  std::vector<size_t> ptr(classes.size(), 0);
  for (long long bigq = 1; bigq <= q_max; ++bigq) {
    ++rep.thresholds;
    const double qd = static_cast<double>(bigq);
    bool ok = true;
    std::vector<int> arg(classes.size(), -1);
    for (size_t i = 0; i < classes.size() && ok; ++i) {
      ClassScan& sc = scans[i];
      while (ptr[i] < sc.cands.size() && sc.cands[ptr[i]].qnorm <= qd) ++ptr[i];
      if (ptr[i] == 0) {
        ok = false;
        break;
      }
      const double exponent = (i == 0) ? static_cast<double>(n) : delta * n;
      const double bound = std::pow(c * std::pow(qd, -exponent), 1.0 / m);
      const size_t last = ptr[i] - 1;
      if (sc.pre_plain[last] <= bound)
        arg[i] = sc.idx_plain[last];
      else
        ok = false;
    }
    if (!ok) continue;
    ++rep.witness_count;
    if (rep.witnesses.size() < opts.store_cap) {
      WitnessRecord w;
      w.q_threshold = qd;
      for (size_t i = 0; i < classes.size(); ++i)
        w.chosen.push_back(make_record(scans[i].cands[arg[i]], false));
      rep.witnesses.push_back(std::move(w));
    }
  }
  return rep;
}

WeightedReport weighted_witnesses(const Mat& theta,
                                  std::span<const WeightedClassSpec> classes, double eps,
                                  double q_max, const WeightedOptions& opts) {
  const int m = theta.rows(), n = theta.cols();
  require(!classes.empty(), "weighted_witnesses: no classes");
  require(eps > 0.0, "weighted_witnesses: eps must be positive");
  require(q_max >= 1.0, "weighted_witnesses: q_max must be >= 1");
  require(opts.grid_step > 0.0, "weighted_witnesses: grid step must be positive");

  WeightedReport rep;
  for (size_t i = 0; i < classes.size(); ++i) {
    require(classes[i].weights.m() == m && classes[i].weights.n() == n,
            "weighted_witnesses: weight dimensions mismatch");
    require(classes[i].kappa > 0.0, "weighted_witnesses: kappa must be positive");
    if (i > 0) {
      // Componentwise exponent ordering (a warning, not an error: the scan is
      // still well defined, the guarantee behind it just no longer applies).
      const WeightedClassSpec& a = classes[i - 1];
      const WeightedClassSpec& b = classes[i];
      for (int j = 0; j < m; ++j)
        if (!(b.kappa * b.weights.alpha[j] > a.kappa * a.weights.alpha[j]))
          rep.exponent_gap_warning = true;
      for (int j = 0; j < n; ++j)
        if (!(b.kappa * b.weights.beta[j] > a.kappa * a.weights.beta[j]))
          rep.exponent_gap_warning = true;
    }
  }
  const bool need_prim = opts.require_primitive || opts.require_distinct;

  std::vector<ClassScan> scans(classes.size());
  for (size_t i = 0; i < classes.size(); ++i) {
    const WeightedClassSpec& spec = classes[i];
    const Weight& alpha = spec.weights.alpha;
    const Weight& beta = spec.weights.beta;
    require(static_cast<int>(spec.cls.residues.size()) == m + n,
            "weighted_witnesses: class dimension mismatch");
    const std::vector<long long> res = canonical(spec.cls.residues, spec.cls.modulus);
    const std::span<const long long> p_res(res.data(), static_cast<size_t>(m));
    const std::span<const long long> q_res(res.data() + m, static_cast<size_t>(n));
    const double q_bound = eps * std::pow(q_max, spec.kappa);
    std::vector<long long> lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
      const double h = std::pow(q_bound, beta[j]);
      if (h > 9e15) throw std::invalid_argument("weighted_witnesses: q box out of range");
      hi[j] = static_cast<long long>(std::floor(h + 1e-9));
      lo[j] = -hi[j];
    }
    std::vector<double> x(m);
    std::vector<double> window(m);
    for (int j = 0; j < m; ++j) window[j] = std::pow(eps, alpha[j]);
    auto alpha_norm = [&](std::span<const double> v) { return quasi_norm(v, alpha); };
    for_each_class_point(lo, hi, q_res, spec.cls.modulus, opts.box_guard,
                         [&](std::span<const long long> q) {
      if (is_zero(q)) return true;
      Cand cand;
      cand.q.assign(q.begin(), q.end());
      std::vector<double> qd(q.size());
      for (size_t j = 0; j < q.size(); ++j) qd[j] = static_cast<double>(q[j]);
      cand.qnorm = quasi_norm(qd, beta);
      if (cand.qnorm > q_bound * (1.0 + 1e-12)) return true;
      cand.p_plain = best_p_for_q(theta, q, p_res, spec.cls.modulus);
      const std::vector<double> r = image(theta, q);
      for (int j = 0; j < m; ++j) x[j] = r[j] + static_cast<double>(cand.p_plain[j]);
      cand.res_plain = quasi_norm(x, alpha);
      if (need_prim) {
        double best = std::numeric_limits<double>::infinity();
        std::vector<long long> bp;
        double best2 = std::numeric_limits<double>::infinity();
        std::vector<long long> bp2;
        if (best_primitive_p(theta, q, p_res, spec.cls.modulus, window, opts.box_guard,
                             alpha_norm, best, bp, &best2, &bp2)) {
          cand.res_prim = best;
          cand.p_prim = std::move(bp);
          cand.res_prim2 = best2;
          cand.p_prim2 = std::move(bp2);
        }
      }
      scans[i].cands.push_back(std::move(cand));
      return true;
    });
    scans[i].finalize();
  }

  const long long kmax =
      static_cast<long long>(std::floor(std::log(q_max) / opts.grid_step + 1e-9));
  for (long long k = 0; k <= kmax; ++k) {
    ++rep.thresholds;
    const double bigq = std::exp(opts.grid_step * static_cast<double>(k));
    bool ok = true;
    std::vector<int> arg(classes.size(), -1);
    std::vector<int> cuts(classes.size(), -1);
    for (size_t i = 0; i < classes.size() && ok; ++i) {
      const double bq = eps * std::pow(bigq, classes[i].kappa);
      const double br = eps * std::pow(bigq, -classes[i].kappa);
      const int cut = scans[i].cut(bq);
      cuts[i] = cut;
      if (cut < 0) {
        ok = false;
        break;
      }
      const double best = need_prim ? scans[i].pre_prim[cut] : scans[i].pre_plain[cut];
      if (best <= br)
        arg[i] = need_prim ? scans[i].idx_prim[cut] : scans[i].idx_plain[cut];
      else
        ok = false;
    }
    if (ok && opts.require_distinct) {
      // Gather small per-class solution sets and look for pairwise distinct
      // representatives. The per-class sets are capped, so a miss here means
      // "no witness certified", never a false positive.
      std::vector<std::vector<SolutionRecord>> sets(classes.size());
      for (size_t i = 0; i < classes.size(); ++i) {
        const double br = eps * std::pow(bigq, -classes[i].kappa);
        for (int j = 0; j <= cuts[i]; ++j) {
          const Cand& c = scans[i].cands[j];
          if (c.res_prim <= br) {
            sets[i].push_back(make_record(c, true));
            if (c.res_prim2 <= br && static_cast<int>(sets[i].size()) < opts.set_cap) {
              SolutionRecord alt = make_record(c, true);
              alt.p = c.p_prim2;
              alt.residual = c.res_prim2;
              sets[i].push_back(std::move(alt));
            }
          }
          if (static_cast<int>(sets[i].size()) >= opts.set_cap) break;
        }
        if (sets[i].empty()) ok = false;
      }
      if (ok) {
        std::vector<SolutionRecord> chosen(classes.size());
        if (pick_distinct(sets, 0, chosen)) {
          ++rep.witness_count;
          if (rep.witnesses.size() < opts.store_cap) {
            WitnessRecord w;
            w.q_threshold = bigq;
            w.chosen = std::move(chosen);
            rep.witnesses.push_back(std::move(w));
          }
        }
      }
      continue;
    }
    if (!ok) continue;
    ++rep.witness_count;
    if (rep.witnesses.size() < opts.store_cap) {
      WitnessRecord w;
      w.q_threshold = bigq;
      for (size_t i = 0; i < classes.size(); ++i)
        w.chosen.push_back(make_record(scans[i].cands[arg[i]], need_prim));
      rep.witnesses.push_back(std::move(w));
    }
  }
  return rep;
}

}  // namespace diolab
