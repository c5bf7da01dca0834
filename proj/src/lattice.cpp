#include "diolab/lattice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace diolab {

namespace {

constexpr int kMaxDim = 8;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// ====== Gram–Schmidt data for column bases ======

struct GS {
  int d = 0;
  double mu[kMaxDim][kMaxDim];     // mu[j][i], i < j
  double bstar[kMaxDim][kMaxDim];  // bstar[j] is the j-th orthogonalized column
  double bs2[kMaxDim];
};

void gram_schmidt(const Mat& b, GS& gs) {
  const int d = b.cols();
  gs.d = d;
  for (int j = 0; j < d; ++j) {
    for (int r = 0; r < d; ++r) gs.bstar[j][r] = b(r, j);
    for (int i = 0; i < j; ++i) {
      double dot = 0.0;
      for (int r = 0; r < d; ++r) dot += gs.bstar[j][r] * gs.bstar[i][r];
      const double mu = dot / gs.bs2[i];
      gs.mu[j][i] = mu;
      for (int r = 0; r < d; ++r) gs.bstar[j][r] -= mu * gs.bstar[i][r];
    }
    double n2 = 0.0;
    for (int r = 0; r < d; ++r) n2 += gs.bstar[j][r] * gs.bstar[j][r];
    if (!(n2 > 0.0) || !std::isfinite(n2))
      throw std::invalid_argument("lattice: singular or non-finite basis");
    gs.bs2[j] = n2;
  }
}

void col_axpy(Mat& b, int dst, int src, long long q) {
  for (int r = 0; r < b.rows(); ++r) b(r, dst) += static_cast<double>(q) * b(r, src);
}

void col_swap(Mat& b, int i, int j) {
  for (int r = 0; r < b.rows(); ++r) std::swap(b(r, i), b(r, j));
}

// LLL on the columns of b; t accumulates the column operations.
void lll_columns(Mat& b, IMat& t, double delta, int max_rounds) {
  require(delta > 0.25 && delta < 1.0, "lll: delta must lie in (1/4, 1)");
  const int d = b.cols();
  if (d == 1) {
    GS gs;
    gram_schmidt(b, gs);  // singularity check
    return;
  }
  GS gs;
  gram_schmidt(b, gs);
  int k = 1;
  int rounds = 0;
  while (k < d) {
    if (++rounds > max_rounds) throw std::runtime_error("lll: round limit exceeded");
    for (int j = k - 1; j >= 0; --j) {
      const double mu = gs.mu[k][j];
      if (std::abs(mu) > 0.5) {
        if (!(std::abs(mu) < 9e15)) throw std::runtime_error("lll: transform overflow");
        const long long q = std::llround(mu);
        col_axpy(b, k, j, -q);
        for (int r = 0; r < d; ++r) t(r, k) -= q * t(r, j);
        gram_schmidt(b, gs);
      }
    }
    const double muk = gs.mu[k][k - 1];
    if (gs.bs2[k] >= (delta - muk * muk) * gs.bs2[k - 1]) {
      ++k;
    } else {
      col_swap(b, k, k - 1);
      for (int r = 0; r < d; ++r) std::swap(t(r, k), t(r, k - 1));
      gram_schmidt(b, gs);
      k = std::max(k - 1, 1);
    }
  }
}

// ====== shifted-lattice enumeration (Fincke–Pohst with an offset) ======
//
// Walks every integer z with ||B z + c||_2^2 <= r2, charging one budget unit
// per tree node. The visitor returns false to abort the whole walk.
template <class Visit>
void enumerate_shifted(const Mat& b, const GS& gs, std::span<const double> c, double r2,
                       EnumBudget& budget, Visit&& visit) {
  const int d = b.cols();
  double gamma[kMaxDim];
  for (int i = 0; i < d; ++i) {
    double dot = 0.0;
    for (int r = 0; r < d; ++r) dot += c[r] * gs.bstar[i][r];
    gamma[i] = dot / gs.bs2[i];
  }
  long long z[kMaxDim] = {0};
  const double cap = r2 + 1e-9 * (1.0 + r2);

  auto walk = [&](auto&& self, int level, double partial) -> bool {
    double center = -gamma[level];
    for (int j = level + 1; j < d; ++j) center -= gs.mu[j][level] * z[j];
    const double room = (r2 - partial) / gs.bs2[level];
    if (room < 0.0) return true;
    const double halfwidth = std::sqrt(room);
    const double lo_d = std::ceil(center - halfwidth - 1e-9);
    const double hi_d = std::floor(center + halfwidth + 1e-9);
    if (!(lo_d >= -9e15 && hi_d <= 9e15))
      throw std::runtime_error("enumeration: coefficient range exceeds int64");
    for (long long zi = static_cast<long long>(lo_d); zi <= static_cast<long long>(hi_d);
         ++zi) {
      if (++budget.used > budget.max_nodes)
        throw BudgetExhausted("lattice enumeration exceeded its node budget");
      const double diff = static_cast<double>(zi) - center;
      const double s = partial + diff * diff * gs.bs2[level];
      if (s > cap) continue;
      z[level] = zi;
      if (level == 0) {
        if (!visit(std::span<const long long>(z, static_cast<size_t>(d)))) return false;
      } else {
        if (!self(self, level - 1, s)) return false;
      }
    }
    return true;
  };
  walk(walk, d - 1, 0.0);
}

long long extgcd(long long a, long long b, long long& s, long long& t) {
  long long r0 = a, r1 = b, s0 = 1, s1 = 0, t0 = 0, t1 = 1;
  while (r1 != 0) {
    const long long q = r0 / r1;
    std::swap(r0 -= q * r1, r1);
    std::swap(s0 -= q * s1, s1);
    std::swap(t0 -= q * t1, t1);
  }
  if (r0 < 0) {
    r0 = -r0;
    s0 = -s0;
    t0 = -t0;
  }
  s = s0;
  t = t0;
  return r0;
}

}  // namespace

// ====== primitivity and completions ======

bool is_primitive(std::span<const long long> w) {
  long long g = 0;
  for (long long x : w) g = gcd_ll(g, x);
  return g == 1;
}

IMat unimodular_completion(std::span<const long long> v) {
  require(!v.empty(), "unimodular_completion: empty vector");
  require(is_primitive(v), "unimodular_completion: vector is not primitive");
  const int d = static_cast<int>(v.size());
  if (d == 1) return IMat::identity(1);  // v = (1); (-1) is not primitive-completable at det +1
  IMat m = IMat::identity(d);
  std::vector<long long> w(v.begin(), v.end());
  for (int i = 1; i < d; ++i) {
    if (w[i] == 0) continue;
    long long s, t;
    const long long g = extgcd(w[0], w[i], s, t);
    const long long w0g = w[0] / g, wig = w[i] / g;
    // The 2x2 step E = [[s, t], [-wig, w0g]] has det +1 and sends
    // (w0, wi) to (g, 0); accumulate its inverse as a column operation.
    for (int r = 0; r < d; ++r) {
      const long long c0 = m(r, 0), ci = m(r, i);
      m(r, 0) = c0 * w0g + ci * wig;
      m(r, i) = -c0 * t + ci * s;
    }
    w[0] = g;
    w[i] = 0;
  }
  if (w[0] != 1) throw std::logic_error("unimodular_completion: reduction failed");
  for (int r = 0; r < d; ++r)
    if (m(r, 0) != v[r]) throw std::logic_error("unimodular_completion: first column mismatch");
  if (m.det_exact() != 1) throw std::logic_error("unimodular_completion: determinant is not +1");
  return m;
}

std::vector<long long> primitive_lift(std::span<const long long> residues, long long modulus) {
  require(modulus >= 1, "primitive_lift: modulus must be >= 1");
  const int d = static_cast<int>(residues.size());
  require(d >= 1, "primitive_lift: empty residue vector");
  if (modulus == 1) {
    std::vector<long long> e1(d, 0);
    e1[0] = 1;
    return e1;
  }
  std::vector<long long> v(d);
  long long g = modulus;
  for (int i = 0; i < d; ++i) {
    v[i] = ((residues[i] % modulus) + modulus) % modulus;
    g = gcd_ll(g, v[i]);
  }
  require(g == 1, "primitive_lift: gcd(residues, modulus) != 1, class has no primitive vectors");
  if (is_primitive(v)) return v;
  // Bump single coordinates by multiples of N, then pairs; gcd(v, N) = 1
  // guarantees a primitive representative is close by.
  for (long long bump = 1; bump <= 64; ++bump)
    for (int j = 0; j < d; ++j) {
      std::vector<long long> w = v;
      w[j] += bump * modulus;
      if (is_primitive(w)) return w;
    }
  for (long long b1 = 1; b1 <= 8; ++b1)
    for (long long b2 = 1; b2 <= 8; ++b2)
      for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
          std::vector<long long> w = v;
          w[j] += b1 * modulus;
          w[k] += b2 * modulus;
          if (is_primitive(w)) return w;
        }
  throw std::logic_error("primitive_lift: no representative found (unexpected)");
}

IMat class_gamma(std::span<const long long> residues, long long modulus) {
  const std::vector<long long> lift = primitive_lift(residues, modulus);
  return unimodular_completion(lift);
}

// ====== LLL wrappers ======

LLLResult lll_reduce(const Mat& basis, const LLLOptions& opts) {
  require(basis.rows() == basis.cols(), "lll_reduce: basis must be square");
  require(basis.rows() >= 1 && basis.rows() <= kMaxDim, "lll_reduce: dimension out of range");
  LLLResult out{basis, IMat::identity(basis.cols())};
  lll_columns(out.reduced, out.transform, opts.delta, opts.max_rounds);
  return out;
}

LLLIntResult lll_reduce_integer(const IMat& basis, const LLLOptions& opts) {
  require(basis.rows() == basis.cols(), "lll_reduce_integer: basis must be square");
  LLLResult dres = lll_reduce(basis.to_mat(), opts);
  return LLLIntResult{basis * dres.transform, dres.transform};
}

// ====== norms ======

double norm_value(const NormSpec& spec, std::span<const double> x) {
  switch (spec.kind) {
    case Norm::kEuclid: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return std::sqrt(s);
    }
    case Norm::kSup: {
      double s = 0.0;
      for (double v : x) s = std::max(s, std::abs(v));
      return s;
    }
    case Norm::kQuasi:
      require(spec.weights.has_value(), "norm_value: quasi norm needs weights");
      return weighted_vector_norm(x, *spec.weights);
  }
  throw std::logic_error("norm_value: bad norm kind");
}

// ====== CosetFrame ======

namespace {

std::vector<long long> canonical_residues(std::span<const long long> residues,
                                          long long modulus) {
  std::vector<long long> v(residues.begin(), residues.end());
  for (auto& x : v) x = ((x % modulus) + modulus) % modulus;
  long long g = modulus;
  for (long long x : v) g = gcd_ll(g, x);
  require(g == 1 || modulus == 1,
          "congruence class: gcd(residues, modulus) != 1, no primitive vectors");
  return v;
}

}  // namespace

CosetFrame::CosetFrame(const Mat& g, long long modulus, std::vector<long long> residues) {
  require(g.rows() == g.cols(), "CosetFrame: g must be square");
  require(g.rows() >= 2 && g.rows() <= kMaxDim, "CosetFrame: dimension out of range");
  require(modulus >= 1, "CosetFrame: modulus must be >= 1");
  require(static_cast<int>(residues.size()) == g.rows(),
          "CosetFrame: residue dimension mismatch");
  if (std::abs(g.det() - 1.0) > 1e-9)
    throw std::invalid_argument("CosetFrame: determinant must equal 1 (within 1e-9)");
  d_ = g.rows();
  modulus_ = modulus;
  residues_ = canonical_residues(residues, modulus);
  // basis = N g, offset = g v
  basis_ = g;
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) basis_(r, c) *= static_cast<double>(modulus_);
  offset_ = g.apply(std::span<const long long>(residues_));
  unimod_.assign(static_cast<size_t>(d_) * d_, mpz_class(0));
  for (int i = 0; i < d_; ++i) unimod_[static_cast<size_t>(i) * d_ + i] = 1;
  shift_.assign(d_, mpz_class(0));
  w_scratch_.assign(d_, mpz_class(0));
  vec_scratch_.assign(d_, mpz_class(0));
  mat_scratch_.assign(static_cast<size_t>(d_) * d_, mpz_class(0));
  reduce();
}

void CosetFrame::apply_diagonal(std::span<const double> factors) {
  require(static_cast<int>(factors.size()) == d_, "apply_diagonal: size mismatch");
  for (int i = 0; i < d_; ++i) {
    require(factors[i] != 0.0 && std::isfinite(factors[i]),
            "apply_diagonal: factors must be finite and nonzero");
    basis_.scale_row(i, factors[i]);
    offset_[i] *= factors[i];
  }
  reduce();
}

void CosetFrame::reduce() {
  IMat t = IMat::identity(d_);
  lll_columns(basis_, t, 0.99, 200000);
  // unimod <- unimod * t, exactly
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) {
      mpz_class& acc = mat_scratch_[static_cast<size_t>(i) * d_ + j];
      acc = 0;
      for (int k = 0; k < d_; ++k) {
        const long long tkj = t(k, j);
        if (tkj != 0) acc += unimod_[static_cast<size_t>(i) * d_ + k] * static_cast<long>(tkj);
      }
    }
  std::swap(unimod_, mat_scratch_);

  // Nearest-plane reduction of the offset; the shift z0 absorbs the moves.
  GS gs;
  gram_schmidt(basis_, gs);
  long long k[kMaxDim];
  for (int j = d_ - 1; j >= 0; --j) {
    double dot = 0.0;
    for (int r = 0; r < d_; ++r) dot += offset_[r] * gs.bstar[j][r];
    const double coef = dot / gs.bs2[j];
    if (!(std::abs(coef) < 9e15)) throw std::runtime_error("CosetFrame: offset reduction overflow");
    k[j] = std::llround(coef);
    if (k[j] != 0)
      for (int r = 0; r < d_; ++r) offset_[r] -= static_cast<double>(k[j]) * basis_(r, j);
  }
  for (int i = 0; i < d_; ++i) {
    mpz_class& acc = vec_scratch_[i];
    acc = 0;
    for (int j = 0; j < d_; ++j)
      if (k[j] != 0) acc += unimod_[static_cast<size_t>(i) * d_ + j] * static_cast<long>(k[j]);
    shift_[i] -= acc;
  }
}

// Candidate bookkeeping shared by the search entry points.
struct FrameOps {
  // w = residues + N (z0 + U z). Writes into f.w_scratch_.
  static void class_vector(CosetFrame& f, std::span<const long long> z) {
    const int d = f.d_;
    for (int i = 0; i < d; ++i) {
      mpz_class& acc = f.w_scratch_[i];
      acc = f.shift_[i];
      for (int j = 0; j < d; ++j) {
        const long long zj = z[j];
        if (zj != 0) acc += f.unimod_[static_cast<size_t>(i) * d + j] * static_cast<long>(zj);
      }
      acc *= static_cast<long>(f.modulus_);
      acc += static_cast<long>(f.residues_[i]);
    }
  }

  static bool scratch_primitive(CosetFrame& f) {
    mpz_class g = 0;
    for (int i = 0; i < f.d_; ++i) {
      mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), f.w_scratch_[i].get_mpz_t());
      if (g == 1) return true;
    }
    return g == 1;
  }

  static bool lex_less(const std::vector<mpz_class>& a, const std::vector<mpz_class>& b) {
    for (size_t i = 0; i < a.size(); ++i) {
      const int c = cmp(a[i], b[i]);
      if (c < 0) return true;
      if (c > 0) return false;
    }
    return false;
  }

  // Exhaustively visit candidates with norm value <= radius. The callback
  // receives the exact value and the frame coordinates z.
  template <class Cb>
  static void scan(CosetFrame& f, const NormSpec& spec, double radius, EnumBudget& budget,
                   Cb&& cb) {
    require(radius > 0.0 && std::isfinite(radius), "lattice scan: radius must be positive");
    const int d = f.d_;
    Mat scaled = f.basis_;
    std::vector<double> scaled_off = f.offset_;
    double r2;
    if (spec.kind == Norm::kEuclid) {
      const double r = radius * (1.0 + 1e-9);
      r2 = r * r;
    } else {
      // Quasi and sup balls are boxes |x_i| <= h_i; rescale rows so the box
      // becomes the unit cube, then cover it by the sqrt(d) ball.
      double h[kMaxDim];
      if (spec.kind == Norm::kSup) {
        for (int i = 0; i < d; ++i) h[i] = radius;
      } else {
        require(spec.weights.has_value() && spec.weights->dim() == d,
                "lattice scan: quasi norm weights missing or of wrong dimension");
        const WeightPair& wp = *spec.weights;
        for (int i = 0; i < wp.m(); ++i) h[i] = std::pow(radius, wp.alpha[i]);
        for (int j = 0; j < wp.n(); ++j) h[wp.m() + j] = std::pow(radius, wp.beta[j]);
      }
      for (int i = 0; i < d; ++i) {
        scaled.scale_row(i, 1.0 / h[i]);
        scaled_off[i] /= h[i];
      }
      const double r = std::sqrt(static_cast<double>(d)) * (1.0 + 1e-9);
      r2 = r * r;
    }
    GS gs;
    gram_schmidt(scaled, gs);
    double x[kMaxDim];
    enumerate_shifted(scaled, gs, scaled_off, r2, budget,
                      [&](std::span<const long long> z) -> bool {
                        for (int i = 0; i < d; ++i) {
                          double s = f.offset_[i];
                          for (int j = 0; j < d; ++j)
                            s += f.basis_(i, j) * static_cast<double>(z[j]);
                          x[i] = s;
                        }
                        const double value =
                            norm_value(spec, std::span<const double>(x, static_cast<size_t>(d)));
                        // Keep a hair of slack: the caller may re-evaluate the
                        // candidate through a different (bit-exact) route.
                        if (value <= radius * (1.0 + 2e-9)) return cb(value, z);
                        return true;
                      });
  }
};

std::optional<CosetFrame::FrameVec> CosetFrame::min_vector_within(const NormSpec& spec,
                                                                  double radius,
                                                                  EnumBudget& budget,
                                                                  bool inclusive,
                                                                  const ClassEval* eval) {
  bool have = false;
  FrameVec best;
  FrameOps::scan(*this, spec, radius, budget, [&](double value, std::span<const long long> z) {
    if (have && value > best.value * (1.0 + 1e-9)) return true;
    FrameOps::class_vector(*this, z);
    if (!FrameOps::scratch_primitive(*this)) return true;
    double v = value;
    if (eval && *eval) {
      if (const std::optional<double> exact = (*eval)(w_scratch_)) v = *exact;
    }
    if (inclusive ? v > radius : v >= radius) return true;
    if (!have || v < best.value ||
        (v == best.value && FrameOps::lex_less(w_scratch_, best.w))) {
      have = true;
      best.value = v;
      best.w = w_scratch_;
    }
    return true;
  });
  if (!have) return std::nullopt;
  return best;
}

CosetFrame::FrameVec CosetFrame::min_vector(const NormSpec& spec, EnumBudget& budget,
                                            const ClassEval* eval) {
  double r0 = norm_value(spec, offset_);
  if (!(r0 > 0.0)) {
    r0 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d_; ++j) {
      double col[kMaxDim];
      for (int r = 0; r < d_; ++r) col[r] = basis_(r, j);
      r0 = std::min(r0, norm_value(spec, std::span<const double>(col, static_cast<size_t>(d_))));
    }
  }
  double radius = r0 * 1.0000001 + 1e-300;
  for (int attempt = 0; attempt < 80; ++attempt) {
    auto best = min_vector_within(spec, radius, budget, /*inclusive=*/true, eval);
    if (best) return *best;
    radius *= 1.7;
  }
  throw std::runtime_error("CosetFrame::min_vector: search radius exploded (unexpected)");
}

bool CosetFrame::any_below(const NormSpec& spec, double radius, EnumBudget& budget,
                           const ClassEval* eval) {
  bool found = false;
  FrameOps::scan(*this, spec, radius, budget, [&](double value, std::span<const long long> z) {
    FrameOps::class_vector(*this, z);
    if (!FrameOps::scratch_primitive(*this)) return true;
    double v = value;
    if (eval && *eval) {
      if (const std::optional<double> exact = (*eval)(w_scratch_)) v = *exact;
    }
    if (v >= radius) return true;  // membership is strict
    found = true;
    return false;
  });
  return found;
}

// ====== point-level entry points ======

namespace {

void validate_point(const CongruenceClassPoint& pt) {
  require(pt.g.rows() == pt.g.cols(), "point: g must be square");
  require(pt.g.rows() >= 2 && pt.g.rows() <= kMaxDim, "point: dimension out of range");
  require(pt.modulus >= 1, "point: modulus must be >= 1");
  require(static_cast<int>(pt.residues.size()) == pt.g.rows(),
          "point: residue dimension mismatch");
  if (std::abs(pt.g.det() - 1.0) > 1e-9)
    throw std::invalid_argument("point: determinant must equal 1 (within 1e-9)");
}

std::vector<long long> to_int64(const std::vector<mpz_class>& w) {
  std::vector<long long> out(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    if (!w[i].fits_slong_p())
      throw std::overflow_error("lattice: minimizer exceeds int64; use CosetFrame directly");
    out[i] = w[i].get_si();
  }
  return out;
}

}  // namespace

ClassEval exact_norm_eval(const Mat& g, const NormSpec& spec) {
  return [g, spec](const std::vector<mpz_class>& w) -> std::optional<double> {
    std::vector<long long> wi(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
      if (!w[i].fits_slong_p()) return std::nullopt;
      wi[i] = w[i].get_si();
    }
    const std::vector<double> x = g.apply(std::span<const long long>(wi));
    return norm_value(spec, x);
  };
}

std::optional<ShortVector> congruence_short_vector(const CongruenceClassPoint& pt,
                                                   const NormSpec& norm, double radius,
                                                   EnumBudget& budget) {
  validate_point(pt);
  CosetFrame frame(pt.g, pt.modulus, pt.residues);
  const ClassEval eval = exact_norm_eval(pt.g, norm);
  auto best = frame.min_vector_within(norm, radius, budget, /*inclusive=*/false, &eval);
  if (!best) return std::nullopt;
  return ShortVector{to_int64(best->w), best->value};
}

DeltaResult delta_value(const CongruenceClassPoint& pt, EnumBudget& budget) {
  validate_point(pt);
  CosetFrame frame(pt.g, pt.modulus, pt.residues);
  const ClassEval eval = exact_norm_eval(pt.g, NormSpec::sup());
  CosetFrame::FrameVec best = frame.min_vector(NormSpec::sup(), budget, &eval);
  return DeltaResult{-std::log(best.value), to_int64(best.w), best.value};
}

bool in_eps_cusp(const CongruenceClassPoint& pt, double eps, EnumBudget& budget,
                 const NormSpec& norm) {
  validate_point(pt);
  require(eps > 0.0, "in_eps_cusp: eps must be positive");
  CosetFrame frame(pt.g, pt.modulus, pt.residues);
  const ClassEval eval = exact_norm_eval(pt.g, norm);
  return frame.any_below(norm, eps, budget, &eval);
}

}  // namespace diolab
