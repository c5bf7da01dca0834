#include "diolab/numkit.hpp"

#include <gmpxx.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace diolab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

// ====== Mat ======

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::operator*(const Mat& rhs) const {
  require(cols_ == rhs.rows_, "Mat multiply: inner dimensions differ");
  Mat out(rows_, rhs.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < rhs.cols_; ++j) out(i, j) += aik * rhs(k, j);
    }
  return out;
}

std::vector<double> Mat::apply(std::span<const double> x) const {
  require(static_cast<int>(x.size()) == cols_, "Mat apply: size mismatch");
  std::vector<double> y(rows_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> Mat::apply(std::span<const long long> x) const {
  require(static_cast<int>(x.size()) == cols_, "Mat apply: size mismatch");
  std::vector<double> y(rows_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * static_cast<double>(x[j]);
    y[i] = s;
  }
  return y;
}

void Mat::scale_row(int i, double f) {
  for (int j = 0; j < cols_; ++j) (*this)(i, j) *= f;
}

double Mat::det() const {
  require(rows_ == cols_, "det: matrix not square");
  const int n = rows_;
  std::vector<double> a = a_;
  auto at = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
  double sign = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(at(i, k)) > std::abs(at(piv, k))) piv = i;
    if (at(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(at(piv, j), at(k, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = at(i, k) / at(k, k);
      for (int j = k; j < n; ++j) at(i, j) -= f * at(k, j);
    }
  }
  double d = sign;
  for (int k = 0; k < n; ++k) d *= at(k, k);
  return d;
}

// ====== IMat ======

IMat IMat::identity(int n) {
  IMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

IMat IMat::operator*(const IMat& rhs) const {
  if (cols_ != rhs.rows_) throw std::invalid_argument("IMat multiply: inner dimensions differ");
  IMat out(rows_, rhs.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const long long aik = (*this)(i, k);
      if (aik == 0) continue;
      for (int j = 0; j < rhs.cols_; ++j) out(i, j) += aik * rhs(k, j);
    }
  return out;
}

std::vector<long long> IMat::apply(std::span<const long long> x) const {
  if (static_cast<int>(x.size()) != cols_) throw std::invalid_argument("IMat apply: size mismatch");
  std::vector<long long> y(rows_, 0);
  for (int i = 0; i < rows_; ++i) {
    long long s = 0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Mat IMat::to_mat() const {
  Mat m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = static_cast<double>((*this)(i, j));
  return m;
}

long long IMat::det_exact() const {
  if (rows_ != cols_) throw std::invalid_argument("det_exact: matrix not square");
  const int n = rows_;
  // Fraction-free Gaussian elimination over mpz; exact for any input.
  std::vector<mpz_class> a(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[static_cast<size_t>(i) * n + j] = static_cast<long>((*this)(i, j));
  auto at = [&](int i, int j) -> mpz_class& { return a[static_cast<size_t>(i) * n + j]; };
  mpz_class prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (at(k, k) == 0) {
      int piv = -1;
      for (int i = k + 1; i < n; ++i)
        if (at(i, k) != 0) { piv = i; break; }
      if (piv < 0) return 0;
      for (int j = 0; j < n; ++j) std::swap(at(k, j), at(piv, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
      }
    prev = at(k, k);
  }
  mpz_class d = at(n - 1, n - 1) * sign;
  if (!d.fits_slong_p()) throw std::overflow_error("det_exact: determinant exceeds long long");
  return d.get_si();
}

// ====== weights and norms ======

Weight::Weight(std::vector<double> entries) : w_(std::move(entries)) {
  require(!w_.empty(), "Weight: empty entry list");
  double sum = 0.0;
  for (double x : w_) {
    require(x > 0.0, "Weight: entries must be positive");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "Weight: entries must sum to 1");
}

Weight Weight::uniform(int k) {
  require(k >= 1, "Weight: size must be positive");
  return Weight(std::vector<double>(k, 1.0 / k));
}

WeightPair::WeightPair(Weight a, Weight b) : alpha(std::move(a)), beta(std::move(b)) {}

WeightPair WeightPair::uniform(int m, int n) {
  return WeightPair(Weight::uniform(m), Weight::uniform(n));
}

bool WeightPair::equal_weights() const {
  for (int j = 0; j < alpha.size(); ++j)
    if (std::abs(alpha[j] - 1.0 / alpha.size()) > 1e-12) return false;
  for (int j = 0; j < beta.size(); ++j)
    if (std::abs(beta[j] - 1.0 / beta.size()) > 1e-12) return false;
  return true;
}

double WeightPair::max_inverse_weight() const {
  double r = 0.0;
  for (int j = 0; j < alpha.size(); ++j) r = std::max(r, 1.0 / alpha[j]);
  for (int j = 0; j < beta.size(); ++j) r = std::max(r, 1.0 / beta[j]);
  return r;
}

double quasi_norm(std::span<const double> x, const Weight& w) {
  require(static_cast<int>(x.size()) == w.size(), "quasi_norm: size mismatch");
  double best = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    const double v = std::pow(std::abs(x[j]), 1.0 / w[j]);
    if (v > best) best = v;
  }
  return best;
}

double weighted_vector_norm(std::span<const double> v, const WeightPair& wp) {
  require(static_cast<int>(v.size()) == wp.dim(), "weighted_vector_norm: size mismatch");
  const double nx = quasi_norm(v.subspan(0, wp.m()), wp.alpha);
  const double ny = quasi_norm(v.subspan(wp.m(), wp.n()), wp.beta);
  return std::max(nx, ny);
}

// ====== group elements ======

Mat u_matrix(const Mat& theta) {
  const int m = theta.rows();
  const int n = theta.cols();
  require(m >= 1 && n >= 1, "u_matrix: theta must be nonempty");
  Mat u = Mat::identity(m + n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) u(i, m + j) = theta(i, j);
  return u;
}

Mat a_matrix(double t, const WeightPair& wp) {
  if (std::abs(t) * wp.max_inverse_weight() > 700.0)
    throw std::domain_error("a_matrix: time parameter outside the overflow guard");
  Mat a = Mat::identity(wp.dim());
  for (int i = 0; i < wp.m(); ++i) a(i, i) = std::exp(t * wp.alpha[i]);
  for (int j = 0; j < wp.n(); ++j) a(wp.m() + j, wp.m() + j) = std::exp(-t * wp.beta[j]);
  return a;
}

// ====== congruence constraints ======

long long gcd_ll(long long a, long long b) {
  a = std::llabs(a);
  b = std::llabs(b);
  while (b != 0) {
    long long r = a % b;
    a = b;
    b = r;
  }
  return a;
}

long long lcm_ll(long long a, long long b) {
  if (a == 0 || b == 0) return 0;
  return std::llabs(a / gcd_ll(a, b) * b);
}

namespace {

// One class at common modulus N: canonicalize, then divide the residue vector
// by gcd(v, N) until the class contains primitive vectors. A single division
// is not always enough (v = (8) at N = 12 goes to (2) and then to (1)).
std::vector<long long> reduce_class(std::vector<long long> v, long long n) {
  for (auto& x : v) x = ((x % n) + n) % n;
  if (n == 1) return v;  // everything is congruent; v is the zero vector
  for (;;) {
    long long g = n;
    for (long long x : v) g = gcd_ll(g, x);
    if (g == 1) return v;
    bool zero = true;
    for (long long x : v)
      if (x != 0) zero = false;
    if (zero)
      throw std::invalid_argument(
          "normalize_constraints: residue vector is 0 mod N with N > 1; the class "
          "contains no primitive vectors");
    for (auto& x : v) x /= g;
    for (auto& x : v) x = ((x % n) + n) % n;
  }
}

}  // namespace

NormalizedClasses normalize_constraints(std::span<const CongruenceConstraint> cs,
                                        std::span<const WeightPair> weights) {
  require(!cs.empty(), "normalize_constraints: no constraints given");
  require(weights.size() == cs.size() || weights.size() == 1,
          "normalize_constraints: need one weight pair, or one per constraint");
  NormalizedClasses out;
  long long n = 1;
  for (const auto& c : cs) {
    require(!c.moduli.empty() && c.moduli.size() == c.residues.size(),
            "normalize_constraints: moduli/residues size mismatch");
    for (long long q : c.moduli) {
      require(q >= 1, "normalize_constraints: moduli must be >= 1");
      n = lcm_ll(n, q);
    }
  }
  out.modulus = n;
  for (const auto& c : cs) {
    // Lift each coordinate residue to the common modulus (the congruence
    // x = v_j mod q_j is implied by x = v_j mod N since q_j | N).
    std::vector<long long> v(c.residues.begin(), c.residues.end());
    out.residues.push_back(reduce_class(std::move(v), n));
  }
  double r = 0.0;
  for (size_t i = 0; i < cs.size(); ++i) {
    const WeightPair& wp = weights[weights.size() == 1 ? 0 : i];
    require(wp.dim() == static_cast<int>(cs[i].moduli.size()),
            "normalize_constraints: weight dimension differs from constraint dimension");
    r = std::max(r, wp.max_inverse_weight());
  }
  out.r_exponent = r;
  out.eps_scale = std::pow(static_cast<double>(n), r);
  return out;
}

NormalizedClasses normalize_constraints(std::span<const CongruenceConstraint> cs,
                                        int m, int n) {
  std::vector<WeightPair> w;
  w.push_back(WeightPair::uniform(m, n));
  return normalize_constraints(cs, w);
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace diolab
