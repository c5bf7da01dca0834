#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace diolab {

// Small dense double matrix, row major. Everything in this project is
// desk scale (d <= 8), so the representation is deliberately plain.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}
  static Mat identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  Mat operator*(const Mat& rhs) const;
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply(std::span<const long long> x) const;
  void scale_row(int i, double f);

  // Determinant by LU with partial pivoting. Square matrices only.
  double det() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

// Integer matrix (unimodular transforms, congruence class representatives).
class IMat {
 public:
  IMat() = default;
  IMat(int rows, int cols)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0) {}
  static IMat identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long long& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  long long operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  IMat operator*(const IMat& rhs) const;
  std::vector<long long> apply(std::span<const long long> x) const;
  Mat to_mat() const;

  // Exact determinant (computed in arbitrary precision internally).
  long long det_exact() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<long long> a_;
};

// Probability vector with positive entries. Defines the quasi-norm
// ||x||_w = max_j |x_j|^(1/w_j) and the exponents of the diagonal flow.
class Weight {
 public:
  explicit Weight(std::vector<double> entries);
  static Weight uniform(int k);

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int j) const { return w_[j]; }
  std::span<const double> entries() const { return w_; }

 private:
  std::vector<double> w_;
};

// The pair (alpha, beta) splitting R^d = R^m x R^n.
struct WeightPair {
  Weight alpha;
  Weight beta;

  WeightPair(Weight a, Weight b);
  static WeightPair uniform(int m, int n);

  int m() const { return alpha.size(); }
  int n() const { return beta.size(); }
  int dim() const { return alpha.size() + beta.size(); }
  bool equal_weights() const;
  // Largest inverse weight over both blocks.
  double max_inverse_weight() const;
};

// max_j |x_j|^(1/w_j); zero exactly when x is the zero vector.
double quasi_norm(std::span<const double> x, const Weight& w);

// max(||x||_alpha, ||y||_beta) for v = (x, y) split as m + n coordinates.
double weighted_vector_norm(std::span<const double> v, const WeightPair& wp);

// Block unipotent matrix [[I_m, theta], [0, I_n]]. Determinant is exactly 1.
Mat u_matrix(const Mat& theta);

// diag(e^{t a_1}, ..., e^{t a_m}, e^{-t b_1}, ..., e^{-t b_n}).
// Rejects t outside the overflow guard |t| * max(1/a_j, 1/b_j) <= 700.
Mat a_matrix(double t, const WeightPair& wp);

// Coordinate-wise congruence condition: moduli N (one per coordinate) and
// residues v. Normalization brings a whole family of these to one modulus.
struct CongruenceConstraint {
  std::vector<long long> moduli;
  std::vector<long long> residues;
};

struct NormalizedClasses {
  long long modulus = 1;  // common N (lcm of all input moduli)
  std::vector<std::vector<long long>> residues;  // canonical, in [0, N)
  double r_exponent = 1.0;  // max over classes and coordinates of 1/alpha, 1/beta
  double eps_scale = 1.0;   // N^r, the shrink factor owed by the reduction
};

// Bring all constraints to the single modulus N = lcm of the inputs, reduce
// each residue vector by gcd(v, N) until gcd(v', N) = 1 so the class contains
// primitive vectors, and report the eps shrink factor N^r.
// Throws if some class is empty (v = 0 mod N with N > 1).
NormalizedClasses normalize_constraints(std::span<const CongruenceConstraint> cs,
                                        std::span<const WeightPair> weights);
// Same with uniform weights for the given split.
NormalizedClasses normalize_constraints(std::span<const CongruenceConstraint> cs,
                                        int m, int n);

long long gcd_ll(long long a, long long b);
long long lcm_ll(long long a, long long b);

// Sum by recursive halving: deterministic for a fixed element order and far
// less rounding drift than a running sum on long series.
double pairwise_sum(std::span<const double> xs);

}  // namespace diolab
