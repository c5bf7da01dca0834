#pragma once

#include <gmpxx.h>

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "diolab/numkit.hpp"

namespace diolab {

// Thrown when an enumeration walks more nodes than its budget allows.
class BudgetExhausted : public std::runtime_error {
 public:
  explicit BudgetExhausted(const char* what) : std::runtime_error(what) {}
};

struct EnumBudget {
  long long max_nodes = 10'000'000;
  long long used = 0;
};

// gcd of all coordinates is 1 (the zero vector is not primitive).
bool is_primitive(std::span<const long long> w);

// Unimodular matrix (det exactly +1) whose first column is v. Built from
// elementary 2x2 gcd steps, each of determinant one. Requires v primitive.
IMat unimodular_completion(std::span<const long long> v);

// Some primitive integer vector congruent to v mod N. Requires gcd(v, N) = 1.
std::vector<long long> primitive_lift(std::span<const long long> residues, long long modulus);

// unimodular_completion(primitive_lift(...)): a lattice element attached to
// the congruence class, with first column in the class.
IMat class_gamma(std::span<const long long> residues, long long modulus);

struct LLLOptions {
  double delta = 0.99;
  int max_rounds = 200000;
};

struct LLLResult {
  Mat reduced;     // basis * transform, columns are the reduced basis
  IMat transform;  // unimodular
};

// Lenstra–Lenstra–Lovász reduction of the columns of `basis`.
LLLResult lll_reduce(const Mat& basis, const LLLOptions& opts = {});

// Exact-integer variant: the reduction is steered in floating point but the
// returned basis is recomputed exactly as basis * transform.
struct LLLIntResult {
  IMat reduced;
  IMat transform;
};
LLLIntResult lll_reduce_integer(const IMat& basis, const LLLOptions& opts = {});

enum class Norm { kEuclid, kSup, kQuasi };

struct NormSpec {
  Norm kind = Norm::kSup;
  std::optional<WeightPair> weights;  // required for kQuasi

  static NormSpec sup() { return {Norm::kSup, std::nullopt}; }
  static NormSpec euclid() { return {Norm::kEuclid, std::nullopt}; }
  static NormSpec quasi(WeightPair wp) { return {Norm::kQuasi, std::move(wp)}; }
};

double norm_value(const NormSpec& spec, std::span<const double> x);

// Optional hook that re-evaluates a candidate class vector from the caller's
// own matrix. When a search receives one, candidate values, tie-breaks and the
// reported minimum all use the hook's result, so they do not depend on the
// internal frame coordinates (two frames for the same point can differ by a
// few ulp). Returning nullopt falls back to the frame's value, e.g. when the
// vector no longer fits machine integers.
using ClassEval = std::function<std::optional<double>(const std::vector<mpz_class>&)>;

// The canonical evaluator: w -> |g w|_norm computed by a plain matrix-vector
// product, bit-identical to an independent evaluation of the same expression.
ClassEval exact_norm_eval(const Mat& g, const NormSpec& spec);

// A point g Gamma_N in the congruence orbit space together with the class of
// lattice vectors it tracks: {w primitive, w = residues mod modulus}.
// The residues must be canonical (in [0, N)) with gcd(residues, N) = 1.
struct CongruenceClassPoint {
  Mat g;
  long long modulus = 1;
  std::vector<long long> residues;
};

struct ShortVector {
  std::vector<long long> w;
  double value = 0.0;
};

struct DeltaResult {
  double delta = 0.0;
  std::vector<long long> w;
  double sup_norm = 0.0;
};

// Smallest class vector with norm value strictly below radius, minimizing
// (value, lex w); nullopt if the open ball holds none.
std::optional<ShortVector> congruence_short_vector(const CongruenceClassPoint& pt,
                                                   const NormSpec& norm, double radius,
                                                   EnumBudget& budget);

// -log of the minimal sup-norm over primitive class vectors.
DeltaResult delta_value(const CongruenceClassPoint& pt, EnumBudget& budget);

// Whether some primitive class vector has image norm strictly below eps (the
// thin-part membership test). The Euclidean default is the exact membership
// characterization; the sup-norm variant matches delta_value thresholds.
bool in_eps_cusp(const CongruenceClassPoint& pt, double eps, EnumBudget& budget,
                 const NormSpec& norm = NormSpec::euclid());

// Movable frame for one congruence class pushed along a diagonal flow.
//
// Invariant: the lattice coset {g w : w = v mod N} equals {C z + c : z in Z^d}
// with C = N g U (LLL-reduced, ordinary doubles), c = g (v + N z0) kept
// short by nearest-plane reduction, and the books U (unimodular) and z0 held
// exactly in arbitrary precision. Multiplying g on the left by a diagonal
// matrix only rescales rows of C and c, so the frame never forms g itself and
// stays well conditioned at times far beyond direct matrix range.
class CosetFrame {
 public:
  CosetFrame(const Mat& g, long long modulus, std::vector<long long> residues);

  int dim() const { return d_; }
  long long modulus() const { return modulus_; }

  // g <- diag(factors) g.
  void apply_diagonal(std::span<const double> factors);

  struct FrameVec {
    double value = 0.0;
    std::vector<mpz_class> w;
  };

  // Minimal primitive class vector in the given norm; grows the search radius
  // until one is certified. Ties broken lexicographically on w.
  FrameVec min_vector(const NormSpec& spec, EnumBudget& budget,
                      const ClassEval* eval = nullptr);
  // Same but confined to the ball (value <= radius, or < radius when
  // inclusive is false); nullopt when the ball is empty.
  std::optional<FrameVec> min_vector_within(const NormSpec& spec, double radius,
                                            EnumBudget& budget, bool inclusive = true,
                                            const ClassEval* eval = nullptr);
  // True when some primitive class vector has value < radius (early exit).
  bool any_below(const NormSpec& spec, double radius, EnumBudget& budget,
                 const ClassEval* eval = nullptr);

 private:
  friend struct FrameOps;

  int d_ = 0;
  long long modulus_ = 1;
  std::vector<long long> residues_;
  Mat basis_;                    // C = N g U, LLL-reduced columns
  std::vector<double> offset_;   // c = g (v + N z0), nearest-plane reduced
  std::vector<mpz_class> unimod_;  // U, row major d x d
  std::vector<mpz_class> shift_;   // z0
  // scratch (frames are single-thread objects)
  std::vector<mpz_class> w_scratch_, vec_scratch_, mat_scratch_;

  void reduce();  // re-run LLL + nearest-plane after a diagonal move
};

}  // namespace diolab
