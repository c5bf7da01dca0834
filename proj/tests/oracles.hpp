#pragma once

// Brute-force reference implementations the tests pin library results
// against. Everything here recomputes from first principles with plain
// loops over an explicit integer box; nothing touches the incremental
// frame machinery it is checking. Arithmetic is written in the same
// elementary expression order as the library's direct evaluation route,
// so agreement is expected bit for bit, not merely within tolerance.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "diolab/lattice.hpp"
#include "diolab/numkit.hpp"
#include "diolab/rng.hpp"

namespace oracle {

// y = g w computed row by row, accumulating left to right.
inline std::vector<double> matvec(const diolab::Mat& g, std::span<const long long> w) {
  std::vector<double> y(static_cast<size_t>(g.rows()), 0.0);
  for (int i = 0; i < g.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < g.cols(); ++j) s += g(i, j) * static_cast<double>(w[j]);
    y[static_cast<size_t>(i)] = s;
  }
  return y;
}

inline double sup_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

inline double euclid_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double quasi(std::span<const double> x, const diolab::Weight& w) {
  double best = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    const double v = std::pow(std::abs(x[static_cast<size_t>(j)]), 1.0 / w[j]);
    if (v > best) best = v;
  }
  return best;
}

inline double norm(const diolab::NormSpec& spec, std::span<const double> x) {
  switch (spec.kind) {
    case diolab::Norm::kEuclid:
      return euclid_norm(x);
    case diolab::Norm::kSup:
      return sup_norm(x);
    case diolab::Norm::kQuasi: {
      const diolab::WeightPair& wp = *spec.weights;
      const double a = quasi(x.subspan(0, static_cast<size_t>(wp.m())), wp.alpha);
      const double b = quasi(x.subspan(static_cast<size_t>(wp.m())), wp.beta);
      return std::max(a, b);
    }
  }
  std::abort();
}

inline bool primitive(std::span<const long long> w) {
  long long g = 0;
  for (long long v : w) g = std::gcd(g, std::llabs(v));
  return g == 1;
}

inline bool lex_less(std::span<const long long> a, std::span<const long long> b) {
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

struct BoxMin {
  double value = 0.0;
  std::vector<long long> w;
};

// Minimum of ||g w|| over primitive w = residues + N z, z in [-zbox, zbox]^d,
// tie-broken toward the lexicographically smaller w. With strict_radius set,
// only candidates with value < strict_radius qualify.
inline std::optional<BoxMin> class_box_min(const diolab::Mat& g, const diolab::NormSpec& spec,
                                           long long modulus,
                                           std::span<const long long> residues, long long zbox,
                                           std::optional<double> strict_radius = std::nullopt) {
  const int d = g.rows();
  std::vector<long long> z(static_cast<size_t>(d), -zbox);
  std::vector<long long> w(static_cast<size_t>(d));
  std::optional<BoxMin> best;
  for (;;) {
    for (int i = 0; i < d; ++i) w[static_cast<size_t>(i)] = residues[static_cast<size_t>(i)] + modulus * z[static_cast<size_t>(i)];
    if (primitive(w)) {
      const double value = norm(spec, matvec(g, w));
      const bool admissible = !strict_radius || value < *strict_radius;
      if (admissible) {
        if (!best || value < best->value ||
            (value == best->value && lex_less(w, best->w))) {
          best = BoxMin{value, w};
        }
      }
    }
    int i = 0;
    while (i < d && z[static_cast<size_t>(i)] == zbox) {
      z[static_cast<size_t>(i)] = -zbox;
      ++i;
    }
    if (i == d) break;
    ++z[static_cast<size_t>(i)];
  }
  return best;
}

// ====== deterministic instance generators for the randomized suites ======

// det-1 integer matrix built from a few unit shears; coefficients stay small
// so the inverse is equally tame.
inline diolab::IMat random_unimodular(diolab::CounterRng& rng, int d, int shears,
                                      long long coeff_range) {
  diolab::IMat g = diolab::IMat::identity(d);
  for (int s = 0; s < shears; ++s) {
    const int i = static_cast<int>(rng.next() % static_cast<std::uint64_t>(d));
    int j = static_cast<int>(rng.next() % static_cast<std::uint64_t>(d - 1));
    if (j >= i) ++j;
    const long long c = static_cast<long long>(rng.next() % (2 * coeff_range + 1)) - coeff_range;
    for (int k = 0; k < d; ++k) g(i, k) += c * g(j, k);
  }
  return g;
}

inline std::vector<long long> gamma_e1_residues(const diolab::IMat& gamma, long long modulus) {
  std::vector<long long> r(static_cast<size_t>(gamma.rows()));
  for (int i = 0; i < gamma.rows(); ++i) {
    long long v = gamma(i, 0) % modulus;
    if (v < 0) v += modulus;
    r[static_cast<size_t>(i)] = v;
  }
  return r;
}

}  // namespace oracle
