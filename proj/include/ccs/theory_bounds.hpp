#pragma once

#include "ccs/linalg.hpp"
#include "ccs/sampling.hpp"

#include <cstdint>
#include <string>

namespace ccs {

// All logarithms below are natural.

struct IndexCountBound {
  std::uint64_t rows;
  std::uint64_t cols;
  /// Probability bound 4r/n^2 that uniform index selection misses the rank.
  double failure_bound;
};

/// Rows and columns drawn uniformly with replacement so that rank(U) = r
/// with high probability: ceil(10 mu1 r log n) and ceil(10 mu2 r log n).
IndexCountBound theorem2_index_counts(double n, double r, double mu1, double mu2);

struct BoundReport {
  double n = 0;
  double r = 0;
  double mu1 = 0;
  double mu2 = 0;
  double kappa = 0;
  double beta = 0;
  /// 512 beta kappa^2 r^2 mu1 mu2 log^2(n) before rounding up.
  double index_bound = 0;
  /// Counts saturate at UINT64_MAX.
  std::uint64_t required_rows = 0;
  std::uint64_t required_cols = 0;
  std::uint64_t required_omega_R = 0;
  std::uint64_t required_omega_C = 0;
  /// Clamped to [0, 1].
  double success_probability_lower_bound = 0;
  /// The unclamped expression is <= 0, so the guarantee says nothing.
  bool vacuous = false;
};

/// Sufficient sizes for unique recovery from cross-concentrated samples:
///   |I|, |J|     >= 512 beta kappa^2 r^2 mu1 mu2 log^2(n)
///   |Omega_R|    >= 128 beta kappa^2 r^2 mu1 mu2 (n + |I|) log^2(2n)
///   |Omega_C|    >= 128 beta kappa^2 r^2 mu1 mu2 (n + |J|) log^2(2n)
/// holding with probability at least
///   1 - 2r / n^(0.4 r log n) - 2 / n^(2 sqrt(beta) - 2)
///     - sum_i 6 log n / (n + mu_i r^2 log^2 n)^(2 beta - 2).
/// Requires beta > 1.
BoundReport theorem3_bounds(double n, double r, double mu1, double mu2, double kappa, double beta);

/// Flat key=value block, one pair per line.
std::string to_key_value(const BoundReport& report);

struct Lemma1Report {
  int trials = 0;
  Index row_count = 0;
  double mu1 = 0;
  double mu2 = 0;
  double kappa = 0;
  /// row_count >= mu1 r^2 log^2(n) (reported, not enforced).
  bool hypothesis_satisfied = false;
  /// 1 - r / n^(0.4 r log n), clamped to [0, 1].
  double probability_bound = 0;
  int mu1_ok = 0;
  int mu2_ok = 0;
  int kappa_ok = 0;
  int all_ok = 0;

  double satisfaction_fraction() const { return trials == 0 ? 0.0 : double(all_ok) / trials; }
};

/// Samples row_count rows without replacement per trial and counts how
/// often R = X(I, :) satisfies mu1_R <= 4 kappa^2 mu1, mu2_R <= mu2 and
/// kappa_R <= 2 sqrt(mu1 r) kappa.
Lemma1Report lemma1_verify(const Matrix& x, Index r, int trials, Index row_count, Rng& rng);

struct ExactnessCheck {
  bool exact = false;
  Index rank_u = 0;
  double relative_error = 0;
};

/// exact is true iff rank(X(I, J)) = r at the default tolerance and the
/// skeleton C U^+ R reproduces X to 1e-8 relative.
ExactnessCheck cur_exactness_check(const Matrix& x, const IndexList& rows, const IndexList& cols,
                                   Index r);

}  // namespace ccs
