#pragma once

#include "ccs/linalg.hpp"
#include "ccs/sampling.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ccs {

/// |X - C U^+ R|_F / |X|_F, accumulated row by row. A zero X gives 0 for a
/// zero estimate and +inf otherwise.
double relative_error(const Matrix& x, const CURFactors& f);
double relative_error(const Matrix& x, const Matrix& estimate);

/// 20 log10(|X|_F / |X^ - X|_F); +inf when the two coincide.
double snr_db(const Matrix& x, const Matrix& estimate);

struct RatingScale {
  double s_min = 1.0;
  double s_max = 5.0;
  double step = 1.0;

  void validate() const;
  /// Rounds half-up to the nearest step above s_min, then clips to the scale.
  double quantize(double v) const;
};

struct ScoredPair {
  double predicted;
  double actual;
};

/// Fraction of pairs whose quantized prediction equals the actual rating.
double hit_rate(std::span<const ScoredPair> pairs, const RatingScale& scale);

/// sum |P - A| / (|pairs| (s_max - s_min)) on raw predictions.
double nmae(std::span<const ScoredPair> pairs, const RatingScale& scale);

using Position = std::pair<Index, Index>;

struct ScoredPosition {
  Position position;
  double score;
};

/// L_m / L where L_m counts test positions among the L best scores. Ties
/// are broken by ascending position.
double precision_at_L(std::span<const ScoredPosition> scores, std::span<const Position> test_set,
                      std::size_t L);

/// (y_m + 0.5 y_n) / y over y independent (missing, nonexistent) pairs.
double auc(std::span<const double> missing, std::span<const double> nonexistent, int y, Rng& rng);

/// The same statistic over all |missing| x |nonexistent| pairs.
double auc_exact(std::span<const double> missing, std::span<const double> nonexistent);

}  // namespace ccs
