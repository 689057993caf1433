#include "ccs/metrics.hpp"

#include "ccs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio_or_sentinel(double err, double norm) {
  if (norm == 0.0) return err == 0.0 ? 0.0 : kInf;
  return err / norm;
}

}  // namespace

double relative_error(const Matrix& x, const CURFactors& f) {
  if (x.rows() != f.ambient_rows() || x.cols() != f.ambient_cols()) {
    throw DimensionError("relative_error: shape mismatch");
  }
  const CurEvaluator eval(f);
  double err2 = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    err2 += (x.row(i).transpose() - eval.row(i)).squaredNorm();
  }
  return ratio_or_sentinel(std::sqrt(err2), x.norm());
}

double relative_error(const Matrix& x, const Matrix& estimate) {
  if (x.rows() != estimate.rows() || x.cols() != estimate.cols()) {
    throw DimensionError("relative_error: shape mismatch");
  }
  return ratio_or_sentinel((x - estimate).norm(), x.norm());
}

double snr_db(const Matrix& x, const Matrix& estimate) {
  if (x.rows() != estimate.rows() || x.cols() != estimate.cols()) {
    throw DimensionError("snr_db: shape mismatch");
  }
  const double err = (estimate - x).norm();
  if (err == 0.0) return kInf;
  return 20.0 * std::log10(x.norm() / err);
}

void RatingScale::validate() const {
  if (!(s_max > s_min)) throw ValidationError("rating scale needs s_max > s_min");
  if (!(step > 0.0)) throw ValidationError("rating scale needs a positive step");
}

double RatingScale::quantize(double v) const {
  const double q = s_min + std::floor((v - s_min) / step + 0.5) * step;
  return std::clamp(q, s_min, s_max);
}

double hit_rate(std::span<const ScoredPair> pairs, const RatingScale& scale) {
  scale.validate();
  if (pairs.empty()) throw ValidationError("hit_rate: empty pair list");
  std::size_t hits = 0;
  for (const ScoredPair& p : pairs) {
    if (std::abs(scale.quantize(p.predicted) - p.actual) < 1e-9 * scale.step) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

double nmae(std::span<const ScoredPair> pairs, const RatingScale& scale) {
  scale.validate();
  if (pairs.empty()) throw ValidationError("nmae: empty pair list");
  double acc = 0.0;
  for (const ScoredPair& p : pairs) acc += std::abs(p.predicted - p.actual);
  return acc / (static_cast<double>(pairs.size()) * (scale.s_max - scale.s_min));
}

double precision_at_L(std::span<const ScoredPosition> scores, std::span<const Position> test_set,
                      std::size_t L) {
  if (L < 1) throw ValidationError("precision_at_L: L must be at least 1");
  if (L > scores.size()) throw ValidationError("precision_at_L: L exceeds the candidate count");
  std::vector<ScoredPosition> ranked(scores.begin(), scores.end());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(L), ranked.end(),
                    [](const ScoredPosition& a, const ScoredPosition& b) {
                      return a.score != b.score ? a.score > b.score : a.position < b.position;
                    });
  std::vector<Position> test(test_set.begin(), test_set.end());
  std::sort(test.begin(), test.end());
  std::size_t matched = 0;
  for (std::size_t k = 0; k < L; ++k) {
    if (std::binary_search(test.begin(), test.end(), ranked[k].position)) ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(L);
}

double auc(std::span<const double> missing, std::span<const double> nonexistent, int y, Rng& rng) {
  if (missing.empty() || nonexistent.empty()) throw ValidationError("auc: empty score list");
  if (y < 1) throw ValidationError("auc: y must be at least 1");
  std::uniform_int_distribution<std::size_t> pick_m(0, missing.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_n(0, nonexistent.size() - 1);
  double acc = 0.0;
  for (int k = 0; k < y; ++k) {
    const double a = missing[pick_m(rng)];
    const double b = nonexistent[pick_n(rng)];
    if (a > b) {
      acc += 1.0;
    } else if (a == b) {
      acc += 0.5;
    }
  }
  return acc / y;
}

double auc_exact(std::span<const double> missing, std::span<const double> nonexistent) {
  if (missing.empty() || nonexistent.empty()) throw ValidationError("auc_exact: empty score list");
  std::vector<double> neg(nonexistent.begin(), nonexistent.end());
  std::sort(neg.begin(), neg.end());
  // Doubled counts keep ties exact in integer arithmetic.
  std::uint64_t twice = 0;
  for (double a : missing) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), a);
    const auto hi = std::upper_bound(lo, neg.end(), a);
    twice += 2 * static_cast<std::uint64_t>(lo - neg.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice) /
         (2.0 * static_cast<double>(missing.size()) * static_cast<double>(neg.size()));
}

}  // namespace ccs
