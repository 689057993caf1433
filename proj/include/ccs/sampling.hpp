#pragma once

#include "ccs/linalg.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace ccs {

/// Seedable generator used by every sampler. Trial t of a run seeded with
/// `base` uses Rng(base + t).
using Rng = std::mt19937_64;

/// Accessor for X(i, j); lets samplers read data that is never held densely.
using EntrySource = std::function<double(Index, Index)>;

struct Observation {
  Index row;
  Index col;
  double value;
  std::uint32_t multiplicity;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// One raw draw before repeats are aggregated.
struct Draw {
  Index row;
  Index col;
  double value;
};

/// Observed positions with repeat counts: P_Omega sums e_i e_j^T once per
/// draw, so a position drawn twice contributes twice to inner products.
///
/// Entries are kept sorted by (row, col) and each position appears once.
class ObservationMultiset {
 public:
  ObservationMultiset() = default;

  /// Validates ranges, uniqueness and multiplicities; sorts the entries.
  ObservationMultiset(Index rows, Index cols, std::vector<Observation> entries);

  /// Aggregates raw draws, summing repeats of the same position.
  static ObservationMultiset from_draws(Index rows, Index cols, std::span<const Draw> draws);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const std::vector<Observation>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::uint64_t total_draws() const { return total_draws_; }

  friend bool operator==(const ObservationMultiset&, const ObservationMultiset&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Observation> entries_;
  std::uint64_t total_draws_ = 0;
};

/// Multiset union: multiplicities of positions present in both are summed.
/// Values must agree where positions coincide.
ObservationMultiset merge(const ObservationMultiset& a, const ObservationMultiset& b);

/// Sum over the multiset of multiplicity * value * y(i, j).
double inner_product(const ObservationMultiset& omega, const Matrix& y);

/// Cross-concentrated sample: selected rows I and columns J, with Omega_R
/// drawn inside I x [cols] and Omega_C inside [rows] x J.
class CrossSample {
 public:
  CrossSample() = default;

  /// Validates that I and J are sorted, distinct and in range and that
  /// every Omega_R row lies in I and every Omega_C column lies in J.
  CrossSample(IndexList rows, IndexList cols, ObservationMultiset omega_r,
              ObservationMultiset omega_c, std::uint64_t row_index_draws = 0,
              std::uint64_t col_index_draws = 0);

  const IndexList& I() const { return rows_; }
  const IndexList& J() const { return cols_; }
  const ObservationMultiset& omega_R() const { return omega_r_; }
  const ObservationMultiset& omega_C() const { return omega_c_; }
  Index rows() const { return omega_r_.rows(); }
  Index cols() const { return omega_r_.cols(); }

  /// Raw with-replacement draw counts behind I and J (equal to |I|, |J|
  /// when the indices were supplied directly).
  std::uint64_t row_index_draws() const { return row_index_draws_; }
  std::uint64_t col_index_draws() const { return col_index_draws_; }

  /// total_draws(Omega_R) / (cols * |I|).
  double p1() const;
  /// total_draws(Omega_C) / (rows * |J|).
  double p2() const;

  friend bool operator==(const CrossSample&, const CrossSample&) = default;

 private:
  IndexList rows_;
  IndexList cols_;
  ObservationMultiset omega_r_;
  ObservationMultiset omega_c_;
  std::uint64_t row_index_draws_ = 0;
  std::uint64_t col_index_draws_ = 0;
};

struct IndexSample {
  IndexList distinct;   // sorted
  std::uint64_t draws;  // raw draws m
};

/// m uniform draws with replacement from [0, n), deduplicated.
/// Rejects m = 0 and m > max(n, n log n).
IndexSample sample_indices(Index n, std::uint64_t m, Rng& rng);

/// Procedure: pick I and J with sample_indices, then draw round(p*cols*|I|)
/// positions uniformly from I x [cols] into Omega_R and round(p*rows*|J|)
/// from [rows] x J into Omega_C.
CrossSample ccs_sample(const Matrix& x, std::uint64_t row_draws, std::uint64_t col_draws,
                       double p, Rng& rng);

CrossSample ccs_sample(Index rows, Index cols, const EntrySource& x, std::uint64_t row_draws,
                       std::uint64_t col_draws, double p, Rng& rng);

/// Cross sample on fixed index sets with explicit draw budgets per side.
CrossSample ccs_sample_on(Index rows, Index cols, const EntrySource& x, IndexList row_idx,
                          IndexList col_idx, std::uint64_t omega_r_draws,
                          std::uint64_t omega_c_draws, Rng& rng);

/// Entries of Omega_R + Omega_C that fall inside I x J.
ObservationMultiset omega_U(const CrossSample& cs);

/// Omega_R + Omega_C as one multiset.
ObservationMultiset omega_union(const CrossSample& cs);

/// P_Omega(y): the multiset's positions and multiplicities with values read from y.
ObservationMultiset apply_sampling_operator(const ObservationMultiset& omega, const Matrix& y);

/// `draws` positions uniform with replacement over the whole matrix.
ObservationMultiset uniform_sample(const Matrix& x, std::uint64_t draws, Rng& rng);
ObservationMultiset uniform_sample(Index rows, Index cols, const EntrySource& x,
                                   std::uint64_t draws, Rng& rng);

/// (total_draws(Omega_R) + total_draws(Omega_C)) / (rows * cols).
double overall_rate(const CrossSample& cs);

}  // namespace ccs
