#include "ccs/sampling.hpp"

#include "ccs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccs {

namespace {

bool position_less(const Observation& a, const Observation& b) {
  return a.row != b.row ? a.row < b.row : a.col < b.col;
}

bool is_sorted_distinct(const IndexList& idx, Index bound) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= bound) return false;
    if (k > 0 && idx[k] <= idx[k - 1]) return false;
  }
  return true;
}

bool contains(const IndexList& sorted, Index v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

std::uint64_t budget(double p, Index cells_per_index, std::size_t index_count) {
  const double want = p * static_cast<double>(cells_per_index) * static_cast<double>(index_count);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(want)));
}

}  // namespace

ObservationMultiset::ObservationMultiset(Index rows, Index cols, std::vector<Observation> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows < 1 || cols < 1) throw DimensionError("observation multiset needs positive dimensions");
  std::sort(entries_.begin(), entries_.end(), position_less);
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const Observation& e = entries_[k];
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw DimensionError("observation (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                           ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (e.multiplicity == 0) throw ValidationError("observation with zero multiplicity");
    if (!std::isfinite(e.value)) throw NonFiniteError("observation value is not finite");
    if (k > 0 && !position_less(entries_[k - 1], e)) {
      throw ValidationError("duplicate observation position (" + std::to_string(e.row) + "," +
                            std::to_string(e.col) + ")");
    }
    total_draws_ += e.multiplicity;
  }
}

ObservationMultiset ObservationMultiset::from_draws(Index rows, Index cols,
                                                    std::span<const Draw> draws) {
  std::vector<Observation> raw;
  raw.reserve(draws.size());
  for (const Draw& d : draws) raw.push_back({d.row, d.col, d.value, 1});
  std::stable_sort(raw.begin(), raw.end(), position_less);
  std::vector<Observation> merged;
  merged.reserve(raw.size());
  for (const Observation& o : raw) {
    if (!merged.empty() && merged.back().row == o.row && merged.back().col == o.col) {
      ++merged.back().multiplicity;
    } else {
      merged.push_back(o);
    }
  }
  return ObservationMultiset(rows, cols, std::move(merged));
}

ObservationMultiset merge(const ObservationMultiset& a, const ObservationMultiset& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("merge: multisets over different ambient shapes");
  }
  std::vector<Observation> out;
  out.reserve(a.size() + b.size());
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  while (ia != a.entries().end() || ib != b.entries().end()) {
    if (ib == b.entries().end() || (ia != a.entries().end() && position_less(*ia, *ib))) {
      out.push_back(*ia++);
    } else if (ia == a.entries().end() || position_less(*ib, *ia)) {
      out.push_back(*ib++);
    } else {
      if (ia->value != ib->value) throw ValidationError("merge: conflicting values at a position");
      Observation o = *ia++;
      o.multiplicity += (ib++)->multiplicity;
      out.push_back(o);
    }
  }
  return ObservationMultiset(a.rows(), a.cols(), std::move(out));
}

double inner_product(const ObservationMultiset& omega, const Matrix& y) {
  if (y.rows() != omega.rows() || y.cols() != omega.cols()) {
    throw DimensionError("inner_product: shape mismatch");
  }
  double acc = 0.0;
  for (const Observation& e : omega.entries()) acc += e.multiplicity * e.value * y(e.row, e.col);
  return acc;
}

CrossSample::CrossSample(IndexList rows, IndexList cols, ObservationMultiset omega_r,
                         ObservationMultiset omega_c, std::uint64_t row_index_draws,
                         std::uint64_t col_index_draws)
    : rows_(std::move(rows)),
      cols_(std::move(cols)),
      omega_r_(std::move(omega_r)),
      omega_c_(std::move(omega_c)),
      row_index_draws_(row_index_draws == 0 ? rows_.size() : row_index_draws),
      col_index_draws_(col_index_draws == 0 ? cols_.size() : col_index_draws) {
  if (omega_r_.rows() != omega_c_.rows() || omega_r_.cols() != omega_c_.cols()) {
    throw DimensionError("cross sample: Omega_R and Omega_C have different ambient shapes");
  }
  if (rows_.empty() || cols_.empty()) throw ValidationError("cross sample: empty I or J");
  if (!is_sorted_distinct(rows_, omega_r_.rows()) || !is_sorted_distinct(cols_, omega_r_.cols())) {
    throw ValidationError("cross sample: I and J must be sorted, distinct and in range");
  }
  if (omega_r_.empty() || omega_c_.empty()) {
    throw ValidationError("cross sample: Omega_R and Omega_C need at least one draw each");
  }
  for (const Observation& e : omega_r_.entries()) {
    if (!contains(rows_, e.row)) throw ValidationError("cross sample: Omega_R entry outside I");
  }
  for (const Observation& e : omega_c_.entries()) {
    if (!contains(cols_, e.col)) throw ValidationError("cross sample: Omega_C entry outside J");
  }
}

double CrossSample::p1() const {
  return static_cast<double>(omega_r_.total_draws()) /
         (static_cast<double>(cols()) * static_cast<double>(rows_.size()));
}

double CrossSample::p2() const {
  return static_cast<double>(omega_c_.total_draws()) /
         (static_cast<double>(rows()) * static_cast<double>(cols_.size()));
}

IndexSample sample_indices(Index n, std::uint64_t m, Rng& rng) {
  if (n < 1) throw ValidationError("sample_indices: n must be positive");
  const double nd = static_cast<double>(n);
  if (m == 0 || static_cast<double>(m) > std::max(nd, nd * std::log(nd))) {
    throw ValidationError("sample_indices: draw count " + std::to_string(m) +
                          " outside [1, max(n, n log n)] for n=" + std::to_string(n));
  }
  std::uniform_int_distribution<Index> pick(0, n - 1);
  IndexList idx(m);
  for (auto& v : idx) v = pick(rng);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return IndexSample{std::move(idx), m};
}

namespace {

CrossSample draw_cross(Index rows, Index cols, const EntrySource& x, IndexList row_idx,
                       IndexList col_idx, std::uint64_t omega_r_draws, std::uint64_t omega_c_draws,
                       Rng& rng, std::uint64_t row_index_draws, std::uint64_t col_index_draws) {
  if (row_idx.empty() || col_idx.empty()) throw ValidationError("ccs_sample: empty I or J");
  std::uniform_int_distribution<std::size_t> pick_i(0, row_idx.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_j(0, col_idx.size() - 1);
  std::uniform_int_distribution<Index> any_row(0, rows - 1);
  std::uniform_int_distribution<Index> any_col(0, cols - 1);

  std::vector<Draw> draws;
  draws.reserve(omega_r_draws);
  for (std::uint64_t k = 0; k < omega_r_draws; ++k) {
    const Index i = row_idx[pick_i(rng)];
    const Index j = any_col(rng);
    draws.push_back({i, j, x(i, j)});
  }
  ObservationMultiset omega_r = ObservationMultiset::from_draws(rows, cols, draws);

  draws.clear();
  draws.reserve(omega_c_draws);
  for (std::uint64_t k = 0; k < omega_c_draws; ++k) {
    const Index i = any_row(rng);
    const Index j = col_idx[pick_j(rng)];
    draws.push_back({i, j, x(i, j)});
  }
  ObservationMultiset omega_c = ObservationMultiset::from_draws(rows, cols, draws);
  return CrossSample(std::move(row_idx), std::move(col_idx), std::move(omega_r),
                     std::move(omega_c), row_index_draws, col_index_draws);
}

}  // namespace

CrossSample ccs_sample_on(Index rows, Index cols, const EntrySource& x, IndexList row_idx,
                          IndexList col_idx, std::uint64_t omega_r_draws,
                          std::uint64_t omega_c_draws, Rng& rng) {
  return draw_cross(rows, cols, x, std::move(row_idx), std::move(col_idx), omega_r_draws,
                    omega_c_draws, rng, 0, 0);
}

CrossSample ccs_sample(Index rows, Index cols, const EntrySource& x, std::uint64_t row_draws,
                       std::uint64_t col_draws, double p, Rng& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("ccs_sample: p must lie in (0, 1]");
  IndexSample is = sample_indices(rows, row_draws, rng);
  IndexSample js = sample_indices(cols, col_draws, rng);
  const std::uint64_t nr = budget(p, cols, is.distinct.size());
  const std::uint64_t nc = budget(p, rows, js.distinct.size());
  return draw_cross(rows, cols, x, std::move(is.distinct), std::move(js.distinct), nr, nc, rng,
                    is.draws, js.draws);
}

CrossSample ccs_sample(const Matrix& x, std::uint64_t row_draws, std::uint64_t col_draws, double p,
                       Rng& rng) {
  require_finite(x, "ccs_sample input");
  return ccs_sample(
      x.rows(), x.cols(), [&x](Index i, Index j) { return x(i, j); }, row_draws, col_draws, p, rng);
}

ObservationMultiset omega_union(const CrossSample& cs) { return merge(cs.omega_R(), cs.omega_C()); }

ObservationMultiset omega_U(const CrossSample& cs) {
  const ObservationMultiset all = omega_union(cs);
  std::vector<Observation> inside;
  for (const Observation& e : all.entries()) {
    if (contains(cs.I(), e.row) && contains(cs.J(), e.col)) inside.push_back(e);
  }
  return ObservationMultiset(cs.rows(), cs.cols(), std::move(inside));
}

ObservationMultiset apply_sampling_operator(const ObservationMultiset& omega, const Matrix& y) {
  if (y.rows() != omega.rows() || y.cols() != omega.cols()) {
    throw DimensionError("apply_sampling_operator: shape mismatch");
  }
  std::vector<Observation> out = omega.entries();
  for (Observation& e : out) e.value = y(e.row, e.col);
  return ObservationMultiset(omega.rows(), omega.cols(), std::move(out));
}

ObservationMultiset uniform_sample(Index rows, Index cols, const EntrySource& x,
                                   std::uint64_t draws, Rng& rng) {
  if (draws < 1) throw ValidationError("uniform_sample: need at least one draw");
  std::uniform_int_distribution<Index> any_row(0, rows - 1);
  std::uniform_int_distribution<Index> any_col(0, cols - 1);
  std::vector<Draw> raw;
  raw.reserve(draws);
  for (std::uint64_t k = 0; k < draws; ++k) {
    const Index i = any_row(rng);
    const Index j = any_col(rng);
    raw.push_back({i, j, x(i, j)});
  }
  return ObservationMultiset::from_draws(rows, cols, raw);
}

ObservationMultiset uniform_sample(const Matrix& x, std::uint64_t draws, Rng& rng) {
  require_finite(x, "uniform_sample input");
  return uniform_sample(
      x.rows(), x.cols(), [&x](Index i, Index j) { return x(i, j); }, draws, rng);
}

double overall_rate(const CrossSample& cs) {
  return static_cast<double>(cs.omega_R().total_draws() + cs.omega_C().total_draws()) /
         (static_cast<double>(cs.rows()) * static_cast<double>(cs.cols()));
}

}  // namespace ccs
