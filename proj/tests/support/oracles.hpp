#pragma once

// Reference implementations that share no code paths with the library
// beyond its data types.

#include "ccs/linalg.hpp"
#include "ccs/metrics.hpp"
#include "ccs/sampling.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using ccs::Index;
using ccs::IndexList;
using ccs::Matrix;

// Singular values from the eigenvalues of A^T A (or A A^T), descending.
inline Eigen::VectorXd singular_values(const Matrix& a) {
  const Matrix g = a.cols() <= a.rows() ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  return ev;
}

// Best rank-r approximation through the eigenvectors of A^T A.
inline Matrix truncate(const Matrix& a, Index r) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a);
  // Eigenvalues ascend; the last r columns span the top right singular space.
  const Matrix v = es.eigenvectors().rightCols(r);
  return a * v * v.transpose();
}

inline Matrix pinv(const Matrix& a) {
  return Eigen::CompleteOrthogonalDecomposition<Matrix>(a).pseudoInverse();
}

inline Matrix block(const Matrix& a, const IndexList& rows, const IndexList& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(Index(i), Index(j)) = a(rows[i], cols[j]);
  }
  return out;
}

// Dense ICURC: every iterate X_k is held as a full matrix.
struct DenseIcurc {
  const ccs::CrossSample& cs;
  Index rank;
  double eta_r;
  double eta_c;
  double eta_u;

  Matrix step(const Matrix& xk) const {
    const Index m = cs.rows();
    const Index n = cs.cols();
    Matrix gr = Matrix::Zero(m, n);
    Matrix gc = Matrix::Zero(m, n);
    for (const auto& e : cs.omega_R().entries()) {
      gr(e.row, e.col) += e.multiplicity * (e.value - xk(e.row, e.col));
    }
    for (const auto& e : cs.omega_C().entries()) {
      gc(e.row, e.col) += e.multiplicity * (e.value - xk(e.row, e.col));
    }
    std::vector<bool> in_i(std::size_t(m), false);
    std::vector<bool> in_j(std::size_t(n), false);
    for (Index i : cs.I()) in_i[std::size_t(i)] = true;
    for (Index j : cs.J()) in_j[std::size_t(j)] = true;

    Matrix full = xk;
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (in_i[std::size_t(i)] && !in_j[std::size_t(j)]) full(i, j) += eta_r * gr(i, j);
        if (!in_i[std::size_t(i)] && in_j[std::size_t(j)]) full(i, j) += eta_c * gc(i, j);
        if (in_i[std::size_t(i)] && in_j[std::size_t(j)]) {
          full(i, j) += eta_u * (gr(i, j) + gc(i, j));
        }
      }
    }
    IndexList all_rows(static_cast<std::size_t>(m));
    IndexList all_cols(static_cast<std::size_t>(n));
    for (Index i = 0; i < m; ++i) all_rows[std::size_t(i)] = i;
    for (Index j = 0; j < n; ++j) all_cols[std::size_t(j)] = j;

    const Matrix u = truncate(block(full, cs.I(), cs.J()), rank);
    Matrix c = block(full, all_rows, cs.J());
    Matrix r = block(full, cs.I(), all_cols);
    for (std::size_t a = 0; a < cs.I().size(); ++a) c.row(cs.I()[a]) = u.row(Index(a));
    for (std::size_t b = 0; b < cs.J().size(); ++b) r.col(cs.J()[b]) = u.col(Index(b));
    return c * pinv(u) * r;
  }

  double residual(const Matrix& xk) const {
    double num = 0.0;
    double den = 0.0;
    for (const auto* om : {&cs.omega_R(), &cs.omega_C()}) {
      for (const auto& e : om->entries()) {
        num += e.multiplicity * (e.value - xk(e.row, e.col)) * (e.value - xk(e.row, e.col));
        den += e.multiplicity * e.value * e.value;
      }
    }
    return den == 0.0 ? 0.0 : num / den;
  }
};

// Metrics by enumeration.

inline double hit_rate(const std::vector<ccs::ScoredPair>& pairs, double s_min, double s_max,
                       double step) {
  std::size_t hits = 0;
  for (const auto& p : pairs) {
    // Candidate levels s_min + k step; pick the nearest, upper on ties, then clip.
    double best = s_min;
    double best_d = std::abs(p.predicted - s_min);
    for (double level = s_min; level <= s_max + 1e-12; level += step) {
      const double d = std::abs(p.predicted - level);
      if (d < best_d - 1e-12 || std::abs(d - best_d) <= 1e-12) {
        best = level;
        best_d = d;
      }
    }
    if (p.predicted > s_max) best = s_max;
    if (p.predicted < s_min) best = s_min;
    hits += std::abs(best - p.actual) < 1e-9;
  }
  return double(hits) / double(pairs.size());
}

inline double nmae(const std::vector<ccs::ScoredPair>& pairs, double s_min, double s_max) {
  double acc = 0.0;
  for (const auto& p : pairs) acc += std::abs(p.predicted - p.actual) / (s_max - s_min);
  return acc / double(pairs.size());
}

inline double precision_at_L(std::vector<ccs::ScoredPosition> scores,
                             const std::vector<ccs::Position>& test, std::size_t L) {
  std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.position < b.position;
  });
  std::size_t hits = 0;
  for (std::size_t k = 0; k < L; ++k) {
    hits += std::find(test.begin(), test.end(), scores[k].position) != test.end();
  }
  return double(hits) / double(L);
}

inline double auc_pairs(const std::vector<double>& missing, const std::vector<double>& nonexistent) {
  double acc = 0.0;
  for (double a : missing) {
    for (double b : nonexistent) acc += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return acc / (double(missing.size()) * double(nonexistent.size()));
}

}  // namespace oracle
