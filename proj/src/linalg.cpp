#include "ccs/linalg.hpp"

#include "ccs/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace ccs {

namespace {

using Svd = Eigen::BDCSVD<Matrix>;

Svd thin_svd(const Matrix& a) { return Svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV); }

LowRankFactors leading_factors(const Svd& svd, Index k) {
  return LowRankFactors{svd.matrixU().leftCols(k), svd.singularValues().head(k),
                        svd.matrixV().leftCols(k)};
}

std::string shape(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace

void require_finite(const Matrix& a, std::string_view what) {
  if (!a.allFinite()) {
    throw NonFiniteError(std::string(what) + " contains non-finite values");
  }
}

Matrix LowRankFactors::dense() const { return W * S.asDiagonal() * V.transpose(); }

LowRankFactors truncated_svd(const Matrix& a, Index r) {
  require_finite(a, "truncated_svd input");
  if (r < 1 || r > std::min(a.rows(), a.cols())) {
    throw DimensionError("truncated_svd: rank " + std::to_string(r) + " invalid for " + shape(a));
  }
  return leading_factors(thin_svd(a), r);
}

Vector singular_values(const Matrix& a) {
  require_finite(a, "singular_values input");
  if (a.size() == 0) return Vector();
  return Svd(a).singularValues();
}

double default_rank_tolerance(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Vector s = singular_values(a);
  return static_cast<double>(std::max(a.rows(), a.cols())) *
         std::numeric_limits<double>::epsilon() * s(0);
}

LowRankFactors compact_svd(const Matrix& a, double rank_tol) {
  require_finite(a, "compact_svd input");
  if (rank_tol < 0.0) throw ValidationError("compact_svd: negative rank tolerance");
  if (a.size() == 0) return LowRankFactors{Matrix(a.rows(), 0), Vector(), Matrix(a.cols(), 0)};
  const Svd svd = thin_svd(a);
  const Vector& s = svd.singularValues();
  const double tol =
      rank_tol > 0.0 ? rank_tol
                     : static_cast<double>(std::max(a.rows(), a.cols())) *
                           std::numeric_limits<double>::epsilon() * s(0);
  Index k = 0;
  while (k < s.size() && s(k) > tol) ++k;
  return leading_factors(svd, k);
}

Index numerical_rank(const Matrix& a, double rank_tol) { return compact_svd(a, rank_tol).rank(); }

Matrix pseudo_inverse(const LowRankFactors& compact) {
  return compact.V * compact.S.cwiseInverse().asDiagonal() * compact.W.transpose();
}

Matrix pseudo_inverse(const Matrix& a, double rank_tol) {
  return pseudo_inverse(compact_svd(a, rank_tol));
}

Matrix submatrix(const Matrix& a, std::span<const Index> rows, std::span<const Index> cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index b = 0; b < out.cols(); ++b) {
    for (Index i = 0; i < out.rows(); ++i) out(i, b) = a(rows[i], cols[b]);
  }
  return out;
}

Matrix select_rows(const Matrix& a, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = a.row(rows[i]);
  return out;
}

Matrix select_cols(const Matrix& a, std::span<const Index> cols) {
  Matrix out(a.rows(), static_cast<Index>(cols.size()));
  for (Index b = 0; b < out.cols(); ++b) out.col(b) = a.col(cols[b]);
  return out;
}

CURFactors CURFactors::from_matrix(const Matrix& x, IndexList rows, IndexList cols) {
  require_finite(x, "CUR source matrix");
  for (Index i : rows) {
    if (i < 0 || i >= x.rows()) throw DimensionError("CUR row index out of range");
  }
  for (Index j : cols) {
    if (j < 0 || j >= x.cols()) throw DimensionError("CUR column index out of range");
  }
  Matrix c = select_cols(x, cols);
  Matrix r = select_rows(x, rows);
  Matrix u = submatrix(x, rows, cols);
  return from_blocks(std::move(c), std::move(u), std::move(r), std::move(rows), std::move(cols));
}

CURFactors CURFactors::from_blocks(Matrix c, Matrix u, Matrix r, IndexList rows, IndexList cols) {
  LowRankFactors compact = compact_svd(u);
  return from_blocks(std::move(c), std::move(u), std::move(r), std::move(rows), std::move(cols),
                     std::move(compact));
}

CURFactors CURFactors::from_blocks(Matrix c, Matrix u, Matrix r, IndexList rows, IndexList cols,
                                   LowRankFactors u_compact) {
  const auto ni = static_cast<Index>(rows.size());
  const auto nj = static_cast<Index>(cols.size());
  if (u.rows() != ni || u.cols() != nj || c.cols() != nj || r.rows() != ni) {
    throw DimensionError("CUR blocks inconsistent: C " + shape(c) + ", U " + shape(u) + ", R " +
                         shape(r));
  }
  if (u_compact.rows() != ni || u_compact.cols() != nj) {
    throw DimensionError("CUR: factors of U have the wrong shape");
  }
  CURFactors f;
  f.upinv_ = pseudo_inverse(u_compact);
  f.c_ = std::move(c);
  f.u_ = std::move(u);
  f.r_ = std::move(r);
  f.rows_ = std::move(rows);
  f.cols_ = std::move(cols);
  f.u_compact_ = std::move(u_compact);
  return f;
}

CURFactors CURFactors::zeros(Index rows, Index cols, IndexList row_idx, IndexList col_idx) {
  const auto ni = static_cast<Index>(row_idx.size());
  const auto nj = static_cast<Index>(col_idx.size());
  return from_blocks(Matrix::Zero(rows, nj), Matrix::Zero(ni, nj), Matrix::Zero(ni, cols),
                     std::move(row_idx), std::move(col_idx),
                     LowRankFactors{Matrix(ni, 0), Vector(), Matrix(nj, 0)});
}

Matrix cur_reconstruct(const CURFactors& f) {
  if (f.C().cols() != f.Upinv().rows() || f.Upinv().cols() != f.R().rows()) {
    throw DimensionError("cur_reconstruct: factor dimensions do not chain");
  }
  const CurEvaluator eval(f);
  Matrix out(eval.rows(), eval.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = eval.row(i).transpose();
  return out;
}

CurEvaluator::CurEvaluator(const CURFactors& f) {
  const LowRankFactors& u = f.u_factors();
  left_ = f.C() * (u.V * u.S.cwiseInverse().asDiagonal());
  right_ = u.W.transpose() * f.R();
}

double CurEvaluator::operator()(Index i, Index j) const {
  if (i < 0 || i >= rows() || j < 0 || j >= cols()) {
    throw DimensionError("CurEvaluator: position out of range");
  }
  return left_.row(i).dot(right_.col(j));
}

Vector CurEvaluator::row(Index i) const { return right_.transpose() * left_.row(i).transpose(); }

Incoherence incoherence(const LowRankFactors& f) {
  const auto r = static_cast<double>(f.rank());
  if (f.rank() == 0) throw RankDeficiencyError("incoherence: rank-0 factors");
  const double w_max = f.W.rowwise().squaredNorm().maxCoeff();
  const double v_max = f.V.rowwise().squaredNorm().maxCoeff();
  return Incoherence{static_cast<double>(f.rows()) / r * w_max,
                     static_cast<double>(f.cols()) / r * v_max};
}

double condition_number(const LowRankFactors& f) {
  if (f.rank() == 0 || !(f.S(f.rank() - 1) > 0.0)) {
    throw RankDeficiencyError("condition_number: trailing singular value is zero");
  }
  return f.S(0) / f.S(f.rank() - 1);
}

}  // namespace ccs
