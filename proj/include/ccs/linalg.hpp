#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace ccs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Throws NonFiniteError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& a, std::string_view what);

/// Compact SVD triple W * diag(S) * V^T of a rank-r object.
///
/// W is rows x r and V is cols x r, both with orthonormal columns; S is
/// nonincreasing and nonnegative. A rank-0 object has zero columns.
struct LowRankFactors {
  Matrix W;
  Vector S;
  Matrix V;

  Index rank() const { return S.size(); }
  Index rows() const { return W.rows(); }
  Index cols() const { return V.rows(); }

  Matrix dense() const;
};

/// Best rank-r approximation factors (Eckart-Young). When rank(a) < r the
/// trailing singular values are zero. Ties at sigma_r keep the first r in
/// the computed ordering.
LowRankFactors truncated_svd(const Matrix& a, Index r);

/// Singular values of `a` in nonincreasing order.
Vector singular_values(const Matrix& a);

/// max(rows, cols) * machine epsilon * sigma_max.
double default_rank_tolerance(const Matrix& a);

/// Factors of all singular triplets whose value exceeds the tolerance
/// (0 selects default_rank_tolerance).
LowRankFactors compact_svd(const Matrix& a, double rank_tol = 0.0);

Index numerical_rank(const Matrix& a, double rank_tol = 0.0);

/// Moore-Penrose inverse with singular values at or below the effective
/// tolerance treated as zero; rank_tol = 0 selects the default.
Matrix pseudo_inverse(const Matrix& a, double rank_tol = 0.0);

/// Pseudo-inverse assembled from already-thresholded compact factors.
Matrix pseudo_inverse(const LowRankFactors& compact);

/// Rows `rows` and columns `cols` of `a`, in the given order.
Matrix submatrix(const Matrix& a, std::span<const Index> rows, std::span<const Index> cols);
Matrix select_rows(const Matrix& a, std::span<const Index> rows);
Matrix select_cols(const Matrix& a, std::span<const Index> cols);

/// Skeleton factors (C, U, R, I, J) with the pseudo-inverse of U cached.
///
/// Construct through from_matrix or from_blocks so that Upinv always matches U.
class CURFactors {
 public:
  CURFactors() = default;

  /// C = X(:, J), U = X(I, J), R = X(I, :).
  static CURFactors from_matrix(const Matrix& x, IndexList rows, IndexList cols);

  /// Validates block shapes and computes Upinv at the default tolerance.
  static CURFactors from_blocks(Matrix c, Matrix u, Matrix r, IndexList rows, IndexList cols);

  /// As from_blocks, reusing a compact SVD of `u` that the caller already
  /// holds (already thresholded; W*S*V^T must equal u).
  static CURFactors from_blocks(Matrix c, Matrix u, Matrix r, IndexList rows, IndexList cols,
                                LowRankFactors u_compact);

  /// All-zero blocks, the solver's starting point.
  static CURFactors zeros(Index rows, Index cols, IndexList row_idx, IndexList col_idx);

  const Matrix& C() const { return c_; }
  const Matrix& U() const { return u_; }
  const Matrix& R() const { return r_; }
  const Matrix& Upinv() const { return upinv_; }
  const IndexList& I() const { return rows_; }
  const IndexList& J() const { return cols_; }
  /// Compact SVD of U restricted to its numerical rank.
  const LowRankFactors& u_factors() const { return u_compact_; }

  Index ambient_rows() const { return c_.rows(); }
  Index ambient_cols() const { return r_.cols(); }

 private:
  Matrix c_;
  Matrix u_;
  Matrix r_;
  Matrix upinv_;
  IndexList rows_;
  IndexList cols_;
  LowRankFactors u_compact_;
};

/// C * U^+ * R as a dense rows x cols matrix.
Matrix cur_reconstruct(const CURFactors& f);

/// Evaluates single entries of C * U^+ * R in O(rank(U)) each after an
/// O((rows + cols) * |I| * rank) setup, without forming the product.
class CurEvaluator {
 public:
  explicit CurEvaluator(const CURFactors& f);

  double operator()(Index i, Index j) const;

  Index rows() const { return left_.rows(); }
  Index cols() const { return right_.cols(); }
  /// Row i of the reconstruction (length cols).
  Vector row(Index i) const;

 private:
  Matrix left_;   // C * V * S^-1, rows x k
  Matrix right_;  // W^T * R, k x cols
};

struct Incoherence {
  double mu1;
  double mu2;
};

/// mu1 = (rows / r) * max_i |W(i,:)|^2 and mu2 = (cols / r) * max_j |V(j,:)|^2.
Incoherence incoherence(const LowRankFactors& f);

/// S[0] / S[r-1]; RankDeficiencyError when S[r-1] is zero.
double condition_number(const LowRankFactors& f);

}  // namespace ccs
