#pragma once

#include "ccs/linalg.hpp"
#include "ccs/sampling.hpp"

#include <optional>
#include <vector>

namespace ccs {

enum class SubSolverKind { Svp };

/// Settings of the uniform-sampling completion solver used by TSC and as
/// the uniform-model baseline.
struct SubSolverSpec {
  SubSolverKind kind = SubSolverKind::Svp;
  Index rank = 1;
  double eps = 1e-5;
  int max_iter = 1000;
  /// Unset means rows * cols / total_draws.
  std::optional<double> step;
  /// Multiplies the automatic step; ignored when `step` is set.
  double step_scale = 1.0;
  double divergence_limit = 1e6;

  void validate() const;
};

struct IterationTrace {
  int iterations = 0;
  std::vector<double> residuals;
  bool converged = false;
  bool diverged = false;
};

struct SvpResult {
  Matrix estimate;
  IterationTrace trace;
};

/// Singular value projection: X_{k+1} = H_r(X_k + eta * P_Omega(X - X_k))
/// from X_0 = 0, stopping on the multiplicity-weighted observed residual.
SvpResult svp_solve(const ObservationMultiset& omega, const SubSolverSpec& spec);

struct TscResult {
  Matrix estimate;
  IterationTrace row_trace;
  IterationTrace col_trace;
  /// Numerical rank of U~ = C~(I, :); below the target rank when the
  /// completed column block loses rank on I.
  Index u_rank = 0;
  bool rank_deficient = false;
};

/// Two-step completion: complete R~ (|I| x cols) from Omega_R and C~
/// (rows x |J|) from Omega_C independently, take U~ = C~(I, :) and return
/// C~ U~^+ R~.
TscResult tsc_solve(const CrossSample& cs, const SubSolverSpec& spec);

}  // namespace ccs
