#pragma once

#include "ccs/linalg.hpp"
#include "ccs/sampling.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace ccs {

struct StepSizes {
  double eta_r;
  double eta_c;
  double eta_u;
};

/// Solver settings. Unset step sizes resolve to default_step_sizes().
struct IcurcConfig {
  Index rank = 1;
  std::optional<double> eta_r;
  std::optional<double> eta_c;
  std::optional<double> eta_u;
  double eps = 1e-5;
  int max_iter = 1000;
  /// Iteration stops and reports divergence once e_k exceeds this or is not finite.
  double divergence_limit = 1e6;
  bool record_timing = false;

  void validate() const;
};

struct IcurcTrace {
  int iterations = 0;
  /// e_0 .. e_iterations.
  std::vector<double> residuals;
  bool converged = false;
  bool diverged = false;
  /// No draw of Omega_R + Omega_C lands in I x J; the U update then only
  /// sees the current iterate.
  bool empty_intersection = false;
  bool stopped_by_observer = false;
  /// Wall time of each completed step; filled when record_timing is set.
  std::vector<double> seconds;
};

struct IcurcResult {
  CURFactors factors;
  IcurcTrace trace;
};

/// (1/p1, 1/p2, 1/(p1 + p2)).
StepSizes default_step_sizes(const CrossSample& cs);

/// Step sizes from the config, falling back to default_step_sizes per entry.
StepSizes resolve_step_sizes(const CrossSample& cs, const IcurcConfig& config);

/// e_k = <P(X - X_k), X - X_k> / <P(X), X> over Omega_R + Omega_C with
/// multiplicity weights; X_k is read from the factors entry by entry.
/// Returns 0 when every observed value is zero.
double residual(const CrossSample& cs, const CURFactors& current);

/// One iteration: gradient steps on R(:, J^c), C(I^c, :) and the rank-r
/// projected U, followed by R(:, J) = C(I, :) = U. Only the row and column
/// slices of X_k are formed.
CURFactors step(const CrossSample& cs, const CURFactors& state, const IcurcConfig& config);

/// Called with (k, X_k factors, e_k) for every iterate including k = 0;
/// returning false stops the iteration after that iterate.
using IterateObserver = std::function<bool(int, const CURFactors&, double)>;

/// Iterates from X_0 = 0 until e_k <= eps, max_iter or divergence.
IcurcResult solve(const CrossSample& cs, const IcurcConfig& config,
                  const IterateObserver& observer = {});

/// (C U^+ R)(i, j) for each position.
std::vector<double> evaluate_entries(const CURFactors& f,
                                     const std::vector<std::pair<Index, Index>>& positions);

}  // namespace ccs
