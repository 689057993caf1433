#include "ccs/solvers_aux.hpp"

#include "ccs/errors.hpp"

#include <cmath>
#include <string>

namespace ccs {

namespace {

// Omega_R in local row coordinates (position within I) over an |I| x cols block.
ObservationMultiset localize_rows(const ObservationMultiset& omega, const IndexList& rows) {
  IndexList pos(static_cast<std::size_t>(omega.rows()), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) pos[static_cast<std::size_t>(rows[k])] = Index(k);
  std::vector<Observation> local;
  local.reserve(omega.size());
  for (Observation e : omega.entries()) {
    e.row = pos[static_cast<std::size_t>(e.row)];
    local.push_back(e);
  }
  return ObservationMultiset(static_cast<Index>(rows.size()), omega.cols(), std::move(local));
}

ObservationMultiset localize_cols(const ObservationMultiset& omega, const IndexList& cols) {
  IndexList pos(static_cast<std::size_t>(omega.cols()), -1);
  for (std::size_t k = 0; k < cols.size(); ++k) pos[static_cast<std::size_t>(cols[k])] = Index(k);
  std::vector<Observation> local;
  local.reserve(omega.size());
  for (Observation e : omega.entries()) {
    e.col = pos[static_cast<std::size_t>(e.col)];
    local.push_back(e);
  }
  return ObservationMultiset(omega.rows(), static_cast<Index>(cols.size()), std::move(local));
}

}  // namespace

void SubSolverSpec::validate() const {
  if (rank < 1) throw ValidationError("sub-solver rank must be at least 1");
  if (!(eps > 0.0)) throw ValidationError("sub-solver eps must be positive");
  if (max_iter < 1) throw ValidationError("sub-solver max_iter must be at least 1");
  if (step && !(*step > 0.0)) throw ValidationError("sub-solver step must be positive");
  if (!(step_scale > 0.0)) throw ValidationError("sub-solver step scale must be positive");
}

SvpResult svp_solve(const ObservationMultiset& omega, const SubSolverSpec& spec) {
  spec.validate();
  if (omega.empty()) throw ValidationError("svp_solve: empty observation set");
  if (spec.rank > std::min(omega.rows(), omega.cols())) {
    throw DimensionError("svp_solve: rank " + std::to_string(spec.rank) + " exceeds " +
                         std::to_string(omega.rows()) + "x" + std::to_string(omega.cols()));
  }
  const double eta = spec.step.value_or(spec.step_scale * static_cast<double>(omega.rows()) *
                                        static_cast<double>(omega.cols()) /
                                        static_cast<double>(omega.total_draws()));
  double den = 0.0;
  for (const Observation& e : omega.entries()) den += e.multiplicity * e.value * e.value;

  SvpResult out{Matrix::Zero(omega.rows(), omega.cols()), IterationTrace{}};
  IterationTrace& trace = out.trace;
  for (int k = 0;; ++k) {
    double num = 0.0;
    for (const Observation& e : omega.entries()) {
      const double d = e.value - out.estimate(e.row, e.col);
      num += e.multiplicity * d * d;
    }
    const double res = den == 0.0 ? 0.0 : num / den;
    trace.residuals.push_back(res);
    if (res <= spec.eps) {
      trace.converged = true;
      break;
    }
    if (!std::isfinite(res) || res > spec.divergence_limit) {
      trace.diverged = true;
      break;
    }
    if (k == spec.max_iter) break;
    Matrix g = out.estimate;
    for (const Observation& e : omega.entries()) {
      g(e.row, e.col) += eta * e.multiplicity * (e.value - out.estimate(e.row, e.col));
    }
    out.estimate = truncated_svd(g, spec.rank).dense();
    trace.iterations = k + 1;
  }
  return out;
}

TscResult tsc_solve(const CrossSample& cs, const SubSolverSpec& spec) {
  spec.validate();
  if (static_cast<Index>(cs.I().size()) < spec.rank ||
      static_cast<Index>(cs.J().size()) < spec.rank) {
    throw ValidationError("tsc_solve needs |I| >= r and |J| >= r");
  }
  SvpResult r_tilde = svp_solve(localize_rows(cs.omega_R(), cs.I()), spec);
  SvpResult c_tilde = svp_solve(localize_cols(cs.omega_C(), cs.J()), spec);

  const Matrix u_tilde = select_rows(c_tilde.estimate, cs.I());
  const LowRankFactors compact = compact_svd(u_tilde);

  TscResult out;
  out.estimate = (c_tilde.estimate * pseudo_inverse(compact)) * r_tilde.estimate;
  out.row_trace = std::move(r_tilde.trace);
  out.col_trace = std::move(c_tilde.trace);
  out.u_rank = compact.rank();
  out.rank_deficient = out.u_rank < spec.rank;
  return out;
}

}  // namespace ccs
