#include "ccs/icurc.hpp"

#include "ccs/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace ccs {

namespace {

IndexList positions_of(const IndexList& idx, Index bound) {
  IndexList pos(static_cast<std::size_t>(bound), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) pos[static_cast<std::size_t>(idx[k])] = Index(k);
  return pos;
}

// Observations of a cross sample in local block coordinates, so one
// iteration touches only the |I| x cols and rows x |J| slices of X_k.
class CrossSystem {
 public:
  struct Slices {
    Matrix xi;  // X_k(I, :)
    Matrix xj;  // X_k(:, J)
  };

  explicit CrossSystem(const CrossSample& cs) : I_(cs.I()), J_(cs.J()) {
    const IndexList row_pos = positions_of(I_, cs.rows());
    const IndexList col_pos = positions_of(J_, cs.cols());
    for (const Observation& e : cs.omega_R().entries()) {
      row_obs_.push_back({row_pos[static_cast<std::size_t>(e.row)], e.col,
                          col_pos[static_cast<std::size_t>(e.col)], e.value,
                          static_cast<double>(e.multiplicity)});
      denominator_ += e.multiplicity * e.value * e.value;
      if (row_obs_.back().b >= 0) intersection_draws_ += e.multiplicity;
    }
    for (const Observation& e : cs.omega_C().entries()) {
      col_obs_.push_back({e.row, col_pos[static_cast<std::size_t>(e.col)],
                          row_pos[static_cast<std::size_t>(e.row)], e.value,
                          static_cast<double>(e.multiplicity)});
      denominator_ += e.multiplicity * e.value * e.value;
      if (col_obs_.back().a >= 0) intersection_draws_ += e.multiplicity;
    }
  }

  bool empty_intersection() const { return intersection_draws_ == 0; }
  bool zero_data() const { return denominator_ == 0.0; }

  // Row and column slices of X_k = C U^+ R via U U^+ R(:, J^c) and
  // C(I^c, :) U^+ U, with the I x J block set to U itself.
  Slices slices(const CURFactors& f) const {
    const LowRankFactors& u = f.u_factors();
    Slices s;
    s.xi = u.W * (u.W.transpose() * f.R());
    s.xj = (f.C() * u.V) * u.V.transpose();
    for (std::size_t b = 0; b < J_.size(); ++b) s.xi.col(J_[b]) = f.U().col(Index(b));
    for (std::size_t a = 0; a < I_.size(); ++a) s.xj.row(I_[a]) = f.U().row(Index(a));
    return s;
  }

  double residual(const Slices& s) const {
    if (zero_data()) return 0.0;
    double num = 0.0;
    for (const RowObs& o : row_obs_) {
      const double d = o.value - s.xi(o.a, o.j);
      num += o.mult * d * d;
    }
    for (const ColObs& o : col_obs_) {
      const double d = o.value - s.xj(o.i, o.b);
      num += o.mult * d * d;
    }
    return num / denominator_;
  }

  CURFactors advance(const CURFactors& f, Slices s, const StepSizes& eta, Index rank) const {
    Matrix m = f.U();
    for (const RowObs& o : row_obs_) {
      if (o.b < 0) {
        s.xi(o.a, o.j) += eta.eta_r * o.mult * (o.value - s.xi(o.a, o.j));
      } else {
        m(o.a, o.b) += eta.eta_u * o.mult * (o.value - f.U()(o.a, o.b));
      }
    }
    for (const ColObs& o : col_obs_) {
      if (o.a < 0) {
        s.xj(o.i, o.b) += eta.eta_c * o.mult * (o.value - s.xj(o.i, o.b));
      } else {
        m(o.a, o.b) += eta.eta_u * o.mult * (o.value - f.U()(o.a, o.b));
      }
    }

    LowRankFactors h = truncated_svd(m, rank);
    Matrix u = h.dense();
    for (std::size_t b = 0; b < J_.size(); ++b) s.xi.col(J_[b]) = u.col(Index(b));
    for (std::size_t a = 0; a < I_.size(); ++a) s.xj.row(I_[a]) = u.row(Index(a));

    const double tol = h.S.size() == 0 ? 0.0
                                       : static_cast<double>(std::max(u.rows(), u.cols())) *
                                             std::numeric_limits<double>::epsilon() * h.S(0);
    Index k = 0;
    while (k < h.S.size() && h.S(k) > tol) ++k;
    LowRankFactors compact{h.W.leftCols(k), h.S.head(k), h.V.leftCols(k)};
    return CURFactors::from_blocks(std::move(s.xj), std::move(u), std::move(s.xi), I_, J_,
                                   std::move(compact));
  }

 private:
  struct RowObs {
    Index a;  // position of the row in I
    Index j;
    Index b;  // position of j in J, or -1
    double value;
    double mult;
  };
  struct ColObs {
    Index i;
    Index b;  // position of the column in J
    Index a;  // position of i in I, or -1
    double value;
    double mult;
  };

  IndexList I_;
  IndexList J_;
  std::vector<RowObs> row_obs_;
  std::vector<ColObs> col_obs_;
  double denominator_ = 0.0;
  std::uint64_t intersection_draws_ = 0;
};

void require_matching(const CrossSample& cs, const CURFactors& f) {
  if (f.ambient_rows() != cs.rows() || f.ambient_cols() != cs.cols() || f.I() != cs.I() ||
      f.J() != cs.J()) {
    throw DimensionError("CUR factors do not belong to this cross sample");
  }
}

void require_rank_fits(const CrossSample& cs, Index rank) {
  if (static_cast<Index>(cs.I().size()) < rank || static_cast<Index>(cs.J().size()) < rank) {
    throw ValidationError("ICURC needs |I| >= r and |J| >= r (|I|=" +
                          std::to_string(cs.I().size()) + ", |J|=" +
                          std::to_string(cs.J().size()) + ", r=" + std::to_string(rank) + ")");
  }
}

}  // namespace

void IcurcConfig::validate() const {
  if (rank < 1) throw ValidationError("ICURC rank must be at least 1");
  if (!(eps > 0.0)) throw ValidationError("ICURC eps must be positive");
  if (max_iter < 1) throw ValidationError("ICURC max_iter must be at least 1");
  for (const auto& eta : {eta_r, eta_c, eta_u}) {
    if (eta && !(*eta > 0.0)) throw ValidationError("ICURC step sizes must be positive");
  }
}

StepSizes default_step_sizes(const CrossSample& cs) {
  if (cs.omega_R().total_draws() == 0 || cs.omega_C().total_draws() == 0) {
    throw ValidationError("default_step_sizes: Omega_R and Omega_C must be nonempty");
  }
  const double p1 = cs.p1();
  const double p2 = cs.p2();
  return StepSizes{1.0 / p1, 1.0 / p2, 1.0 / (p1 + p2)};
}

StepSizes resolve_step_sizes(const CrossSample& cs, const IcurcConfig& config) {
  const StepSizes auto_eta = default_step_sizes(cs);
  return StepSizes{config.eta_r.value_or(auto_eta.eta_r), config.eta_c.value_or(auto_eta.eta_c),
                   config.eta_u.value_or(auto_eta.eta_u)};
}

double residual(const CrossSample& cs, const CURFactors& current) {
  require_matching(cs, current);
  const CurEvaluator eval(current);
  double num = 0.0;
  double den = 0.0;
  for (const auto* omega : {&cs.omega_R(), &cs.omega_C()}) {
    for (const Observation& e : omega->entries()) {
      const double d = e.value - eval(e.row, e.col);
      num += e.multiplicity * d * d;
      den += e.multiplicity * e.value * e.value;
    }
  }
  return den == 0.0 ? 0.0 : num / den;
}

CURFactors step(const CrossSample& cs, const CURFactors& state, const IcurcConfig& config) {
  config.validate();
  require_matching(cs, state);
  require_rank_fits(cs, config.rank);
  const CrossSystem system(cs);
  return system.advance(state, system.slices(state), resolve_step_sizes(cs, config), config.rank);
}

IcurcResult solve(const CrossSample& cs, const IcurcConfig& config,
                  const IterateObserver& observer) {
  config.validate();
  require_rank_fits(cs, config.rank);
  const StepSizes eta = resolve_step_sizes(cs, config);
  const CrossSystem system(cs);

  IcurcResult out{CURFactors::zeros(cs.rows(), cs.cols(), cs.I(), cs.J()), IcurcTrace{}};
  IcurcTrace& trace = out.trace;
  trace.empty_intersection = system.empty_intersection();

  using Clock = std::chrono::steady_clock;
  for (int k = 0;; ++k) {
    const auto start = Clock::now();
    CrossSystem::Slices s = system.slices(out.factors);
    const double e = system.residual(s);
    trace.residuals.push_back(e);
    if (e <= config.eps) {
      trace.converged = true;
      break;
    }
    if (!std::isfinite(e) || e > config.divergence_limit) {
      trace.diverged = true;
      break;
    }
    if (observer && !observer(k, out.factors, e)) {
      trace.stopped_by_observer = true;
      break;
    }
    if (k == config.max_iter) break;
    out.factors = system.advance(out.factors, std::move(s), eta, config.rank);
    trace.iterations = k + 1;
    if (config.record_timing) {
      trace.seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    }
  }
  return out;
}

std::vector<double> evaluate_entries(const CURFactors& f,
                                     const std::vector<std::pair<Index, Index>>& positions) {
  const CurEvaluator eval(f);
  std::vector<double> out;
  out.reserve(positions.size());
  for (const auto& [i, j] : positions) out.push_back(eval(i, j));
  return out;
}

}  // namespace ccs
