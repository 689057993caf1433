#include "ccs/theory_bounds.hpp"

#include "ccs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ccs {

namespace {

// Saturates at the largest representable count.
std::uint64_t ceil_count(double v) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const double c = std::ceil(v);
  if (!(c < 18446744073709551616.0)) return kMax;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c));
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string("bound input ") + name + " must be positive and finite");
  }
}

// Relative slack for comparisons that hold with equality in exact arithmetic.
constexpr double kSlack = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

IndexCountBound theorem2_index_counts(double n, double r, double mu1, double mu2) {
  require_positive(n, "n");
  require_positive(r, "r");
  require_positive(mu1, "mu1");
  require_positive(mu2, "mu2");
  const double log_n = std::log(n);
  return IndexCountBound{ceil_count(10.0 * mu1 * r * log_n), ceil_count(10.0 * mu2 * r * log_n),
                         4.0 * r / (n * n)};
}

BoundReport theorem3_bounds(double n, double r, double mu1, double mu2, double kappa,
                            double beta) {
  require_positive(n, "n");
  require_positive(r, "r");
  require_positive(mu1, "mu1");
  require_positive(mu2, "mu2");
  require_positive(kappa, "kappa");
  if (!(beta > 1.0)) throw ValidationError("theorem3_bounds: beta must exceed 1");

  BoundReport rep{n, r, mu1, mu2, kappa, beta};
  const double log_n = std::log(n);
  const double log_2n = std::log(2.0 * n);
  const double common = beta * kappa * kappa * r * r * mu1 * mu2;
  rep.index_bound = 512.0 * common * log_n * log_n;
  rep.required_rows = ceil_count(rep.index_bound);
  rep.required_cols = ceil_count(rep.index_bound);
  rep.required_omega_R =
      ceil_count(128.0 * common * (n + static_cast<double>(rep.required_rows)) * log_2n * log_2n);
  rep.required_omega_C =
      ceil_count(128.0 * common * (n + static_cast<double>(rep.required_cols)) * log_2n * log_2n);

  double prob = 1.0 - 2.0 * r / std::pow(n, 0.4 * r * log_n) -
                2.0 / std::pow(n, 2.0 * std::sqrt(beta) - 2.0);
  for (double mu : {mu1, mu2}) {
    prob -= 6.0 * log_n / std::pow(n + mu * r * r * log_n * log_n, 2.0 * beta - 2.0);
  }
  rep.vacuous = !(prob > 0.0);
  rep.success_probability_lower_bound = clamp01(prob);
  return rep;
}

std::string to_key_value(const BoundReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << report.n << "\n"
     << "r=" << report.r << "\n"
     << "mu1=" << report.mu1 << "\n"
     << "mu2=" << report.mu2 << "\n"
     << "kappa=" << report.kappa << "\n"
     << "beta=" << report.beta << "\n"
     << "index_bound=" << report.index_bound << "\n"
     << "required_rows=" << report.required_rows << "\n"
     << "required_cols=" << report.required_cols << "\n"
     << "required_omega_R=" << report.required_omega_R << "\n"
     << "required_omega_C=" << report.required_omega_C << "\n"
     << "success_probability_lower_bound=" << report.success_probability_lower_bound << "\n"
     << "vacuous=" << (report.vacuous ? "true" : "false") << "\n";
  return os.str();
}

Lemma1Report lemma1_verify(const Matrix& x, Index r, int trials, Index row_count, Rng& rng) {
  if (row_count < 1 || row_count > x.rows()) {
    throw ValidationError("lemma1_verify: row_count must lie in [1, rows]");
  }
  if (r < 1 || r > row_count || r > x.cols()) throw DimensionError("lemma1_verify: invalid rank");
  if (trials < 1) throw ValidationError("lemma1_verify: need at least one trial");

  const LowRankFactors fx = truncated_svd(x, r);
  const Incoherence inc = incoherence(fx);
  const double kappa = condition_number(fx);
  const double n = static_cast<double>(x.rows());
  const double log_n = std::log(n);
  const double rank_tol = default_rank_tolerance(x);

  Lemma1Report rep;
  rep.trials = trials;
  rep.row_count = row_count;
  rep.mu1 = inc.mu1;
  rep.mu2 = inc.mu2;
  rep.kappa = kappa;
  rep.hypothesis_satisfied =
      static_cast<double>(row_count) >= inc.mu1 * double(r) * double(r) * log_n * log_n;
  rep.probability_bound = clamp01(1.0 - double(r) / std::pow(n, 0.4 * double(r) * log_n));

  IndexList pool(static_cast<std::size_t>(x.rows()));
  for (int t = 0; t < trials; ++t) {
    std::iota(pool.begin(), pool.end(), Index{0});
    // Partial Fisher-Yates: the first row_count slots are a uniform subset.
    for (Index k = 0; k < row_count; ++k) {
      std::uniform_int_distribution<Index> pick(k, x.rows() - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    IndexList rows(pool.begin(), pool.begin() + row_count);
    std::sort(rows.begin(), rows.end());

    const LowRankFactors fr = truncated_svd(select_rows(x, rows), r);
    const bool full_rank = fr.S(r - 1) > rank_tol;
    const Incoherence ir = incoherence(fr);
    const double kappa_r = full_rank ? condition_number(fr) : kInf;
    const bool ok1 = ir.mu1 <= 4.0 * kappa * kappa * inc.mu1 * (1.0 + kSlack);
    const bool ok2 = ir.mu2 <= inc.mu2 * (1.0 + kSlack);
    const bool ok3 = kappa_r <= 2.0 * std::sqrt(inc.mu1 * double(r)) * kappa * (1.0 + kSlack);
    rep.mu1_ok += ok1;
    rep.mu2_ok += ok2;
    rep.kappa_ok += ok3;
    rep.all_ok += ok1 && ok2 && ok3;
  }
  return rep;
}

ExactnessCheck cur_exactness_check(const Matrix& x, const IndexList& rows, const IndexList& cols,
                                   Index r) {
  const CURFactors f = CURFactors::from_matrix(x, rows, cols);
  ExactnessCheck out;
  out.rank_u = f.u_factors().rank();
  const double norm_x = x.norm();
  const double err = (x - cur_reconstruct(f)).norm();
  out.relative_error = norm_x == 0.0 ? (err == 0.0 ? 0.0 : kInf) : err / norm_x;
  out.exact = out.rank_u == r && out.relative_error <= 1e-8;
  return out;
}

}  // namespace ccs
