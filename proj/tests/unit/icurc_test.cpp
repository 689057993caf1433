#include "ccs/errors.hpp"
#include "ccs/icurc.hpp"
#include "ccs/metrics.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ccs;

namespace {

Matrix gaussian_lowrank(Index n, Index r, Rng& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, r);
  Matrix b(n, r);
  for (Index k = 0; k < a.size(); ++k) a.data()[k] = g(rng);
  for (Index k = 0; k < b.size(); ++k) b.data()[k] = g(rng);
  return a * b.transpose();
}

EntrySource source(const Matrix& x) {
  return [&x](Index i, Index j) { return x(i, j); };
}

IndexList range(Index n) {
  IndexList out(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) out[std::size_t(k)] = k;
  return out;
}

// Omega_R observes I x [cols] once per cell; Omega_C observes the rows
// outside I on J once per cell.
CrossSample full_cross(const Matrix& x, const IndexList& rows, const IndexList& cols) {
  std::vector<Observation> r;
  std::vector<Observation> c;
  for (Index i : rows) {
    for (Index j = 0; j < x.cols(); ++j) r.push_back({i, j, x(i, j), 1});
  }
  for (Index i = 0; i < x.rows(); ++i) {
    if (std::binary_search(rows.begin(), rows.end(), i)) continue;
    for (Index j : cols) c.push_back({i, j, x(i, j), 1});
  }
  return CrossSample(rows, cols, ObservationMultiset(x.rows(), x.cols(), r),
                     ObservationMultiset(x.rows(), x.cols(), c));
}

}  // namespace

TEST_SUITE("icurc") {

TEST_CASE("default step sizes") {
  const Matrix x = Matrix::Ones(4, 4);
  Rng rng(0);
  const CrossSample full = ccs_sample_on(4, 4, source(x), range(4), range(4), 16, 16, rng);
  StepSizes s = default_step_sizes(full);
  CHECK(s.eta_r == doctest::Approx(1.0));
  CHECK(s.eta_c == doctest::Approx(1.0));
  CHECK(s.eta_u == doctest::Approx(0.5));

  // p1 = 8 / (4 * 4) = 0.5 and p2 = 4 / (4 * 4) = 0.25.
  const CrossSample half = ccs_sample_on(4, 4, source(x), range(4), range(4), 8, 4, rng);
  s = default_step_sizes(half);
  CHECK(s.eta_r == doctest::Approx(2.0));
  CHECK(s.eta_c == doctest::Approx(4.0));
  CHECK(s.eta_u == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("default step sizes follow the raw draw counts") {
  Rng rng(13);
  const Matrix x = Matrix::Random(30, 40);
  for (int t = 0; t < 5; ++t) {
    const CrossSample cs = ccs_sample(x, 8, 11, 0.3, rng);
    const double p1 = double(cs.omega_R().total_draws()) / (40.0 * double(cs.I().size()));
    const double p2 = double(cs.omega_C().total_draws()) / (30.0 * double(cs.J().size()));
    const StepSizes s = default_step_sizes(cs);
    CHECK(s.eta_r == doctest::Approx(1.0 / p1).epsilon(1e-14));
    CHECK(s.eta_c == doctest::Approx(1.0 / p2).epsilon(1e-14));
    CHECK(s.eta_u == doctest::Approx(1.0 / (p1 + p2)).epsilon(1e-14));
  }
}

TEST_CASE("resolve_step_sizes keeps explicit entries") {
  const Matrix x = Matrix::Ones(4, 4);
  Rng rng(0);
  const CrossSample cs = ccs_sample_on(4, 4, source(x), range(4), range(4), 8, 4, rng);
  IcurcConfig config;
  config.eta_c = 0.7;
  const StepSizes s = resolve_step_sizes(cs, config);
  CHECK(s.eta_r == doctest::Approx(2.0));
  CHECK(s.eta_c == doctest::Approx(0.7));
}

TEST_CASE("residual at the truth and at zero") {
  Rng rng(2);
  const Matrix x = gaussian_lowrank(20, 2, rng);
  const CrossSample cs = ccs_sample(x, 6, 6, 0.5, rng);
  CHECK(residual(cs, CURFactors::from_matrix(x, cs.I(), cs.J())) < 1e-24);
  CHECK(residual(cs, CURFactors::zeros(20, 20, cs.I(), cs.J())) == doctest::Approx(1.0));
}

TEST_CASE("residual matches the dense brute force") {
  Rng rng(3);
  const Matrix x = gaussian_lowrank(25, 2, rng);
  const CrossSample cs = ccs_sample(x, 8, 8, 0.4, rng);
  const Matrix y = x + 0.1 * Matrix::Random(25, 25);
  const CURFactors f = CURFactors::from_matrix(y, cs.I(), cs.J());
  const Matrix xk = f.C() * oracle::pinv(f.U()) * f.R();
  double num = 0.0;
  double den = 0.0;
  for (const auto* om : {&cs.omega_R(), &cs.omega_C()}) {
    for (const auto& e : om->entries()) {
      num += e.multiplicity * std::pow(x(e.row, e.col) - xk(e.row, e.col), 2);
      den += e.multiplicity * std::pow(x(e.row, e.col), 2);
    }
  }
  CHECK(residual(cs, f) == doctest::Approx(num / den).epsilon(1e-10));
}

TEST_CASE("one unit step under full cross observation is exact") {
  Rng rng(4);
  const Matrix x = gaussian_lowrank(15, 2, rng);
  const IndexList rows{1, 5, 9, 12};
  const IndexList cols{0, 3, 8, 14};
  const CrossSample cs = full_cross(x, rows, cols);
  IcurcConfig config;
  config.rank = 2;
  config.eta_r = config.eta_c = config.eta_u = 1.0;
  const CURFactors next = step(cs, CURFactors::zeros(15, 15, rows, cols), config);
  CHECK((next.U() - oracle::block(x, rows, cols)).norm() < 1e-10 * x.norm());
  CHECK((next.R() - select_rows(x, rows)).norm() < 1e-10 * x.norm());
  CHECK((next.C() - select_cols(x, cols)).norm() < 1e-10 * x.norm());
  CHECK(residual(cs, next) < 1e-20);
}

TEST_CASE("the truth is a fixed point of the step") {
  Rng rng(5);
  const Matrix x = gaussian_lowrank(20, 2, rng);
  const CrossSample cs = ccs_sample(x, 7, 7, 0.5, rng);
  const CURFactors truth = CURFactors::from_matrix(x, cs.I(), cs.J());
  IcurcConfig config;
  config.rank = 2;
  const CURFactors next = step(cs, truth, config);
  CHECK((next.U() - truth.U()).norm() < 1e-10 * truth.U().norm());
  CHECK((cur_reconstruct(next) - x).norm() < 1e-9 * x.norm());
}

TEST_CASE("factor-only step matches the dense iteration") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Matrix x = gaussian_lowrank(30, 2, rng);
    const CrossSample cs = ccs_sample(x, 10, 10, 0.5, rng);
    IcurcConfig config;
    config.rank = 2;
    const StepSizes s = default_step_sizes(cs);
    config.eta_r = 0.5 * s.eta_r;
    config.eta_c = 0.5 * s.eta_c;
    config.eta_u = 0.5 * s.eta_u;
    const oracle::DenseIcurc dense{cs, 2, *config.eta_r, *config.eta_c, *config.eta_u};

    CURFactors f = CURFactors::zeros(30, 30, cs.I(), cs.J());
    Matrix xk = Matrix::Zero(30, 30);
    for (int k = 0; k < 3; ++k) {
      f = step(cs, f, config);
      xk = dense.step(xk);
      CHECK((cur_reconstruct(f) - xk).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, xk.norm()));
      CHECK(residual(cs, f) == doctest::Approx(dense.residual(xk)).epsilon(1e-8));
    }
  }
}

TEST_CASE("fully observed rank-1 matrix converges in one step") {
  Rng rng(6);
  const Matrix x = gaussian_lowrank(12, 1, rng);
  std::vector<Observation> all;
  for (Index i = 0; i < 12; ++i) {
    for (Index j = 0; j < 12; ++j) all.push_back({i, j, x(i, j), 1});
  }
  const ObservationMultiset om(12, 12, all);
  const CrossSample full(range(12), range(12), om, om);
  IcurcConfig config;
  config.rank = 1;
  config.eps = 1e-12;
  const IcurcResult res = solve(full, config);
  CHECK(res.trace.converged);
  CHECK(res.trace.iterations == 1);
  CHECK(res.trace.residuals.back() <= 1e-12);
}

TEST_CASE("zero data converges immediately") {
  const Matrix x = Matrix::Zero(10, 10);
  Rng rng(7);
  const CrossSample cs = ccs_sample(x, 4, 4, 0.5, rng);
  IcurcConfig config;
  config.rank = 1;
  const IcurcResult res = solve(cs, config);
  CHECK(res.trace.converged);
  CHECK(res.trace.iterations == 0);
  CHECK(res.factors.U().isZero());
  CHECK(res.factors.C().isZero());
}

TEST_CASE("recovery rate on a small Gaussian problem") {
  // |I| = |J| = 30 fixed, p = 0.5, half the automatic steps. The stopping
  // tolerance is tighter than the default because the ground-truth error
  // tracks roughly sqrt(e_k), and a few seeds need more than 1000 steps.
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Matrix x = gaussian_lowrank(100, 2, rng);
    std::vector<Index> perm = range(100);
    std::shuffle(perm.begin(), perm.end(), rng);
    IndexList rows(perm.begin(), perm.begin() + 30);
    std::shuffle(perm.begin(), perm.end(), rng);
    IndexList cols(perm.begin(), perm.begin() + 30);
    std::sort(rows.begin(), rows.end());
    std::sort(cols.begin(), cols.end());
    const CrossSample cs =
        ccs_sample_on(100, 100, source(x), rows, cols, 0.5 * 100 * 30, 0.5 * 100 * 30, rng);
    IcurcConfig config;
    config.rank = 2;
    config.eps = 1e-10;
    config.max_iter = 5000;
    const StepSizes s = default_step_sizes(cs);
    config.eta_r = 0.5 * s.eta_r;
    config.eta_c = 0.5 * s.eta_c;
    config.eta_u = 0.5 * s.eta_u;
    const IcurcResult res = solve(cs, config);
    ok += res.trace.converged && relative_error(x, res.factors) <= 1e-2;
  }
  CHECK(ok >= 18);
}

TEST_CASE("observer sees every iterate and can stop the run") {
  Rng rng(8);
  const Matrix x = gaussian_lowrank(40, 2, rng);
  const CrossSample cs = ccs_sample(x, 15, 15, 0.5, rng);
  IcurcConfig config;
  config.rank = 2;
  config.max_iter = 50;
  std::vector<int> seen;
  const IcurcResult res = solve(cs, config, [&](int k, const CURFactors&, double e) {
    seen.push_back(k);
    CHECK(std::isfinite(e));
    return k < 3;
  });
  CHECK(res.trace.stopped_by_observer);
  CHECK(seen == std::vector<int>{0, 1, 2, 3});
  CHECK(res.trace.residuals.size() == 4);
  CHECK(res.trace.residuals[0] == doctest::Approx(1.0));
}

TEST_CASE("divergence is reported instead of looping") {
  Rng rng(9);
  const Matrix x = gaussian_lowrank(40, 2, rng);
  const CrossSample cs = ccs_sample(x, 15, 15, 0.5, rng);
  IcurcConfig config;
  config.rank = 2;
  config.eta_r = config.eta_c = config.eta_u = 50.0;
  const IcurcResult res = solve(cs, config);
  CHECK(res.trace.diverged);
  CHECK_FALSE(res.trace.converged);
}

TEST_CASE("config validation") {
  Rng rng(10);
  const Matrix x = gaussian_lowrank(20, 2, rng);
  const CrossSample cs = ccs_sample_on(20, 20, source(x), {0, 1}, {0, 1}, 10, 10, rng);
  IcurcConfig config;
  config.rank = 3;
  CHECK_THROWS_AS(solve(cs, config), ValidationError);
  config.rank = 0;
  CHECK_THROWS_AS(solve(cs, config), ValidationError);
  config.rank = 1;
  config.eta_r = -1.0;
  CHECK_THROWS_AS(solve(cs, config), ValidationError);
  config.eta_r.reset();
  config.eps = 0.0;
  CHECK_THROWS_AS(solve(cs, config), ValidationError);
}

TEST_CASE("evaluate_entries agrees with the dense product") {
  const CURFactors ones = CURFactors::from_matrix(Matrix::Ones(3, 3), {0}, {0});
  CHECK(evaluate_entries(ones, {{0, 0}})[0] == doctest::Approx(1.0));

  Rng rng(11);
  const Matrix x = Matrix::Random(10, 12);
  const CURFactors f = CURFactors::from_matrix(x, {1, 4, 7}, {0, 2, 5, 9});
  const Matrix dense = cur_reconstruct(f);
  const Matrix oracle_dense = f.C() * oracle::pinv(f.U()) * f.R();
  std::vector<std::pair<Index, Index>> all;
  for (Index i = 0; i < 10; ++i) {
    for (Index j = 0; j < 12; ++j) all.emplace_back(i, j);
  }
  const std::vector<double> v = evaluate_entries(f, all);
  for (std::size_t k = 0; k < all.size(); ++k) {
    CHECK(v[k] == doctest::Approx(dense(all[k].first, all[k].second)).epsilon(1e-12));
    CHECK(v[k] == doctest::Approx(oracle_dense(all[k].first, all[k].second)).epsilon(1e-9));
  }
}

}  // TEST_SUITE
