#include "ccs/errors.hpp"
#include "ccs/metrics.hpp"
#include "ccs/solvers_aux.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

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

ObservationMultiset every_cell(const Matrix& x) {
  std::vector<Observation> all;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) all.push_back({i, j, x(i, j), 1});
  }
  return ObservationMultiset(x.rows(), x.cols(), all);
}

IndexList pick(Index n, Index k, Rng& rng) {
  IndexList all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[std::size_t(i)] = i;
  std::shuffle(all.begin(), all.end(), rng);
  IndexList out(all.begin(), all.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

// Rank-1 weighted alternating least squares over the observed entries.
Matrix rank1_als(const ObservationMultiset& om, int sweeps) {
  Eigen::VectorXd u = Eigen::VectorXd::Ones(om.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(om.cols());
  for (int s = 0; s < sweeps; ++s) {
    Eigen::VectorXd num = Eigen::VectorXd::Zero(om.cols());
    Eigen::VectorXd den = Eigen::VectorXd::Zero(om.cols());
    for (const auto& e : om.entries()) {
      num(e.col) += e.multiplicity * e.value * u(e.row);
      den(e.col) += e.multiplicity * u(e.row) * u(e.row);
    }
    v = num.cwiseQuotient(den);
    num = Eigen::VectorXd::Zero(om.rows());
    den = Eigen::VectorXd::Zero(om.rows());
    for (const auto& e : om.entries()) {
      num(e.row) += e.multiplicity * e.value * v(e.col);
      den(e.row) += e.multiplicity * v(e.col) * v(e.col);
    }
    u = num.cwiseQuotient(den);
  }
  return u * v.transpose();
}

}  // namespace

TEST_SUITE("solvers_aux") {

TEST_CASE("SVP with unit step on full observation returns H_r(X) at once") {
  Rng rng(1);
  const Matrix x = Matrix::Random(12, 10);
  SubSolverSpec spec;
  spec.rank = 3;
  spec.step = 1.0;
  spec.eps = 1e-30;
  spec.max_iter = 1;
  const SvpResult res = svp_solve(every_cell(x), spec);
  CHECK((res.estimate - oracle::truncate(x, 3)).norm() < 1e-10 * x.norm());
}

TEST_CASE("SVP recovers a rank-1 matrix from dense uniform draws") {
  Rng rng(2);
  const Matrix x = gaussian_lowrank(50, 1, rng);
  const ObservationMultiset om = uniform_sample(x, 2250, rng);
  SubSolverSpec spec;
  spec.rank = 1;
  spec.eps = 1e-14;
  const SvpResult res = svp_solve(om, spec);
  CHECK(res.trace.converged);
  CHECK(relative_error(x, res.estimate) <= 1e-3);
  CHECK(relative_error(rank1_als(om, 200), res.estimate) <= 1e-3);
}

TEST_CASE("SVP preconditions") {
  SubSolverSpec spec;
  CHECK_THROWS_AS(svp_solve(ObservationMultiset(3, 3, {}), spec), ValidationError);
  spec.rank = 4;
  CHECK_THROWS_AS(svp_solve(every_cell(Matrix::Ones(3, 3)), spec), DimensionError);
  spec.rank = 1;
  spec.step_scale = 0.0;
  CHECK_THROWS_AS(svp_solve(every_cell(Matrix::Ones(3, 3)), spec), ValidationError);
}

TEST_CASE("TSC reproduces X from fully observed crosses") {
  Rng rng(3);
  const Matrix x = gaussian_lowrank(30, 2, rng);
  const IndexList rows = pick(30, 6, rng);
  const IndexList cols = pick(30, 6, rng);
  std::vector<Observation> r;
  std::vector<Observation> c;
  const ObservationMultiset all = every_cell(x);
  for (const auto& e : all.entries()) {
    if (std::binary_search(rows.begin(), rows.end(), e.row)) r.push_back(e);
    if (std::binary_search(cols.begin(), cols.end(), e.col)) c.push_back(e);
  }
  const CrossSample cs(rows, cols, ObservationMultiset(30, 30, r), ObservationMultiset(30, 30, c));
  SubSolverSpec spec;
  spec.rank = 2;
  spec.step = 1.0;
  spec.eps = 1e-20;
  const TscResult res = tsc_solve(cs, spec);
  CHECK_FALSE(res.rank_deficient);
  CHECK(res.u_rank == 2);
  CHECK(relative_error(x, res.estimate) <= 1e-9);
}

TEST_CASE("TSC recovery rate at p = 0.6") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Matrix x = gaussian_lowrank(60, 2, rng);
    const IndexList rows = pick(60, 20, rng);
    const IndexList cols = pick(60, 20, rng);
    const auto budget = std::uint64_t(0.6 * 60 * 20);
    const CrossSample cs = ccs_sample_on(
        60, 60, [&x](Index i, Index j) { return x(i, j); }, rows, cols, budget, budget, rng);
    SubSolverSpec spec;
    spec.rank = 2;
    // Multiplicities of 2 or 3 overshoot at larger steps on these 20-row blocks.
    spec.step_scale = 0.3;
    spec.eps = 1e-10;
    spec.max_iter = 3000;
    ok += relative_error(x, tsc_solve(cs, spec).estimate) <= 1e-2;
  }
  CHECK(ok >= 18);
}

TEST_CASE("TSC needs |I| and |J| at least r") {
  Rng rng(4);
  const Matrix x = gaussian_lowrank(20, 3, rng);
  const CrossSample cs = ccs_sample_on(
      20, 20, [&x](Index i, Index j) { return x(i, j); }, {0, 1}, {0, 1, 2}, 20, 20, rng);
  SubSolverSpec spec;
  spec.rank = 3;
  CHECK_THROWS_AS(tsc_solve(cs, spec), ValidationError);
}

}  // TEST_SUITE
