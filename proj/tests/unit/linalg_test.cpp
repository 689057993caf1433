#include "ccs/errors.hpp"
#include "ccs/linalg.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace ccs;

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(rows, cols);
  for (Index k = 0; k < a.size(); ++k) a.data()[k] = g(rng);
  return a;
}

Matrix rank_r(Index n, Index r, std::mt19937_64& rng) {
  return gaussian(n, r, rng) * gaussian(n, r, rng).transpose();
}

double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("truncated_svd keeps the leading diagonal entries") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 2, 1;
  const LowRankFactors f = truncated_svd(d, 2);
  CHECK(f.S(0) == doctest::Approx(3));
  CHECK(f.S(1) == doctest::Approx(2));
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = 3;
  expect(1, 1) = 2;
  CHECK(max_abs(f.dense() - expect) < 1e-12);
}

TEST_CASE("truncated_svd at full rank reproduces the input") {
  std::mt19937_64 rng(3);
  const Matrix a = gaussian(7, 5, rng);
  const LowRankFactors f = truncated_svd(a, 5);
  CHECK((f.dense() - a).norm() / a.norm() < 1e-10);
  CHECK(max_abs(f.W.transpose() * f.W - Matrix::Identity(5, 5)) < 1e-10);
  CHECK(max_abs(f.V.transpose() * f.V - Matrix::Identity(5, 5)) < 1e-10);
}

TEST_CASE("truncated_svd error matches the tail of the oracle spectrum") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = gaussian(6, 6, rng);
    const Eigen::VectorXd s = oracle::singular_values(a);
    const double tail = std::sqrt(s.tail(3).squaredNorm());
    CHECK((a - truncated_svd(a, 3).dense()).norm() == doctest::Approx(tail).epsilon(1e-8));
  }
}

TEST_CASE("truncated_svd pads rank-deficient input with zero singular values") {
  std::mt19937_64 rng(5);
  const Matrix a = rank_r(8, 2, rng);
  const LowRankFactors f = truncated_svd(a, 4);
  CHECK(f.rank() == 4);
  CHECK(f.S(2) < 1e-12 * f.S(0));
  CHECK(f.S(3) < 1e-12 * f.S(0));
}

TEST_CASE("truncated_svd rejects bad ranks and non-finite input") {
  Matrix a = Matrix::Ones(3, 4);
  CHECK_THROWS_AS(truncated_svd(a, 4), DimensionError);
  CHECK_THROWS_AS(truncated_svd(a, 0), DimensionError);
  a(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(truncated_svd(a, 1), NonFiniteError);
}

TEST_CASE("Eckart-Young against random rank-r competitors") {
  std::mt19937_64 rng(17);
  const Matrix a = gaussian(10, 8, rng);
  const double best = (a - truncated_svd(a, 3).dense()).norm();
  for (int k = 0; k < 100; ++k) {
    const Matrix b = gaussian(10, 3, rng) * gaussian(8, 3, rng).transpose();
    CHECK(best <= (a - b).norm());
  }
}

TEST_CASE("pseudo_inverse of diagonal and invertible matrices") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  const Matrix p = pseudo_inverse(d);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(max_abs(p - Matrix(Eigen::Vector2d(0.5, 0).asDiagonal())) < 1e-15);

  Matrix a(3, 3);
  a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  CHECK(max_abs(a * pseudo_inverse(a) - Matrix::Identity(3, 3)) < 1e-10);
}

TEST_CASE("pseudo_inverse of a rank-1 product matches the closed form") {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd u = gaussian(5, 1, rng);
  const Eigen::VectorXd v = gaussian(4, 1, rng);
  const Matrix a = u * v.transpose();
  const Matrix expect = v * u.transpose() / (u.squaredNorm() * v.squaredNorm());
  CHECK(max_abs(pseudo_inverse(a) - expect) < 1e-10 * max_abs(expect));
}

TEST_CASE("pseudo_inverse satisfies the Moore-Penrose identities at every rank") {
  std::mt19937_64 rng(23);
  for (Index r = 0; r <= 5; ++r) {
    const Matrix a = r == 0 ? Matrix(Matrix::Zero(7, 5))
                            : Matrix(gaussian(7, r, rng) * gaussian(5, r, rng).transpose());
    const Matrix p = pseudo_inverse(a);
    const double scale = std::max(1.0, a.norm());
    CHECK((a * p * a - a).norm() <= 1e-8 * scale);
    CHECK((p * a * p - p).norm() <= 1e-8 * std::max(1.0, p.norm()));
    CHECK((a * p - (a * p).transpose()).norm() <= 1e-8);
    CHECK((p * a - (p * a).transpose()).norm() <= 1e-8);
  }
}

TEST_CASE("cur_reconstruct of the all-ones matrix from one row and column") {
  const CURFactors f = CURFactors::from_matrix(Matrix::Ones(3, 3), {0}, {0});
  CHECK(f.C().rows() == 3);
  CHECK(f.U()(0, 0) == 1.0);
  CHECK(max_abs(cur_reconstruct(f) - Matrix::Ones(3, 3)) < 1e-14);
}

TEST_CASE("cur_reconstruct fails when U loses rank") {
  const Matrix x = Matrix::Identity(2, 2);
  const CURFactors f = CURFactors::from_matrix(x, {0}, {1});
  CHECK(f.U()(0, 0) == 0.0);
  CHECK((x - cur_reconstruct(f)).norm() / x.norm() == doctest::Approx(1.0));
}

TEST_CASE("cur_reconstruct is exact when rank(U) = rank(X)") {
  std::mt19937_64 rng(31);
  int checked = 0;
  while (checked < 20) {
    const Matrix x = rank_r(20, 3, rng);
    IndexList rows;
    IndexList cols;
    std::vector<Index> perm(20);
    for (Index k = 0; k < 20; ++k) perm[std::size_t(k)] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    rows.assign(perm.begin(), perm.begin() + 6);
    std::shuffle(perm.begin(), perm.end(), rng);
    cols.assign(perm.begin(), perm.begin() + 6);
    std::sort(rows.begin(), rows.end());
    std::sort(cols.begin(), cols.end());
    const Eigen::VectorXd s = oracle::singular_values(oracle::block(x, rows, cols));
    if (s(2) < 1e-6 * s(0)) continue;
    const CURFactors f = CURFactors::from_matrix(x, rows, cols);
    CHECK((x - cur_reconstruct(f)).norm() / x.norm() <= 1e-10);
    ++checked;
  }
}

TEST_CASE("CURFactors blocks agree and the cached pseudo-inverse is valid") {
  std::mt19937_64 rng(37);
  const Matrix x = rank_r(15, 2, rng);
  const CURFactors f = CURFactors::from_matrix(x, {1, 4, 9}, {0, 3, 7, 12});
  for (std::size_t a = 0; a < f.I().size(); ++a) {
    CHECK(max_abs(f.C().row(f.I()[a]) - f.U().row(Index(a))) <= 1e-12);
  }
  for (std::size_t b = 0; b < f.J().size(); ++b) {
    CHECK(max_abs(f.R().col(f.J()[b]) - f.U().col(Index(b))) <= 1e-12);
  }
  const Matrix& u = f.U();
  const Matrix& p = f.Upinv();
  CHECK((u * p * u - u).norm() <= 1e-8 * u.norm());
  CHECK((p * u * p - p).norm() <= 1e-8 * p.norm());
}

TEST_CASE("from_blocks rejects inconsistent shapes") {
  CHECK_THROWS_AS(CURFactors::from_blocks(Matrix::Zero(4, 2), Matrix::Zero(2, 2),
                                          Matrix::Zero(3, 5), {0, 1}, {0, 1}),
                  DimensionError);
}

TEST_CASE("CurEvaluator matches the dense product") {
  std::mt19937_64 rng(41);
  const Matrix x = rank_r(12, 3, rng) + 0.01 * gaussian(12, 12, rng);
  const CURFactors f = CURFactors::from_matrix(x, {0, 2, 5, 8}, {1, 3, 4, 10, 11});
  const Matrix dense = f.C() * oracle::pinv(f.U()) * f.R();
  const CurEvaluator eval(f);
  for (Index i = 0; i < 12; ++i) {
    CHECK(max_abs(eval.row(i).transpose() - dense.row(i)) < 1e-9);
    for (Index j = 0; j < 12; ++j) CHECK(eval(i, j) == doctest::Approx(dense(i, j)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(eval(12, 0), DimensionError);
}

TEST_CASE("incoherence of a spike and of the flat matrix") {
  const Index n = 6;
  Matrix spike = Matrix::Zero(n, n);
  spike(0, 0) = 1;
  const Incoherence hi = incoherence(truncated_svd(spike, 1));
  CHECK(hi.mu1 == doctest::Approx(double(n)));
  CHECK(hi.mu2 == doctest::Approx(double(n)));
  const Incoherence lo = incoherence(truncated_svd(Matrix::Ones(n, n) / double(n), 1));
  CHECK(lo.mu1 == doctest::Approx(1.0));
  CHECK(lo.mu2 == doctest::Approx(1.0));
}

TEST_CASE("incoherence matches the oracle recomputation and ignores scaling") {
  std::mt19937_64 rng(43);
  const Index n = 100;
  const Index r = 5;
  const Matrix x = rank_r(n, r, rng);
  const Incoherence mu = incoherence(truncated_svd(x, r));

  Eigen::SelfAdjointEigenSolver<Matrix> es(x * x.transpose());
  const Matrix w = es.eigenvectors().rightCols(r);
  const double oracle_mu1 = double(n) / double(r) * w.rowwise().squaredNorm().maxCoeff();
  CHECK(mu.mu1 == doctest::Approx(oracle_mu1).epsilon(1e-10));

  const Incoherence scaled = incoherence(truncated_svd(-3.5 * x, r));
  CHECK(scaled.mu1 == doctest::Approx(mu.mu1).epsilon(1e-10));
  CHECK(scaled.mu2 == doctest::Approx(mu.mu2).epsilon(1e-10));
  CHECK(mu.mu1 >= 1.0 - 1e-12);
  CHECK(mu.mu1 <= double(n) / double(r) + 1e-9);
}

TEST_CASE("condition_number") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 2, 1;
  CHECK(condition_number(truncated_svd(d, 3)) == doctest::Approx(3.0));

  Eigen::HouseholderQR<Matrix> qr(Matrix::Random(4, 4));
  const Matrix q = qr.householderQ();
  CHECK(condition_number(truncated_svd(q, 4)) == doctest::Approx(1.0));

  Matrix e = Matrix::Zero(2, 2);
  e.diagonal() << 10, 1e-3;
  CHECK(condition_number(truncated_svd(e, 2)) == doctest::Approx(1e4));

  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1;
  CHECK_THROWS_AS(condition_number(truncated_svd(s, 2)), RankDeficiencyError);
}

TEST_CASE("submatrix selection keeps the given order") {
  Matrix a(3, 3);
  a << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const IndexList rows{2, 0};
  const IndexList cols{1};
  const Matrix s = submatrix(a, rows, cols);
  CHECK(s(0, 0) == 8);
  CHECK(s(1, 0) == 2);
  CHECK(select_rows(a, rows)(0, 2) == 9);
  CHECK(select_cols(a, cols)(1, 0) == 5);
}

}  // TEST_SUITE
