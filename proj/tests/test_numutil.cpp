#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "seriesband/numutil.hpp"

using namespace seriesband;

TEST_SUITE_BEGIN("numutil");

TEST_CASE("normal draws are reproducible for a fixed descriptor") {
  const RandomStream s{7, 0};
  const VectorXd a = standard_normal_vector(s, 3);
  const VectorXd b = standard_normal_vector(s, 3);
  CHECK(a == b);  // bit identical
  const VectorXd c = standard_normal_vector(RandomStream{7, 1}, 3);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("pooled normal draws match N(0,1) moments") {
  // 10^6 draws pooled over substreams
  const RandomStream base{1234, 0};
  double sum = 0.0, sumsq = 0.0;
  const int chunks = 100, per = 10000;
  for (int c = 0; c < chunks; ++c) {
    const VectorXd z = standard_normal_vector(base.substream(c), per);
    sum += z.sum();
    sumsq += z.squaredNorm();
  }
  const double n = static_cast<double>(chunks) * per;
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("exponential weights have unit mean and positive support") {
  const RandomStream s{99, 5};
  const VectorXd h = exponential_weights(s, 1000000);
  CHECK(std::abs(h.mean() - 1.0) < 0.01);
  CHECK(h.minCoeff() > 0.0);
  CHECK(h == exponential_weights(s, 1000000));
}

TEST_CASE("gauss-legendre integrates exactly on [0,1]") {
  const Quadrature q1 = gauss_legendre(1, 5);
  CHECK(q1.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
  double x2 = 0.0;
  for (long i = 0; i < q1.size(); ++i) x2 += q1.weights[i] * q1.nodes(i, 0) * q1.nodes(i, 0);
  CHECK(std::abs(x2 - 1.0 / 3.0) < 1e-14);

  const Quadrature q2 = gauss_legendre(2, 4);
  double xy = 0.0;
  for (long i = 0; i < q2.size(); ++i) xy += q2.weights[i] * q2.nodes(i, 0) * q2.nodes(i, 1);
  CHECK(std::abs(xy - 0.25) < 1e-14);

  CHECK(q2.weights.minCoeff() > 0.0);
  CHECK_THROWS_AS(gauss_legendre(4, 3), Error);
}

TEST_CASE("m-node rules are exact to degree 2m-1") {
  for (int m : {2, 3, 5, 8, 20}) {
    const Quadrature q = gauss_legendre(1, m);
    const int deg = 2 * m - 1;
    double acc = 0.0;
    for (long i = 0; i < q.size(); ++i) acc += q.weights[i] * std::pow(q.nodes(i, 0), deg);
    CHECK(std::abs(acc - 1.0 / (deg + 1)) < 1e-12);  // integral of x^deg over [0,1]
  }
}

TEST_CASE("cholesky hand-checked factors and failures") {
  CHECK((cholesky(SymMatrix(MatrixXd::Identity(4, 4))) - MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() == doctest::Approx(0.0));

  MatrixXd m(2, 2);
  m << 4, 2, 2, 5;
  const MatrixXd lower = cholesky(SymMatrix(m));
  CHECK(lower(0, 0) == doctest::Approx(2.0));
  CHECK(lower(1, 0) == doctest::Approx(1.0));
  CHECK(lower(1, 1) == doctest::Approx(2.0));
  CHECK(lower(0, 1) == 0.0);

  MatrixXd bad(2, 2);
  bad << 1, 1, 1, 1;
  CHECK_THROWS_AS(cholesky(SymMatrix(bad)), Error);
}

TEST_CASE("cholesky round-trips random PSD matrices up to dim 50") {
  const RandomStream s{42, 0};
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 5 + trial * 2;
    const VectorXd raw = standard_normal_vector(s.substream(trial), k * k);
    MatrixXd a(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) a(i, j) = raw[i * k + j];
    const MatrixXd m = a * a.transpose() + 1e-3 * MatrixXd::Identity(k, k);
    const MatrixXd lower = cholesky(SymMatrix(m));
    const double rel = (lower * lower.transpose() - m).norm() / m.norm();
    CHECK(rel <= 1e-10);
  }
}

TEST_CASE("psd cholesky tolerates rank deficiency") {
  MatrixXd m = MatrixXd::Zero(3, 3);
  CHECK(psd_cholesky(SymMatrix(m)).cwiseAbs().maxCoeff() == 0.0);

  // rank-one PSD
  VectorXd v(3);
  v << 1, 2, 3;
  const MatrixXd r1 = v * v.transpose();
  const MatrixXd lower = psd_cholesky(SymMatrix(r1));
  CHECK((lower * lower.transpose() - r1).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(psd_cholesky(SymMatrix(MatrixXd(-MatrixXd::Identity(2, 2)))), Error);
}

TEST_CASE("sym_sqrt basics") {
  CHECK((sym_sqrt(SymMatrix(MatrixXd::Identity(3, 3))).mat() - MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const MatrixXd s = sym_sqrt(SymMatrix(d)).mat();
  CHECK(s(0, 0) == doctest::Approx(2.0));
  CHECK(s(1, 1) == doctest::Approx(3.0));
  CHECK_THROWS_AS(sym_sqrt(SymMatrix(MatrixXd(-MatrixXd::Identity(2, 2)))), Error);
}

TEST_CASE("matrix square roots are Lipschitz in the matrix argument") {
  // ||A^1/2 - B^1/2|| <= ||A - B|| ||B^-1||^1/2 over random PSD pairs, B PD
  const RandomStream s{2024, 0};
  const int k = 5;
  for (int trial = 0; trial < 1000; ++trial) {
    const VectorXd raw = standard_normal_vector(s.substream(trial), 2 * k * k);
    MatrixXd ra(k, k), rb(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        ra(i, j) = raw[i * k + j];
        rb(i, j) = raw[k * k + i * k + j];
      }
    const MatrixXd a = ra * ra.transpose();
    const MatrixXd b = rb * rb.transpose() + 0.05 * MatrixXd::Identity(k, k);
    const MatrixXd sa = sym_sqrt(SymMatrix(a)).mat();
    const MatrixXd sb = sym_sqrt(SymMatrix(b)).mat();
    const double lhs = operator_norm(sa - sb);
    const double b_inv_norm = 1.0 / Eigen::SelfAdjointEigenSolver<MatrixXd>(b).eigenvalues().minCoeff();
    const double rhs = operator_norm(a - b) * std::sqrt(b_inv_norm);
    CHECK(lhs <= rhs * (1.0 + 1e-10));
  }
}

TEST_CASE("SymMatrix rejects gross asymmetry and symmetrizes roundoff") {
  MatrixXd m(2, 2);
  m << 1, 2, 2 + 1e-15, 1;
  const SymMatrix sym(m);
  CHECK(sym.mat()(0, 1) == sym.mat()(1, 0));
  m(1, 0) = 3;
  CHECK_THROWS_AS(SymMatrix{m}, Error);
}

TEST_SUITE_END();
