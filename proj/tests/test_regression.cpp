#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "seriesband/regression.hpp"

using namespace seriesband;

namespace {

Dataset make_data(const VectorXd& x, const VectorXd& y) {
  Dataset d;
  d.x = x;
  d.y = y;
  return d;
}

Dataset random_design(const RandomStream& s, long n, int d = 1) {
  Dataset data;
  const VectorXd us = uniform_vector(s, static_cast<int>(n) * d);
  data.x.resize(n, d);
  for (long i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) data.x(i, c) = us[i * d + c];
  data.y = VectorXd::Zero(n);
  return data;
}

// independent oracle: assemble the k x k normal equations densely and solve
// by full-pivot LU
VectorXd dense_normal_equations(const Dataset& data, const Basis& basis, const VectorXd* w = nullptr) {
  const MatrixXd p = design_matrix(data, basis);
  const VectorXd h = w ? *w : VectorXd::Ones(data.n());
  MatrixXd gram = MatrixXd::Zero(basis.k(), basis.k());
  VectorXd rhs = VectorXd::Zero(basis.k());
  for (long i = 0; i < data.n(); ++i) {
    gram += h[i] * p.row(i).transpose() * p.row(i);
    rhs += h[i] * data.y[i] * p.row(i).transpose();
  }
  return gram.fullPivLu().solve(rhs);
}

}  // namespace

TEST_SUITE_BEGIN("regression");

TEST_CASE("collinear points are interpolated by a linear-capable basis") {
  VectorXd x(3), y(3);
  x << 0.0, 0.5, 1.0;
  y << 0.0, 0.5, 1.0;
  const FitResult f = fit(make_data(x, y), make_basis(BasisSpec::legendre(2)));
  CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-10);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(predict(f, x[i]) - y[i]) <= 1e-10);
}

TEST_CASE("noiseless in-span data recovers the coefficients") {
  const Basis basis = make_basis(BasisSpec::legendre(4));
  Dataset data = random_design(RandomStream{11, 0}, 200);
  VectorXd b0(4);
  b0 << 0.3, -1.2, 2.0, 0.7;
  data.y = design_matrix(data, basis) * b0;
  const FitResult f = fit(data, basis);
  CHECK((f.beta_hat - b0).norm() <= 1e-8);
}

TEST_CASE("fit agrees with the dense normal-equation oracle") {
  const RandomStream s{314, 0};
  for (int trial = 0; trial < 25; ++trial) {
    const long n = 60 + 17 * trial;
    const int k = 3 + trial % 8;
    const Basis basis = make_basis(BasisSpec::legendre(k));
    Dataset data = random_design(s.substream(trial), n);
    data.y = standard_normal_vector(s.substream(1000 + trial), static_cast<int>(n));
    const FitResult f = fit(data, basis);
    CHECK((f.beta_hat - dense_normal_equations(data, basis)).cwiseAbs().maxCoeff() <= 1e-10);

    // normal equations hold at the solution
    const MatrixXd p = design_matrix(data, basis);
    const VectorXd gap = f.Q_hat.mat() * f.beta_hat - p.transpose() * data.y / double(n);
    CHECK(gap.norm() <= 1e-8 * (1.0 + f.beta_hat.norm()));
    // residual orthogonality
    CHECK((p.transpose() * f.residuals / double(n)).norm() <=
          1e-8 * (1.0 + data.y.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("predict equals the dot-product oracle") {
  const Basis basis = make_basis(BasisSpec::fourier(5));
  Dataset data = random_design(RandomStream{21, 0}, 100);
  data.y = standard_normal_vector(RandomStream{21, 1}, 100);
  const FitResult f = fit(data, basis);
  for (double x : {0.0, 0.31, 0.77, 1.0}) CHECK(predict(f, x) == basis.eval(x).dot(f.beta_hat));

  FitResult zero = f;
  zero.beta_hat.setZero();
  CHECK(predict(zero, 0.4) == 0.0);
}

TEST_CASE("weighted fit: unit weights reproduce fit bit for bit") {
  const Basis basis = make_basis(BasisSpec::bspline(7, 2));
  Dataset data = random_design(RandomStream{5, 0}, 150);
  data.y = standard_normal_vector(RandomStream{5, 1}, 150);
  const FitResult a = fit(data, basis);
  const FitResult b = weighted_fit(data, basis, VectorXd::Ones(150));
  CHECK(a.beta_hat == b.beta_hat);
  CHECK(a.Omega_hat.mat() == b.Omega_hat.mat());
  CHECK(a.residuals == b.residuals);
}

TEST_CASE("weighted fit: constant weights leave the argmin unchanged") {
  const Basis basis = make_basis(BasisSpec::legendre(4));
  Dataset data = random_design(RandomStream{6, 0}, 120);
  data.y = standard_normal_vector(RandomStream{6, 1}, 120);
  const FitResult a = fit(data, basis);
  const FitResult b = weighted_fit(data, basis, VectorXd::Constant(120, 3.5));
  CHECK((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("weighted fit matches the weighted oracle under random weights") {
  const Basis basis = make_basis(BasisSpec::legendre(5));
  Dataset data = random_design(RandomStream{7, 0}, 200);
  data.y = standard_normal_vector(RandomStream{7, 1}, 200);
  const VectorXd h = exponential_weights(RandomStream{7, 2}, 200);
  const FitResult f = weighted_fit(data, basis, h);
  CHECK((f.beta_hat - dense_normal_equations(data, basis, &h)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK_THROWS_AS(weighted_fit(data, basis, VectorXd::Zero(200)), Error);
}

TEST_CASE("projection idempotence") {
  const Basis basis = make_basis(BasisSpec::legendre(5));
  Dataset data = random_design(RandomStream{8, 0}, 150);
  data.y = standard_normal_vector(RandomStream{8, 1}, 150);
  const FitResult f = fit(data, basis);
  Dataset refit_data = data;
  refit_data.y = data.y - f.residuals;  // fitted values
  const FitResult g = fit(refit_data, basis);
  CHECK((f.beta_hat - g.beta_hat).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("affine equivariance in y") {
  const Basis basis = make_basis(BasisSpec::legendre(4));
  Dataset data = random_design(RandomStream{9, 0}, 100);
  data.y = standard_normal_vector(RandomStream{9, 1}, 100);
  const FitResult f = fit(data, basis);
  VectorXd c(4);
  c << 1.0, -2.0, 0.5, 3.0;
  Dataset shifted = data;
  shifted.y = 2.5 * data.y + design_matrix(data, basis) * c;
  const FitResult g = fit(shifted, basis);
  CHECK((g.beta_hat - (2.5 * f.beta_hat + c)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("singular designs are rejected with the smallest pivot reported") {
  const Basis basis = make_basis(BasisSpec::legendre(5));
  Dataset tiny = random_design(RandomStream{10, 0}, 3);
  tiny.y = VectorXd::Zero(3);
  CHECK_THROWS_WITH_AS(fit(tiny, basis), doctest::Contains("n = 3"), Error);

  // n >= k but all points identical: collinear design
  Dataset flat;
  flat.x = MatrixXd::Constant(10, 1, 0.5);
  flat.y = VectorXd::Ones(10);
  try {
    fit(flat, make_basis(BasisSpec::legendre(3)));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::singular_design);
    CHECK(std::string(e.what()).find("pivot") != std::string::npos);
  }
}

TEST_CASE("Sigma and Omega are PSD and the factor reproduces Omega") {
  const Basis basis = make_basis(BasisSpec::legendre(4));
  Dataset data = random_design(RandomStream{12, 0}, 300);
  data.y = standard_normal_vector(RandomStream{12, 1}, 300);
  const FitResult f = fit(data, basis);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_s(f.Sigma_hat.mat());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_o(f.Omega_hat.mat());
  CHECK(es_s.eigenvalues().minCoeff() >= -1e-10 * es_s.eigenvalues().maxCoeff());
  CHECK(es_o.eigenvalues().minCoeff() >= -1e-10 * es_o.eigenvalues().maxCoeff());
  CHECK((f.omega_factor * f.omega_factor.transpose() - f.Omega_hat.mat()).cwiseAbs().maxCoeff() <=
        1e-10 * (1.0 + f.Omega_hat.mat().cwiseAbs().maxCoeff()));
}

TEST_CASE("gram deviation: rank-one eigenvalue oracle at n = 1") {
  const Basis basis = make_basis(BasisSpec::legendre(3));
  Dataset one;
  one.x = MatrixXd::Constant(1, 1, 0.8);
  one.y = VectorXd::Zero(1);
  const VectorXd p = basis.eval(0.8);
  const double v = p.squaredNorm();
  // eigenvalues of p p' - I are {v - 1, -1, ..., -1}
  const double expected = std::max(std::abs(v - 1.0), 1.0);
  CHECK(gram_deviation(one, basis) == doctest::Approx(expected).epsilon(1e-12));

  MatrixXd m = p * p.transpose() - MatrixXd::Identity(3, 3);
  CHECK(operator_norm(m) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("weighted gram at quadrature nodes reproduces the identity") {
  const Basis basis = make_basis(BasisSpec::legendre(4));
  const Quadrature quad = gauss_legendre(1, 50);
  Dataset nodes;
  nodes.x = quad.nodes;
  nodes.y = VectorXd::Ones(quad.size());
  const VectorXd h = quad.weights * static_cast<double>(quad.size());
  const FitResult f = weighted_fit(nodes, basis, h);
  CHECK(operator_norm(f.Q_hat.mat() - MatrixXd::Identity(4, 4)) <= 1e-8);
}

TEST_CASE("gram deviation shrinks with n for an orthonormal basis") {
  const Basis basis = make_basis(BasisSpec::legendre(5));
  const Dataset data = random_design(RandomStream{13, 0}, 100000);
  CHECK(gram_deviation(data, basis) <= 0.2);
}

TEST_CASE("Omega approaches sigma^2 I under homoskedastic noise") {
  const Basis basis = make_basis(BasisSpec::legendre(5));
  Dataset data = random_design(RandomStream{14, 0}, 100000);
  const double sigma = 0.7;
  data.y = sigma * standard_normal_vector(RandomStream{14, 1}, 100000);
  const FitResult f = fit(data, basis);
  CHECK(operator_norm(f.Omega_hat.mat() - sigma * sigma * MatrixXd::Identity(5, 5)) <=
        0.3 * sigma * sigma);
}

TEST_SUITE_END();
