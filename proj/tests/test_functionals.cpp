#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "seriesband/functionals.hpp"

using namespace seriesband;

namespace {

MatrixXd grid1(std::initializer_list<double> xs) {
  MatrixXd g(static_cast<long>(xs.size()), 1);
  long i = 0;
  for (double x : xs) g(i++, 0) = x;
  return g;
}

FunctionalSpec value_spec(std::initializer_list<double> xs) {
  FunctionalSpec s;
  s.kind = FunctionalKind::value;
  s.grid = grid1(xs);
  return s;
}

Dataset random_data(const RandomStream& s, long n, const std::function<double(double)>& g,
                    double sigma) {
  Dataset d;
  d.x = uniform_vector(s.substream(0), static_cast<int>(n));
  d.y.resize(n);
  const VectorXd z = standard_normal_vector(s.substream(1), static_cast<int>(n));
  for (long i = 0; i < n; ++i) d.y[i] = g(d.x(i, 0)) + sigma * z[i];
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("functionals");

TEST_CASE("value loadings equal basis evaluations") {
  const Basis b = make_basis(BasisSpec::legendre(3));
  const LoadingSet l = build_loadings(value_spec({0.5}), b);
  CHECK(l.loadings(0, 0) == doctest::Approx(1.0));
  CHECK(l.loadings(0, 1) == doctest::Approx(0.0));
  CHECK(l.loadings(0, 2) == doctest::Approx(-std::sqrt(5.0) / 2.0));
}

TEST_CASE("average derivative loading under the uniform measure") {
  const Basis b = make_basis(BasisSpec::legendre(3));
  FunctionalSpec s;
  s.kind = FunctionalKind::average_derivative;
  s.coord = 0;
  s.measure = gauss_legendre(1, 200);
  const LoadingSet l = build_loadings(s, b);
  REQUIRE(l.size() == 1);
  CHECK(l.loadings(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l.loadings(0, 1) == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(std::abs(l.loadings(0, 2)) <= 1e-12);
}

TEST_CASE("derivative loading on the fourier basis") {
  const Basis b = make_basis(BasisSpec::fourier(3));
  FunctionalSpec s;
  s.kind = FunctionalKind::partial_derivative;
  s.grid = grid1({0.0});
  const LoadingSet l = build_loadings(s, b);
  CHECK(l.loadings(0, 0) == doctest::Approx(0.0));
  CHECK(l.loadings(0, 1) == doctest::Approx(0.0));
  CHECK(l.loadings(0, 2) == doctest::Approx(2.0 * std::numbers::pi * std::numbers::sqrt2));
}

TEST_CASE("theta_hat: derivative of a noiseless linear function") {
  const Basis b = make_basis(BasisSpec::legendre(3));
  Dataset d = random_data(RandomStream{31, 0}, 200, [](double x) { return 2.0 * x; }, 0.0);
  const FitResult f = fit(d, b);
  FunctionalSpec s;
  s.kind = FunctionalKind::average_derivative;
  s.measure = gauss_legendre(1, 200);
  const VectorXd th = theta_hat(f, build_loadings(s, b));
  CHECK(th[0] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("theta_hat: zero coefficients and exact agreement with predict") {
  const Basis b = make_basis(BasisSpec::legendre(4));
  Dataset d = random_data(RandomStream{32, 0}, 100, [](double x) { return std::sin(x); }, 0.5);
  FitResult f = fit(d, b);
  const LoadingSet l = build_loadings(value_spec({0.1, 0.4, 0.9}), b);
  const VectorXd th = theta_hat(f, l);
  CHECK(th[0] == predict(f, 0.1));
  CHECK(th[1] == predict(f, 0.4));
  CHECK(th[2] == predict(f, 0.9));

  f.beta_hat.setZero();
  CHECK(theta_hat(f, l).cwiseAbs().maxCoeff() == 0.0);

  FitResult wrong = f;
  wrong.beta_hat = VectorXd::Zero(2);
  CHECK_THROWS_AS(theta_hat(wrong, l), Error);
}

TEST_CASE("sigma_theta_hat: scalar algebra and the quadratic-form oracle") {
  const Basis b = make_basis(BasisSpec::legendre(3));
  Dataset d = random_data(RandomStream{33, 0}, 100, [](double x) { return x; }, 1.0);
  FitResult f = fit(d, b);

  f.Omega_hat = SymMatrix(MatrixXd::Identity(3, 3));
  f.n = 100;
  LoadingSet e1;
  e1.loadings = MatrixXd::Zero(1, 3);
  e1.loadings(0, 0) = 1.0;
  e1.grid = MatrixXd::Zero(1, 1);
  e1.norms = VectorXd::Ones(1);
  CHECK(sigma_theta_hat(f, e1)[0] == doctest::Approx(0.1));

  f.Omega_hat = SymMatrix(4.0 * MatrixXd::Identity(3, 3));
  f.n = 9;
  LoadingSet l3 = e1;
  l3.loadings(0, 0) = 3.0;
  CHECK(sigma_theta_hat(f, l3)[0] == doctest::Approx(2.0));

  // entrywise quadratic-form oracle on the real fit
  const FitResult g = fit(d, b);
  const LoadingSet l = build_loadings(value_spec({0.2, 0.8}), b);
  const VectorXd sg = sigma_theta_hat(g, l);
  for (long i = 0; i < l.size(); ++i) {
    double quad = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) quad += l.loadings(i, a) * g.Omega_hat.mat()(a, c) * l.loadings(i, c);
    CHECK(std::abs(sg[i] - std::sqrt(quad / g.n)) <= 1e-12);
  }

  f.Omega_hat = SymMatrix(MatrixXd::Zero(3, 3));
  CHECK_THROWS_AS(sigma_theta_hat(f, e1), Error);
}

TEST_CASE("zero loadings are rejected") {
  const Basis b = make_basis(BasisSpec::legendre(3));
  FunctionalSpec s;
  s.kind = FunctionalKind::average_derivative;
  // hand-built measure whose weights sum to 1 but sit where the derivative
  // loading vanishes is impossible for this basis; use a zero-weight measure
  s.measure.nodes = MatrixXd::Constant(2, 1, 0.5);
  s.measure.weights = VectorXd::Zero(2);
  CHECK_THROWS_AS(build_loadings(s, b), Error);  // invalid measure (weights must be positive)

  // genuinely zero loading row: derivative of the constant-only basis
  FunctionalSpec deriv;
  deriv.kind = FunctionalKind::partial_derivative;
  deriv.grid = grid1({0.5});
  const Basis constant_only = make_basis(BasisSpec::legendre(1));
  try {
    build_loadings(deriv, constant_only);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::zero_loading);
  }
}

TEST_CASE("remainder oracle: in-span functions have zero remainder") {
  const Basis b = make_basis(BasisSpec::legendre(4));
  const Quadrature f_measure = gauss_legendre(1, 200);
  auto g = [&b](const VectorXd& x) { return b.eval(x)[2]; };  // second basis function

  for (FunctionalKind kind : {FunctionalKind::value, FunctionalKind::partial_derivative,
                              FunctionalKind::average_derivative}) {
    FunctionalSpec s;
    s.kind = kind;
    if (kind == FunctionalKind::average_derivative) {
      s.measure = gauss_legendre(1, 200);
    } else {
      s.grid = grid1({0.1, 0.5, 0.9});
    }
    const VectorXd r = remainder_oracle(s, b, g, f_measure);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("remainder oracle: closed form for x^2 against the linear basis") {
  const Basis b = make_basis(BasisSpec::legendre(2));
  const Quadrature f_measure = gauss_legendre(1, 200);
  auto g = [](const VectorXd& x) { return x[0] * x[0]; };
  const VectorXd r = remainder_oracle(value_spec({0.0, 0.5}), b, g, f_measure);
  // projection of x^2 on {1, x} under U(0,1) is x - 1/6
  CHECK(r[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  CHECK(r[1] == doctest::Approx(-1.0 / 12.0).epsilon(1e-9));
}

TEST_CASE("conditional average derivative on a d = 2 basis") {
  const Basis b = make_basis(BasisSpec::tensor({BasisSpec::legendre(3), BasisSpec::legendre(3)}));
  FunctionalSpec s;
  s.kind = FunctionalKind::cond_average_derivative;
  s.coord = 0;
  s.grid = grid1({0.25, 0.75});  // conditioning values of x2
  s.cond_measures = {gauss_legendre(1, 100), gauss_legendre(1, 100)};

  const LoadingSet l = build_loadings(s, b);
  REQUIRE(l.size() == 2);

  // manual check against the quadrature sum
  const Quadrature& m = s.cond_measures[0];
  VectorXd manual = VectorXd::Zero(b.k());
  for (long q = 0; q < m.size(); ++q) {
    VectorXd x(2);
    x << m.nodes(q, 0), 0.25;
    manual += m.weights[q] * b.eval_deriv(x, 0, 1);
  }
  CHECK((l.loadings.row(0).transpose() - manual).cwiseAbs().maxCoeff() <= 1e-12);

  // in-span remainder vanishes
  auto g = [&b](const VectorXd& x) { return b.eval(x)[4]; };
  const VectorXd r = remainder_oracle(s, b, g, gauss_legendre(2, 60));
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("value-functional loading norms equal the diagnostics sup on the same grid") {
  const Basis b = make_basis(BasisSpec::legendre(4));
  const int g = 101;
  MatrixXd grid(g, 1);
  for (int i = 0; i < g; ++i) grid(i, 0) = static_cast<double>(i) / (g - 1);
  FunctionalSpec s;
  s.kind = FunctionalKind::value;
  s.grid = grid;
  const LoadingSet l = build_loadings(s, b);
  CHECK(l.norms.maxCoeff() == doctest::Approx(diagnostics(b, 101).xi_k).epsilon(1e-12));
}

TEST_SUITE_END();
