#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "seriesband/bases.hpp"

using namespace seriesband;

namespace {

// central finite difference of a basis component, h = 1e-6
double fd_component(const Basis& basis, double x, int j, int order) {
  const double h = 1e-6;
  const double lo = std::max(x - h, 0.0), hi = std::min(x + h, 1.0);
  if (order == 1) return (basis.eval(hi)[j] - basis.eval(lo)[j]) / (hi - lo);
  return (basis.eval(hi)[j] - 2.0 * basis.eval(x)[j] + basis.eval(lo)[j]) / (h * h);
}

// per-cell composite Gauss rule; exact for piecewise polynomials with
// breakpoints at the cell boundaries (a single global rule is not)
Quadrature composite_quadrature(int cells, int nodes_per_cell) {
  const Quadrature unit = gauss_legendre(1, nodes_per_cell);
  Quadrature q;
  q.nodes.resize(static_cast<long>(cells) * unit.size(), 1);
  q.weights.resize(static_cast<long>(cells) * unit.size());
  for (int c = 0; c < cells; ++c)
    for (long i = 0; i < unit.size(); ++i) {
      q.nodes(c * unit.size() + i, 0) = (c + unit.nodes(i, 0)) / cells;
      q.weights[c * unit.size() + i] = unit.weights[i] / cells;
    }
  return q;
}

}  // namespace

TEST_SUITE_BEGIN("bases");

TEST_CASE("shifted Legendre closed-form values") {
  const Basis b = make_basis(BasisSpec::legendre(3));
  const VectorXd at_one = b.eval(1.0);
  CHECK(at_one[0] == doctest::Approx(1.0));
  CHECK(at_one[1] == doctest::Approx(std::sqrt(3.0)));
  CHECK(at_one[2] == doctest::Approx(std::sqrt(5.0)));

  const VectorXd mid = b.eval(0.5);
  CHECK(mid[0] == doctest::Approx(1.0));
  CHECK(mid[1] == doctest::Approx(0.0));
  CHECK(mid[2] == doctest::Approx(-std::sqrt(5.0) / 2.0));
}

TEST_CASE("fourier values and the odd-k requirement") {
  const Basis b = make_basis(BasisSpec::fourier(3));
  const VectorXd at_zero = b.eval(0.0);
  CHECK(at_zero[0] == doctest::Approx(1.0));
  CHECK(at_zero[1] == doctest::Approx(std::numbers::sqrt2));
  CHECK(at_zero[2] == doctest::Approx(0.0));
  CHECK_THROWS_AS(make_basis(BasisSpec::fourier(4)), Error);
}

TEST_CASE("raw b-splines are a partition of unity") {
  for (int order : {1, 2, 3}) {
    const Basis b = make_basis(BasisSpec::bspline(8, order));
    const VectorXd xs = uniform_vector(RandomStream{5, static_cast<std::uint64_t>(order)}, 1000);
    for (long i = 0; i < xs.size(); ++i) {
      const VectorXd p = b.eval(xs[i]);
      CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
      CHECK((p.array() != 0.0).count() <= order + 1);
    }
  }
  CHECK_THROWS_AS(make_basis(BasisSpec::bspline(2, 1)), Error);  // k >= order + 2
}

TEST_CASE("partition series is local with one active cell") {
  const Basis b = make_basis(BasisSpec::partition(4, 0));
  const VectorXd p = b.eval(0.3);
  int nonzero = 0;
  for (int j = 0; j < 4; ++j) nonzero += p[j] != 0.0 ? 1 : 0;
  CHECK(nonzero == 1);
  CHECK(p[1] != 0.0);  // 0.3 lies in cell 2 of 4
  CHECK_THROWS_AS(make_basis(BasisSpec::partition(5, 1)), Error);  // (order+1) must divide k

  const Basis b2 = make_basis(BasisSpec::partition(9, 2));
  const VectorXd q = b2.eval(0.7);
  CHECK((q.array() != 0.0).count() <= 3);
}

TEST_CASE("tensor product equals the outer product of components") {
  const Basis b = make_basis(BasisSpec::tensor({BasisSpec::legendre(2), BasisSpec::legendre(2)}));
  VectorXd x(2);
  x << 1.0, 1.0;
  const VectorXd p = b.eval(x);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(std::sqrt(3.0)));
  CHECK(p[2] == doctest::Approx(std::sqrt(3.0)));
  CHECK(p[3] == doctest::Approx(3.0));

  // exact outer-product identity at random points
  const Basis c1 = make_basis(BasisSpec::legendre(3));
  const Basis c2 = make_basis(BasisSpec::fourier(3));
  const Basis prod = make_basis(BasisSpec::tensor({BasisSpec::legendre(3), BasisSpec::fourier(3)}));
  const VectorXd us = uniform_vector(RandomStream{77, 0}, 40);
  for (int t = 0; t < 20; ++t) {
    VectorXd pt(2);
    pt << us[2 * t], us[2 * t + 1];
    const VectorXd lhs = prod.eval(pt);
    const VectorXd a = c1.eval(pt[0]), bv = c2.eval(pt[1]);
    for (int j = 0; j < 9; ++j) CHECK(lhs[j] == a[j % 3] * bv[j / 3]);
  }
}

TEST_CASE("derivatives: closed forms") {
  const Basis leg = make_basis(BasisSpec::legendre(3));
  for (double x : {0.0, 0.25, 0.8}) {
    CHECK(leg.eval_deriv(x, 0, 1)[1] == doctest::Approx(2.0 * std::sqrt(3.0)));
  }
  const Basis fou = make_basis(BasisSpec::fourier(3));
  const VectorXd d0 = fou.eval_deriv(0.0, 0, 1);
  CHECK(d0[0] == doctest::Approx(0.0));
  CHECK(d0[1] == doctest::Approx(0.0));
  CHECK(d0[2] == doctest::Approx(2.0 * std::numbers::pi * std::numbers::sqrt2));
}

TEST_CASE("derivatives match central finite differences uniformly") {
  const std::vector<Basis> cases = {
      make_basis(BasisSpec::legendre(6)),
      make_basis(BasisSpec::fourier(5)),
      make_basis(BasisSpec::bspline(10, 3)),
  };
  for (const Basis& b : cases) {
    const double xi = diagnostics(b, 512).xi_k;
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = 1e-5 + (1.0 - 2e-5) * i / 1000.0;
      const VectorXd an = b.eval_deriv(x, 0, 1);
      for (int j = 0; j < b.k(); ++j) worst = std::max(worst, std::abs(an[j] - fd_component(b, x, j, 1)));
    }
    CHECK(worst <= 1e-5 * xi);
  }
}

TEST_CASE("differentiability guards") {
  const Basis b1 = make_basis(BasisSpec::bspline(6, 1));
  CHECK_THROWS_AS(b1.eval_deriv(0.5, 0, 2), Error);
  const Basis p0 = make_basis(BasisSpec::partition(4, 0));
  CHECK_THROWS_AS(p0.eval_deriv(0.5, 0, 1), Error);
}

TEST_CASE("orthonormality under the uniform measure") {
  struct Case {
    Basis basis;
    Quadrature quad;
  };
  const std::vector<Case> orthonormal = {
      {make_basis(BasisSpec::legendre(7)), gauss_legendre(1, 200)},
      {make_basis(BasisSpec::fourier(7)), gauss_legendre(1, 200)},
      {make_basis(BasisSpec::partition(8, 1)), composite_quadrature(4, 50)},
  };
  for (const auto& [b, quad] : orthonormal) {
    MatrixXd gram = MatrixXd::Zero(b.k(), b.k());
    for (long q = 0; q < quad.size(); ++q) {
      const VectorXd p = b.eval(quad.nodes.row(q).transpose());
      gram += quad.weights[q] * p * p.transpose();
    }
    CHECK((gram - MatrixXd::Identity(b.k(), b.k())).cwiseAbs().maxCoeff() <= 1e-8);
    // E||p(x)||^2 = k
    CHECK(gram.trace() == doctest::Approx(static_cast<double>(b.k())).epsilon(1e-6));
  }

  const Quadrature quad2 = gauss_legendre(2, 60);
  const Basis t = make_basis(BasisSpec::tensor({BasisSpec::legendre(3), BasisSpec::legendre(3)}));
  MatrixXd gram = MatrixXd::Zero(9, 9);
  for (long q = 0; q < quad2.size(); ++q) {
    const VectorXd p = t.eval(quad2.nodes.row(q).transpose());
    gram += quad2.weights[q] * p * p.transpose();
  }
  CHECK((gram - MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("orthonormalize: identity transform for an orthonormal family") {
  const Quadrature quad = gauss_legendre(1, 200);
  const Basis leg = make_basis(BasisSpec::legendre(5));
  const Basis onb = orthonormalize(leg, quad);
  CHECK((onb.transform() - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("orthonormalize: raw monomials become orthonormal") {
  const Quadrature quad = gauss_legendre(1, 200);
  const Basis mono = make_monomial_basis(3);
  const Basis onb = orthonormalize(mono, quad);
  MatrixXd gram = MatrixXd::Zero(3, 3);
  for (long q = 0; q < quad.size(); ++q) {
    const VectorXd p = onb.eval(quad.nodes.row(q).transpose());
    gram += quad.weights[q] * p * p.transpose();
  }
  CHECK((gram - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("orthonormalize rejects collinear functions") {
  // (x, 2x) through a transform of the monomial pair (1, x) -> (x, 2x)
  MatrixXd collinear(2, 2);
  collinear << 0, 1, 0, 2;
  const Basis bad = make_monomial_basis(2).with_transform(collinear);
  CHECK_THROWS_AS(orthonormalize(bad, gauss_legendre(1, 64)), Error);
}

TEST_CASE("diagnostics: xi_k closed forms") {
  CHECK(diagnostics(make_basis(BasisSpec::legendre(3)), 4096).xi_k == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(diagnostics(make_basis(BasisSpec::fourier(5)), 4096).xi_k ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-6));
  const double xi_spline = diagnostics(make_basis(BasisSpec::bspline(8, 1)), 2048).xi_k;
  CHECK(xi_spline <= 3.0 * std::sqrt(8.0));
  CHECK(diagnostics(make_basis(BasisSpec::legendre(3)), 128).grid_size == 128);
  CHECK_THROWS_AS(diagnostics(make_basis(BasisSpec::legendre(3)), 32), Error);
}

TEST_CASE("domain guard") {
  const Basis b = make_basis(BasisSpec::legendre(3));
  CHECK_THROWS_AS(b.eval(1.5), Error);
  CHECK_THROWS_AS(b.eval(-0.1), Error);
  CHECK(b.eval(1.0 + 1e-13).allFinite());  // within slack
}

TEST_CASE("additive dictionary is orthonormal and additive") {
  const Basis add = make_additive_basis({BasisSpec::legendre(3), BasisSpec::legendre(3)});
  CHECK(add.k() == 5);
  const Quadrature quad2 = gauss_legendre(2, 60);
  MatrixXd gram = MatrixXd::Zero(5, 5);
  for (long q = 0; q < quad2.size(); ++q) {
    const VectorXd p = add.eval(quad2.nodes.row(q).transpose());
    gram += quad2.weights[q] * p * p.transpose();
  }
  CHECK((gram - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-8);

  // cross-partial of an additive dictionary vanishes
  VectorXd x(2);
  x << 0.3, 0.7;
  const VectorXd d1 = add.eval_deriv(x, 0, 1);
  CHECK(d1[3] == 0.0);
  CHECK(d1[4] == 0.0);
}

TEST_SUITE_END();
