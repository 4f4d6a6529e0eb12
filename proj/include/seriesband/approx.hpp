#pragma once

#include <functional>

#include "seriesband/bases.hpp"

namespace seriesband {

using RealFunction = std::function<double(const VectorXd&)>;

/// L2(F) projection of g on the basis span.
struct Projection {
  VectorXd beta;
  RealFunction residual;  // r_g(x) = g(x) - p(x)' beta
};

Projection project(const RealFunction& g, const Basis& basis, const Quadrature& f_measure);

/// Approximation-error diagnostics: c_k_hat is the L2(F) norm of the
/// projection residual, sup_err its sup norm on an equispaced grid, and
/// lebesgue_factor their ratio (1 by convention when c_k_hat < 1e-12).
struct ApproxReport {
  int k = 0;
  double c_k_hat = 0.0;
  double sup_err = 0.0;
  double lebesgue_factor = 1.0;
  VectorXd beta_g;
};

ApproxReport approx_report(const RealFunction& g, const Basis& basis, const Quadrature& f_measure,
                           int sup_grid = 2001);

/// Grid lower bound on the Lebesgue constant sup_f ||p' beta_f||_inf / ||f||_inf,
/// maximized over the supplied trial functions.
double lebesgue_probe(const Basis& basis, const Quadrature& f_measure,
                      const std::vector<RealFunction>& trials, int sup_grid = 2001);

}  // namespace seriesband
