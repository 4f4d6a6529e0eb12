#pragma once

#include <functional>

#include "seriesband/regression.hpp"

namespace seriesband {

enum class FunctionalKind { value, partial_derivative, average_derivative, cond_average_derivative };

const char* functional_name(FunctionalKind kind);
FunctionalKind functional_from_name(const std::string& name);

/// A linear functional of the regression function over an index grid.
///
///  - value:                    theta(w) = g(w), grid rows are domain points.
///  - partial_derivative:       theta(w) = d_j g(w), grid rows are domain points.
///  - average_derivative:       theta = integral of d_j g d(mu), a single
///                              scalar; `measure` supplies mu, grid is empty.
///  - cond_average_derivative:  theta(w) = integral of d_coord g(x) d(mu(.|w));
///                              grid rows hold the conditioning coordinates
///                              (all coordinates except `coord`) and
///                              cond_measures[i] integrates coordinate `coord`.
struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::value;
  int coord = 0;
  MatrixXd grid;
  Quadrature measure;
  std::vector<Quadrature> cond_measures;

  void validate(int domain_dim) const;
};

/// Loadings ell_theta(w) stacked by grid row, with their norms. Rows with
/// norm below 1e-12 are rejected at construction (normalization condition on
/// the loadings).
struct LoadingSet {
  MatrixXd loadings;  // |I| x k
  MatrixXd grid;      // |I| x (index dimension); zero columns for scalars
  VectorXd norms;

  long size() const { return loadings.rows(); }
  int k() const { return static_cast<int>(loadings.cols()); }
};

LoadingSet build_loadings(const FunctionalSpec& spec, const Basis& basis);

/// Plug-in estimates theta_hat(w) = ell(w)' beta_hat over the grid.
VectorXd theta_hat(const FitResult& fit, const LoadingSet& loadings);

/// Estimated scales sigma_hat(w) = sqrt(ell(w)' Omega_hat ell(w) / n).
VectorXd sigma_theta_hat(const FitResult& fit, const LoadingSet& loadings);

/// Exact-remainder oracle for a known g: projects g on the basis under F by
/// quadrature, applies the functional's operator to g numerically (central
/// differences with h = 1e-6 for derivatives, measure sums for averages) and
/// returns r_theta(w) = theta(w) - ell(w)' beta_g. Independent of the
/// estimator code path.
VectorXd remainder_oracle(const FunctionalSpec& spec, const Basis& basis,
                          const std::function<double(const VectorXd&)>& g, const Quadrature& f_measure);

}  // namespace seriesband
