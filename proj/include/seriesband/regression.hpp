#pragma once

#include "seriesband/bases.hpp"
#include "seriesband/numutil.hpp"

namespace seriesband {

struct Dataset {
  MatrixXd x;  // n x d, points in [0,1]^d
  VectorXd y;  // n responses

  long n() const { return x.rows(); }
  int dim() const { return static_cast<int>(x.cols()); }
  void validate() const;
};

/// Least-squares series fit with the sandwich matrices of the robust
/// variance estimator: Q = E_n[p p'], Sigma = E_n[eps^2 p p'],
/// Omega = Q^{-1} Sigma Q^{-1}, and a lower-triangular factor of Omega for
/// critical-value simulation.
struct FitResult {
  Basis basis;
  VectorXd beta_hat;
  VectorXd residuals;
  SymMatrix Q_hat;
  SymMatrix Sigma_hat;
  SymMatrix Omega_hat;
  MatrixXd omega_factor;  // lower-triangular, omega_factor * omega_factor' = Omega_hat
  long n = 0;

  int k() const { return static_cast<int>(beta_hat.size()); }
};

/// Design matrix P with rows p(x_i)'.
MatrixXd design_matrix(const Dataset& data, const Basis& basis);

FitResult fit(const Dataset& data, const Basis& basis);

/// Least squares with observation weights h_i > 0 (empirical measure
/// reweighted; h == 1 reproduces fit bit for bit).
FitResult weighted_fit(const Dataset& data, const Basis& basis, const VectorXd& weights);

double predict(const FitResult& fit, const Eigen::Ref<const VectorXd>& x);
double predict(const FitResult& fit, double x);
VectorXd predict_many(const FitResult& fit, const MatrixXd& points);

/// Operator norm of Q_hat - I; meaningful when the basis is orthonormal with
/// respect to the sampling distribution of x.
double gram_deviation(const Dataset& data, const Basis& basis);

}  // namespace seriesband
