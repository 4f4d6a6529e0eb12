#include "seriesband/regression.hpp"

#include <cmath>
#include <sstream>

namespace seriesband {

void Dataset::validate() const {
  if (x.rows() < 1) fail(errc::invalid_spec, "dataset: need at least one observation");
  if (y.size() != x.rows()) fail(errc::dimension_mismatch, "dataset: x and y lengths differ");
  if (!y.allFinite()) fail(errc::invalid_spec, "dataset: y contains non-finite values");
  for (long i = 0; i < x.rows(); ++i)
    for (int c = 0; c < x.cols(); ++c)
      if (!(x(i, c) >= -1e-12 && x(i, c) <= 1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "dataset: x(" << i << "," << c << ") = " << x(i, c) << " outside [0,1]";
        fail(errc::out_of_domain, msg.str());
      }
}

MatrixXd design_matrix(const Dataset& data, const Basis& basis) {
  if (data.dim() != basis.dim())
    fail(errc::dimension_mismatch, "design_matrix: data dimension does not match basis domain");
  MatrixXd p(data.n(), basis.k());
  for (long i = 0; i < data.n(); ++i) p.row(i) = basis.eval(data.x.row(i).transpose()).transpose();
  return p;
}

namespace {

FitResult fit_impl(const Dataset& data, const Basis& basis, const VectorXd& weights) {
  data.validate();
  const long n = data.n();
  const int k = basis.k();
  if (n < k)
    fail(errc::singular_design,
         "fit: n = " + std::to_string(n) + " < k = " + std::to_string(k) +
             " cannot produce a positive definite design (eigenvalue condition violated)");
  if ((weights.array() <= 0.0).any())
    fail(errc::non_positive_weight, "weighted fit: all weights must be strictly positive");

  const MatrixXd p = design_matrix(data, basis);
  const VectorXd wy = weights.cwiseProduct(data.y);
  const MatrixXd pw = p.array().colwise() * weights.array();
  MatrixXd gram = p.transpose() * pw / static_cast<double>(n);
  const VectorXd rhs = p.transpose() * wy / static_cast<double>(n);

  SymMatrix q_hat{0.5 * (gram + gram.transpose())};
  MatrixXd lower;
  try {
    lower = cholesky(q_hat);
  } catch (const Error& e) {
    fail(errc::singular_design,
         std::string("fit: design matrix is singular or ill-conditioned; ") + e.what());
  }

  FitResult out{basis, VectorXd(), VectorXd(), q_hat, SymMatrix(MatrixXd::Zero(k, k)),
                SymMatrix(MatrixXd::Zero(k, k)), MatrixXd(), n};
  // beta solves Q beta = rhs via the triangular factor.
  VectorXd beta = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(beta);
  out.beta_hat = beta;
  out.residuals = data.y - p * beta;

  const VectorXd meat = weights.cwiseProduct(out.residuals.cwiseAbs2());
  MatrixXd sigma = p.transpose() * (p.array().colwise() * meat.array()).matrix();
  sigma /= static_cast<double>(n);
  out.Sigma_hat = SymMatrix(0.5 * (sigma + sigma.transpose()));

  // Omega = Q^{-1} Sigma Q^{-1} through two symmetric triangular sandwiches.
  MatrixXd inner = lower.triangularView<Eigen::Lower>().solve(out.Sigma_hat.mat());
  inner = lower.triangularView<Eigen::Lower>().solve(MatrixXd(inner.transpose()));
  MatrixXd omega = lower.triangularView<Eigen::Lower>().transpose().solve(inner);
  omega = lower.triangularView<Eigen::Lower>().transpose().solve(MatrixXd(omega.transpose()));
  out.Omega_hat = SymMatrix(0.5 * (omega + omega.transpose()));
  out.omega_factor = psd_cholesky(out.Omega_hat);
  return out;
}

}  // namespace

FitResult fit(const Dataset& data, const Basis& basis) {
  return fit_impl(data, basis, VectorXd::Ones(data.n()));
}

FitResult weighted_fit(const Dataset& data, const Basis& basis, const VectorXd& weights) {
  if (weights.size() != data.n()) fail(errc::dimension_mismatch, "weighted_fit: weight length != n");
  return fit_impl(data, basis, weights);
}

double predict(const FitResult& fit, const Eigen::Ref<const VectorXd>& x) {
  return fit.basis.eval(x).dot(fit.beta_hat);
}

double predict(const FitResult& fit, double x) {
  VectorXd p(1);
  p[0] = x;
  return predict(fit, p);
}

VectorXd predict_many(const FitResult& fit, const MatrixXd& points) {
  VectorXd out(points.rows());
  for (long i = 0; i < points.rows(); ++i) out[i] = predict(fit, points.row(i).transpose());
  return out;
}

double gram_deviation(const Dataset& data, const Basis& basis) {
  data.validate();
  const int k = basis.k();
  const MatrixXd p = design_matrix(data, basis);
  MatrixXd gram = p.transpose() * p / static_cast<double>(data.n());
  gram -= MatrixXd::Identity(k, k);
  return operator_norm(0.5 * (gram + gram.transpose()));
}

}  // namespace seriesband
