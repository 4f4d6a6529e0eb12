#include "seriesband/approx.hpp"

#include <cmath>

namespace seriesband {

namespace {

VectorXd project_beta(const RealFunction& g, const Basis& basis, const Quadrature& f_measure) {
  if (f_measure.dim() != basis.dim())
    fail(errc::dimension_mismatch, "project: measure dimension does not match basis domain");
  const int k = basis.k();
  MatrixXd gram = MatrixXd::Zero(k, k);
  VectorXd rhs = VectorXd::Zero(k);
  for (long q = 0; q < f_measure.size(); ++q) {
    const VectorXd x = f_measure.nodes.row(q).transpose();
    const VectorXd p = basis.eval(x);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(p, f_measure.weights[q]);
    rhs += f_measure.weights[q] * g(x) * p;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  const MatrixXd lower = cholesky(SymMatrix(gram));
  VectorXd beta = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(beta);
  return beta;
}

// Equispaced grid sweep of f over [0,1]^d, returning max |f|.
double sup_on_grid(const std::function<double(const VectorXd&)>& f, int d, int points_per_dim) {
  long total = 1;
  for (int c = 0; c < d; ++c) total *= points_per_dim;
  const double h = 1.0 / (points_per_dim - 1);
  VectorXd x(d);
  double best = 0.0;
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int c = 0; c < d; ++c) {
      x[c] = (rem % points_per_dim) * h;
      rem /= points_per_dim;
    }
    best = std::max(best, std::abs(f(x)));
  }
  return best;
}

}  // namespace

Projection project(const RealFunction& g, const Basis& basis, const Quadrature& f_measure) {
  Projection out;
  out.beta = project_beta(g, basis, f_measure);
  const VectorXd beta = out.beta;
  out.residual = [g, basis, beta](const VectorXd& x) { return g(x) - basis.eval(x).dot(beta); };
  return out;
}

ApproxReport approx_report(const RealFunction& g, const Basis& basis, const Quadrature& f_measure,
                           int sup_grid) {
  if (sup_grid < 256) fail(errc::invalid_spec, "approx_report: sup grid must have at least 256 points");
  const Projection proj = project(g, basis, f_measure);

  double l2sq = 0.0;
  for (long q = 0; q < f_measure.size(); ++q) {
    const double r = proj.residual(f_measure.nodes.row(q).transpose());
    l2sq += f_measure.weights[q] * r * r;
  }

  ApproxReport rep;
  rep.k = basis.k();
  rep.beta_g = proj.beta;
  rep.c_k_hat = std::sqrt(std::max(l2sq, 0.0));
  rep.sup_err = sup_on_grid(proj.residual, basis.dim(), sup_grid);
  rep.lebesgue_factor = rep.c_k_hat < 1e-12 ? 1.0 : rep.sup_err / rep.c_k_hat;
  return rep;
}

double lebesgue_probe(const Basis& basis, const Quadrature& f_measure,
                      const std::vector<RealFunction>& trials, int sup_grid) {
  if (trials.empty()) fail(errc::invalid_spec, "lebesgue_probe: need at least one trial function");
  double bound = 0.0;
  for (const auto& f : trials) {
    const double denom = sup_on_grid(f, basis.dim(), sup_grid);
    if (denom < 1e-14) fail(errc::invalid_spec, "lebesgue_probe: trial function vanishes in sup norm");
    const VectorXd beta = project_beta(f, basis, f_measure);
    const double numer =
        sup_on_grid([&](const VectorXd& x) { return basis.eval(x).dot(beta); }, basis.dim(), sup_grid);
    bound = std::max(bound, numer / denom);
  }
  return bound;
}

}  // namespace seriesband
