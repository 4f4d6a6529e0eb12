#include "seriesband/functionals.hpp"

#include <cmath>
#include <sstream>

namespace seriesband {

const char* functional_name(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::value: return "value";
    case FunctionalKind::partial_derivative: return "partial_derivative";
    case FunctionalKind::average_derivative: return "average_derivative";
    case FunctionalKind::cond_average_derivative: return "cond_average_derivative";
  }
  return "?";
}

FunctionalKind functional_from_name(const std::string& name) {
  if (name == "value") return FunctionalKind::value;
  if (name == "partial_derivative") return FunctionalKind::partial_derivative;
  if (name == "average_derivative") return FunctionalKind::average_derivative;
  if (name == "cond_average_derivative") return FunctionalKind::cond_average_derivative;
  fail(errc::invalid_spec, "unknown functional kind '" + name + "'");
}

namespace {

void check_measure(const Quadrature& q, int expect_dim, const char* what) {
  if (q.dim() != expect_dim)
    fail(errc::dimension_mismatch, std::string(what) + ": measure dimension mismatch");
  if (q.size() < 1 || (q.weights.array() <= 0.0).any())
    fail(errc::invalid_spec, std::string(what) + ": measure weights must be positive");
  if (std::abs(q.weights.sum() - 1.0) > 1e-8)
    fail(errc::invalid_spec, std::string(what) + ": measure must have total mass 1");
}

// Full domain point for the conditional functional: conditioning coordinates
// from `w`, integrated coordinate `coord` set to `t`.
VectorXd splice(const Eigen::Ref<const Eigen::RowVectorXd>& w, int coord, double t, int d) {
  VectorXd x(d);
  int at = 0;
  for (int c = 0; c < d; ++c) x[c] = (c == coord) ? t : w[at++];
  return x;
}

}  // namespace

void FunctionalSpec::validate(int domain_dim) const {
  switch (kind) {
    case FunctionalKind::value:
      if (grid.rows() < 1 || grid.cols() != domain_dim)
        fail(errc::invalid_spec, "value functional: grid must be nonempty with one column per coordinate");
      break;
    case FunctionalKind::partial_derivative:
      if (grid.rows() < 1 || grid.cols() != domain_dim)
        fail(errc::invalid_spec, "derivative functional: grid must be nonempty with one column per coordinate");
      if (coord < 0 || coord >= domain_dim)
        fail(errc::invalid_spec, "derivative functional: coordinate out of range");
      break;
    case FunctionalKind::average_derivative:
      if (coord < 0 || coord >= domain_dim)
        fail(errc::invalid_spec, "average derivative: coordinate out of range");
      check_measure(measure, domain_dim, "average derivative");
      break;
    case FunctionalKind::cond_average_derivative:
      if (domain_dim < 2) fail(errc::invalid_spec, "conditional average derivative needs d >= 2");
      if (coord < 0 || coord >= domain_dim)
        fail(errc::invalid_spec, "conditional average derivative: coordinate out of range");
      if (grid.rows() < 1 || grid.cols() != domain_dim - 1)
        fail(errc::invalid_spec,
             "conditional average derivative: grid must hold the conditioning coordinates");
      if (static_cast<long>(cond_measures.size()) != grid.rows())
        fail(errc::invalid_spec, "conditional average derivative: one measure per conditioning point");
      for (const auto& m : cond_measures) check_measure(m, 1, "conditional measure");
      break;
  }
}

LoadingSet build_loadings(const FunctionalSpec& spec, const Basis& basis) {
  spec.validate(basis.dim());
  const int k = basis.k();
  const int d = basis.dim();

  LoadingSet out;
  switch (spec.kind) {
    case FunctionalKind::value: {
      out.grid = spec.grid;
      out.loadings.resize(spec.grid.rows(), k);
      for (long i = 0; i < spec.grid.rows(); ++i)
        out.loadings.row(i) = basis.eval(spec.grid.row(i).transpose()).transpose();
      break;
    }
    case FunctionalKind::partial_derivative: {
      out.grid = spec.grid;
      out.loadings.resize(spec.grid.rows(), k);
      for (long i = 0; i < spec.grid.rows(); ++i)
        out.loadings.row(i) = basis.eval_deriv(spec.grid.row(i).transpose(), spec.coord, 1).transpose();
      break;
    }
    case FunctionalKind::average_derivative: {
      out.grid.resize(1, 0);
      VectorXd row = VectorXd::Zero(k);
      for (long q = 0; q < spec.measure.size(); ++q)
        row += spec.measure.weights[q] *
               basis.eval_deriv(spec.measure.nodes.row(q).transpose(), spec.coord, 1);
      out.loadings = row.transpose();
      break;
    }
    case FunctionalKind::cond_average_derivative: {
      out.grid = spec.grid;
      out.loadings.setZero(spec.grid.rows(), k);
      for (long i = 0; i < spec.grid.rows(); ++i) {
        const Quadrature& m = spec.cond_measures[i];
        for (long q = 0; q < m.size(); ++q) {
          const VectorXd x = splice(spec.grid.row(i), spec.coord, m.nodes(q, 0), d);
          out.loadings.row(i) += m.weights[q] * basis.eval_deriv(x, spec.coord, 1).transpose();
        }
      }
      break;
    }
  }

  out.norms = out.loadings.rowwise().norm();
  for (long i = 0; i < out.norms.size(); ++i)
    if (out.norms[i] < 1e-12) {
      std::ostringstream msg;
      msg << "loading at grid row " << i << " has norm " << out.norms[i]
          << " < 1e-12; the loading normalization condition fails";
      fail(errc::zero_loading, msg.str());
    }
  return out;
}

VectorXd theta_hat(const FitResult& fit, const LoadingSet& loadings) {
  if (loadings.k() != fit.k())
    fail(errc::dimension_mismatch, "theta_hat: loading dimension " + std::to_string(loadings.k()) +
                                       " != fit dimension " + std::to_string(fit.k()));
  return loadings.loadings * fit.beta_hat;
}

VectorXd sigma_theta_hat(const FitResult& fit, const LoadingSet& loadings) {
  if (loadings.k() != fit.k()) fail(errc::dimension_mismatch, "sigma_theta_hat: dimension mismatch");
  const MatrixXd lo = loadings.loadings * fit.Omega_hat.mat();
  VectorXd out(loadings.size());
  for (long i = 0; i < loadings.size(); ++i) {
    const double quad = lo.row(i).dot(loadings.loadings.row(i));
    out[i] = std::sqrt(std::max(quad, 0.0) / static_cast<double>(fit.n));
    if (out[i] < 1e-14) {
      std::ostringstream msg;
      msg << "sigma_theta_hat: scale " << out[i] << " at grid row " << i
          << " is degenerate (Omega_hat rank deficiency at this loading)";
      fail(errc::degenerate_variance, msg.str());
    }
  }
  return out;
}

VectorXd remainder_oracle(const FunctionalSpec& spec, const Basis& basis,
                          const std::function<double(const VectorXd&)>& g, const Quadrature& f_measure) {
  spec.validate(basis.dim());
  if (f_measure.dim() != basis.dim())
    fail(errc::dimension_mismatch, "remainder_oracle: F measure dimension mismatch");
  const int k = basis.k();
  const int d = basis.dim();

  // beta_g from the quadrature normal equations.
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
  VectorXd beta_g = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(beta_g);

  // Numerical derivative of g, independent of the basis derivative code.
  // Central differences, stencil shifted inward near the domain edges.
  const double h = 1e-6;
  auto deriv_g = [&](VectorXd x, int coord) {
    const double lo = std::max(x[coord] - h, 0.0);
    const double hi = std::min(x[coord] + h, 1.0);
    VectorXd xl = x, xh = x;
    xl[coord] = lo;
    xh[coord] = hi;
    return (g(xh) - g(xl)) / (hi - lo);
  };

  const LoadingSet loadings = build_loadings(spec, basis);
  VectorXd theta(loadings.size());
  switch (spec.kind) {
    case FunctionalKind::value:
      for (long i = 0; i < loadings.size(); ++i) theta[i] = g(spec.grid.row(i).transpose());
      break;
    case FunctionalKind::partial_derivative:
      for (long i = 0; i < loadings.size(); ++i)
        theta[i] = deriv_g(spec.grid.row(i).transpose(), spec.coord);
      break;
    case FunctionalKind::average_derivative: {
      double acc = 0.0;
      for (long q = 0; q < spec.measure.size(); ++q)
        acc += spec.measure.weights[q] * deriv_g(spec.measure.nodes.row(q).transpose(), spec.coord);
      theta[0] = acc;
      break;
    }
    case FunctionalKind::cond_average_derivative:
      for (long i = 0; i < loadings.size(); ++i) {
        const Quadrature& m = spec.cond_measures[i];
        double acc = 0.0;
        for (long q = 0; q < m.size(); ++q)
          acc += m.weights[q] * deriv_g(splice(spec.grid.row(i), spec.coord, m.nodes(q, 0), d), spec.coord);
        theta[i] = acc;
      }
      break;
  }
  return theta - loadings.loadings * beta_g;
}

}  // namespace seriesband
