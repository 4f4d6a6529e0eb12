#include "seriesband/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace seriesband {

const char* method_name(BandMethod m) {
  return m == BandMethod::gaussian_multiplier ? "gaussian_multiplier" : "weighted_bootstrap";
}

BandMethod method_from_name(const std::string& name) {
  if (name == "gaussian_multiplier") return BandMethod::gaussian_multiplier;
  if (name == "weighted_bootstrap") return BandMethod::weighted_bootstrap;
  fail(errc::invalid_config, "unknown band method '" + name + "'");
}

const char* side_name(BandSide s) { return s == BandSide::two_sided ? "two_sided" : "one_sided_lower"; }

BandSide side_from_name(const std::string& name) {
  if (name == "two_sided") return BandSide::two_sided;
  if (name == "one_sided_lower") return BandSide::one_sided_lower;
  fail(errc::invalid_config, "unknown band side '" + name + "'");
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(errc::invalid_spec, "normal_quantile: p must lie in (0,1)");
  // Acklam (2010), absolute error < 1.15e-9 over the full range.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

std::vector<Interval> pointwise_ci(const FitResult& fit, const LoadingSet& loadings, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(errc::invalid_spec, "pointwise_ci: alpha must lie in (0,1)");
  const VectorXd theta = theta_hat(fit, loadings);
  const VectorXd sigma = sigma_theta_hat(fit, loadings);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  std::vector<Interval> out(theta.size());
  for (long i = 0; i < theta.size(); ++i) out[i] = {theta[i] - z * sigma[i], theta[i] + z * sigma[i]};
  return out;
}

namespace {

// ceil((1-alpha) R) order statistic, the conservative "higher" quantile rule.
double upper_order_statistic(std::vector<double>& sups, double alpha) {
  std::sort(sups.begin(), sups.end());
  const long r = static_cast<long>(sups.size());
  long rank = static_cast<long>(std::ceil((1.0 - alpha) * static_cast<double>(r)));
  rank = std::clamp(rank, 1L, r);
  return sups[rank - 1];
}

void check_alpha_draws(double alpha, int draws) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(errc::invalid_spec, "alpha must lie in (0,1)");
  if (draws < 100)
    fail(errc::insufficient_draws, "need at least 100 simulation draws, got " + std::to_string(draws));
}

}  // namespace

double multiplier_critical_value(const FitResult& fit, const LoadingSet& loadings, double alpha,
                                 int draws, const RandomStream& stream, BandSide side) {
  check_alpha_draws(alpha, draws);
  const VectorXd sigma = sigma_theta_hat(fit, loadings);
  // scaled loading rows: ell(w)' L / (sqrt(n) sigma(w)), so t*(w) = row . z
  const MatrixXd num = loadings.loadings * fit.omega_factor;
  const VectorXd scale = (sigma * std::sqrt(static_cast<double>(fit.n))).cwiseInverse();
  const MatrixXd rows = num.array().colwise() * scale.array();

  std::vector<double> sups(static_cast<size_t>(draws));
  for (int r = 0; r < draws; ++r) {
    const VectorXd z = standard_normal_vector(stream.substream(r), fit.k());
    const VectorXd t = rows * z;
    sups[static_cast<size_t>(r)] =
        side == BandSide::two_sided ? t.cwiseAbs().maxCoeff() : t.maxCoeff();
  }
  return upper_order_statistic(sups, alpha);
}

namespace {

BandResult assemble_band(const MatrixXd& grid, const VectorXd& theta, const VectorXd& sigma, double c,
                         double alpha, BandMethod method, BandSide side, long draws) {
  BandResult band;
  band.grid = grid;
  band.theta = theta;
  band.sigma = sigma;
  band.critical_value = c;
  band.alpha = alpha;
  band.method = method;
  band.side = side;
  band.draws = draws;
  band.lower = theta - c * sigma;
  if (side == BandSide::two_sided) {
    band.upper = theta + c * sigma;
  } else {
    band.upper = VectorXd::Constant(theta.size(), std::numeric_limits<double>::infinity());
  }
  return band;
}

}  // namespace

BandResult uniform_band(const FitResult& fit, const LoadingSet& loadings, double alpha, int draws,
                        const RandomStream& stream, BandSide side) {
  const double c = multiplier_critical_value(fit, loadings, alpha, draws, stream, side);
  return assemble_band(loadings.grid, theta_hat(fit, loadings), sigma_theta_hat(fit, loadings), c,
                       alpha, BandMethod::gaussian_multiplier, side, draws);
}

double bootstrap_critical_value(const Dataset& data, const Basis& basis, const LoadingSet& loadings,
                                double alpha, int draws, const RandomStream& stream, BandSide side) {
  const BootstrapWeightSource exp_weights = [&stream](int attempt, int draw, long n) {
    // the retry draws from a disjoint index range of the same stream
    const std::uint64_t idx = attempt == 0 ? static_cast<std::uint64_t>(draw)
                                           : (1ull << 32) + static_cast<std::uint64_t>(draw);
    return exponential_weights(stream.substream(idx), static_cast<int>(n));
  };
  return bootstrap_critical_value_custom(data, basis, loadings, alpha, draws, exp_weights, side);
}

double bootstrap_critical_value_custom(const Dataset& data, const Basis& basis,
                                       const LoadingSet& loadings, double alpha, int draws,
                                       const BootstrapWeightSource& weights, BandSide side) {
  check_alpha_draws(alpha, draws);
  const FitResult base = fit(data, basis);

  // Degenerate base fit: y lies in the basis span, every refit interpolates
  // the same values and the bootstrap process is identically zero.
  const MatrixXd lo = loadings.loadings * base.Omega_hat.mat();
  VectorXd sigma(loadings.size());
  bool all_degenerate = true;
  for (long i = 0; i < loadings.size(); ++i) {
    sigma[i] = std::sqrt(std::max(lo.row(i).dot(loadings.loadings.row(i)), 0.0) /
                         static_cast<double>(base.n));
    all_degenerate = all_degenerate && sigma[i] < 1e-14;
  }
  if (all_degenerate) return 0.0;
  if ((sigma.array() < 1e-14).any())
    fail(errc::degenerate_variance, "bootstrap_critical_value: some scales are degenerate");

  // Reusable pieces of the weighted refits.
  const MatrixXd p = design_matrix(data, basis);
  const long n = data.n();

  std::vector<double> sups(static_cast<size_t>(draws));
  for (int b = 0; b < draws; ++b) {
    VectorXd beta_b;
    bool ok = false;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
      const VectorXd h = weights(attempt, b, n);
      if (h.size() != n || (h.array() <= 0.0).any())
        fail(errc::non_positive_weight, "bootstrap weights must be strictly positive, length n");
      const MatrixXd pw = p.array().colwise() * h.array();
      MatrixXd gram = p.transpose() * pw / static_cast<double>(n);
      const VectorXd rhs = pw.transpose() * data.y / static_cast<double>(n);
      try {
        const MatrixXd lower = cholesky(SymMatrix(0.5 * (gram + gram.transpose())));
        beta_b = lower.triangularView<Eigen::Lower>().solve(rhs);
        lower.triangularView<Eigen::Lower>().transpose().solveInPlace(beta_b);
        ok = true;
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok)
      fail(errc::bootstrap_failure,
           "bootstrap refit " + std::to_string(b) + " hit a singular weighted design twice");
    const VectorXd t = (loadings.loadings * (beta_b - base.beta_hat)).cwiseQuotient(sigma);
    sups[static_cast<size_t>(b)] = side == BandSide::two_sided ? t.cwiseAbs().maxCoeff() : t.maxCoeff();
  }
  return upper_order_statistic(sups, alpha);
}

BandResult uniform_band_bootstrap(const Dataset& data, const Basis& basis, const LoadingSet& loadings,
                                  double alpha, int draws, const RandomStream& stream, BandSide side) {
  const double c = bootstrap_critical_value(data, basis, loadings, alpha, draws, stream, side);
  const FitResult base = fit(data, basis);
  return assemble_band(loadings.grid, theta_hat(base, loadings), sigma_theta_hat(base, loadings), c,
                       alpha, BandMethod::weighted_bootstrap, side, draws);
}

TStatProcess tstat_process(const FitResult& fit, const LoadingSet& loadings, const VectorXd& theta_true) {
  if (theta_true.size() != loadings.size())
    fail(errc::dimension_mismatch, "tstat_process: truth vector length != grid size");
  if (!theta_true.allFinite()) fail(errc::invalid_spec, "tstat_process: truth must be finite");
  TStatProcess out;
  out.grid = loadings.grid;
  out.values = (theta_hat(fit, loadings) - theta_true).cwiseQuotient(sigma_theta_hat(fit, loadings));
  return out;
}

}  // namespace seriesband
