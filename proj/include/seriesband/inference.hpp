#pragma once

#include "seriesband/functionals.hpp"

namespace seriesband {

enum class BandMethod { gaussian_multiplier, weighted_bootstrap };
enum class BandSide { two_sided, one_sided_lower };

const char* method_name(BandMethod m);
BandMethod method_from_name(const std::string& name);
const char* side_name(BandSide s);
BandSide side_from_name(const std::string& name);

/// Simultaneous confidence band over the index grid. Two-sided edges are
/// theta_hat +- c * sigma_hat; the one-sided (lower) variant keeps the lower
/// edge and sets the upper edge to +infinity.
struct BandResult {
  MatrixXd grid;
  VectorXd theta;
  VectorXd sigma;
  VectorXd lower;
  VectorXd upper;
  double critical_value = 0.0;
  double alpha = 0.0;
  BandMethod method = BandMethod::gaussian_multiplier;
  BandSide side = BandSide::two_sided;
  long draws = 0;
};

struct TStatProcess {
  MatrixXd grid;
  VectorXd values;
};

struct Interval {
  double lower;
  double upper;
};

/// Standard normal quantile by Acklam's rational approximation (absolute
/// error below 1e-8 over (0,1)).
double normal_quantile(double p);

/// Standard normal CDF (erfc based).
double normal_cdf(double t);

/// Per-point normal intervals theta_hat(w) +- z_{1-alpha/2} sigma_hat(w).
std::vector<Interval> pointwise_ci(const FitResult& fit, const LoadingSet& loadings, double alpha);

/// Simulated conditional quantile of the supremum of the Gaussian multiplier
/// process: draws z ~ N(0, I_k), forms |ell(w)' L z| / (sqrt(n) sigma_hat(w))
/// with L the factor of Omega_hat, and returns the ceil((1-alpha) R) order
/// statistic of the per-draw suprema. One-sided drops the absolute value.
double multiplier_critical_value(const FitResult& fit, const LoadingSet& loadings, double alpha,
                                 int draws, const RandomStream& stream,
                                 BandSide side = BandSide::two_sided);

BandResult uniform_band(const FitResult& fit, const LoadingSet& loadings, double alpha, int draws,
                        const RandomStream& stream, BandSide side = BandSide::two_sided);

/// Critical value from exponential-weight bootstrap refits: per draw,
/// S_b = max_w |ell(w)'(beta_b - beta_hat)| / sigma_hat(w) with sigma from
/// the base fit. A refit hitting a singular weighted design is retried once
/// with a fresh draw, then aborts. Returns 0 when the base fit interpolates
/// exactly (all scales degenerate), where the bootstrap process is flat.
double bootstrap_critical_value(const Dataset& data, const Basis& basis, const LoadingSet& loadings,
                                double alpha, int draws, const RandomStream& stream,
                                BandSide side = BandSide::two_sided);

/// Weight source for bootstrap refits: (attempt, draw index, n) -> weights.
/// Attempt 1 is the single retry after a singular weighted design.
using BootstrapWeightSource = std::function<VectorXd(int attempt, int draw, long n)>;

/// Bootstrap critical value with caller-supplied refit weights.
double bootstrap_critical_value_custom(const Dataset& data, const Basis& basis,
                                       const LoadingSet& loadings, double alpha, int draws,
                                       const BootstrapWeightSource& weights,
                                       BandSide side = BandSide::two_sided);

/// Bootstrap-calibrated band (same shape as uniform_band).
BandResult uniform_band_bootstrap(const Dataset& data, const Basis& basis, const LoadingSet& loadings,
                                  double alpha, int draws, const RandomStream& stream,
                                  BandSide side = BandSide::two_sided);

/// t(w) = (theta_hat(w) - theta_true(w)) / sigma_hat(w).
TStatProcess tstat_process(const FitResult& fit, const LoadingSet& loadings, const VectorXd& theta_true);

}  // namespace seriesband
