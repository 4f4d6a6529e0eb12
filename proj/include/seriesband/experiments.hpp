#pragma once

#include <cstdint>
#include <utility>

#include "seriesband/inference.hpp"

namespace seriesband {

// ---------------------------------------------------------------------------
// Synthetic data-generating processes
// ---------------------------------------------------------------------------

enum class TruthFn { linear, quadratic, sine, interaction };
enum class NoiseKind { gaussian, heteroskedastic, student_t };

const char* truth_name(TruthFn g);
TruthFn truth_from_name(const std::string& name);
const char* noise_name(NoiseKind n);
NoiseKind noise_from_name(const std::string& name);

/// Library of synthetic truths on [0,1]^d:
///   linear       1 + 2 x1
///   quadratic    1 + x1 - 2 x1^2
///   sine         sin(2 pi x1)
///   interaction  x1 * x2           (d = 2)
double truth_value(TruthFn g, const VectorXd& x);
double truth_deriv(TruthFn g, const VectorXd& x, int coord);

struct DgpSpec {
  TruthFn g = TruthFn::sine;
  NoiseKind noise = NoiseKind::gaussian;
  double sigma = 1.0;  // noise scale; heteroskedastic sd is sigma * (0.5 + x1)
  int t_df = 8;        // student_t degrees of freedom (> 4)
  int dim = 1;

  void validate() const;
  double noise_sd(const VectorXd& x) const;       // conditional standard deviation
  double noise_variance(const VectorXd& x) const;
};

/// n observations with x ~ U(0,1)^dim and y = g(x) + eps. Draws depend only
/// on (stream, n), so replications with distinct substreams are independent
/// and reproducible.
Dataset simulate(const DgpSpec& dgp, long n, const RandomStream& stream);

/// Run fn(0..count-1) on `workers` threads. Work items may land on any
/// thread; callers must write results into per-index slots so that the
/// aggregate does not depend on scheduling.
void parallel_for(long count, int workers, const std::function<void(long)>& fn);

// ---------------------------------------------------------------------------
// Study reports
// ---------------------------------------------------------------------------

/// Flat table of study outputs: one row per cell, named columns; rendered to
/// CSV by the CLI. Identical master seeds produce identical reports, for any
/// worker count.
struct McReport {
  std::string study;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

using Schedule = std::vector<std::pair<long, int>>;  // (n, k)

// --- L2 / sup convergence rates ---------------------------------------------

struct RateStudyConfig {
  DgpSpec dgp;
  BasisSpec basis;  // k replaced cell by cell
  Schedule schedule;
  int reps = 200;
  std::uint64_t seed = 0;
  int workers = 1;
  int quad_nodes = 400;
  int sup_grid = 2001;
};

struct RateCell {
  long n = 0;
  int k = 0;
  double mean_l2 = 0.0;
  double se_l2 = 0.0;
  double mean_sup = 0.0;
  long failures = 0;
};

struct RateStudyResult {
  std::vector<RateCell> cells;
  double loglog_slope = 0.0;  // slope of log mean_l2 on log n
  McReport report(std::uint64_t seed) const;
};

RateStudyResult rate_study(const RateStudyConfig& cfg);

// --- Pointwise normality of the t statistic ---------------------------------

struct NormalityStudyConfig {
  DgpSpec dgp;
  BasisSpec basis;
  long n = 2000;
  std::vector<double> x_points = {0.5};
  int reps = 2000;
  std::uint64_t seed = 0;
  int workers = 1;
  int quad_nodes = 400;
};

struct NormalityStudyResult {
  std::vector<double> x_points;
  std::vector<double> ks_feasible;  // estimated Omega
  std::vector<double> ks_oracle;    // quadrature Omega
  McReport report(std::uint64_t seed) const;
};

NormalityStudyResult normality_study(const NormalityStudyConfig& cfg);

// --- Linearization remainders ------------------------------------------------

struct LinearizationStudyConfig {
  DgpSpec dgp;
  BasisSpec basis;
  std::vector<long> n_schedule;
  int reps = 200;
  std::vector<double> alpha_points = {0.1, 0.3, 0.5, 0.7, 0.9};  // alpha = p(x)/||p(x)||
  std::uint64_t seed = 0;
  int workers = 1;
  int quad_nodes = 400;
};

struct LinearizationCell {
  long n = 0;
  int k = 0;
  double q90_r1 = 0.0;        // mean over alpha points of the per-alpha 0.9 quantile
  double q90_r2 = 0.0;
  double r1_bound_ratio = 0.0;  // q90_r1 / [ sqrt(xi_k^2 log n / n) (1 + sqrt(k) l_k c_k) ]
};

struct LinearizationStudyResult {
  std::vector<LinearizationCell> cells;
  McReport report(std::uint64_t seed) const;
};

LinearizationStudyResult linearization_study(const LinearizationStudyConfig& cfg);

// --- Gram / sandwich matrix concentration ------------------------------------

struct MatrixStudyConfig {
  BasisSpec basis;  // must be orthonormal under the U(0,1)^dim design
  int dim = 1;
  double sigma = 1.0;  // homoskedastic noise sd (y = eps)
  Schedule schedule;
  int reps = 200;
  std::uint64_t seed = 0;
  int workers = 1;
  int quad_nodes = 400;
};

struct MatrixCell {
  long n = 0;
  int k = 0;
  double mean_q_dev = 0.0;      // E ||Q_hat - I||
  double mean_omega_dev = 0.0;  // E ||Omega_hat - Omega||, Omega by quadrature
  double q_ratio = 0.0;         // mean_q_dev / sqrt(k log n / n)
};

struct MatrixStudyResult {
  std::vector<MatrixCell> cells;
  McReport report(std::uint64_t seed) const;
};

MatrixStudyResult matrix_study(const MatrixStudyConfig& cfg);

// --- Uniform and pointwise band coverage -------------------------------------

struct CoverageStudyConfig {
  DgpSpec dgp;
  BasisSpec basis;
  FunctionalSpec functional;
  long n = 500;
  double alpha = 0.05;
  int reps = 500;
  int mult_draws = 2000;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct CoverageStudyResult {
  double uniform_coverage = 0.0;
  double uniform_se = 0.0;
  double pointwise_coverage_mean = 0.0;  // averaged over grid points
  double pointwise_coverage_mid = 0.0;   // at the middle grid row
  double mean_critical_value = 0.0;
  double mean_max_width = 0.0;
  long failures = 0;
  McReport report(std::uint64_t seed, double alpha, long n, int k) const;
};

CoverageStudyResult coverage_study(const CoverageStudyConfig& cfg);

// --- Misspecified (additive) fit of a non-additive truth ----------------------

struct MisspecStudyConfig {
  DgpSpec dgp;                 // interaction truth, dim 2
  int component_k = 3;         // per-coordinate Legendre size; dictionary k = 2*component_k - 1
  std::vector<long> n_schedule;
  int reps = 200;
  long coverage_n = 500;       // surrogate-band coverage cell
  double alpha = 0.05;
  int coverage_reps = 500;
  int mult_draws = 2000;
  int coverage_grid = 11;      // per coordinate
  std::uint64_t seed = 0;
  int workers = 1;
  int quad_nodes = 60;         // per dimension (d = 2)
};

struct MisspecCell {
  long n = 0;
  double mean_dist_surrogate = 0.0;  // ||ghat - p'beta||_{F,2}
  double mean_dist_truth = 0.0;      // ||ghat - g||_{F,2}
};

struct MisspecStudyResult {
  std::vector<MisspecCell> cells;
  double c_k = 0.0;  // quadrature projection residual norm
  double surrogate_coverage = 0.0;
  double surrogate_coverage_se = 0.0;
  long failures = 0;
  McReport report(std::uint64_t seed) const;
};

MisspecStudyResult misspecification_study(const MisspecStudyConfig& cfg);

// --- Multiplier vs weighted-bootstrap critical values --------------------------

struct BootstrapAgreementConfig {
  DgpSpec dgp;
  BasisSpec basis;
  FunctionalSpec functional;
  long n = 2000;
  double alpha = 0.05;
  int reps = 100;
  int mult_draws = 2000;
  int boot_draws = 2000;
  std::uint64_t seed = 0;
  int workers = 1;
  int quad_nodes = 400;
};

struct BootstrapAgreementResult {
  double mean_abs_diff = 0.0;
  double mean_c_multiplier = 0.0;
  double mean_c_bootstrap = 0.0;
  double decision_agreement = 0.0;  // accept/reject of the true-surrogate hypothesis
  long failures = 0;
  McReport report(std::uint64_t seed) const;
};

BootstrapAgreementResult bootstrap_agreement_study(const BootstrapAgreementConfig& cfg);

}  // namespace seriesband
