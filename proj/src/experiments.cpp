#include "seriesband/experiments.hpp"

#include "seriesband/approx.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

namespace seriesband {

const char* truth_name(TruthFn g) {
  switch (g) {
    case TruthFn::linear: return "linear";
    case TruthFn::quadratic: return "quadratic";
    case TruthFn::sine: return "sine";
    case TruthFn::interaction: return "interaction";
  }
  return "?";
}

TruthFn truth_from_name(const std::string& name) {
  if (name == "linear") return TruthFn::linear;
  if (name == "quadratic") return TruthFn::quadratic;
  if (name == "sine") return TruthFn::sine;
  if (name == "interaction") return TruthFn::interaction;
  fail(errc::invalid_config, "unknown truth function '" + name + "'");
}

const char* noise_name(NoiseKind n) {
  switch (n) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::heteroskedastic: return "heteroskedastic";
    case NoiseKind::student_t: return "student_t";
  }
  return "?";
}

NoiseKind noise_from_name(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "heteroskedastic") return NoiseKind::heteroskedastic;
  if (name == "student_t") return NoiseKind::student_t;
  fail(errc::invalid_config, "unknown noise kind '" + name + "'");
}

double truth_value(TruthFn g, const VectorXd& x) {
  switch (g) {
    case TruthFn::linear: return 1.0 + 2.0 * x[0];
    case TruthFn::quadratic: return 1.0 + x[0] - 2.0 * x[0] * x[0];
    case TruthFn::sine: return std::sin(2.0 * std::numbers::pi * x[0]);
    case TruthFn::interaction: return x[0] * x[1];
  }
  return 0.0;
}

double truth_deriv(TruthFn g, const VectorXd& x, int coord) {
  switch (g) {
    case TruthFn::linear: return coord == 0 ? 2.0 : 0.0;
    case TruthFn::quadratic: return coord == 0 ? 1.0 - 4.0 * x[0] : 0.0;
    case TruthFn::sine:
      return coord == 0 ? 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * x[0]) : 0.0;
    case TruthFn::interaction: return coord == 0 ? x[1] : x[0];
  }
  return 0.0;
}

void DgpSpec::validate() const {
  if (dim < 1 || dim > 3) fail(errc::invalid_config, "dgp: dim must be 1..3");
  if (g == TruthFn::interaction && dim != 2) fail(errc::invalid_config, "interaction truth needs dim = 2");
  if (!(sigma > 0.0)) fail(errc::invalid_config, "dgp: sigma must be positive");
  if (noise == NoiseKind::student_t && t_df <= 4)
    fail(errc::invalid_config, "dgp: student_t noise needs df > 4 for band studies");
}

double DgpSpec::noise_sd(const VectorXd& x) const {
  switch (noise) {
    case NoiseKind::gaussian: return sigma;
    case NoiseKind::heteroskedastic: return sigma * (0.5 + x[0]);
    case NoiseKind::student_t:
      return sigma * std::sqrt(static_cast<double>(t_df) / (t_df - 2.0));
  }
  return sigma;
}

double DgpSpec::noise_variance(const VectorXd& x) const {
  const double s = noise_sd(x);
  return s * s;
}

Dataset simulate(const DgpSpec& dgp, long n, const RandomStream& stream) {
  dgp.validate();
  if (n < 1) fail(errc::invalid_config, "simulate: n must be >= 1");
  const int d = dgp.dim;

  const VectorXd us = uniform_vector(stream.substream(0), static_cast<int>(n) * d);
  Dataset data;
  data.x.resize(n, d);
  for (long i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) data.x(i, c) = us[i * d + c];

  VectorXd eps(n);
  const RandomStream noise_stream = stream.substream(1);
  if (dgp.noise == NoiseKind::student_t) {
    const int df = dgp.t_df;
    const VectorXd z = standard_normal_vector(noise_stream, static_cast<int>(n) * (df + 1));
    for (long i = 0; i < n; ++i) {
      double chi2 = 0.0;
      for (int j = 1; j <= df; ++j) chi2 += z[i * (df + 1) + j] * z[i * (df + 1) + j];
      eps[i] = dgp.sigma * z[i * (df + 1)] / std::sqrt(chi2 / df);
    }
  } else {
    const VectorXd z = standard_normal_vector(noise_stream, static_cast<int>(n));
    for (long i = 0; i < n; ++i) {
      const double sd = dgp.noise == NoiseKind::gaussian ? dgp.sigma : dgp.noise_sd(data.x.row(i).transpose());
      eps[i] = sd * z[i];
    }
  }

  data.y.resize(n);
  for (long i = 0; i < n; ++i) data.y[i] = truth_value(dgp.g, data.x.row(i).transpose()) + eps[i];
  return data;
}

void parallel_for(long count, int workers, const std::function<void(long)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const int nw = static_cast<int>(std::min<long>(workers, count));
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

RandomStream study_stream(std::uint64_t seed) { return RandomStream{seed, 0}; }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  long rank = static_cast<long>(std::ceil(q * static_cast<double>(v.size())));
  rank = std::clamp(rank, 1L, static_cast<long>(v.size()));
  return v[rank - 1];
}

double ks_to_standard_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (size_t i = 0; i < sample.size(); ++i) {
    const double cdf = normal_cdf(sample[i]);
    ks = std::max(ks, std::abs((i + 1) / n - cdf));
    ks = std::max(ks, std::abs(cdf - i / n));
  }
  return ks;
}

VectorXd splice_point(const Eigen::Ref<const Eigen::RowVectorXd>& w, int coord, double t, int d) {
  VectorXd x(d);
  int at = 0;
  for (int c = 0; c < d; ++c) x[c] = (c == coord) ? t : w[at++];
  return x;
}

// Analytic theta(w) over the functional's grid for a library truth.
VectorXd functional_truth(const FunctionalSpec& spec, const DgpSpec& dgp) {
  switch (spec.kind) {
    case FunctionalKind::value: {
      VectorXd out(spec.grid.rows());
      for (long i = 0; i < spec.grid.rows(); ++i) out[i] = truth_value(dgp.g, spec.grid.row(i).transpose());
      return out;
    }
    case FunctionalKind::partial_derivative: {
      VectorXd out(spec.grid.rows());
      for (long i = 0; i < spec.grid.rows(); ++i)
        out[i] = truth_deriv(dgp.g, spec.grid.row(i).transpose(), spec.coord);
      return out;
    }
    case FunctionalKind::average_derivative: {
      double acc = 0.0;
      for (long q = 0; q < spec.measure.size(); ++q)
        acc += spec.measure.weights[q] * truth_deriv(dgp.g, spec.measure.nodes.row(q).transpose(), spec.coord);
      VectorXd out(1);
      out[0] = acc;
      return out;
    }
    case FunctionalKind::cond_average_derivative: {
      VectorXd out(spec.grid.rows());
      for (long i = 0; i < spec.grid.rows(); ++i) {
        const Quadrature& m = spec.cond_measures[i];
        double acc = 0.0;
        for (long q = 0; q < m.size(); ++q)
          acc += m.weights[q] *
                 truth_deriv(dgp.g, splice_point(spec.grid.row(i), spec.coord, m.nodes(q, 0), dgp.dim),
                             spec.coord);
        out[i] = acc;
      }
      return out;
    }
  }
  return VectorXd();
}

}  // namespace

// ---------------------------------------------------------------------------
// rate_study
// ---------------------------------------------------------------------------

McReport RateStudyResult::report(std::uint64_t seed) const {
  McReport rep;
  rep.study = "rate";
  rep.seed = seed;
  rep.columns = {"n", "k", "mean_l2", "se_l2", "mean_sup", "failures", "loglog_slope"};
  for (const auto& c : cells)
    rep.rows.push_back({static_cast<double>(c.n), static_cast<double>(c.k), c.mean_l2, c.se_l2,
                        c.mean_sup, static_cast<double>(c.failures), loglog_slope});
  return rep;
}

RateStudyResult rate_study(const RateStudyConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.schedule.empty()) fail(errc::invalid_config, "rate_study: schedule is empty");
  if (cfg.reps < 1) fail(errc::insufficient_reps, "rate_study: reps must be >= 1");
  for (const auto& [n, k] : cfg.schedule)
    if (n < 2 * k)
      fail(errc::invalid_config, "rate_study: schedule requires n >= 2k, got n=" + std::to_string(n) +
                                     " k=" + std::to_string(k));

  const RandomStream base = study_stream(cfg.seed);
  RateStudyResult out;
  for (size_t cell_idx = 0; cell_idx < cfg.schedule.size(); ++cell_idx) {
    const auto [n, k] = cfg.schedule[cell_idx];
    BasisSpec bs = cfg.basis;
    bs.k = k;
    const Basis basis = make_basis(bs);

    // measurement grids, shared by all replications in the cell
    const Quadrature quad = gauss_legendre(cfg.dgp.dim, cfg.quad_nodes);
    MatrixXd p_quad(quad.size(), k);
    VectorXd g_quad(quad.size());
    for (long q = 0; q < quad.size(); ++q) {
      p_quad.row(q) = basis.eval(quad.nodes.row(q).transpose()).transpose();
      g_quad[q] = truth_value(cfg.dgp.g, quad.nodes.row(q).transpose());
    }
    MatrixXd p_sup;
    VectorXd g_sup;
    if (cfg.dgp.dim == 1) {
      p_sup.resize(cfg.sup_grid, k);
      g_sup.resize(cfg.sup_grid);
      for (int i = 0; i < cfg.sup_grid; ++i) {
        VectorXd x(1);
        x[0] = static_cast<double>(i) / (cfg.sup_grid - 1);
        p_sup.row(i) = basis.eval(x).transpose();
        g_sup[i] = truth_value(cfg.dgp.g, x);
      }
    }

    const RandomStream cell_stream = base.substream(cell_idx);
    std::vector<double> l2(cfg.reps, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> sup(cfg.reps, std::numeric_limits<double>::quiet_NaN());
    parallel_for(cfg.reps, cfg.workers, [&](long rep) {
      const RandomStream rs = cell_stream.substream(rep);
      const Dataset data = simulate(cfg.dgp, n, rs.substream(0));
      try {
        const FitResult f = fit(data, basis);
        const VectorXd err_quad = p_quad * f.beta_hat - g_quad;
        l2[rep] = std::sqrt((quad.weights.array() * err_quad.array().square()).sum());
        if (p_sup.size() > 0) sup[rep] = (p_sup * f.beta_hat - g_sup).cwiseAbs().maxCoeff();
      } catch (const Error& e) {
        if (e.code() != errc::singular_design) throw;
      }
    });

    RateCell cell{n, k, 0, 0, 0, 0};
    std::vector<double> ok_l2, ok_sup;
    for (int r = 0; r < cfg.reps; ++r) {
      if (std::isnan(l2[r])) {
        ++cell.failures;
        continue;
      }
      ok_l2.push_back(l2[r]);
      if (!std::isnan(sup[r])) ok_sup.push_back(sup[r]);
    }
    if (cell.failures * 100 > cfg.reps)
      fail(errc::singular_design, "rate_study: more than 1% of replications hit a singular design");
    cell.mean_l2 = mean_of(ok_l2);
    cell.mean_sup = mean_of(ok_sup);
    double var = 0.0;
    for (double v : ok_l2) var += (v - cell.mean_l2) * (v - cell.mean_l2);
    if (ok_l2.size() > 1) var /= static_cast<double>(ok_l2.size() - 1);
    cell.se_l2 = std::sqrt(var / std::max<size_t>(ok_l2.size(), 1));
    out.cells.push_back(cell);
  }

  // least-squares slope of log(mean_l2) on log(n)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long m = 0;
  for (const auto& c : out.cells) {
    if (c.mean_l2 <= 0) continue;
    const double lx = std::log(static_cast<double>(c.n)), ly = std::log(c.mean_l2);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  out.loglog_slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// normality_study
// ---------------------------------------------------------------------------

McReport NormalityStudyResult::report(std::uint64_t seed) const {
  McReport rep;
  rep.study = "normality";
  rep.seed = seed;
  rep.columns = {"x", "ks_feasible", "ks_oracle"};
  for (size_t i = 0; i < x_points.size(); ++i)
    rep.rows.push_back({x_points[i], ks_feasible[i], ks_oracle[i]});
  return rep;
}

NormalityStudyResult normality_study(const NormalityStudyConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.dgp.dim != 1) fail(errc::invalid_config, "normality_study: implemented for d = 1 designs");
  if (cfg.reps < 1000)
    fail(errc::insufficient_reps,
         "normality_study: need at least 1000 replications, got " + std::to_string(cfg.reps));
  if (cfg.x_points.empty()) fail(errc::invalid_config, "normality_study: no evaluation points");

  const Basis basis = make_basis(cfg.basis);
  const int k = basis.k();
  const int npts = static_cast<int>(cfg.x_points.size());

  // oracle Omega = Q^{-1} Sigma0 Q^{-1} with Sigma0 = E[sigma^2(x) p p'] by quadrature
  const Quadrature quad = gauss_legendre(1, cfg.quad_nodes);
  MatrixXd q_mat = MatrixXd::Zero(k, k), sigma0 = MatrixXd::Zero(k, k);
  for (long q = 0; q < quad.size(); ++q) {
    const VectorXd x = quad.nodes.row(q).transpose();
    const VectorXd p = basis.eval(x);
    q_mat.selfadjointView<Eigen::Lower>().rankUpdate(p, quad.weights[q]);
    sigma0.selfadjointView<Eigen::Lower>().rankUpdate(p, quad.weights[q] * cfg.dgp.noise_variance(x));
  }
  q_mat = q_mat.selfadjointView<Eigen::Lower>();
  sigma0 = sigma0.selfadjointView<Eigen::Lower>();
  const MatrixXd lq = cholesky(SymMatrix(q_mat));
  MatrixXd inner = lq.triangularView<Eigen::Lower>().solve(sigma0);
  inner = lq.triangularView<Eigen::Lower>().solve(MatrixXd(inner.transpose()));
  MatrixXd omega0 = lq.triangularView<Eigen::Lower>().transpose().solve(inner);
  omega0 = lq.triangularView<Eigen::Lower>().transpose().solve(MatrixXd(omega0.transpose()));

  MatrixXd loadings(npts, k);
  VectorXd theta_true(npts), sigma_oracle(npts);
  for (int i = 0; i < npts; ++i) {
    VectorXd x(1);
    x[0] = cfg.x_points[i];
    const VectorXd p = basis.eval(x);
    loadings.row(i) = p.transpose();
    theta_true[i] = truth_value(cfg.dgp.g, x);
    sigma_oracle[i] = std::sqrt(p.dot(omega0 * p) / static_cast<double>(cfg.n));
  }

  FunctionalSpec vspec;
  vspec.kind = FunctionalKind::value;
  vspec.grid.resize(npts, 1);
  for (int i = 0; i < npts; ++i) vspec.grid(i, 0) = cfg.x_points[i];
  const LoadingSet lset = build_loadings(vspec, basis);

  const RandomStream base = study_stream(cfg.seed);
  MatrixXd t_feas(cfg.reps, npts), t_orac(cfg.reps, npts);
  parallel_for(cfg.reps, cfg.workers, [&](long rep) {
    const Dataset data = simulate(cfg.dgp, cfg.n, base.substream(rep).substream(0));
    const FitResult f = fit(data, basis);
    const VectorXd th = theta_hat(f, lset);
    const VectorXd sg = sigma_theta_hat(f, lset);
    for (int i = 0; i < npts; ++i) {
      t_feas(rep, i) = (th[i] - theta_true[i]) / sg[i];
      t_orac(rep, i) = (th[i] - theta_true[i]) / sigma_oracle[i];
    }
  });

  NormalityStudyResult out;
  out.x_points = cfg.x_points;
  for (int i = 0; i < npts; ++i) {
    std::vector<double> col_f(cfg.reps), col_o(cfg.reps);
    for (int r = 0; r < cfg.reps; ++r) {
      col_f[r] = t_feas(r, i);
      col_o[r] = t_orac(r, i);
    }
    out.ks_feasible.push_back(ks_to_standard_normal(std::move(col_f)));
    out.ks_oracle.push_back(ks_to_standard_normal(std::move(col_o)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// linearization_study
// ---------------------------------------------------------------------------

McReport LinearizationStudyResult::report(std::uint64_t seed) const {
  McReport rep;
  rep.study = "linearization";
  rep.seed = seed;
  rep.columns = {"n", "k", "q90_r1", "q90_r2", "r1_bound_ratio"};
  for (const auto& c : cells)
    rep.rows.push_back({static_cast<double>(c.n), static_cast<double>(c.k), c.q90_r1, c.q90_r2,
                        c.r1_bound_ratio});
  return rep;
}

LinearizationStudyResult linearization_study(const LinearizationStudyConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.dgp.dim != 1) fail(errc::invalid_config, "linearization_study: implemented for d = 1 designs");
  if (cfg.reps < 200)
    fail(errc::insufficient_reps,
         "linearization_study: need at least 200 replications, got " + std::to_string(cfg.reps));
  if (cfg.n_schedule.empty()) fail(errc::invalid_config, "linearization_study: empty n schedule");

  const Basis basis = make_basis(cfg.basis);
  const int k = basis.k();
  const int na = static_cast<int>(cfg.alpha_points.size());

  // beta_g and the pointwise approximation error from the quadrature projection
  const Quadrature quad = gauss_legendre(1, cfg.quad_nodes);
  auto g_fn = [&](const VectorXd& x) { return truth_value(cfg.dgp.g, x); };
  const Projection proj = project(g_fn, basis, quad);
  const ApproxReport approx = approx_report(g_fn, basis, quad);
  const double lkck = approx.sup_err;  // l_k c_k composite (sup-norm bound of the residual)
  const double xi = diagnostics(basis, 1024).xi_k;

  MatrixXd alphas(na, k);
  for (int a = 0; a < na; ++a) {
    VectorXd x(1);
    x[0] = cfg.alpha_points[a];
    VectorXd p = basis.eval(x);
    alphas.row(a) = (p / p.norm()).transpose();
  }

  const RandomStream base = study_stream(cfg.seed);
  LinearizationStudyResult out;
  for (size_t cell_idx = 0; cell_idx < cfg.n_schedule.size(); ++cell_idx) {
    const long n = cfg.n_schedule[cell_idx];
    const RandomStream cell_stream = base.substream(cell_idx);
    MatrixXd r1(cfg.reps, na), r2(cfg.reps, na);
    parallel_for(cfg.reps, cfg.workers, [&](long rep) {
      const Dataset data = simulate(cfg.dgp, n, cell_stream.substream(rep).substream(0));
      const FitResult f = fit(data, basis);
      const MatrixXd p = design_matrix(data, basis);
      VectorXd gvals(n), rvals(n);
      for (long i = 0; i < n; ++i) {
        gvals[i] = truth_value(cfg.dgp.g, data.x.row(i).transpose());
        rvals[i] = proj.residual(data.x.row(i).transpose());
      }
      const VectorXd eps = data.y - gvals;
      const VectorXd u = eps + rvals;
      const double sqn = std::sqrt(static_cast<double>(n));
      // E[p u] = 0 and E[p r] = 0 for the population projection, so the
      // centered empirical-process terms reduce to sample means.
      const VectorXd lin = p.transpose() * u / static_cast<double>(n);
      const VectorXd lin_r = p.transpose() * rvals / static_cast<double>(n);
      for (int a = 0; a < na; ++a) {
        r1(rep, a) = sqn * alphas.row(a).dot(f.beta_hat - proj.beta - lin);
        r2(rep, a) = sqn * alphas.row(a).dot(lin_r);
      }
    });

    LinearizationCell cell{n, k, 0, 0, 0};
    double acc1 = 0, acc2 = 0;
    for (int a = 0; a < na; ++a) {
      std::vector<double> c1(cfg.reps), c2(cfg.reps);
      for (int r = 0; r < cfg.reps; ++r) {
        c1[r] = std::abs(r1(r, a));
        c2[r] = std::abs(r2(r, a));
      }
      acc1 += quantile_of(std::move(c1), 0.9);
      acc2 += quantile_of(std::move(c2), 0.9);
    }
    cell.q90_r1 = acc1 / na;
    cell.q90_r2 = acc2 / na;
    const double bound =
        std::sqrt(xi * xi * std::log(static_cast<double>(n)) / n) * (1.0 + std::sqrt(double(k)) * lkck);
    cell.r1_bound_ratio = cell.q90_r1 / bound;
    out.cells.push_back(cell);
  }
  return out;
}

// ---------------------------------------------------------------------------
// matrix_study
// ---------------------------------------------------------------------------

McReport MatrixStudyResult::report(std::uint64_t seed) const {
  McReport rep;
  rep.study = "matrix";
  rep.seed = seed;
  rep.columns = {"n", "k", "mean_q_dev", "mean_omega_dev", "q_ratio"};
  for (const auto& c : cells)
    rep.rows.push_back({static_cast<double>(c.n), static_cast<double>(c.k), c.mean_q_dev,
                        c.mean_omega_dev, c.q_ratio});
  return rep;
}

MatrixStudyResult matrix_study(const MatrixStudyConfig& cfg) {
  if (cfg.schedule.empty()) fail(errc::invalid_config, "matrix_study: schedule is empty");
  if (cfg.reps < 1) fail(errc::insufficient_reps, "matrix_study: reps must be >= 1");

  DgpSpec dgp;
  dgp.g = TruthFn::linear;  // irrelevant: y is pure noise below
  dgp.noise = NoiseKind::gaussian;
  dgp.sigma = cfg.sigma;
  dgp.dim = cfg.dim;

  const RandomStream base = study_stream(cfg.seed);
  MatrixStudyResult out;
  for (size_t cell_idx = 0; cell_idx < cfg.schedule.size(); ++cell_idx) {
    const auto [n, k] = cfg.schedule[cell_idx];
    BasisSpec bs = cfg.basis;
    bs.k = k;
    const Basis basis = make_basis(bs);

    // ground-truth Omega by quadrature (homoskedastic: sigma^2 Q^{-1})
    const Quadrature quad = gauss_legendre(cfg.dim, cfg.quad_nodes);
    MatrixXd q_mat = MatrixXd::Zero(k, k);
    for (long q = 0; q < quad.size(); ++q) {
      const VectorXd p = basis.eval(quad.nodes.row(q).transpose());
      q_mat.selfadjointView<Eigen::Lower>().rankUpdate(p, quad.weights[q]);
    }
    q_mat = q_mat.selfadjointView<Eigen::Lower>();
    const MatrixXd lq = cholesky(SymMatrix(q_mat));
    MatrixXd qinv = lq.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(k, k));
    qinv = lq.triangularView<Eigen::Lower>().transpose().solve(qinv);
    const MatrixXd omega_true = cfg.sigma * cfg.sigma * qinv;

    const RandomStream cell_stream = base.substream(cell_idx);
    std::vector<double> qdev(cfg.reps), odev(cfg.reps);
    parallel_for(cfg.reps, cfg.workers, [&](long rep) {
      const RandomStream rs = cell_stream.substream(rep);
      Dataset data = simulate(dgp, n, rs.substream(0));
      // design-only study: the response is pure noise
      VectorXd gvals(n);
      for (long i = 0; i < n; ++i) gvals[i] = truth_value(dgp.g, data.x.row(i).transpose());
      data.y -= gvals;
      const FitResult f = fit(data, basis);
      qdev[rep] = operator_norm(f.Q_hat.mat() - MatrixXd::Identity(k, k));
      odev[rep] = operator_norm(f.Omega_hat.mat() - omega_true);
    });

    MatrixCell cell{n, k, mean_of(qdev), mean_of(odev), 0.0};
    cell.q_ratio = cell.mean_q_dev / std::sqrt(k * std::log(static_cast<double>(n)) / n);
    out.cells.push_back(cell);
  }
  return out;
}

// ---------------------------------------------------------------------------
// coverage_study
// ---------------------------------------------------------------------------

McReport CoverageStudyResult::report(std::uint64_t seed, double alpha, long n, int k) const {
  McReport rep;
  rep.study = "coverage";
  rep.seed = seed;
  rep.columns = {"n",
                 "k",
                 "alpha",
                 "uniform_coverage",
                 "uniform_se",
                 "pointwise_coverage_mean",
                 "pointwise_coverage_mid",
                 "mean_critical_value",
                 "mean_max_width",
                 "failures"};
  rep.rows.push_back({static_cast<double>(n), static_cast<double>(k), alpha, uniform_coverage,
                      uniform_se, pointwise_coverage_mean, pointwise_coverage_mid,
                      mean_critical_value, mean_max_width, static_cast<double>(failures)});
  return rep;
}

CoverageStudyResult coverage_study(const CoverageStudyConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.reps < 500)
    fail(errc::insufficient_reps,
         "coverage_study: need at least 500 replications, got " + std::to_string(cfg.reps));
  if (!(cfg.alpha > 0 && cfg.alpha < 1)) fail(errc::invalid_config, "coverage_study: alpha in (0,1)");

  const Basis basis = make_basis(cfg.basis);
  const LoadingSet lset = build_loadings(cfg.functional, basis);
  const VectorXd theta_true = functional_truth(cfg.functional, cfg.dgp);
  const long npts = lset.size();
  const double z = normal_quantile(1.0 - cfg.alpha / 2.0);

  const RandomStream base = study_stream(cfg.seed);
  std::vector<int> covered(cfg.reps, -1);  // -1 failure, else 0/1
  MatrixXd point_cover(cfg.reps, npts);
  std::vector<double> cvals(cfg.reps, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> widths(cfg.reps, std::numeric_limits<double>::quiet_NaN());

  parallel_for(cfg.reps, cfg.workers, [&](long rep) {
    const RandomStream rs = base.substream(rep);
    const Dataset data = simulate(cfg.dgp, cfg.n, rs.substream(0));
    try {
      const FitResult f = fit(data, basis);
      const VectorXd th = theta_hat(f, lset);
      const VectorXd sg = sigma_theta_hat(f, lset);
      const double c = multiplier_critical_value(f, lset, cfg.alpha, cfg.mult_draws, rs.substream(1));
      bool all_in = true;
      for (long i = 0; i < npts; ++i) {
        const double dev = std::abs(th[i] - theta_true[i]);
        all_in = all_in && dev <= c * sg[i];
        point_cover(rep, i) = dev <= z * sg[i] ? 1.0 : 0.0;
      }
      covered[rep] = all_in ? 1 : 0;
      cvals[rep] = c;
      widths[rep] = 2.0 * c * sg.maxCoeff();
    } catch (const Error& e) {
      if (e.code() != errc::singular_design && e.code() != errc::degenerate_variance) throw;
    }
  });

  CoverageStudyResult out;
  long ok = 0, hit = 0;
  VectorXd point_hits = VectorXd::Zero(npts);
  double csum = 0, wsum = 0;
  for (int r = 0; r < cfg.reps; ++r) {
    if (covered[r] < 0) {
      ++out.failures;
      continue;
    }
    ++ok;
    hit += covered[r];
    point_hits += point_cover.row(r).transpose();
    csum += cvals[r];
    wsum += widths[r];
  }
  if (ok == 0) fail(errc::singular_design, "coverage_study: all replications failed");
  out.uniform_coverage = static_cast<double>(hit) / ok;
  out.uniform_se = std::sqrt(out.uniform_coverage * (1.0 - out.uniform_coverage) / ok);
  point_hits /= static_cast<double>(ok);
  out.pointwise_coverage_mean = point_hits.mean();
  out.pointwise_coverage_mid = point_hits[npts / 2];
  out.mean_critical_value = csum / ok;
  out.mean_max_width = wsum / ok;
  return out;
}

// ---------------------------------------------------------------------------
// misspecification_study
// ---------------------------------------------------------------------------

McReport MisspecStudyResult::report(std::uint64_t seed) const {
  McReport rep;
  rep.study = "misspecification";
  rep.seed = seed;
  rep.columns = {"n",           "mean_dist_surrogate",      "mean_dist_truth", "c_k",
                 "surrogate_coverage", "surrogate_coverage_se", "failures"};
  for (const auto& c : cells)
    rep.rows.push_back({static_cast<double>(c.n), c.mean_dist_surrogate, c.mean_dist_truth, c_k,
                        surrogate_coverage, surrogate_coverage_se, static_cast<double>(failures)});
  return rep;
}

MisspecStudyResult misspecification_study(const MisspecStudyConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.dgp.dim != 2) fail(errc::invalid_config, "misspecification_study: needs a d = 2 truth");
  if (cfg.n_schedule.empty()) fail(errc::invalid_config, "misspecification_study: empty n schedule");
  if (cfg.reps < 1) fail(errc::insufficient_reps, "misspecification_study: reps must be >= 1");
  if (cfg.coverage_reps < 500)
    fail(errc::insufficient_reps, "misspecification_study: coverage needs at least 500 replications");

  const Basis basis = make_additive_basis(
      {BasisSpec::legendre(cfg.component_k), BasisSpec::legendre(cfg.component_k)});
  const int k = basis.k();

  const Quadrature quad = gauss_legendre(2, cfg.quad_nodes);
  auto g_fn = [&](const VectorXd& x) { return truth_value(cfg.dgp.g, x); };
  const Projection proj = project(g_fn, basis, quad);

  MatrixXd p_quad(quad.size(), k);
  VectorXd g_quad(quad.size());
  for (long q = 0; q < quad.size(); ++q) {
    p_quad.row(q) = basis.eval(quad.nodes.row(q).transpose()).transpose();
    g_quad[q] = g_fn(quad.nodes.row(q).transpose());
  }
  const VectorXd surr_quad = p_quad * proj.beta;

  MisspecStudyResult out;
  {
    const VectorXd resid = g_quad - surr_quad;
    out.c_k = std::sqrt((quad.weights.array() * resid.array().square()).sum());
  }

  const RandomStream base = study_stream(cfg.seed);
  for (size_t cell_idx = 0; cell_idx < cfg.n_schedule.size(); ++cell_idx) {
    const long n = cfg.n_schedule[cell_idx];
    const RandomStream cell_stream = base.substream(cell_idx);
    std::vector<double> d_surr(cfg.reps), d_truth(cfg.reps);
    parallel_for(cfg.reps, cfg.workers, [&](long rep) {
      const Dataset data = simulate(cfg.dgp, n, cell_stream.substream(rep).substream(0));
      const FitResult f = fit(data, basis);
      const VectorXd fitted = p_quad * f.beta_hat;
      d_surr[rep] = std::sqrt((quad.weights.array() * (fitted - surr_quad).array().square()).sum());
      d_truth[rep] = std::sqrt((quad.weights.array() * (fitted - g_quad).array().square()).sum());
    });
    out.cells.push_back({n, mean_of(d_surr), mean_of(d_truth)});
  }

  // surrogate-band coverage at the dedicated cell
  FunctionalSpec vspec;
  vspec.kind = FunctionalKind::value;
  vspec.grid.resize(static_cast<long>(cfg.coverage_grid) * cfg.coverage_grid, 2);
  {
    long at = 0;
    for (int i = 0; i < cfg.coverage_grid; ++i)
      for (int j = 0; j < cfg.coverage_grid; ++j) {
        vspec.grid(at, 0) = static_cast<double>(i) / (cfg.coverage_grid - 1);
        vspec.grid(at, 1) = static_cast<double>(j) / (cfg.coverage_grid - 1);
        ++at;
      }
  }
  const LoadingSet lset = build_loadings(vspec, basis);
  const VectorXd theta_surr = lset.loadings * proj.beta;

  const RandomStream cov_stream = base.substream(1000 + cfg.n_schedule.size());
  std::vector<int> covered(cfg.coverage_reps, -1);
  parallel_for(cfg.coverage_reps, cfg.workers, [&](long rep) {
    const RandomStream rs = cov_stream.substream(rep);
    const Dataset data = simulate(cfg.dgp, cfg.coverage_n, rs.substream(0));
    try {
      const FitResult f = fit(data, basis);
      const VectorXd th = theta_hat(f, lset);
      const VectorXd sg = sigma_theta_hat(f, lset);
      const double c = multiplier_critical_value(f, lset, cfg.alpha, cfg.mult_draws, rs.substream(1));
      bool all_in = true;
      for (long i = 0; i < lset.size(); ++i)
        all_in = all_in && std::abs(th[i] - theta_surr[i]) <= c * sg[i];
      covered[rep] = all_in ? 1 : 0;
    } catch (const Error& e) {
      if (e.code() != errc::singular_design && e.code() != errc::degenerate_variance) throw;
    }
  });
  long ok = 0, hit = 0;
  for (int r = 0; r < cfg.coverage_reps; ++r) {
    if (covered[r] < 0) {
      ++out.failures;
      continue;
    }
    ++ok;
    hit += covered[r];
  }
  if (ok == 0) fail(errc::singular_design, "misspecification_study: all coverage replications failed");
  out.surrogate_coverage = static_cast<double>(hit) / ok;
  out.surrogate_coverage_se = std::sqrt(out.surrogate_coverage * (1 - out.surrogate_coverage) / ok);
  return out;
}

// ---------------------------------------------------------------------------
// bootstrap_agreement_study
// ---------------------------------------------------------------------------

McReport BootstrapAgreementResult::report(std::uint64_t seed) const {
  McReport rep;
  rep.study = "bootstrap_agreement";
  rep.seed = seed;
  rep.columns = {"mean_abs_diff", "mean_c_multiplier", "mean_c_bootstrap", "decision_agreement",
                 "failures"};
  rep.rows.push_back({mean_abs_diff, mean_c_multiplier, mean_c_bootstrap, decision_agreement,
                      static_cast<double>(failures)});
  return rep;
}

BootstrapAgreementResult bootstrap_agreement_study(const BootstrapAgreementConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.reps < 100)
    fail(errc::insufficient_reps,
         "bootstrap_agreement_study: need at least 100 replications, got " + std::to_string(cfg.reps));

  const Basis basis = make_basis(cfg.basis);
  const LoadingSet lset = build_loadings(cfg.functional, basis);

  // true-surrogate hypothesis values from the quadrature projection
  const Quadrature quad = gauss_legendre(cfg.dgp.dim, cfg.quad_nodes);
  auto g_fn = [&](const VectorXd& x) { return truth_value(cfg.dgp.g, x); };
  const Projection proj = project(g_fn, basis, quad);
  const VectorXd theta0 = lset.loadings * proj.beta;

  const RandomStream base = study_stream(cfg.seed);
  std::vector<double> cm(cfg.reps, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> cb(cfg.reps, std::numeric_limits<double>::quiet_NaN());
  std::vector<int> agree(cfg.reps, -1);
  parallel_for(cfg.reps, cfg.workers, [&](long rep) {
    const RandomStream rs = base.substream(rep);
    const Dataset data = simulate(cfg.dgp, cfg.n, rs.substream(0));
    try {
      const FitResult f = fit(data, basis);
      const double c_mult =
          multiplier_critical_value(f, lset, cfg.alpha, cfg.mult_draws, rs.substream(1));
      const double c_boot = bootstrap_critical_value(data, basis, lset, cfg.alpha, cfg.boot_draws,
                                                     rs.substream(2));
      const VectorXd th = theta_hat(f, lset);
      const VectorXd sg = sigma_theta_hat(f, lset);
      const double sup_t = ((th - theta0).cwiseQuotient(sg)).cwiseAbs().maxCoeff();
      cm[rep] = c_mult;
      cb[rep] = c_boot;
      agree[rep] = ((sup_t > c_mult) == (sup_t > c_boot)) ? 1 : 0;
    } catch (const Error& e) {
      if (e.code() != errc::singular_design && e.code() != errc::bootstrap_failure &&
          e.code() != errc::degenerate_variance)
        throw;
    }
  });

  BootstrapAgreementResult out;
  long ok = 0, agreed = 0;
  double acc_d = 0, acc_m = 0, acc_b = 0;
  for (int r = 0; r < cfg.reps; ++r) {
    if (agree[r] < 0) {
      ++out.failures;
      continue;
    }
    ++ok;
    agreed += agree[r];
    acc_d += std::abs(cm[r] - cb[r]);
    acc_m += cm[r];
    acc_b += cb[r];
  }
  if (ok == 0) fail(errc::bootstrap_failure, "bootstrap_agreement_study: all replications failed");
  out.mean_abs_diff = acc_d / ok;
  out.mean_c_multiplier = acc_m / ok;
  out.mean_c_bootstrap = acc_b / ok;
  out.decision_agreement = static_cast<double>(agreed) / ok;
  return out;
}

}  // namespace seriesband
