// seriesband command line: fit, band, mc.
//
// Every command is a pure function of (input files, config, seed): rerunning
// with the same inputs is byte-identical. Randomized commands refuse to run
// without an explicit seed.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "seriesband/experiments.hpp"
#include "seriesband/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seriesband;

namespace {

int exit_code_for(errc code) {
  switch (code) {
    case errc::invalid_spec:
    case errc::invalid_config:
    case errc::unknown_study:
    case errc::not_differentiable:
      return 2;
    case errc::parse_error:
    case errc::out_of_domain:
      return 3;
    case errc::insufficient_draws:
    case errc::insufficient_reps:
      return 5;
    default:
      return 4;
  }
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  int workers = 1;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
};

std::vector<long> parse_longs(const std::string& s, const std::string& what) {
  std::vector<long> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stol(item));
    } catch (...) {
      fail(errc::invalid_config, what + ": '" + item + "' is not an integer");
    }
  }
  if (out.empty()) fail(errc::invalid_config, what + ": empty list");
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      fail(errc::invalid_config, what + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) fail(errc::invalid_config, what + ": empty list");
  return out;
}

// [basis] family, k, order, dims. dims > 1 builds the tensor product of
// identical one-dimensional components (k per dimension). k = auto applies
// the explicitly heuristic ceil(n^(1/3)) rule.
BasisSpec basis_spec_from_config(const KvConfig& cfg, int data_dim, long n_for_auto) {
  const std::string fam_name = cfg.get_or("basis", "family", "legendre");
  const long dims = cfg.get_long_or("basis", "dims", data_dim);
  if (dims != data_dim)
    fail(errc::invalid_config, "[basis] dims = " + std::to_string(dims) +
                                   " does not match the data dimension " + std::to_string(data_dim));
  long k;
  const std::string k_raw = cfg.get_or("basis", "k", "5");
  if (k_raw == "auto") {
    if (n_for_auto < 1) fail(errc::invalid_config, "[basis] k = auto needs data");
    k = static_cast<long>(std::ceil(std::cbrt(static_cast<double>(n_for_auto))));
  } else {
    k = cfg.get_long("basis", "k");
  }
  const long order = cfg.get_long_or("basis", "order", 3);

  BasisSpec one;
  one.family = family_from_name(fam_name);
  one.k = static_cast<int>(k);
  one.order = static_cast<int>(order);
  if (dims == 1) return one;
  std::vector<BasisSpec> comps(static_cast<size_t>(dims), one);
  return BasisSpec::tensor(comps);
}

MatrixXd equispaced_grid(int dim, int points_per_dim) {
  long total = 1;
  for (int c = 0; c < dim; ++c) total *= points_per_dim;
  MatrixXd grid(total, dim);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int c = 0; c < dim; ++c) {
      grid(idx, c) = static_cast<double>(rem % points_per_dim) / (points_per_dim - 1);
      rem /= points_per_dim;
    }
  }
  return grid;
}

MatrixXd read_points_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open grid file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        row.push_back(std::stod(item));
      } catch (...) {
        fail(errc::parse_error, path + ":" + std::to_string(lineno) + ": '" + item + "' is not a number");
      }
    }
    if (static_cast<int>(row.size()) != dim)
      fail(errc::parse_error, path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(dim) + " coordinates");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(errc::parse_error, "grid file '" + path + "' is empty");
  MatrixXd grid(static_cast<long>(rows.size()), dim);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < dim; ++c) grid(static_cast<long>(i), c) = rows[i][c];
  return grid;
}

Quadrature measure_from_config(const KvConfig& cfg, int dim) {
  const std::string kind = cfg.get_or("functional", "measure", "uniform");
  if (kind == "uniform") {
    const int nodes = dim == 1 ? 200 : (dim == 2 ? 60 : 30);
    return gauss_legendre(dim, nodes);
  }
  if (kind == "nodes-file") {
    const std::string path = cfg.get("functional", "measure_file");
    const MatrixXd table = read_points_csv(path, dim + 1);  // x..., weight
    Quadrature q;
    q.nodes = table.leftCols(dim);
    q.weights = table.col(dim);
    return q;
  }
  fail(errc::invalid_config, "[functional] measure must be uniform or nodes-file");
}

FunctionalSpec functional_from_config(const KvConfig& cfg, int dim) {
  FunctionalSpec spec;
  spec.kind = functional_from_name(cfg.get_or("functional", "kind", "value"));
  spec.coord = static_cast<int>(cfg.get_long_or("functional", "coord", 1)) - 1;  // 1-based in config

  switch (spec.kind) {
    case FunctionalKind::value:
    case FunctionalKind::partial_derivative:
      if (cfg.has("functional", "grid_file")) {
        spec.grid = read_points_csv(cfg.get("functional", "grid_file"), dim);
      } else {
        spec.grid = equispaced_grid(dim, static_cast<int>(cfg.get_long_or("functional", "grid_points", 401)));
      }
      break;
    case FunctionalKind::average_derivative:
      spec.measure = measure_from_config(cfg, dim);
      break;
    case FunctionalKind::cond_average_derivative: {
      if (cfg.has("functional", "grid_file")) {
        spec.grid = read_points_csv(cfg.get("functional", "grid_file"), dim - 1);
      } else {
        spec.grid =
            equispaced_grid(dim - 1, static_cast<int>(cfg.get_long_or("functional", "grid_points", 21)));
      }
      const Quadrature m = gauss_legendre(1, static_cast<int>(cfg.get_long_or("functional", "cond_nodes", 200)));
      spec.cond_measures.assign(static_cast<size_t>(spec.grid.rows()), m);
      break;
    }
  }
  return spec;
}

std::uint64_t required_seed(const KvConfig& cfg, const std::string& section, const CommonArgs& args) {
  if (args.has_seed_override) return args.seed_override;
  if (!cfg.has(section, "seed"))
    fail(errc::invalid_config,
         "randomized command requires a seed ([" + section + "] seed or --seed); "
         "system entropy is never used");
  return static_cast<std::uint64_t>(cfg.get_long(section, "seed"));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(errc::parse_error, "cannot open output file '" + path.string() + "'");
  out << text;
}

json effective_settings(const KvConfig& cfg) {
  json settings = json::object();
  for (const auto& [section, kv] : cfg.effective()) {
    json sec = json::object();
    for (const auto& [key, value] : kv) sec[key] = value;
    settings[section.empty() ? "(root)" : section] = sec;
  }
  return settings;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

int cmd_fit(const CommonArgs& args) {
  const KvConfig cfg = KvConfig::parse_file(args.config_path);
  const Dataset data = read_dataset_csv(cfg.get("io", "input"));
  const BasisSpec spec = basis_spec_from_config(cfg, data.dim(), data.n());
  if (spec.k > data.n())
    fail(errc::invalid_config, "k = " + std::to_string(spec.k) + " exceeds n = " +
                                   std::to_string(data.n()) +
                                   "; the fit requires n >= k (and in practice n well above k)");
  const Basis basis = make_basis(spec);
  const FitResult f = fit(data, basis);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  write_vector_csv((out / "beta.csv").string(), "beta", f.beta_hat);
  write_matrix_csv((out / "qhat.csv").string(), f.Q_hat.mat());
  write_matrix_csv((out / "sigmahat.csv").string(), f.Sigma_hat.mat());
  write_matrix_csv((out / "omegahat.csv").string(), f.Omega_hat.mat());

  std::ostringstream summary;
  summary << "n = " << f.n << "\n"
          << "k = " << f.k() << "\n"
          << "family = " << family_name(spec.family) << "\n"
          << "max_abs_residual = " << format_double(f.residuals.cwiseAbs().maxCoeff()) << "\n"
          << "residual_rmse = " << format_double(std::sqrt(f.residuals.squaredNorm() / f.n)) << "\n";
  write_text(out / "fit_summary.txt", summary.str());
  return 0;
}

// ---------------------------------------------------------------------------
// band
// ---------------------------------------------------------------------------

int cmd_band(const CommonArgs& args) {
  const KvConfig cfg = KvConfig::parse_file(args.config_path);
  const Dataset data = read_dataset_csv(cfg.get("io", "input"));
  const BasisSpec spec = basis_spec_from_config(cfg, data.dim(), data.n());
  if (spec.k > data.n())
    fail(errc::invalid_config, "k = " + std::to_string(spec.k) + " exceeds n = " + std::to_string(data.n()));
  const Basis basis = make_basis(spec);
  const FunctionalSpec fspec = functional_from_config(cfg, data.dim());

  const double alpha = cfg.get_double_or("inference", "alpha", 0.05);
  const BandMethod method = method_from_name(cfg.get_or("inference", "method", "gaussian_multiplier"));
  const BandSide side = side_from_name(cfg.get_or("inference", "side", "two_sided"));
  const std::uint64_t seed = required_seed(cfg, "inference", args);
  const RandomStream stream{seed, 0};

  const FitResult f = fit(data, basis);
  const LoadingSet lset = build_loadings(fspec, basis);

  BandResult band;
  long draws = 0;
  if (method == BandMethod::gaussian_multiplier) {
    draws = cfg.get_long_or("inference", "R", 5000);
    band = uniform_band(f, lset, alpha, static_cast<int>(draws), stream, side);
  } else {
    draws = cfg.get_long_or("inference", "B", 1000);
    band = uniform_band_bootstrap(data, basis, lset, alpha, static_cast<int>(draws), stream, side);
  }

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  std::ostringstream csv;
  for (long c = 0; c < band.grid.cols(); ++c) csv << "w" << c + 1 << ",";
  csv << "theta_hat,sigma_hat,lower,upper\n";
  for (long i = 0; i < band.theta.size(); ++i) {
    for (long c = 0; c < band.grid.cols(); ++c) csv << format_double(band.grid(i, c)) << ",";
    csv << format_double(band.theta[i]) << "," << format_double(band.sigma[i]) << ","
        << format_double(band.lower[i]) << "," << format_double(band.upper[i]) << "\n";
  }
  write_text(out / "band.csv", csv.str());

  std::ostringstream meta;
  meta << "critical_value = " << format_double(band.critical_value) << "\n"
       << "alpha = " << format_double(alpha) << "\n"
       << "method = " << method_name(method) << "\n"
       << "side = " << side_name(side) << "\n"
       << "draws = " << draws << "\n"
       << "seed = " << seed << "\n"
       << "n = " << f.n << "\n"
       << "k = " << f.k() << "\n"
       << "functional = " << functional_name(fspec.kind) << "\n";
  write_text(out / "band_meta.txt", meta.str());
  return 0;
}

// ---------------------------------------------------------------------------
// mc
// ---------------------------------------------------------------------------

DgpSpec dgp_from_config(const KvConfig& cfg, const std::string& default_truth) {
  DgpSpec dgp;
  dgp.g = truth_from_name(cfg.get_or("mc", "truth", default_truth));
  dgp.noise = noise_from_name(cfg.get_or("mc", "noise", "gaussian"));
  dgp.sigma = cfg.get_double_or("mc", "sigma", 1.0);
  dgp.t_df = static_cast<int>(cfg.get_long_or("mc", "t_df", 8));
  dgp.dim = static_cast<int>(cfg.get_long_or("mc", "dim", dgp.g == TruthFn::interaction ? 2 : 1));
  return dgp;
}

BasisSpec mc_basis_from_config(const KvConfig& cfg, const std::string& default_family, long default_k,
                               long default_order) {
  BasisSpec spec;
  spec.family = family_from_name(cfg.get_or("mc", "family", default_family));
  spec.k = static_cast<int>(cfg.get_long_or("mc", "k", default_k));
  spec.order = static_cast<int>(cfg.get_long_or("mc", "order", default_order));
  return spec;
}

Schedule schedule_from_config(const KvConfig& cfg, const std::string& default_n,
                              const std::string& default_k) {
  const auto ns = parse_longs(cfg.get_or("mc", "schedule_n", default_n), "[mc] schedule_n");
  const auto ks = parse_longs(cfg.get_or("mc", "schedule_k", default_k), "[mc] schedule_k");
  if (ns.size() != ks.size())
    fail(errc::invalid_config, "[mc] schedule_n and schedule_k must have equal length");
  Schedule out;
  for (size_t i = 0; i < ns.size(); ++i) out.emplace_back(ns[i], static_cast<int>(ks[i]));
  return out;
}

int cmd_mc(const CommonArgs& args) {
  const KvConfig cfg = KvConfig::parse_file(args.config_path);
  const std::string study = cfg.get("mc", "study");
  const std::uint64_t seed = required_seed(cfg, "mc", args);
  const int workers = args.workers;

  McReport report;
  if (study == "rate") {
    RateStudyConfig c;
    c.dgp = dgp_from_config(cfg, "quadratic");
    c.basis = mc_basis_from_config(cfg, "legendre", 5, 3);
    c.schedule = schedule_from_config(cfg, "500,2000,8000", "5,5,5");
    c.reps = static_cast<int>(cfg.get_long_or("mc", "reps", 200));
    c.seed = seed;
    c.workers = workers;
    report = rate_study(c).report(seed);
  } else if (study == "normality") {
    NormalityStudyConfig c;
    c.dgp = dgp_from_config(cfg, "quadratic");
    c.basis = mc_basis_from_config(cfg, "legendre", 8, 3);
    c.n = cfg.get_long_or("mc", "n", 2000);
    c.x_points = parse_doubles(cfg.get_or("mc", "x_points", "0.5"), "[mc] x_points");
    c.reps = static_cast<int>(cfg.get_long_or("mc", "reps", 2000));
    c.seed = seed;
    c.workers = workers;
    report = normality_study(c).report(seed);
  } else if (study == "linearization") {
    LinearizationStudyConfig c;
    c.dgp = dgp_from_config(cfg, "quadratic");
    c.basis = mc_basis_from_config(cfg, "legendre", 5, 3);
    c.n_schedule = parse_longs(cfg.get_or("mc", "n_schedule", "500,2000,8000"), "[mc] n_schedule");
    c.reps = static_cast<int>(cfg.get_long_or("mc", "reps", 200));
    c.seed = seed;
    c.workers = workers;
    report = linearization_study(c).report(seed);
  } else if (study == "matrix") {
    MatrixStudyConfig c;
    c.basis = mc_basis_from_config(cfg, "legendre", 5, 3);
    c.sigma = cfg.get_double_or("mc", "sigma", 1.0);
    c.schedule = schedule_from_config(cfg, "1000,4000,16000,1000,4000,16000", "5,5,5,10,10,10");
    c.reps = static_cast<int>(cfg.get_long_or("mc", "reps", 200));
    c.seed = seed;
    c.workers = workers;
    report = matrix_study(c).report(seed);
  } else if (study == "coverage") {
    CoverageStudyConfig c;
    c.dgp = dgp_from_config(cfg, "sine");
    c.basis = mc_basis_from_config(cfg, "bspline", 12, 3);
    c.n = cfg.get_long_or("mc", "n", 500);
    c.alpha = cfg.get_double_or("mc", "alpha", 0.05);
    c.reps = static_cast<int>(cfg.get_long_or("mc", "reps", 500));
    c.mult_draws = static_cast<int>(cfg.get_long_or("mc", "R", 2000));
    c.functional = functional_from_config(cfg, c.dgp.dim);
    c.seed = seed;
    c.workers = workers;
    report = coverage_study(c).report(seed, c.alpha, c.n, c.basis.k);
  } else if (study == "misspecification") {
    MisspecStudyConfig c;
    c.dgp = dgp_from_config(cfg, "interaction");
    c.component_k = static_cast<int>(cfg.get_long_or("mc", "component_k", 3));
    c.n_schedule = parse_longs(cfg.get_or("mc", "n_schedule", "500,2000,8000"), "[mc] n_schedule");
    c.reps = static_cast<int>(cfg.get_long_or("mc", "reps", 200));
    c.coverage_n = cfg.get_long_or("mc", "coverage_n", 500);
    c.alpha = cfg.get_double_or("mc", "alpha", 0.05);
    c.coverage_reps = static_cast<int>(cfg.get_long_or("mc", "coverage_reps", 500));
    c.mult_draws = static_cast<int>(cfg.get_long_or("mc", "R", 2000));
    c.coverage_grid = static_cast<int>(cfg.get_long_or("mc", "coverage_grid", 11));
    c.seed = seed;
    c.workers = workers;
    report = misspecification_study(c).report(seed);
  } else if (study == "bootstrap_agreement") {
    BootstrapAgreementConfig c;
    c.dgp = dgp_from_config(cfg, "sine");
    c.basis = mc_basis_from_config(cfg, "bspline", 8, 3);
    c.n = cfg.get_long_or("mc", "n", 2000);
    c.alpha = cfg.get_double_or("mc", "alpha", 0.05);
    c.reps = static_cast<int>(cfg.get_long_or("mc", "reps", 100));
    c.mult_draws = static_cast<int>(cfg.get_long_or("mc", "R", 2000));
    c.boot_draws = static_cast<int>(cfg.get_long_or("mc", "B", 2000));
    c.functional = functional_from_config(cfg, c.dgp.dim);
    c.seed = seed;
    c.workers = workers;
    report = bootstrap_agreement_study(c).report(seed);
  } else {
    fail(errc::unknown_study,
         "unknown study '" + study +
             "'; available: rate, normality, linearization, matrix, coverage, misspecification, "
             "bootstrap_agreement");
  }

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  std::ostringstream csv;
  for (size_t c = 0; c < report.columns.size(); ++c) {
    if (c) csv << ",";
    csv << report.columns[c];
  }
  csv << "\n";
  for (const auto& row : report.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) csv << ",";
      csv << format_double(row[c]);
    }
    csv << "\n";
  }
  write_text(out / (report.study + "_report.csv"), csv.str());

  json summary;
  summary["study"] = report.study;
  summary["seed"] = report.seed;
  summary["workers"] = workers;
  summary["settings"] = effective_settings(cfg);
  summary["columns"] = report.columns;
  summary["rows"] = report.rows;
  write_text(out / (report.study + "_summary.json"), summary.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"least-squares series regression with uniform confidence bands"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "configuration file")->required();
    sub->add_option("--out", args.out_dir, "output directory (default .)");
    sub->add_option("--workers", args.workers, "worker threads for studies (default 1)");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&args](const std::uint64_t& s) {
          args.seed_override = s;
          args.has_seed_override = true;
        },
        "seed override (takes precedence over the config)");
  };

  CLI::App* c_fit = app.add_subcommand("fit", "least-squares series fit with sandwich matrices");
  CLI::App* c_band = app.add_subcommand("band", "uniform confidence band for a linear functional");
  CLI::App* c_mc = app.add_subcommand("mc", "run a Monte Carlo study");
  add_common(c_fit);
  add_common(c_band);
  add_common(c_mc);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_fit->parsed()) return cmd_fit(args);
    if (c_band->parsed()) return cmd_band(args);
    if (c_mc->parsed()) return cmd_mc(args);
  } catch (const Error& e) {
    std::cerr << errc_name(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
