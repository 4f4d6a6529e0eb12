#include "seriesband/numutil.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <sstream>

namespace seriesband {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

RandomStream RandomStream::substream(std::uint64_t index) const {
  // Mixing constant is the 64-bit golden ratio; +1 keeps substream(0) != id.
  return RandomStream{master_seed, splitmix64(stream_id ^ (0x9E3779B97F4A7C15ull * (index + 1)))};
}

std::mt19937_64 RandomStream::engine() const {
  return std::mt19937_64(splitmix64(master_seed ^ splitmix64(stream_id)));
}

namespace {

// Uniform on the open interval (0,1): 53-bit mantissa with a half-cell offset.
inline double next_uniform(std::mt19937_64& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

VectorXd standard_normal_vector(const RandomStream& stream, int k) {
  if (k < 1) fail(errc::invalid_spec, "standard_normal_vector: k must be >= 1");
  auto eng = stream.engine();
  VectorXd out(k);
  for (int i = 0; i < k; i += 2) {
    const double u1 = next_uniform(eng);
    const double u2 = next_uniform(eng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < k) out[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  return out;
}

VectorXd exponential_weights(const RandomStream& stream, int n) {
  if (n < 1) fail(errc::invalid_spec, "exponential_weights: n must be >= 1");
  auto eng = stream.engine();
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = -std::log(next_uniform(eng));
  return out;
}

VectorXd uniform_vector(const RandomStream& stream, int n) {
  if (n < 1) fail(errc::invalid_spec, "uniform_vector: n must be >= 1");
  auto eng = stream.engine();
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = next_uniform(eng);
  return out;
}

namespace {

// Nodes/weights of the m-point rule on [-1,1] by Newton iteration on the
// Legendre recurrence (symmetric pairs; standard gauleg scheme).
void gauss_legendre_1d(int m, VectorXd& nodes, VectorXd& weights) {
  nodes.resize(m);
  weights.resize(m);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= m; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[m - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[m - 1 - i] = w;
  }
}

}  // namespace

Quadrature gauss_legendre(int dim, int nodes_per_dim) {
  if (dim < 1) fail(errc::invalid_spec, "gauss_legendre: dim must be >= 1");
  if (dim > 3) fail(errc::dimension_too_large, "gauss_legendre: tensor rules limited to d <= 3");
  if (nodes_per_dim < 2) fail(errc::invalid_spec, "gauss_legendre: need at least 2 nodes per dimension");

  VectorXd n1, w1;
  gauss_legendre_1d(nodes_per_dim, n1, w1);
  // Map [-1,1] -> [0,1]; the mapped weights sum to 1 per dimension.
  n1 = (n1.array() + 1.0) * 0.5;
  w1 *= 0.5;

  long total = 1;
  for (int d = 0; d < dim; ++d) total *= nodes_per_dim;

  Quadrature q;
  q.nodes.resize(total, dim);
  q.weights.resize(total);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      const long j = rem % nodes_per_dim;
      rem /= nodes_per_dim;
      q.nodes(idx, d) = n1[j];
      w *= w1[j];
    }
    q.weights[idx] = w;
  }
  return q;
}

SymMatrix::SymMatrix(MatrixXd m) {
  if (m.rows() != m.cols()) fail(errc::dimension_mismatch, "SymMatrix: matrix must be square");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    std::ostringstream msg;
    msg << "SymMatrix: asymmetry " << asym << " exceeds 1e-12 of max entry " << scale;
    fail(errc::dimension_mismatch, msg.str());
  }
  m_ = 0.5 * (m + m.transpose().eval());
}

namespace {

MatrixXd cholesky_impl(const MatrixXd& m, double rel_tol, bool psd_tolerant) {
  const int k = static_cast<int>(m.rows());
  const double tol = rel_tol * m.diagonal().mean();
  MatrixXd lower = MatrixXd::Zero(k, k);
  double smallest = std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) {
    double pivot = m(j, j) - lower.row(j).head(j).squaredNorm();
    smallest = std::min(smallest, pivot);
    if (psd_tolerant) {
      if (pivot < -tol) {
        std::ostringstream msg;
        msg << "psd_cholesky: pivot " << pivot << " below -" << tol << " at index " << j;
        fail(errc::not_psd, msg.str());
      }
      if (pivot <= tol) {
        // Rank-deficient direction; for a PSD matrix the whole Schur column
        // vanishes with it.
        continue;
      }
    } else if (pivot < tol || pivot <= 0.0) {
      std::ostringstream msg;
      msg << "cholesky: matrix not positive definite (smallest pivot " << smallest
          << ", threshold " << tol << ", index " << j << ")";
      fail(errc::not_positive_definite, msg.str());
    }
    const double d = std::sqrt(pivot);
    lower(j, j) = d;
    for (int i = j + 1; i < k; ++i) {
      lower(i, j) = (m(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / d;
    }
  }
  return lower;
}

}  // namespace

MatrixXd cholesky(const SymMatrix& m, double rel_tol) { return cholesky_impl(m.mat(), rel_tol, false); }

MatrixXd psd_cholesky(const SymMatrix& m, double rel_tol) { return cholesky_impl(m.mat(), rel_tol, true); }

SymMatrix sym_sqrt(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.mat());
  VectorXd lam = es.eigenvalues();
  const double top = std::max(lam.maxCoeff(), 0.0);
  const double floor = -1e-10 * std::max(top, 1e-300);
  if (lam.minCoeff() < floor) {
    std::ostringstream msg;
    msg << "sym_sqrt: eigenvalue " << lam.minCoeff() << " below PSD tolerance " << floor;
    fail(errc::not_psd, msg.str());
  }
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  return SymMatrix(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

double operator_norm(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace seriesband
