#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "seriesband/errors.hpp"

namespace seriesband {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Immutable descriptor of a reproducible random stream. Draw functions seed a
/// fresh engine from (master_seed, stream_id), so the same descriptor always
/// yields the same sequence; distinct stream ids give independent streams.
struct RandomStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  /// Derived stream for a sub-purpose (replication index, draw index, ...).
  RandomStream substream(std::uint64_t index) const;

  /// Engine seeded by a splitmix64 mix of master_seed and stream_id.
  std::mt19937_64 engine() const;
};

/// splitmix64 finalizer; the mixing function behind stream derivation.
std::uint64_t splitmix64(std::uint64_t z);

/// k independent N(0,1) draws (Box-Muller on 53-bit uniforms; no libc
/// distribution objects, so sequences are identical across platforms).
VectorXd standard_normal_vector(const RandomStream& stream, int k);

/// n independent Exp(1) draws, strictly positive.
VectorXd exponential_weights(const RandomStream& stream, int n);

/// n independent U(0,1) draws in the open interval (0,1).
VectorXd uniform_vector(const RandomStream& stream, int n);

/// Tensor-product Gauss-Legendre rule on [0,1]^d, normalized so the weights
/// sum to one (uniform probability measure). Exact for polynomials up to
/// degree 2m-1 per coordinate.
struct Quadrature {
  MatrixXd nodes;    // (#nodes) x d
  VectorXd weights;  // strictly positive, sums to total mass

  int dim() const { return static_cast<int>(nodes.cols()); }
  long size() const { return nodes.rows(); }
};

Quadrature gauss_legendre(int dim, int nodes_per_dim);

/// Dense symmetric matrix; construction enforces symmetry (asymmetry beyond
/// 1e-12 relative is rejected, below it the matrix is symmetrized).
class SymMatrix {
 public:
  explicit SymMatrix(MatrixXd m);
  const MatrixXd& mat() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

 private:
  MatrixXd m_;
};

/// Lower-triangular L with L L' = M. Fails with NotPositiveDefinite when a
/// pivot drops below rel_tol * mean(diagonal).
MatrixXd cholesky(const SymMatrix& m, double rel_tol = 1e-10);

/// Positive-semidefinite-tolerant variant: pivots within rel_tol*mean(diag)
/// of zero produce a zero column (exact for PSD inputs); pivots below
/// -rel_tol*mean(diag) raise NotPSD. Used to factor Omega-hat, which may be
/// singular under exact interpolation.
MatrixXd psd_cholesky(const SymMatrix& m, double rel_tol = 1e-10);

/// Symmetric PSD square root via eigendecomposition; eigenvalues in
/// [-1e-10 * max_eig, 0) are clipped to zero, anything lower raises NotPSD.
SymMatrix sym_sqrt(const SymMatrix& m);

/// Operator norm (largest |eigenvalue|) of a symmetric matrix.
double operator_norm(const MatrixXd& sym);

}  // namespace seriesband
