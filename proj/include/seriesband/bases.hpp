#pragma once

#include <memory>
#include <string>
#include <vector>

#include "seriesband/numutil.hpp"

namespace seriesband {

enum class BasisFamily { legendre, fourier, bspline, local_poly_partition, tensor };

const char* family_name(BasisFamily family);
BasisFamily family_from_name(const std::string& name);

/// Declarative description of a series basis on [0,1]^d.
///
/// order is the polynomial degree s0 for bspline / local_poly_partition and
/// ignored otherwise. Constraints: fourier needs odd k; bspline needs
/// k >= order + 2; local_poly_partition needs (order + 1) | k; tensor k is
/// the product of component sizes.
struct BasisSpec {
  BasisFamily family = BasisFamily::legendre;
  int k = 1;
  int order = 0;
  std::vector<BasisSpec> components;  // tensor only

  int dim() const;
  void validate() const;

  static BasisSpec legendre(int k) { return {BasisFamily::legendre, k, 0, {}}; }
  static BasisSpec fourier(int k) { return {BasisFamily::fourier, k, 0, {}}; }
  static BasisSpec bspline(int k, int order) { return {BasisFamily::bspline, k, order, {}}; }
  static BasisSpec partition(int k, int order) { return {BasisFamily::local_poly_partition, k, order, {}}; }
  static BasisSpec tensor(std::vector<BasisSpec> comps);
};

/// Family evaluation kernel. Implementations write the k raw function values
/// (or coordinate-wise partial derivatives) at a domain point.
class BasisImpl {
 public:
  virtual ~BasisImpl() = default;
  virtual int dim() const = 0;
  virtual int size() const = 0;
  virtual void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const = 0;
  /// order-th partial derivative in coordinate `coord` (order 1 or 2).
  virtual void deriv_into(const Eigen::Ref<const VectorXd>& x, int coord, int order,
                          Eigen::Ref<VectorXd> out) const = 0;
};

/// Evaluable basis p(.) : [0,1]^d -> R^k, optionally composed with a
/// lower-triangular orthonormalization transform T (p_new = T p_raw).
class Basis {
 public:
  Basis() = default;
  Basis(BasisSpec spec, std::shared_ptr<const BasisImpl> impl);

  int dim() const { return impl_->dim(); }
  int k() const { return impl_->size(); }
  const BasisSpec& spec() const { return spec_; }
  bool has_transform() const { return has_transform_; }
  const MatrixXd& transform() const { return transform_; }

  VectorXd eval(const Eigen::Ref<const VectorXd>& x) const;
  VectorXd eval(double x) const;
  VectorXd eval_deriv(const Eigen::Ref<const VectorXd>& x, int coord, int order) const;
  VectorXd eval_deriv(double x, int coord, int order) const;

  /// Basis with transform tee * T composed on top of the current one.
  Basis with_transform(const MatrixXd& tee) const;

 private:
  void check_point(const Eigen::Ref<const VectorXd>& x, VectorXd& clamped) const;

  BasisSpec spec_;
  std::shared_ptr<const BasisImpl> impl_;
  MatrixXd transform_;
  bool has_transform_ = false;
};

/// Grid estimates of xi_k = sup ||p(x)|| and of the Lipschitz coefficient of
/// the normalized direction alpha(x) = p(x)/||p(x)|| (lower bounds of the
/// continuum suprema).
struct BasisDiagnostics {
  double xi_k = 0.0;
  double xi_k_lipschitz = 0.0;
  long grid_size = 0;
};

Basis make_basis(const BasisSpec& spec);

/// Raw monomials (1, x, x^2, ...) on [0,1]; deliberately ill-conditioned,
/// used as orthonormalization input and as probe material.
Basis make_monomial_basis(int k);

/// Additive main-effects dictionary over d one-dimensional components:
/// the constant plus each component's non-constant functions. Orthonormal
/// under U(0,1)^d when the components are orthonormal under U(0,1).
Basis make_additive_basis(const std::vector<BasisSpec>& components);

Basis orthonormalize(const Basis& basis, const Quadrature& measure);

BasisDiagnostics diagnostics(const Basis& basis, int grid_points_per_dim = 4096);

}  // namespace seriesband
