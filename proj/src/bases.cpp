#include "seriesband/bases.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace seriesband {

const char* family_name(BasisFamily family) {
  switch (family) {
    case BasisFamily::legendre: return "legendre";
    case BasisFamily::fourier: return "fourier";
    case BasisFamily::bspline: return "bspline";
    case BasisFamily::local_poly_partition: return "local_poly_partition";
    case BasisFamily::tensor: return "tensor";
  }
  return "?";
}

BasisFamily family_from_name(const std::string& name) {
  if (name == "legendre") return BasisFamily::legendre;
  if (name == "fourier") return BasisFamily::fourier;
  if (name == "bspline") return BasisFamily::bspline;
  if (name == "local_poly_partition") return BasisFamily::local_poly_partition;
  if (name == "tensor") return BasisFamily::tensor;
  fail(errc::invalid_spec, "unknown basis family '" + name + "'");
}

int BasisSpec::dim() const {
  return family == BasisFamily::tensor ? static_cast<int>(components.size()) : 1;
}

void BasisSpec::validate() const {
  if (k < 1) fail(errc::invalid_spec, "basis spec: k must be >= 1");
  switch (family) {
    case BasisFamily::legendre:
      break;
    case BasisFamily::fourier:
      if (k % 2 == 0) fail(errc::invalid_spec, "fourier basis requires odd k, got k=" + std::to_string(k));
      break;
    case BasisFamily::bspline:
      if (order < 1) fail(errc::invalid_spec, "bspline order must be >= 1");
      if (k < order + 2)
        fail(errc::invalid_spec, "bspline requires k >= order+2, got k=" + std::to_string(k) +
                                     " order=" + std::to_string(order));
      break;
    case BasisFamily::local_poly_partition:
      if (order < 0) fail(errc::invalid_spec, "partition order must be >= 0");
      if (k % (order + 1) != 0)
        fail(errc::invalid_spec, "partition series requires (order+1) | k, got k=" + std::to_string(k) +
                                     " order=" + std::to_string(order));
      break;
    case BasisFamily::tensor: {
      if (components.empty()) fail(errc::invalid_spec, "tensor basis needs components");
      if (components.size() > 3) fail(errc::dimension_too_large, "tensor basis limited to d <= 3");
      long prod = 1;
      for (const auto& c : components) {
        if (c.family == BasisFamily::tensor) fail(errc::invalid_spec, "tensor components must be one-dimensional");
        c.validate();
        prod *= c.k;
      }
      if (prod != k) fail(errc::invalid_spec, "tensor k must equal the product of component k's");
      break;
    }
  }
}

BasisSpec BasisSpec::tensor(std::vector<BasisSpec> comps) {
  BasisSpec s;
  s.family = BasisFamily::tensor;
  s.components = std::move(comps);
  long prod = 1;
  for (const auto& c : s.components) prod *= c.k;
  s.k = static_cast<int>(prod);
  return s;
}

namespace {

constexpr double kDomainSlack = 1e-12;

// ---------------------------------------------------------------------------
// Shifted Legendre, orthonormal for U(0,1): p_j(x) = sqrt(2j+1) P_j(2x-1).
// Values and derivatives by the three-term recurrence differentiated in place.
// ---------------------------------------------------------------------------
class LegendreImpl final : public BasisImpl {
 public:
  explicit LegendreImpl(int k) : k_(k) {}
  int dim() const override { return 1; }
  int size() const override { return k_; }

  void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const override {
    run(x[0], 0, out);
  }
  void deriv_into(const Eigen::Ref<const VectorXd>& x, int, int order, Eigen::Ref<VectorXd> out) const override {
    run(x[0], order, out);
  }

 private:
  void run(double x, int order, Eigen::Ref<VectorXd> out) const {
    const double u = 2.0 * x - 1.0;
    double p0 = 1.0, p1 = u;          // P_j
    double d0 = 0.0, d1 = 1.0;        // P_j'
    double s0 = 0.0, s1 = 0.0;        // P_j''
    for (int j = 0; j < k_; ++j) {
      const double norm = std::sqrt(2.0 * j + 1.0);
      const double chain = order == 0 ? 1.0 : (order == 1 ? 2.0 : 4.0);
      const double val = order == 0 ? p0 : (order == 1 ? d0 : s0);
      out[j] = norm * chain * val;
      // advance the recurrences to degree j+1
      const double a = (2.0 * j + 3.0) / (j + 2.0);
      const double b = (j + 1.0) / (j + 2.0);
      const double p2 = a * u * p1 - b * p0;
      const double d2 = a * (p1 + u * d1) - b * d0;
      const double s2 = a * (2.0 * d1 + u * s1) - b * s0;
      p0 = p1; p1 = p2;
      d0 = d1; d1 = d2;
      s0 = s1; s1 = s2;
    }
  }

  int k_;
};

// ---------------------------------------------------------------------------
// Fourier series (1, sqrt2 cos(2pi j x), sqrt2 sin(2pi j x), j = 1..(k-1)/2),
// orthonormal for U(0,1). k odd.
// ---------------------------------------------------------------------------
class FourierImpl final : public BasisImpl {
 public:
  explicit FourierImpl(int k) : k_(k) {}
  int dim() const override { return 1; }
  int size() const override { return k_; }

  void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const override {
    run(x[0], 0, out);
  }
  void deriv_into(const Eigen::Ref<const VectorXd>& x, int, int order, Eigen::Ref<VectorXd> out) const override {
    run(x[0], order, out);
  }

 private:
  void run(double x, int order, Eigen::Ref<VectorXd> out) const {
    const double sqrt2 = std::numbers::sqrt2;
    out[0] = order == 0 ? 1.0 : 0.0;
    for (int j = 1; 2 * j < k_ + 1; ++j) {
      const double w = 2.0 * std::numbers::pi * j;
      const double c = std::cos(w * x), s = std::sin(w * x);
      const double scale = sqrt2 * std::pow(w, order);
      double cv = c, sv = s;
      if (order == 1) { cv = -s; sv = c; }
      if (order == 2) { cv = -c; sv = -s; }
      out[2 * j - 1] = scale * cv;
      out[2 * j] = scale * sv;
    }
  }

  int k_;
};

// ---------------------------------------------------------------------------
// B-splines of degree s0 on clamped equally spaced knots (Cox-de Boor; the
// derivative scheme follows the standard triangular table, NURBS book A2.3).
// ---------------------------------------------------------------------------
class BSplineImpl final : public BasisImpl {
 public:
  BSplineImpl(int k, int degree) : k_(k), deg_(degree) {
    const int intervals = k - degree;  // >= 2 by spec validation
    knots_.resize(k + degree + 1);
    for (int i = 0; i <= degree; ++i) knots_[i] = 0.0;
    for (int i = 1; i < intervals; ++i) knots_[degree + i] = static_cast<double>(i) / intervals;
    for (int i = k; i <= k + degree; ++i) knots_[i] = 1.0;
  }

  int dim() const override { return 1; }
  int size() const override { return k_; }

  void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const override {
    out.setZero();
    VectorXd local(deg_ + 1);
    const int span = find_span(x[0]);
    basis_funs(span, x[0], local);
    out.segment(span - deg_, deg_ + 1) = local;
  }

  void deriv_into(const Eigen::Ref<const VectorXd>& x, int, int order, Eigen::Ref<VectorXd> out) const override {
    if (order > deg_)
      fail(errc::not_differentiable,
           "bspline of order " + std::to_string(deg_) + " is not " + std::to_string(order) +
               " times differentiable");
    out.setZero();
    MatrixXd ders(order + 1, deg_ + 1);
    const int span = find_span(x[0]);
    ders_basis_funs(span, x[0], order, ders);
    out.segment(span - deg_, deg_ + 1) = ders.row(order);
  }

 private:
  int find_span(double x) const {
    if (x >= 1.0) return k_ - 1;  // last non-empty span, left-continuous at 1
    int lo = deg_, hi = k_;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (x < knots_[mid] ? hi : lo) = mid;
    }
    return lo;
  }

  void basis_funs(int span, double x, VectorXd& n) const {
    VectorXd left(deg_ + 1), right(deg_ + 1);
    n[0] = 1.0;
    for (int j = 1; j <= deg_; ++j) {
      left[j] = x - knots_[span + 1 - j];
      right[j] = knots_[span + j] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double tmp = n[r] / (right[r + 1] + left[j - r]);
        n[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      n[j] = saved;
    }
  }

  void ders_basis_funs(int span, double x, int nder, MatrixXd& ders) const {
    const int p = deg_;
    MatrixXd ndu(p + 1, p + 1);
    VectorXd left(p + 1), right(p + 1);
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = x - knots_[span + 1 - j];
      right[j] = knots_[span + j] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        ndu(j, r) = right[r + 1] + left[j - r];
        const double tmp = ndu(r, j - 1) / ndu(j, r);
        ndu(r, j) = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      ndu(j, j) = saved;
    }
    for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);
    MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
      int s1 = 0, s2 = 1;
      a(0, 0) = 1.0;
      for (int der = 1; der <= nder; ++der) {
        double d = 0.0;
        const int rk = r - der, pk = p - der;
        if (r >= der) {
          a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
          d = a(s2, 0) * ndu(rk, pk);
        }
        const int j1 = rk >= -1 ? 1 : -rk;
        const int j2 = r - 1 <= pk ? der - 1 : p - r;
        for (int j = j1; j <= j2; ++j) {
          a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
          d += a(s2, j) * ndu(rk + j, pk);
        }
        if (r <= pk) {
          a(s2, der) = -a(s1, der - 1) / ndu(pk + 1, r);
          d += a(s2, der) * ndu(r, pk);
        }
        ders(der, r) = d;
        std::swap(s1, s2);
      }
    }
    double factor = p;
    for (int der = 1; der <= nder; ++der) {
      ders.row(der) *= factor;
      factor *= p - der;
    }
  }

  int k_;
  int deg_;
  std::vector<double> knots_;
};

// ---------------------------------------------------------------------------
// Local polynomial partition series of order s0: k/(s0+1) equal cells, each
// carrying the cell-orthonormal polynomials sqrt(J(2m+1)) P_m(2Jx - 2c - 1).
// Orthonormal for U(0,1) by disjoint supports. Cells are taken
// right-continuous, [c/J, (c+1)/J), with x = 1 assigned to the last cell.
// ---------------------------------------------------------------------------
class PartitionImpl final : public BasisImpl {
 public:
  PartitionImpl(int k, int order) : k_(k), order_(order), cells_(k / (order + 1)) {}
  int dim() const override { return 1; }
  int size() const override { return k_; }

  void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const override {
    run(x[0], 0, out);
  }
  void deriv_into(const Eigen::Ref<const VectorXd>& x, int, int order, Eigen::Ref<VectorXd> out) const override {
    if (order > order_)
      fail(errc::not_differentiable,
           "partition series of order " + std::to_string(order_) + " is not " + std::to_string(order) +
               " times differentiable");
    run(x[0], order, out);
  }

 private:
  void run(double x, int order, Eigen::Ref<VectorXd> out) const {
    out.setZero();
    const int cell = std::min(static_cast<int>(std::floor(x * cells_)), cells_ - 1);
    const double u = 2.0 * cells_ * x - 2.0 * cell - 1.0;
    const double chain = std::pow(2.0 * cells_, order);
    double p0 = 1.0, p1 = u, d0 = 0.0, d1 = 1.0, s0 = 0.0, s1 = 0.0;
    for (int m = 0; m <= order_; ++m) {
      const double norm = std::sqrt(cells_ * (2.0 * m + 1.0));
      const double val = order == 0 ? p0 : (order == 1 ? d0 : s0);
      out[cell * (order_ + 1) + m] = norm * chain * val;
      const double a = (2.0 * m + 3.0) / (m + 2.0);
      const double b = (m + 1.0) / (m + 2.0);
      const double p2 = a * u * p1 - b * p0;
      const double d2 = a * (p1 + u * d1) - b * d0;
      const double s2 = a * (2.0 * d1 + u * s1) - b * s0;
      p0 = p1; p1 = p2;
      d0 = d1; d1 = d2;
      s0 = s1; s1 = s2;
    }
  }

  int k_;
  int order_;
  int cells_;
};

// ---------------------------------------------------------------------------
// Tensor products of one-dimensional bases; evaluation is the flattened outer
// product (first component index fastest).
// ---------------------------------------------------------------------------
class TensorImpl final : public BasisImpl {
 public:
  explicit TensorImpl(std::vector<Basis> comps) : comps_(std::move(comps)) {
    k_ = 1;
    for (const auto& c : comps_) k_ *= c.k();
  }
  int dim() const override { return static_cast<int>(comps_.size()); }
  int size() const override { return k_; }

  void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const override {
    combine(x, -1, 0, out);
  }
  void deriv_into(const Eigen::Ref<const VectorXd>& x, int coord, int order, Eigen::Ref<VectorXd> out) const override {
    combine(x, coord, order, out);
  }

 private:
  void combine(const Eigen::Ref<const VectorXd>& x, int deriv_coord, int order, Eigen::Ref<VectorXd> out) const {
    const int d = dim();
    std::vector<VectorXd> parts(d);
    for (int c = 0; c < d; ++c) {
      const VectorXd xc = x.segment(c, 1);
      parts[c] = (c == deriv_coord) ? comps_[c].eval_deriv(xc, 0, order) : comps_[c].eval(xc);
    }
    for (int idx = 0; idx < k_; ++idx) {
      int rem = idx;
      double v = 1.0;
      for (int c = 0; c < d; ++c) {
        const int kc = comps_[c].k();
        v *= parts[c][rem % kc];
        rem /= kc;
      }
      out[idx] = v;
    }
  }

  std::vector<Basis> comps_;
  int k_;
};

// Raw monomials; orthonormalization input and probe material.
class MonomialImpl final : public BasisImpl {
 public:
  explicit MonomialImpl(int k) : k_(k) {}
  int dim() const override { return 1; }
  int size() const override { return k_; }
  void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const override {
    double v = 1.0;
    for (int j = 0; j < k_; ++j) {
      out[j] = v;
      v *= x[0];
    }
  }
  void deriv_into(const Eigen::Ref<const VectorXd>& x, int, int order, Eigen::Ref<VectorXd> out) const override {
    for (int j = 0; j < k_; ++j) {
      double c = 1.0;
      int e = j;
      for (int m = 0; m < order; ++m) { c *= e; e = std::max(e - 1, 0); }
      out[j] = j >= order ? c * std::pow(x[0], j - order) : 0.0;
    }
  }

 private:
  int k_;
};

// Main-effects dictionary: constant + non-constant functions of each
// one-dimensional component, each applied to its own coordinate.
class AdditiveImpl final : public BasisImpl {
 public:
  explicit AdditiveImpl(std::vector<Basis> comps) : comps_(std::move(comps)) {
    k_ = 1;
    for (const auto& c : comps_) k_ += c.k() - 1;
  }
  int dim() const override { return static_cast<int>(comps_.size()); }
  int size() const override { return k_; }

  void eval_into(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> out) const override {
    out[0] = 1.0;
    int at = 1;
    for (size_t c = 0; c < comps_.size(); ++c) {
      const VectorXd v = comps_[c].eval(x.segment(c, 1));
      out.segment(at, v.size() - 1) = v.tail(v.size() - 1);
      at += static_cast<int>(v.size()) - 1;
    }
  }

  void deriv_into(const Eigen::Ref<const VectorXd>& x, int coord, int order, Eigen::Ref<VectorXd> out) const override {
    out.setZero();
    int at = 1;
    for (size_t c = 0; c < comps_.size(); ++c) {
      const int kc = comps_[c].k();
      if (static_cast<int>(c) == coord) {
        const VectorXd v = comps_[c].eval_deriv(x.segment(c, 1), 0, order);
        out.segment(at, kc - 1) = v.tail(kc - 1);
      }
      at += kc - 1;
    }
  }

 private:
  std::vector<Basis> comps_;
  int k_;
};

}  // namespace

Basis::Basis(BasisSpec spec, std::shared_ptr<const BasisImpl> impl)
    : spec_(std::move(spec)), impl_(std::move(impl)) {}

void Basis::check_point(const Eigen::Ref<const VectorXd>& x, VectorXd& clamped) const {
  if (x.size() != dim())
    fail(errc::dimension_mismatch, "basis eval: point has dimension " + std::to_string(x.size()) +
                                       ", basis domain has dimension " + std::to_string(dim()));
  clamped = x;
  for (int c = 0; c < x.size(); ++c) {
    if (x[c] < -kDomainSlack || x[c] > 1.0 + kDomainSlack) {
      std::ostringstream msg;
      msg << "point coordinate " << c << " = " << x[c] << " lies outside [0,1]";
      fail(errc::out_of_domain, msg.str());
    }
    clamped[c] = std::clamp(x[c], 0.0, 1.0);
  }
}

VectorXd Basis::eval(const Eigen::Ref<const VectorXd>& x) const {
  VectorXd clamped;
  check_point(x, clamped);
  VectorXd raw(k());
  impl_->eval_into(clamped, raw);
  return has_transform_ ? VectorXd(transform_ * raw) : raw;
}

VectorXd Basis::eval(double x) const {
  VectorXd p(1);
  p[0] = x;
  return eval(p);
}

VectorXd Basis::eval_deriv(const Eigen::Ref<const VectorXd>& x, int coord, int order) const {
  if (order < 1 || order > 2) fail(errc::invalid_spec, "eval_deriv supports orders 1 and 2");
  if (coord < 0 || coord >= dim()) fail(errc::dimension_mismatch, "eval_deriv: coordinate out of range");
  VectorXd clamped;
  check_point(x, clamped);
  VectorXd raw(k());
  impl_->deriv_into(clamped, coord, order, raw);
  return has_transform_ ? VectorXd(transform_ * raw) : raw;
}

VectorXd Basis::eval_deriv(double x, int coord, int order) const {
  VectorXd p(1);
  p[0] = x;
  return eval_deriv(p, coord, order);
}

Basis Basis::with_transform(const MatrixXd& tee) const {
  Basis out = *this;
  out.transform_ = has_transform_ ? MatrixXd(tee * transform_) : tee;
  out.has_transform_ = true;
  return out;
}

Basis make_basis(const BasisSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case BasisFamily::legendre:
      return Basis(spec, std::make_shared<LegendreImpl>(spec.k));
    case BasisFamily::fourier:
      return Basis(spec, std::make_shared<FourierImpl>(spec.k));
    case BasisFamily::bspline:
      return Basis(spec, std::make_shared<BSplineImpl>(spec.k, spec.order));
    case BasisFamily::local_poly_partition:
      return Basis(spec, std::make_shared<PartitionImpl>(spec.k, spec.order));
    case BasisFamily::tensor: {
      std::vector<Basis> comps;
      comps.reserve(spec.components.size());
      for (const auto& c : spec.components) comps.push_back(make_basis(c));
      return Basis(spec, std::make_shared<TensorImpl>(std::move(comps)));
    }
  }
  fail(errc::invalid_spec, "unreachable basis family");
}

Basis make_monomial_basis(int k) {
  if (k < 1) fail(errc::invalid_spec, "monomial basis: k must be >= 1");
  BasisSpec spec;
  spec.family = BasisFamily::legendre;  // nearest declared family; raw functions differ
  spec.k = k;
  return Basis(spec, std::make_shared<MonomialImpl>(k));
}

Basis make_additive_basis(const std::vector<BasisSpec>& components) {
  if (components.empty() || components.size() > 3)
    fail(errc::invalid_spec, "additive basis needs 1..3 components");
  std::vector<Basis> comps;
  comps.reserve(components.size());
  long k = 1;
  for (const auto& c : components) {
    comps.push_back(make_basis(c));
    k += c.k - 1;
  }
  BasisSpec spec;
  spec.family = BasisFamily::tensor;  // additive dictionaries live on the same product domain
  spec.components = components;
  spec.k = static_cast<int>(k);
  return Basis(spec, std::make_shared<AdditiveImpl>(std::move(comps)));
}

Basis orthonormalize(const Basis& basis, const Quadrature& measure) {
  if (measure.dim() != basis.dim())
    fail(errc::dimension_mismatch, "orthonormalize: measure dimension does not match basis domain");
  const int k = basis.k();
  MatrixXd gram = MatrixXd::Zero(k, k);
  for (long q = 0; q < measure.size(); ++q) {
    const VectorXd p = basis.eval(measure.nodes.row(q).transpose());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(p, measure.weights[q]);
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  const MatrixXd lower = cholesky(SymMatrix(gram));  // NotPositiveDefinite on collinear input
  // T = L^{-1}, lower-triangular, so that T G T' = I.
  const MatrixXd tee =
      lower.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(k, k));
  return basis.with_transform(tee);
}

BasisDiagnostics diagnostics(const Basis& basis, int grid_points_per_dim) {
  if (grid_points_per_dim < 64) fail(errc::invalid_spec, "diagnostics: need at least 64 grid points per dim");
  const int d = basis.dim();
  const int g = grid_points_per_dim;
  long total = 1;
  for (int c = 0; c < d; ++c) total *= g;

  BasisDiagnostics out;
  out.grid_size = total;
  const double h = 1.0 / (g - 1);

  // One sweep per axis: walk every grid line along that axis, keeping only
  // the previous point's normalized direction. xi_k is picked up on the
  // first sweep.
  VectorXd x(d);
  VectorXd prev(basis.k());
  for (int axis = 0; axis < d; ++axis) {
    const long lines = total / g;
    for (long line = 0; line < lines; ++line) {
      long rem = line;
      for (int c = 0; c < d; ++c) {
        if (c == axis) continue;
        x[c] = (rem % g) * h;
        rem /= g;
      }
      for (int t = 0; t < g; ++t) {
        x[axis] = t * h;
        VectorXd p = basis.eval(x);
        const double norm = p.norm();
        if (axis == 0) out.xi_k = std::max(out.xi_k, norm);
        if (norm > 0) p /= norm;
        if (t > 0) out.xi_k_lipschitz = std::max(out.xi_k_lipschitz, (p - prev).norm() / h);
        prev.swap(p);
      }
    }
  }
  return out;
}

}  // namespace seriesband
