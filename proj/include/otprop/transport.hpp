#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "otprop/error.hpp"
#include "otprop/linalg.hpp"
#include "otprop/measures.hpp"
#include "otprop/network_simplex.hpp"
#include "otprop/point_map.hpp"

namespace otprop {

class TransportCost;

/// c(d) = d^T W d with W symmetric positive semidefinite.
struct QuadraticForm {
  Matrix W;
};

/// c(d) = scale * ||d||_2^p on any dimension.
struct ScaledPower {
  double p = 2.0;
  double scale = 1.0;
};

/// c(x, y) = base(phi(x), phi(y)).
struct MapComposed {
  std::shared_ptr<const TransportCost> base;
  PointMap pre_map;
};

/// Transportation cost descriptor with the structural flags that the
/// propagation rules check before they apply.
class TransportCost {
 public:
  using Kind = std::variant<QuadraticForm, ScaledPower, MapComposed>;

  /// Symmetric within 1e-10 and PSD (eigenvalues >= -1e-10 are clamped to 0).
  static TransportCost quadratic(const Matrix& w) {
    detail::require(w.rows() == w.cols() && w.rows() > 0, "quadratic cost: W must be square");
    detail::require(w.allFinite(), "quadratic cost: non-finite W");
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    detail::require(linalg::is_symmetric(w, 1e-10 * scale), "quadratic cost: W must be symmetric");
    Matrix sym = w;
    if (!linalg::is_symmetric(w, 0.0)) sym = 0.5 * (w + w.transpose());
    return TransportCost(QuadraticForm{linalg::clamp_psd(sym)});
  }

  /// ||d||_2^2 on R^n.
  static TransportCost squared_euclidean(int n) {
    return TransportCost(QuadraticForm{Matrix::Identity(n, n)});
  }

  static TransportCost power(double p, double scale = 1.0) {
    detail::require(p >= 0.0 && std::isfinite(p), "power cost: p must be >= 0");
    detail::require(scale > 0.0 && std::isfinite(scale), "power cost: scale must be > 0");
    return TransportCost(ScaledPower{p, scale});
  }

  static TransportCost composed(const TransportCost& base, const PointMap& pre_map) {
    if (const auto d = base.dim()) {
      detail::require_dim(pre_map.out_dim(), *d, "composed cost: map range vs base cost");
    }
    // c∘φ∘ψ collapses to one pre-map so that equality checks stay structural.
    if (const auto* mc = std::get_if<MapComposed>(&base.kind_)) {
      return TransportCost(MapComposed{mc->base, pre_map.then(mc->pre_map)});
    }
    return TransportCost(MapComposed{std::make_shared<const TransportCost>(base), pre_map});
  }

  const Kind& kind() const { return kind_; }
  bool is_quadratic() const { return std::holds_alternative<QuadraticForm>(kind_); }
  bool is_power() const { return std::holds_alternative<ScaledPower>(kind_); }
  bool is_composed() const { return std::holds_alternative<MapComposed>(kind_); }
  const QuadraticForm& as_quadratic() const { return std::get<QuadraticForm>(kind_); }
  const ScaledPower& as_power() const { return std::get<ScaledPower>(kind_); }
  const MapComposed& as_composed() const { return std::get<MapComposed>(kind_); }

  /// Domain dimension; empty for dimension-free costs (ScaledPower).
  std::optional<int> dim() const {
    if (const auto* q = std::get_if<QuadraticForm>(&kind_)) return static_cast<int>(q->W.rows());
    if (const auto* m = std::get_if<MapComposed>(&kind_)) return m->pre_map.in_dim();
    return std::nullopt;
  }

  bool accepts_dim(int n) const {
    const auto d = dim();
    return !d || *d == n;
  }

  /// c(x - y) depends only on the difference. Composed costs qualify when
  /// the pre-map is affine and the base does.
  bool translation_invariant() const {
    if (const auto* m = std::get_if<MapComposed>(&kind_)) {
      return m->pre_map.is_affine() && m->base->translation_invariant();
    }
    return true;
  }

  /// Orthomonotone with respect to the standard inner product. Holds for
  /// psi(||d||_2) costs, which among quadratic forms are the multiples of I.
  bool orthomonotone_certified() const {
    if (const auto* q = std::get_if<QuadraticForm>(&kind_)) return isotropic_factor(*q).has_value();
    return is_power();
  }

  bool positive_definite() const {
    if (const auto* q = std::get_if<QuadraticForm>(&kind_)) {
      return linalg::numerical_rank(q->W) == q->W.rows();
    }
    if (const auto* s = std::get_if<ScaledPower>(&kind_)) return s->p > 0.0;
    return false;
  }

  /// p >= 1 such that c^{1/p} obeys the triangle inequality.
  std::optional<double> triangle_exponent() const {
    if (is_quadratic()) return 2.0;
    if (const auto* s = std::get_if<ScaledPower>(&kind_); s != nullptr && s->p >= 1.0) return s->p;
    return std::nullopt;
  }

  /// p with c(alpha d) = |alpha|^p c(d).
  std::optional<double> homogeneity_degree() const {
    if (is_quadratic()) return 2.0;
    if (const auto* s = std::get_if<ScaledPower>(&kind_)) return s->p;
    return std::nullopt;
  }

  /// c(d) = psi(||d||_2) for some monotone psi.
  bool radial() const { return orthomonotone_certified(); }

  /// Exactly ||d||_2^2 (identity quadratic form or unit-scale power 2).
  bool is_unit_squared_euclidean() const {
    if (const auto* q = std::get_if<QuadraticForm>(&kind_)) {
      return linalg::same_values(q->W, Matrix::Identity(q->W.rows(), q->W.cols()));
    }
    if (const auto* s = std::get_if<ScaledPower>(&kind_)) return s->p == 2.0 && s->scale == 1.0;
    return false;
  }

  /// c(x, y); for translation-invariant kinds this is c(x - y).
  double operator()(const Vector& x, const Vector& y) const {
    detail::require_dim(x.size(), y.size(), "cost: point dimensions");
    if (const auto* q = std::get_if<QuadraticForm>(&kind_)) {
      detail::require_dim(x.size(), q->W.rows(), "cost: point vs W");
      const Vector d = x - y;
      return std::max(0.0, d.dot(q->W * d));
    }
    if (const auto* s = std::get_if<ScaledPower>(&kind_)) {
      const double r = (x - y).norm();
      if (s->p == 0.0) return r > 0.0 ? s->scale : 0.0;
      if (s->p == 2.0) return s->scale * r * r;
      return s->scale * std::pow(r, s->p);
    }
    const auto& m = std::get<MapComposed>(kind_);
    return (*m.base)(m.pre_map(x), m.pre_map(y));
  }

  /// Structural equality: same kind and bitwise-equal parameters. Composed
  /// costs compare their pre-maps by identity.
  friend bool operator==(const TransportCost& a, const TransportCost& b) {
    if (a.kind_.index() != b.kind_.index()) return false;
    if (const auto* qa = std::get_if<QuadraticForm>(&a.kind_)) {
      return linalg::same_values(qa->W, std::get<QuadraticForm>(b.kind_).W);
    }
    if (const auto* sa = std::get_if<ScaledPower>(&a.kind_)) {
      const auto& sb = std::get<ScaledPower>(b.kind_);
      return sa->p == sb.p && sa->scale == sb.scale;
    }
    const auto& ma = std::get<MapComposed>(a.kind_);
    const auto& mb = std::get<MapComposed>(b.kind_);
    return ma.pre_map.same_as(mb.pre_map) && *ma.base == *mb.base;
  }

  std::string describe() const {
    if (const auto* q = std::get_if<QuadraticForm>(&kind_)) {
      return "quadratic(" + std::to_string(q->W.rows()) + "x" + std::to_string(q->W.cols()) + ")";
    }
    if (const auto* s = std::get_if<ScaledPower>(&kind_)) {
      return "power(p=" + std::to_string(s->p) + ", scale=" + std::to_string(s->scale) + ")";
    }
    const auto& m = std::get<MapComposed>(kind_);
    return "composed(" + m.base->describe() + " after " + m.pre_map.name() + ")";
  }

  /// k when W = k I (within 1e-10 relative).
  static std::optional<double> isotropic_factor(const QuadraticForm& q) {
    const double k = q.W.diagonal().mean();
    const double tol = 1e-10 * std::max(1.0, std::abs(k));
    if ((q.W - k * Matrix::Identity(q.W.rows(), q.W.cols())).cwiseAbs().maxCoeff() > tol) {
      return std::nullopt;
    }
    return k;
  }

 private:
  explicit TransportCost(Kind kind) : kind_(std::move(kind)) {}

  Kind kind_;
};

/// Free-function spelling of TransportCost::operator().
inline double cost_eval(const TransportCost& c, const Vector& x, const Vector& y) { return c(x, y); }

/// The cost d -> c(M d). Quadratic forms become M^T W M. A power cost
/// composes only with maps satisfying M^T M = alpha^2 I, giving
/// scale * |alpha|^p.
inline TransportCost compose_linear(const TransportCost& c, const Matrix& m) {
  if (c.is_quadratic()) {
    detail::require_dim(m.rows(), c.as_quadratic().W.rows(), "compose_linear: matrix rows vs cost");
    if (m.rows() == m.cols() && linalg::same_values(m, Matrix::Identity(m.rows(), m.cols()))) return c;
    const Matrix w = m.transpose() * c.as_quadratic().W * m;
    return TransportCost::quadratic(0.5 * (w + w.transpose()));
  }
  if (c.is_power()) {
    double alpha = 0.0;
    if (!linalg::is_scaled_isometry(m, &alpha)) {
      throw PreconditionError("compose_linear: power cost composed with a non-conformal map");
    }
    const auto& s = c.as_power();
    if (alpha == 0.0 && s.p > 0.0) {
      throw PreconditionError("compose_linear: power cost composed with the zero map");
    }
    return TransportCost::power(s.p, s.scale * std::pow(alpha, s.p));
  }
  throw PreconditionError("compose_linear: composed costs are not supported");
}

/// A coupling between two empirical distributions.
struct TransportPlan {
  Vector row_weights;
  Vector col_weights;
  Matrix gamma;

  double max_marginal_residual() const {
    const double r = (gamma.rowwise().sum() - row_weights).cwiseAbs().maxCoeff();
    const double c = (gamma.colwise().sum().transpose() - col_weights).cwiseAbs().maxCoeff();
    return std::max(r, c);
  }
};

struct DiscrepancyResult {
  double value = 0.0;
  TransportPlan plan;
};

/// Pairwise cost matrix C_ij = c(x_i, y_j).
inline Matrix cost_matrix(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                          const TransportCost& c) {
  detail::require_dim(p.dim(), q.dim(), "cost_matrix: distribution dimensions");
  if (!c.accepts_dim(p.dim())) {
    throw DimensionMismatch("cost_matrix: cost domain " + std::to_string(*c.dim()) +
                            " vs distribution dimension " + std::to_string(p.dim()));
  }
  Matrix cm(p.size(), q.size());
  if (c.is_quadratic()) {
    const Matrix& w = c.as_quadratic().W;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      for (Eigen::Index j = 0; j < q.size(); ++j) {
        const Vector d = p.atoms().col(i) - q.atoms().col(j);
        cm(i, j) = std::max(0.0, d.dot(w * d));
      }
    }
    return cm;
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Vector x = p.atom(i);
    for (Eigen::Index j = 0; j < q.size(); ++j) cm(i, j) = c(x, q.atom(j));
  }
  return cm;
}

/// Residual above which an optimal plan is reported as a numerical failure.
inline constexpr double kPlanResidualTolerance = 1e-8;

/// Exact OT discrepancy W_c(P, Q) together with an optimal coupling.
inline DiscrepancyResult ot_discrepancy(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                                        const TransportCost& c) {
  const Matrix cm = cost_matrix(p, q, c);
  DiscrepancyResult out;
  out.plan.row_weights = p.weights();
  out.plan.col_weights = q.weights();
  if (p.size() == 1 || q.size() == 1) {
    // The only coupling is the product.
    out.plan.gamma = p.weights() * q.weights().transpose();
    out.value = (out.plan.gamma.array() * cm.array()).sum();
    return out;
  }
  detail::TransportationSimplex lp(cm, p.weights(), q.weights());
  auto res = lp.solve();
  out.plan.gamma = std::move(res.flow);
  out.value = res.value;
  const double residual = out.plan.max_marginal_residual();
  if (!(residual <= kPlanResidualTolerance)) {
    throw NumericalFailure("ot_discrepancy: marginal residual " + std::to_string(residual));
  }
  return out;
}

/// Largest N accepted by ot_discrepancy_bruteforce.
inline constexpr Eigen::Index kBruteforceMaxAtoms = 8;

/// Minimum over all N! permutation couplings. Valid for uniform weights with
/// N = M, where the transportation polytope has permutation vertices.
inline double ot_discrepancy_bruteforce(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                                        const TransportCost& c) {
  detail::require(p.size() == q.size(), "bruteforce: needs equally many atoms");
  detail::require(p.size() <= kBruteforceMaxAtoms, "bruteforce: at most 8 atoms");
  detail::require(p.is_uniform() && q.is_uniform(), "bruteforce: needs uniform weights");
  const Matrix cm = cost_matrix(p, q, c);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(p.size()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) total += cm(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(p.size());
}

}  // namespace otprop
