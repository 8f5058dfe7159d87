#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "otprop/error.hpp"
#include "otprop/linalg.hpp"
#include "otprop/measures.hpp"
#include "otprop/point_map.hpp"
#include "otprop/transport.hpp"

namespace otprop {

/// The ball B_eps^c(P) = { Q : W_c(P, Q) <= eps }.
///
/// `exact` records whether the set is the true image of the sets it was
/// built from (true) or a proven superset of it (false).
struct OTAmbiguitySet {
  EmpiricalDistribution center;
  double radius;
  TransportCost cost;
  bool exact = true;

  OTAmbiguitySet(EmpiricalDistribution c, double eps, TransportCost k, bool is_exact = true)
      : center(std::move(c)), radius(eps), cost(std::move(k)), exact(is_exact) {
    detail::require(std::isfinite(radius) && radius >= 0.0, "OTAmbiguitySet: radius must be >= 0");
    if (!cost.accepts_dim(center.dim())) {
      throw DimensionMismatch("OTAmbiguitySet: cost domain " + std::to_string(*cost.dim()) +
                              " vs center dimension " + std::to_string(center.dim()));
    }
  }

  int dim() const { return center.dim(); }
};

/// W_c(center, Q).
inline double discrepancy_to_center(const OTAmbiguitySet& s, const EmpiricalDistribution& q) {
  return ot_discrepancy(s.center, q, s.cost).value;
}

inline bool contains(const OTAmbiguitySet& s, const EmpiricalDistribution& q, double tol = 1e-9) {
  detail::require_dim(q.dim(), s.dim(), "contains: distribution vs set dimension");
  return discrepancy_to_center(s, q) <= s.radius + tol;
}

namespace detail {

inline void require_translation_invariant(const TransportCost& c, const char* op) {
  if (!c.translation_invariant()) {
    throw PreconditionError(std::string(op) + ": cost " + c.describe() + " is not translation-invariant");
  }
}

/// Pairwise cost (x, y) -> c(M x, M y) for a translation-invariant c.
/// Falls back to a composed cost when no closed form exists.
inline TransportCost cost_after_linear(const TransportCost& c, const Matrix& m) {
  if (c.is_quadratic()) return compose_linear(c, m);
  if (c.is_power()) {
    double alpha = 0.0;
    if (linalg::is_scaled_isometry(m, &alpha) && (alpha > 0.0 || c.as_power().p == 0.0)) {
      return compose_linear(c, m);
    }
  }
  return TransportCost::composed(c, PointMap::linear(m));
}

inline Matrix inverse_if_square_invertible(const Matrix& m, bool* ok) {
  *ok = false;
  if (m.rows() != m.cols() || linalg::numerical_rank(m) != m.rows()) return {};
  *ok = true;
  return m.inverse();
}

}  // namespace detail

/// Image of the ball under x -> A x.
///
/// The result is B_eps^{c o A^+}(A#P). It is the exact image when A has full
/// row rank and a superset otherwise. The cost must be translation-invariant
/// and orthomonotone. Positive definite quadratic forms that are not
/// multiples of I are handled by whitening: c(d) = ||L d||^2 with W = L^T L,
/// and the rule is applied to the map A L^{-1}.
inline OTAmbiguitySet push_linear(const OTAmbiguitySet& s, const Matrix& a) {
  detail::require_dim(a.cols(), s.dim(), "push_linear: matrix columns vs set dimension");
  detail::require_translation_invariant(s.cost, "push_linear");
  const bool full_row_rank = linalg::has_full_row_rank(a);
  auto center = pushforward(s.center, PointMap::linear(a));
  const bool exact = s.exact && full_row_rank;

  if (s.cost.orthomonotone_certified()) {
    return OTAmbiguitySet(std::move(center), s.radius, detail::cost_after_linear(s.cost, linalg::pinv(a)), exact);
  }
  if (s.cost.is_quadratic() && s.cost.positive_definite()) {
    const Matrix& w = s.cost.as_quadratic().W;
    const Eigen::LLT<Matrix> llt(w);
    if (llt.info() != Eigen::Success) throw NumericalFailure("push_linear: Cholesky of the cost matrix failed");
    const Matrix l = llt.matrixU();  // W = L^T L
    const Matrix l_inv = l.triangularView<Eigen::Upper>().solve(Matrix::Identity(w.rows(), w.cols()));
    const Matrix mp = linalg::pinv(a * l_inv);
    const Matrix w_out = mp.transpose() * mp;
    return OTAmbiguitySet(std::move(center), s.radius, TransportCost::quadratic(0.5 * (w_out + w_out.transpose())),
                          exact);
  }
  throw PreconditionError("push_linear: cost " + s.cost.describe() +
                          " is neither orthomonotone nor a positive definite quadratic form");
}

enum class InverseMode { bijective, injective, surjective };

inline const char* to_string(InverseMode m) {
  switch (m) {
    case InverseMode::bijective: return "bijective";
    case InverseMode::injective: return "injective";
    case InverseMode::surjective: return "surjective";
  }
  return "?";
}

/// Tolerance of the inverse checks done on atoms by push_nonlinear.
inline constexpr double kInverseCheckTolerance = 1e-9;

/// Image of the ball under a nonlinear map f with a caller-supplied inverse.
///
///  - bijective: f_inv(f(x)) = x is checked on the atoms; exact image with
///    cost c(f_inv(.), f_inv(.)).
///  - injective: same check and cost, but the ball also holds laws that are
///    not images, so exact = false.
///  - surjective: f(f_inv(y)) = y is checked on image atoms, and the cost
///    condition c(g(x1), g(x2)) <= c(x1, x2) with g = f_inv o f is spot
///    checked on atom pairs (a sample, not a proof). Superset.
///
/// When both maps are affine and the cost is translation-invariant, the
/// composed cost is reduced to closed form.
inline OTAmbiguitySet push_nonlinear(const OTAmbiguitySet& s, const PointMap& f, const PointMap& f_inv,
                                     InverseMode mode, std::size_t max_pair_checks = 20000) {
  detail::require_dim(f.in_dim(), s.dim(), "push_nonlinear: map domain vs set dimension");
  detail::require_dim(f_inv.in_dim(), f.out_dim(), "push_nonlinear: inverse domain vs map range");
  detail::require_dim(f_inv.out_dim(), f.in_dim(), "push_nonlinear: inverse range vs map domain");

  auto image = pushforward(s.center, f);
  const auto& x = s.center.atoms();
  const auto tol_for = [](const Vector& ref) { return kInverseCheckTolerance * std::max(1.0, ref.cwiseAbs().maxCoeff()); };

  if (mode == InverseMode::bijective || mode == InverseMode::injective) {
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      const Vector back = f_inv(image.atom(i));
      if ((back - x.col(i)).cwiseAbs().maxCoeff() > tol_for(x.col(i))) {
        throw PreconditionError("push_nonlinear: f_inv(f(x)) != x at atom " + std::to_string(i));
      }
    }
  } else {
    for (Eigen::Index i = 0; i < image.size(); ++i) {
      const Vector y = image.atom(i);
      if ((f(f_inv(y)) - y).cwiseAbs().maxCoeff() > tol_for(y)) {
        throw PreconditionError("push_nonlinear: f(f_inv(y)) != y at image atom " + std::to_string(i));
      }
    }
    // Deterministic spread of pairs: all of them when few, a strided subset otherwise.
    const auto n = static_cast<std::size_t>(x.cols());
    const std::size_t total = n * n;
    const std::size_t stride = std::max<std::size_t>(1, total / std::max<std::size_t>(1, max_pair_checks));
    for (std::size_t k = 0; k < total; k += stride) {
      const auto i = static_cast<Eigen::Index>(k / n);
      const auto j = static_cast<Eigen::Index>(k % n);
      const double lhs = s.cost(f_inv(image.atom(i)), f_inv(image.atom(j)));
      const double rhs = s.cost(x.col(i), x.col(j));
      if (lhs > rhs + 1e-9 * std::max(1.0, rhs)) {
        throw PreconditionError("push_nonlinear: cost condition fails on atom pair (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
      }
    }
  }

  bool exact = s.exact && mode == InverseMode::bijective;
  if (f.is_affine() && f_inv.is_affine() && s.cost.translation_invariant()) {
    bool invertible = false;
    const Matrix m_inv = detail::inverse_if_square_invertible(*f.matrix(), &invertible);
    // An invertible affine f makes the injective case bijective.
    if (invertible && mode != InverseMode::surjective &&
        (m_inv - *f_inv.matrix()).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, m_inv.cwiseAbs().maxCoeff())) {
      exact = s.exact;
    }
    return OTAmbiguitySet(std::move(image), s.radius, detail::cost_after_linear(s.cost, *f_inv.matrix()), exact);
  }
  return OTAmbiguitySet(std::move(image), s.radius, TransportCost::composed(s.cost, f_inv), exact);
}

/// x -> x + b. Same radius and cost.
inline OTAmbiguitySet translate(const OTAmbiguitySet& s, const Vector& b) {
  detail::require_dim(b.size(), s.dim(), "translate: offset dimension");
  detail::require_translation_invariant(s.cost, "translate");
  return OTAmbiguitySet(pushforward(s.center, PointMap::translation(b)), s.radius, s.cost, s.exact);
}

/// x -> alpha x. Radius |alpha|^p eps for a p-homogeneous cost; {delta_0}
/// when alpha = 0.
inline OTAmbiguitySet scale(const OTAmbiguitySet& s, double alpha) {
  detail::require(std::isfinite(alpha), "scale: alpha must be finite");
  const auto p = s.cost.homogeneity_degree();
  if (!p) throw PreconditionError("scale: cost " + s.cost.describe() + " has no homogeneity degree");
  if (alpha == 0.0) {
    return OTAmbiguitySet(EmpiricalDistribution::dirac(Vector::Zero(s.dim())), 0.0, s.cost, s.exact);
  }
  const double r = *p == 0.0 ? s.radius : std::pow(std::abs(alpha), *p) * s.radius;
  const Matrix m = alpha * Matrix::Identity(s.dim(), s.dim());
  return OTAmbiguitySet(pushforward(s.center, PointMap::linear(m)), r, s.cost, s.exact);
}

/// x -> R x for orthogonal R and a radial cost. Same radius and cost.
inline OTAmbiguitySet rotate(const OTAmbiguitySet& s, const Matrix& r) {
  detail::require(r.rows() == r.cols(), "rotate: R must be square");
  detail::require_dim(r.cols(), s.dim(), "rotate: matrix vs set dimension");
  const Matrix g = r.transpose() * r;
  detail::require((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <= 1e-10,
                  "rotate: R is not orthogonal");
  detail::require(s.cost.radial(), "rotate: cost " + s.cost.describe() + " is not a function of the norm");
  return OTAmbiguitySet(pushforward(s.center, PointMap::linear(r)), s.radius, s.cost, s.exact);
}

/// x -> Pi x for an orthogonal projection Pi. Superset with cost c o Pi.
inline OTAmbiguitySet project(const OTAmbiguitySet& s, const Matrix& pi) {
  detail::require(pi.rows() == pi.cols(), "project: Pi must be square");
  detail::require_dim(pi.cols(), s.dim(), "project: matrix vs set dimension");
  const double scale_tol = 1e-10 * std::max(1.0, pi.cwiseAbs().maxCoeff());
  detail::require(linalg::is_symmetric(pi, scale_tol), "project: Pi must be symmetric");
  detail::require((pi * pi - pi).cwiseAbs().maxCoeff() <= scale_tol, "project: Pi must be idempotent");
  detail::require_translation_invariant(s.cost, "project");
  detail::require(s.cost.orthomonotone_certified(), "project: cost " + s.cost.describe() + " is not orthomonotone");
  return OTAmbiguitySet(pushforward(s.center, PointMap::linear(pi)), s.radius, detail::cost_after_linear(s.cost, pi),
                        false);
}

/// Closed-form radius of the convolution of two balls.
inline double convolution_radius(double eps1, double eps2, double p) {
  if (eps1 == 0.0) return eps2;
  if (eps2 == 0.0) return eps1;
  if (p == 1.0) return eps1 + eps2;
  if (p == 2.0) {
    const double r = std::sqrt(eps1) + std::sqrt(eps2);
    return r * r;
  }
  return std::pow(std::pow(eps1, 1.0 / p) + std::pow(eps2, 1.0 / p), p);
}

/// Ball around P * Q holding every Q1 * Q2 with Q1 in s1, Q2 in s2.
///
/// Both sets must carry the same cost with a triangle exponent p; the radius
/// is (eps1^{1/p} + eps2^{1/p})^p. The result is exact only when one side is
/// a single point with radius 0, which makes the convolution a translation.
inline OTAmbiguitySet convolve_sets(const OTAmbiguitySet& s1, const OTAmbiguitySet& s2,
                                    std::size_t atom_budget = kDefaultAtomBudget) {
  detail::require_dim(s1.dim(), s2.dim(), "convolve_sets: dimension");
  if (!(s1.cost == s2.cost)) {
    throw PreconditionError("convolve_sets: costs differ (" + s1.cost.describe() + " vs " + s2.cost.describe() + ")");
  }
  const auto p = s1.cost.triangle_exponent();
  if (!p) throw PreconditionError("convolve_sets: cost " + s1.cost.describe() + " has no triangle exponent");
  detail::require_translation_invariant(s1.cost, "convolve_sets");

  const auto is_point = [](const OTAmbiguitySet& s) { return s.radius == 0.0 && s.center.size() == 1; };
  bool exact = false;
  if (is_point(s2)) exact = s1.exact && s2.exact;
  if (is_point(s1)) exact = s1.exact && s2.exact;
  return OTAmbiguitySet(convolve(s1.center, s2.center, atom_budget), convolution_radius(s1.radius, s2.radius, *p),
                        s1.cost, exact);
}

/// Closed-form radius of the Hadamard product of two ||.||_2^2 balls.
inline double hadamard_radius(double eps1, double eps2, double m_p, double m_q) {
  const double r = std::sqrt(eps1 * eps2) + std::sqrt(eps1 * m_q) + std::sqrt(eps2 * m_p);
  return r * r;
}

/// Ball around P (.) Q holding every Q1 (.) Q2 with Q1 in s1, Q2 in s2.
///
/// Only the unscaled ||.||_2^2 cost is accepted: it is the one built-in cost
/// with c(x z - y z) <= c(x - y) c(z). Always a superset.
inline OTAmbiguitySet hadamard_sets(const OTAmbiguitySet& s1, const OTAmbiguitySet& s2,
                                    std::size_t atom_budget = kDefaultAtomBudget) {
  detail::require_dim(s1.dim(), s2.dim(), "hadamard_sets: dimension");
  for (const auto* s : {&s1, &s2}) {
    if (!s->cost.is_unit_squared_euclidean()) {
      throw PreconditionError("hadamard_sets: cost " + s->cost.describe() + " is not ||.||_2^2");
    }
  }
  const double r = hadamard_radius(s1.radius, s2.radius, second_moment(s1.center), second_moment(s2.center));
  return OTAmbiguitySet(hadamard(s1.center, s2.center, atom_budget), r,
                        TransportCost::squared_euclidean(s1.dim()), false);
}

/// Cost of the t-fold product space that sums the factor costs.
inline TransportCost separable_cost(const TransportCost& c, int dim, int t) {
  detail::require(t >= 1, "separable_cost: t must be positive");
  if (c.is_quadratic()) {
    const Matrix& w = c.as_quadratic().W;
    Matrix big = Matrix::Zero(w.rows() * t, w.cols() * t);
    for (int k = 0; k < t; ++k) big.block(k * w.rows(), k * w.cols(), w.rows(), w.cols()) = w;
    return TransportCost::quadratic(big);
  }
  if (c.is_power() && c.as_power().p == 2.0) {
    return TransportCost::quadratic(c.as_power().scale * Matrix::Identity(dim * t, dim * t));
  }
  throw PreconditionError("separable_cost: cost " + c.describe() + " does not split over coordinates");
}

/// Ball around the t-fold product of the center, radius t * eps, for
/// i.i.d. draws from a member of `s`. Superset.
inline OTAmbiguitySet product_set(const OTAmbiguitySet& s, int t, std::size_t atom_budget = kDefaultAtomBudget) {
  return OTAmbiguitySet(product_iid(s.center, t, atom_budget), product_radius(s.radius, t),
                        separable_cost(s.cost, s.dim(), t), t == 1 && s.exact);
}

}  // namespace otprop
