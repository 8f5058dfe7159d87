#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "otprop/error.hpp"
#include "otprop/linalg.hpp"
#include "otprop/point_map.hpp"

namespace otprop {

/// Upper bound on the atom count of distributions produced by convolution,
/// Hadamard products and i.i.d. products.
inline constexpr std::size_t kDefaultAtomBudget = 1'000'000;

/// Maximum tolerated |sum(weights) - 1| at construction.
inline constexpr double kWeightSumTolerance = 1e-9;

/// A finitely supported probability distribution on R^n.
///
/// Atoms are stored column-wise (dim x size). Coincident atoms are never
/// merged implicitly; use coalesce() for that. Weights are validated, not
/// renormalized: a sum off by more than kWeightSumTolerance is an error.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution(Matrix atoms, Vector weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    detail::require(atoms_.rows() > 0, "EmpiricalDistribution: dimension must be positive");
    detail::require(atoms_.cols() > 0, "EmpiricalDistribution: needs at least one atom");
    detail::require_dim(weights_.size(), atoms_.cols(), "EmpiricalDistribution: weights/atoms");
    detail::require(atoms_.allFinite(), "EmpiricalDistribution: non-finite atom");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_(i) > 0.0) || !std::isfinite(weights_(i))) {
        throw PreconditionError("EmpiricalDistribution: weights must be strictly positive");
      }
    }
    const double total = weights_.sum();
    if (std::abs(total - 1.0) > kWeightSumTolerance) {
      throw PreconditionError("EmpiricalDistribution: weights sum to " + std::to_string(total));
    }
  }

  /// Uniform weights over the columns of `atoms`.
  static EmpiricalDistribution uniform(Matrix atoms) {
    const auto n = atoms.cols();
    detail::require(n > 0, "EmpiricalDistribution::uniform: no atoms");
    return EmpiricalDistribution(std::move(atoms), Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  static EmpiricalDistribution dirac(const Vector& point) {
    return EmpiricalDistribution(Matrix(point), Vector::Ones(1));
  }

  static EmpiricalDistribution from_points(const std::vector<Vector>& points,
                                           const std::vector<double>& weights = {}) {
    detail::require(!points.empty(), "EmpiricalDistribution::from_points: no atoms");
    Matrix atoms(points.front().size(), static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      detail::require_dim(points[i].size(), atoms.rows(), "from_points: atom dimension");
      atoms.col(static_cast<Eigen::Index>(i)) = points[i];
    }
    if (weights.empty()) return uniform(std::move(atoms));
    return EmpiricalDistribution(std::move(atoms),
                                 Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size())));
  }

  int dim() const { return static_cast<int>(atoms_.rows()); }
  Eigen::Index size() const { return atoms_.cols(); }

  const Matrix& atoms() const { return atoms_; }
  const Vector& weights() const { return weights_; }
  Vector atom(Eigen::Index i) const { return atoms_.col(i); }
  double weight(Eigen::Index i) const { return weights_(i); }

  bool is_uniform(double tol = 1e-12) const {
    const double w = 1.0 / static_cast<double>(size());
    return (weights_.array() - w).abs().maxCoeff() <= tol;
  }

  Vector mean() const { return atoms_ * weights_; }

 private:
  Matrix atoms_;
  Vector weights_;
};

namespace detail {

inline void check_budget(std::size_t count, std::size_t budget, const char* op) {
  if (count > budget) {
    throw AtomBudgetExceeded(std::string(op) + ": " + std::to_string(count) +
                             " atoms exceed the budget of " + std::to_string(budget));
  }
}

inline std::size_t checked_product(std::size_t a, std::size_t b, std::size_t budget, const char* op) {
  if (a != 0 && b > budget / a + 1) check_budget(budget + 1, budget, op);
  const std::size_t n = a * b;
  check_budget(n, budget, op);
  return n;
}

}  // namespace detail

/// Law of f(x) for x ~ P. Weights are carried over unchanged.
inline EmpiricalDistribution pushforward(const EmpiricalDistribution& p, const PointMap& f) {
  detail::require_dim(f.in_dim(), p.dim(), "pushforward: map domain vs distribution");
  Matrix out(f.out_dim(), p.size());
  if (f.is_affine()) {
    out = (*f.matrix() * p.atoms()).colwise() + *f.offset();
  } else {
    for (Eigen::Index i = 0; i < p.size(); ++i) out.col(i) = f(p.atom(i));
  }
  return EmpiricalDistribution(std::move(out), p.weights());
}

/// Law of x + y for independent x ~ P, y ~ Q. Atom (i, j) sits at index i * |Q| + j.
inline EmpiricalDistribution convolve(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                                      std::size_t atom_budget = kDefaultAtomBudget) {
  detail::require_dim(p.dim(), q.dim(), "convolve: dimension");
  const auto n = static_cast<Eigen::Index>(detail::checked_product(
      static_cast<std::size_t>(p.size()), static_cast<std::size_t>(q.size()), atom_budget, "convolve"));
  Matrix atoms(p.dim(), n);
  Vector weights(n);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      const Eigen::Index k = i * q.size() + j;
      atoms.col(k) = p.atoms().col(i) + q.atoms().col(j);
      weights(k) = p.weight(i) * q.weight(j);
    }
  }
  return EmpiricalDistribution(std::move(atoms), std::move(weights));
}

/// Law of the element-wise product x ⊙ y for independent x ~ P, y ~ Q.
inline EmpiricalDistribution hadamard(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                                      std::size_t atom_budget = kDefaultAtomBudget) {
  detail::require_dim(p.dim(), q.dim(), "hadamard: dimension");
  const auto n = static_cast<Eigen::Index>(detail::checked_product(
      static_cast<std::size_t>(p.size()), static_cast<std::size_t>(q.size()), atom_budget, "hadamard"));
  Matrix atoms(p.dim(), n);
  Vector weights(n);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      const Eigen::Index k = i * q.size() + j;
      atoms.col(k) = p.atoms().col(i).cwiseProduct(q.atoms().col(j));
      weights(k) = p.weight(i) * q.weight(j);
    }
  }
  return EmpiricalDistribution(std::move(atoms), std::move(weights));
}

/// E_P ||x||_2^2.
inline double second_moment(const EmpiricalDistribution& p) {
  return p.atoms().colwise().squaredNorm().dot(p.weights());
}

/// t-fold product P ⊗ ... ⊗ P on R^{dim * t}. Atoms are concatenations
/// (x_{i_1}, ..., x_{i_t}) in lexicographic order of (i_1, ..., i_t).
inline EmpiricalDistribution product_iid(const EmpiricalDistribution& p, int t,
                                         std::size_t atom_budget = kDefaultAtomBudget) {
  detail::require(t >= 1, "product_iid: t must be positive");
  std::size_t count = 1;
  for (int k = 0; k < t; ++k) {
    count = detail::checked_product(count, static_cast<std::size_t>(p.size()), atom_budget, "product_iid");
  }
  const int r = p.dim();
  const auto n = static_cast<Eigen::Index>(count);
  Matrix atoms(r * t, n);
  Vector weights(n);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(t), 0);
  for (Eigen::Index k = 0; k < n; ++k) {
    double w = 1.0;
    for (int f = 0; f < t; ++f) {
      atoms.block(f * r, k, r, 1) = p.atoms().col(idx[static_cast<std::size_t>(f)]);
      w *= p.weight(idx[static_cast<std::size_t>(f)]);
    }
    weights(k) = w;
    for (int f = t - 1; f >= 0; --f) {
      auto& i = idx[static_cast<std::size_t>(f)];
      if (++i < p.size()) break;
      i = 0;
    }
  }
  return EmpiricalDistribution(std::move(atoms), std::move(weights));
}

/// Radius of the t-fold product ball when each factor lies within eps of
/// the empirical factor under a separable cost.
inline double product_radius(double eps, int t) {
  detail::require(eps >= 0.0 && t >= 1, "product_radius: need eps >= 0 and t >= 1");
  return static_cast<double>(t) * eps;
}

/// Merges atoms whose max-norm distance to an earlier kept atom is <= tol.
inline EmpiricalDistribution coalesce(const EmpiricalDistribution& p, double tol = 0.0) {
  std::vector<Eigen::Index> kept;
  std::vector<double> w;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    bool merged = false;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if ((p.atoms().col(i) - p.atoms().col(kept[k])).cwiseAbs().maxCoeff() <= tol) {
        w[k] += p.weight(i);
        merged = true;
        break;
      }
    }
    if (!merged) {
      kept.push_back(i);
      w.push_back(p.weight(i));
    }
  }
  Matrix atoms(p.dim(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) atoms.col(static_cast<Eigen::Index>(k)) = p.atoms().col(kept[k]);
  return EmpiricalDistribution(std::move(atoms),
                               Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
}

}  // namespace otprop
