#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "otprop/ambiguity.hpp"
#include "otprop/error.hpp"
#include "otprop/linalg.hpp"
#include "otprop/measures.hpp"

namespace otprop {

/// x_{t+1} = A x_t + B u_t + D w_t.
struct LTISystem {
  Matrix A;
  Matrix B;
  Matrix D;

  /// An empty D means D = I.
  LTISystem(Matrix a, Matrix b, Matrix d = Matrix()) : A(std::move(a)), B(std::move(b)), D(std::move(d)) {
    detail::require(A.rows() == A.cols() && A.rows() > 0, "LTISystem: A must be square and non-empty");
    if (D.size() == 0) D = Matrix::Identity(A.rows(), A.rows());
    detail::require_dim(B.rows(), A.rows(), "LTISystem: rows of B vs A");
    detail::require_dim(D.rows(), A.rows(), "LTISystem: rows of D vs A");
    detail::require(B.cols() > 0 && D.cols() > 0, "LTISystem: B and D need columns");
    detail::require(A.allFinite() && B.allFinite() && D.allFinite(), "LTISystem: non-finite entries");
  }

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int r() const { return static_cast<int>(D.cols()); }
};

/// Operators mapping stacked inputs and noise to the state at time T:
/// x_T = A_pow x_0 + B_stack u + D_stack w, where u = [u_{T-1}; ...; u_0].
struct StackedOperators {
  Matrix A_pow;
  Matrix B_stack;
  Matrix D_stack;
  int horizon = 0;
};

inline StackedOperators stack(const LTISystem& sys, int horizon) {
  detail::require(horizon >= 1, "stack: horizon must be >= 1");
  StackedOperators out;
  out.horizon = horizon;
  out.B_stack.resize(sys.n(), sys.m() * horizon);
  out.D_stack.resize(sys.n(), sys.r() * horizon);
  Matrix power = Matrix::Identity(sys.n(), sys.n());
  // Block k multiplies u_{T-1-k} and carries A^k.
  for (int k = 0; k < horizon; ++k) {
    out.B_stack.middleCols(k * sys.m(), sys.m()) = power * sys.B;
    out.D_stack.middleCols(k * sys.r(), sys.r()) = power * sys.D;
    power = sys.A * power;
  }
  out.A_pow = power;
  return out;
}

/// Newest-first stacking [v_{T-1}; ...; v_0] of a chronological sequence.
inline Vector stack_sequence(const std::vector<Vector>& chronological) {
  detail::require(!chronological.empty(), "stack_sequence: empty sequence");
  const auto d = chronological.front().size();
  Vector out(d * static_cast<Eigen::Index>(chronological.size()));
  const auto t = static_cast<Eigen::Index>(chronological.size());
  for (Eigen::Index k = 0; k < t; ++k) {
    const auto& v = chronological[static_cast<std::size_t>(t - 1 - k)];
    detail::require_dim(v.size(), d, "stack_sequence: element dimension");
    out.segment(k * d, d) = v;
  }
  return out;
}

/// Inverse of stack_sequence.
inline std::vector<Vector> unstack_sequence(const Vector& stacked, int block) {
  detail::require(block > 0 && stacked.size() % block == 0, "unstack_sequence: size is not a multiple of block");
  const auto t = stacked.size() / block;
  std::vector<Vector> out(static_cast<std::size_t>(t));
  for (Eigen::Index k = 0; k < t; ++k) out[static_cast<std::size_t>(t - 1 - k)] = stacked.segment(k * block, block);
  return out;
}

/// States x_0, ..., x_T of a rollout. `w` may be empty (no noise).
inline std::vector<Vector> simulate_trajectory(const LTISystem& sys, const Vector& x0, const std::vector<Vector>& u,
                                               const std::vector<Vector>& w = {}) {
  detail::require_dim(x0.size(), sys.n(), "simulate: x0 dimension");
  detail::require(w.empty() || w.size() == u.size(), "simulate: noise and input lengths differ");
  std::vector<Vector> xs{x0};
  xs.reserve(u.size() + 1);
  for (std::size_t t = 0; t < u.size(); ++t) {
    detail::require_dim(u[t].size(), sys.m(), "simulate: input dimension");
    Vector next = sys.A * xs.back() + sys.B * u[t];
    if (!w.empty()) {
      detail::require_dim(w[t].size(), sys.r(), "simulate: noise dimension");
      next += sys.D * w[t];
    }
    xs.push_back(std::move(next));
  }
  return xs;
}

inline Vector simulate(const LTISystem& sys, const Vector& x0, const std::vector<Vector>& u,
                       const std::vector<Vector>& w = {}) {
  return simulate_trajectory(sys, x0, u, w).back();
}

/// Stabilizing solution of the discrete algebraic Riccati equation
/// P = A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q, by fixed-point iteration.
inline Matrix solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, int max_iter = 100000,
                         double tol = 1e-13) {
  Matrix p = q;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix s = r + b.transpose() * p * b;
    const Matrix gain = s.ldlt().solve(b.transpose() * p * a);
    Matrix next = a.transpose() * p * a - a.transpose() * p * b * gain + q;
    next = 0.5 * (next + next.transpose());
    const double diff = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (diff <= tol * std::max(1.0, p.cwiseAbs().maxCoeff())) return p;
  }
  throw NumericalFailure("solve_dare: no convergence");
}

/// LQR gain K for u = K x (note the sign: A + B K is the closed loop).
inline Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  const Matrix p = solve_dare(a, b, q, r);
  return -(r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
}

/// The system with A replaced by A + B K, K the LQR gain for (Q, R) = (I, I).
inline LTISystem prestabilize_lqr(const LTISystem& sys) {
  const Matrix k = lqr_gain(sys.A, sys.B, Matrix::Identity(sys.n(), sys.n()), Matrix::Identity(sys.m(), sys.m()));
  return LTISystem(sys.A + sys.B * k, sys.B, sys.D);
}

namespace detail {

inline void require_inputs(const LTISystem& sys, const std::vector<Vector>& u, int t, const char* op) {
  if (static_cast<int>(u.size()) != t) {
    throw DimensionMismatch(std::string(op) + ": expected " + std::to_string(t) + " inputs, got " +
                            std::to_string(u.size()));
  }
  for (const auto& v : u) require_dim(v.size(), sys.m(), std::string(op) + ": input dimension");
}

inline void require_squared_euclidean(const OTAmbiguitySet& s, const char* op) {
  if (!s.cost.is_unit_squared_euclidean()) {
    throw PreconditionError(std::string(op) + ": cost must be ||.||_2^2, got " + s.cost.describe());
  }
}

}  // namespace detail

/// State law at time t for an uncertain initial condition x_0 ~ Q_0 in s0:
/// B^{c o (A^t)^+}(delta_{B u} * A^t # P_0). Exact iff A^t has full row rank.
inline OTAmbiguitySet propagate_initial(const LTISystem& sys, const OTAmbiguitySet& s0, const std::vector<Vector>& u,
                                        int t) {
  detail::require(t >= 1, "propagate_initial: t must be >= 1");
  detail::require_dim(s0.dim(), sys.n(), "propagate_initial: set vs state dimension");
  detail::require_inputs(sys, u, t, "propagate_initial");
  const auto ops = stack(sys, t);
  return translate(push_linear(s0, ops.A_pow), ops.B_stack * stack_sequence(u));
}

/// State law at time T for known x_0 and stacked noise [w_{T-1}; ...; w_0] in
/// s_noise: B^{c o D_stack^+}(delta_{A^T x0 + B u} * D_stack # P).
/// Exact iff D_stack has full row rank.
inline OTAmbiguitySet propagate_additive(const LTISystem& sys, const Vector& x0, const std::vector<Vector>& u,
                                         const OTAmbiguitySet& s_noise, int horizon) {
  detail::require(horizon >= 1, "propagate_additive: horizon must be >= 1");
  detail::require_dim(x0.size(), sys.n(), "propagate_additive: x0 dimension");
  detail::require_dim(s_noise.dim(), sys.r() * horizon, "propagate_additive: noise set dimension vs r T");
  detail::require_inputs(sys, u, horizon, "propagate_additive");
  const auto ops = stack(sys, horizon);
  return translate(push_linear(s_noise, ops.D_stack), ops.A_pow * x0 + ops.B_stack * stack_sequence(u));
}

struct MultiplicativeStep {
  int t = 0;
  Eigen::Index atoms = 0;
  double radius = 0.0;
};

using ProgressCallback = std::function<void(const MultiplicativeStep&)>;

/// State law for x_{t+1} = v_t (.) (A x_t) + w_t (.) (B u_t) with
/// v_t ~ Q1 in s1 and w_t ~ Q2 in s2, i.i.d. over time and independent.
///
/// The center grows by a factor |P1| |P2| per step and the atom budget is
/// enforced at every step.
inline OTAmbiguitySet propagate_multiplicative(const LTISystem& sys, const Vector& x0, const std::vector<Vector>& u,
                                               const OTAmbiguitySet& s1, const OTAmbiguitySet& s2, int horizon,
                                               std::size_t atom_budget = kDefaultAtomBudget,
                                               const ProgressCallback& progress = {}) {
  detail::require(horizon >= 1, "propagate_multiplicative: horizon must be >= 1");
  detail::require_dim(x0.size(), sys.n(), "propagate_multiplicative: x0 dimension");
  detail::require_dim(s1.dim(), sys.n(), "propagate_multiplicative: s1 dimension");
  detail::require_dim(s2.dim(), sys.n(), "propagate_multiplicative: s2 dimension");
  detail::require_squared_euclidean(s1, "propagate_multiplicative");
  detail::require_squared_euclidean(s2, "propagate_multiplicative");
  detail::require_inputs(sys, u, horizon, "propagate_multiplicative");

  const double sigma = linalg::sigma_max(sys.A);
  const double m1 = second_moment(s1.center);
  const PointMap a_map = PointMap::linear(sys.A);
  EmpiricalDistribution p = EmpiricalDistribution::dirac(x0);
  double rho = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const Vector bu = sys.B * u[static_cast<std::size_t>(t - 1)];
    const auto ap = pushforward(p, a_map);
    const double r = std::sqrt(s1.radius * rho) * sigma + std::sqrt(rho * m1) * sigma +
                     std::sqrt(s1.radius * second_moment(ap)) + std::sqrt(s2.radius) * bu.norm();
    rho = r * r;
    const auto drift = hadamard(s2.center, EmpiricalDistribution::dirac(bu), atom_budget);
    detail::check_budget(static_cast<std::size_t>(s1.center.size()) * static_cast<std::size_t>(ap.size()) *
                             static_cast<std::size_t>(drift.size()),
                         atom_budget, "propagate_multiplicative");
    p = convolve(hadamard(s1.center, ap, atom_budget), drift, atom_budget);
    if (progress) progress({t, p.size(), rho});
  }
  return OTAmbiguitySet(std::move(p), rho, TransportCost::squared_euclidean(sys.n()), false);
}

/// Radius rule for propagate_combined.
enum class CombinedRadius {
  /// (sigma_max(A^T) sqrt(eps1) + sigma_max(D_stack) sqrt(eps2))^2, a proven superset.
  sound,
  /// (sqrt(eps1) / sigma_max(A^T) + sqrt(eps2) / sigma_max(D_stack))^2. Kept for
  /// comparison; it can be smaller than the true uncertainty.
  divided,
};

inline double combined_radius(double eps1, double eps2, double sigma_a, double sigma_d, CombinedRadius rule) {
  detail::require(sigma_a > 0.0 && sigma_d > 0.0, "propagate_combined: zero operator norm");
  const double r = rule == CombinedRadius::sound ? sigma_a * std::sqrt(eps1) + sigma_d * std::sqrt(eps2)
                                                 : std::sqrt(eps1) / sigma_a + std::sqrt(eps2) / sigma_d;
  return r * r;
}

/// Both an uncertain initial condition (s0) and additive noise (s_noise over
/// R^{rT}). Ball with plain ||.||_2^2 around delta_{B u} * A^T # P_0 * D_stack # P.
inline OTAmbiguitySet propagate_combined(const LTISystem& sys, const OTAmbiguitySet& s0,
                                         const OTAmbiguitySet& s_noise, const std::vector<Vector>& u, int horizon,
                                         CombinedRadius rule = CombinedRadius::sound,
                                         std::size_t atom_budget = kDefaultAtomBudget) {
  detail::require(horizon >= 1, "propagate_combined: horizon must be >= 1");
  detail::require_dim(s0.dim(), sys.n(), "propagate_combined: initial set dimension");
  detail::require_dim(s_noise.dim(), sys.r() * horizon, "propagate_combined: noise set dimension vs r T");
  detail::require_squared_euclidean(s0, "propagate_combined");
  detail::require_squared_euclidean(s_noise, "propagate_combined");
  detail::require_inputs(sys, u, horizon, "propagate_combined");
  const auto ops = stack(sys, horizon);
  const double eps = combined_radius(s0.radius, s_noise.radius, linalg::sigma_max(ops.A_pow),
                                     linalg::sigma_max(ops.D_stack), rule);
  auto center = convolve(pushforward(s0.center, PointMap::affine(ops.A_pow, ops.B_stack * stack_sequence(u))),
                         pushforward(s_noise.center, PointMap::linear(ops.D_stack)), atom_budget);
  return OTAmbiguitySet(std::move(center), eps, TransportCost::squared_euclidean(sys.n()), false);
}

/// t-fold push_nonlinear for x_{k+1} = f(x_k) with a left inverse f_inv.
inline OTAmbiguitySet propagate_nonlinear(const PointMap& f, const PointMap& f_inv, const OTAmbiguitySet& s0, int t) {
  detail::require(t >= 0, "propagate_nonlinear: t must be >= 0");
  detail::require_dim(f.in_dim(), f.out_dim(), "propagate_nonlinear: f must map a space to itself");
  OTAmbiguitySet s = s0;
  for (int k = 0; k < t; ++k) s = push_nonlinear(s, f, f_inv, InverseMode::injective);
  return s;
}

struct ConsensusLimit {
  /// 1-D ball of the consensus value w^T x_0.
  OTAmbiguitySet set;
  /// Left eigenvector for eigenvalue 1 with 1^T w = 1.
  Vector weights;
  /// x -> x 1, mapping the consensus value to the n-D limit state.
  PointMap lift;
};

/// Limit of x_{t+1} = A x_t for row-stochastic A with x_0 ~ Q_0 in s0.
inline ConsensusLimit consensus_limit(const Matrix& a, const OTAmbiguitySet& s0) {
  detail::require(a.rows() == a.cols() && a.rows() > 0, "consensus_limit: A must be square");
  detail::require_dim(s0.dim(), a.rows(), "consensus_limit: set vs matrix dimension");
  detail::require_squared_euclidean(s0, "consensus_limit");
  const auto n = a.rows();
  detail::require(a.minCoeff() >= -1e-12, "consensus_limit: A has negative entries");
  detail::require((a.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9, "consensus_limit: A is not row-stochastic");

  Vector w(n);
  const bool doubly = (a.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9;
  if (n == 1) {
    w.setOnes();
  } else {
    const Eigen::EigenSolver<Matrix> es(a, false);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::sort(ev.begin(), ev.end(), [](auto x, auto y) { return std::abs(x - 1.0) < std::abs(y - 1.0); });
    detail::require(std::abs(ev[0] - 1.0) <= 1e-8, "consensus_limit: 1 is not an eigenvalue");
    for (std::size_t k = 1; k < ev.size(); ++k) {
      if (!(std::abs(ev[k]) < 1.0 - 1e-9)) {
        throw PreconditionError("consensus_limit: eigenvalue 1 is not simple or not strictly dominant");
      }
    }
    if (doubly) {
      w.setConstant(1.0 / static_cast<double>(n));
    } else {
      const Matrix m = a.transpose() - Matrix::Identity(n, n);
      const Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
      w = svd.matrixV().col(n - 1);
      const double total = w.sum();
      detail::require(std::abs(total) > 1e-12, "consensus_limit: left eigenvector sums to zero");
      w /= total;
    }
  }
  const double radius = doubly ? s0.radius / static_cast<double>(n) : s0.radius * w.squaredNorm();
  auto center = pushforward(s0.center, PointMap::linear(w.transpose()));
  OTAmbiguitySet set(std::move(center), radius, TransportCost::squared_euclidean(1), s0.exact);
  const auto lift = PointMap::linear(Matrix::Ones(n, 1), "lift");
  return ConsensusLimit{std::move(set), std::move(w), lift};
}

/// Error x_hat - x of the least-squares estimate from y = A x + z with
/// z ~ Q in s_noise: B^{||.||^2 o A}(A^+ # P).
inline OTAmbiguitySet ols_error_set(const Matrix& a, const OTAmbiguitySet& s_noise) {
  detail::require_dim(s_noise.dim(), a.rows(), "ols_error_set: noise dimension vs rows of A");
  detail::require(linalg::has_full_column_rank(a), "ols_error_set: A must have full column rank");
  detail::require_squared_euclidean(s_noise, "ols_error_set");
  return push_linear(s_noise, linalg::pinv(a));
}

/// ols_error_set for i.i.d. scalar noise: each of the m coordinates is drawn
/// independently from a member of the 1-D ball s_scalar.
inline OTAmbiguitySet ols_error_set_iid(const Matrix& a, const OTAmbiguitySet& s_scalar,
                                        std::size_t atom_budget = kDefaultAtomBudget) {
  detail::require_dim(s_scalar.dim(), 1, "ols_error_set_iid: scalar noise set expected");
  return ols_error_set(a, product_set(s_scalar, static_cast<int>(a.rows()), atom_budget));
}

}  // namespace otprop
