#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "otprop/ambiguity.hpp"
#include "otprop/error.hpp"
#include "otprop/linalg.hpp"
#include "otprop/qp.hpp"
#include "otprop/systems.hpp"

namespace otprop {

/// {x : max_j a_j^T x + b_j <= 0}; row j of `a` is a_j^T.
struct PolyhedralTarget {
  Matrix a;
  Vector b;

  PolyhedralTarget(Matrix a_rows, Vector offsets) : a(std::move(a_rows)), b(std::move(offsets)) {
    detail::require(a.rows() >= 1 && a.cols() >= 1, "PolyhedralTarget: needs at least one row");
    detail::require_dim(b.size(), a.rows(), "PolyhedralTarget: offsets vs rows");
    detail::require(a.allFinite() && b.allFinite(), "PolyhedralTarget: non-finite entries");
    detail::require(a.cwiseAbs().maxCoeff() > 0.0, "PolyhedralTarget: all rows are zero");
  }

  /// Axis-aligned box lo <= x <= hi, two rows per coordinate.
  static PolyhedralTarget box(const Vector& lo, const Vector& hi) {
    detail::require_dim(hi.size(), lo.size(), "PolyhedralTarget::box: bounds");
    const auto n = lo.size();
    Matrix a = Matrix::Zero(2 * n, n);
    Vector b(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      detail::require(lo(k) <= hi(k), "PolyhedralTarget::box: lo > hi");
      a(2 * k, k) = 1.0;
      b(2 * k) = -hi(k);
      a(2 * k + 1, k) = -1.0;
      b(2 * k + 1) = lo(k);
    }
    return PolyhedralTarget(std::move(a), std::move(b));
  }

  int dim() const { return static_cast<int>(a.cols()); }
  int rows() const { return static_cast<int>(a.rows()); }

  double slack(const Vector& x) const {
    detail::require_dim(x.size(), a.cols(), "PolyhedralTarget::slack: point dimension");
    return (a * x + b).maxCoeff();
  }
};

namespace detail {

struct CvarParts {
  double value = 0.0;
  /// Upper gamma-quantile; a minimizer of tau + E[(v - tau)_+] / gamma.
  double quantile = 0.0;
};

inline void require_gamma(double gamma, const char* op) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw PreconditionError(std::string(op) + ": gamma must lie in (0, 1]");
}

inline CvarParts cvar_parts(const Vector& values, const Vector& weights, double gamma) {
  detail::require(values.size() > 0, "cvar_empirical: empty values");
  detail::require_dim(weights.size(), values.size(), "cvar_empirical: weights vs values");
  require_gamma(gamma, "cvar_empirical");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    detail::require(weights(i) > 0.0 && std::isfinite(weights(i)), "cvar_empirical: weights must be positive");
  }
  detail::require(std::abs(weights.sum() - 1.0) <= kWeightSumTolerance, "cvar_empirical: weights must sum to 1");
  detail::require(values.allFinite(), "cvar_empirical: non-finite value");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return values(l) > values(r); });

  CvarParts out;
  out.quantile = values(order.back());
  if (gamma == 1.0) {
    out.value = weights.dot(values);
    return out;
  }
  double mass = 0.0;
  double acc = 0.0;
  for (const auto k : order) {
    const double take = std::min(weights(k), gamma - mass);
    acc += take * values(k);
    mass += take;
    if (mass >= gamma) {
      out.quantile = values(k);
      break;
    }
  }
  out.value = acc / gamma;
  return out;
}

/// Golden section on [lo, hi] for a unimodal f; `less` orders values.
template <class F, class Less>
double golden_section(F&& f, double lo, double hi, int iters, Less&& less) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  auto f1 = f(x1);
  auto f2 = f(x2);
  for (int it = 0; it < iters && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
    if (less(f2, f1)) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    }
  }
  return less(f2, f1) ? x2 : x1;
}

/// The matrix Omega of a cost d -> d^T Omega d, for costs that have one.
inline Matrix quadratic_matrix(const TransportCost& c, int n) {
  if (c.is_quadratic()) return c.as_quadratic().W;
  if (c.is_power() && c.as_power().p == 2.0) return c.as_power().scale * Matrix::Identity(n, n);
  if (c.is_composed()) {
    const auto& mc = c.as_composed();
    if (mc.pre_map.is_affine()) {
      const Matrix& m = *mc.pre_map.matrix();
      const Matrix inner = quadratic_matrix(*mc.base, static_cast<int>(m.rows()));
      const Matrix w = m.transpose() * inner * m;
      return 0.5 * (w + w.transpose());
    }
  }
  throw PreconditionError("worst_case_cvar: cost " + c.describe() + " is not a quadratic form");
}

/// alpha_j = a_j^T Omega^- a_j, after checking that each a_j lies in range(Omega).
inline Vector regularizer_weights(const Matrix& omega, const PolyhedralTarget& target) {
  const Matrix omega_inv = linalg::pinv(omega);
  const Matrix proj = omega * omega_inv;
  Vector alpha(target.rows());
  for (int j = 0; j < target.rows(); ++j) {
    const Vector aj = target.a.row(j).transpose();
    if ((proj * aj - aj).norm() > 1e-9 * std::max(1.0, aj.norm())) {
      throw PreconditionError("worst_case_cvar: target row " + std::to_string(j) +
                              " lies outside the range of the cost matrix");
    }
    alpha(j) = std::max(0.0, aj.dot(omega_inv * aj));
  }
  return alpha;
}

}  // namespace detail

/// CVaR of the upper gamma-tail: the weighted average of the largest values
/// carrying total mass gamma (the boundary atom is split).
inline double cvar_empirical(const Vector& values, const Vector& weights, double gamma) {
  return detail::cvar_parts(values, weights, gamma).value;
}

inline double cvar_empirical(const Vector& values, double gamma) {
  detail::require(values.size() > 0, "cvar_empirical: empty values");
  return cvar_empirical(values, Vector::Constant(values.size(), 1.0 / static_cast<double>(values.size())), gamma);
}

struct WorstCaseCvar {
  double value = 0.0;
  double tau = 0.0;
  /// +inf on the eps = 0 branch.
  double lambda = 0.0;
};

/// sup over Q in S of CVaR_gamma(max_j a_j^T x + b_j), through its dual
/// inf_{lambda > 0} lambda eps + CVaR_gamma over the center of
/// max_j (a_j^T x + b_j + alpha_j / (4 lambda gamma)). The inner infimum over
/// tau is solved in closed form by the sorted-tail formula.
inline WorstCaseCvar worst_case_cvar(const OTAmbiguitySet& s, const PolyhedralTarget& target, double gamma) {
  detail::require_gamma(gamma, "worst_case_cvar");
  detail::require_dim(target.dim(), s.dim(), "worst_case_cvar: target vs set dimension");
  const Matrix omega = detail::quadratic_matrix(s.cost, s.dim());
  const Vector alpha = detail::regularizer_weights(omega, target);

  const auto& center = s.center;
  const Matrix base = (target.a * center.atoms()).colwise() + target.b;  // J x N
  const Vector& w = center.weights();

  if (s.radius == 0.0) {
    const Vector slack = base.colwise().maxCoeff().transpose();
    const auto parts = detail::cvar_parts(slack, w, gamma);
    return {parts.value, parts.quantile, std::numeric_limits<double>::infinity()};
  }

  const double eps = s.radius;
  const auto losses = [&](double lambda) -> Vector {
    const Vector shift = alpha / (4.0 * lambda * gamma);
    return (base.colwise() + shift).colwise().maxCoeff().transpose();
  };
  const double amax = alpha.maxCoeff();
  if (amax == 0.0) {
    const auto parts = detail::cvar_parts(losses(1.0), w, gamma);
    return {parts.value, parts.quantile, 0.0};
  }
  const auto g = [&](double log_lambda) {
    const double lambda = std::exp(log_lambda);
    return lambda * eps + detail::cvar_parts(losses(lambda), w, gamma).value;
  };
  // The derivative in lambda is at least eps - amax / (4 gamma lambda^2).
  const double hi = std::log(std::sqrt(amax / (4.0 * gamma * eps))) + 1e-9;
  const double lo = hi - 40.0;
  constexpr int kGrid = 81;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGrid; ++k) {
    const double v = g(lo + (hi - lo) * k / (kGrid - 1));
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  const double step = (hi - lo) / (kGrid - 1);
  const double a = lo + step * std::max(0, best - 1);
  const double b = lo + step * std::min(kGrid - 1, best + 1);
  const double x = detail::golden_section(g, a, b, 200, std::less<double>());
  const double lambda = std::exp(x);
  const auto parts = detail::cvar_parts(losses(lambda), w, gamma);
  WorstCaseCvar out{lambda * eps + parts.value, parts.quantile, lambda};
  // The grid end can beat an interior golden point only by rounding; keep the better.
  if (best_val < out.value) {
    const double lb = std::exp(lo + step * best);
    const auto pb = detail::cvar_parts(losses(lb), w, gamma);
    out = {lb * eps + pb.value, pb.quantile, lb};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory planning

struct PlanCertificate {
  double tau = 0.0;
  /// +inf on the eps = 0 branch.
  double lambda = 0.0;
  Vector s;
};

enum class PlanStatus { optimal, infeasible, max_iter };

inline const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::optimal: return "optimal";
    case PlanStatus::infeasible: return "infeasible";
    case PlanStatus::max_iter: return "max_iter";
  }
  return "?";
}

struct PlanResult {
  /// Stacked newest first, [u_{T-1}; ...; u_0].
  Vector u_star;
  /// Chronological u_0, ..., u_{T-1}.
  std::vector<Vector> inputs;
  double cost = 0.0;
  PlanCertificate certificate;
  double worst_case_cvar = 0.0;
  PlanStatus status = PlanStatus::optimal;
  /// Minimal budget-constraint violation; 0 when feasible.
  double violation = 0.0;
  std::vector<std::string> warnings;
};

struct PlanOptions {
  double lambda_lo = 1e-6;
  double lambda_hi = 1e6;
  int grid_points = 25;
  int golden_iters = 80;
  /// Violation above which the plan is reported infeasible.
  double infeasibility_tol = 1e-6;
  /// Violation below which a lambda counts as feasible during the search.
  double feasibility_tol = 1e-9;
  /// Ridge on u in the feasibility subproblem, keeps it bounded.
  double phase1_ridge = 1e-9;
  QpOptions qp;
};

/// The data of the finite reformulation after stacking:
/// x_T^(i)(u) = e_i + G u, with e_i = A^T x0 + D_stack w_i.
struct DrCvarProgram {
  Matrix G;
  Matrix E;
  Vector weights;
  PolyhedralTarget target;
  Vector alpha;
  double eps = 0.0;
  double gamma = 0.1;

  int inputs() const { return static_cast<int>(G.cols()); }
  int samples() const { return static_cast<int>(E.cols()); }

  /// Largest violation of the constraint system at (u, tau, lambda, s), in the
  /// form lambda eps N + sum_i s_i <= 0 for uniform weights. lambda = inf
  /// means eps = 0 and drops the regularizer terms.
  double max_violation(const Vector& u, double tau, double lambda, const Vector& s) const {
    const bool branch0 = !std::isfinite(lambda);
    const double n = static_cast<double>(samples());
    double viol = (branch0 ? 0.0 : lambda * eps) * n + n * weights.dot(s);
    const Matrix x = E.colwise() + G * u;
    for (int i = 0; i < samples(); ++i) {
      for (int j = 0; j < target.rows(); ++j) {
        const double reg = branch0 ? 0.0 : alpha(j) / (4.0 * lambda * gamma);
        const double lhs = reg + target.a.row(j).dot(x.col(i)) + target.b(j) + gamma * tau - tau;
        viol = std::max(viol, lhs - gamma * s(i));
      }
      viol = std::max(viol, tau - s(i));
    }
    return std::max(0.0, viol);
  }
};

namespace detail {

struct InnerSolution {
  bool feasible = false;
  bool converged = false;
  double violation = 0.0;
  double value = std::numeric_limits<double>::infinity();
  Vector u;
  double tau = 0.0;
  Vector s;
};

/// Constraint rows for fixed lambda over z = (u, tau, s). Row 0 is the budget.
inline void build_constraints(const DrCvarProgram& p, double lambda, Matrix& c, Vector& d) {
  const bool branch0 = !std::isfinite(lambda);
  const int nu = p.inputs();
  const int ns = p.samples();
  const int nj = p.target.rows();
  const int nz = nu + 1 + ns;
  c = Matrix::Zero(1 + ns * nj + ns, nz);
  d = Vector::Zero(c.rows());
  c.block(0, nu + 1, 1, ns) = p.weights.transpose();
  d(0) = branch0 ? 0.0 : -lambda * p.eps;
  const Matrix ag = p.target.a * p.G;
  const Matrix ae = p.target.a * p.E;
  int row = 1;
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nj; ++j, ++row) {
      c.block(row, 0, 1, nu) = ag.row(j);
      c(row, nu) = p.gamma - 1.0;
      c(row, nu + 1 + i) = -p.gamma;
      const double reg = branch0 ? 0.0 : p.alpha(j) / (4.0 * lambda * p.gamma);
      d(row) = -(ae(j, i) + p.target.b(j) + reg);
    }
  }
  for (int i = 0; i < ns; ++i, ++row) {
    c(row, nu) = 1.0;
    c(row, nu + 1 + i) = -1.0;
  }
}

inline QpResult solve_with_fallback(const QuadraticProgram& qp, const QpOptions& opt) {
  auto r = solve_qp(qp, opt);
  if (r.status == QpStatus::converged) return r;
  QpOptions loose = opt;
  loose.tol = std::max(opt.tol, 1e-8);
  loose.max_iter = std::max(opt.max_iter, 400);
  auto r2 = solve_qp(qp, loose);
  return r2.status == QpStatus::converged ? r2 : r;
}

inline InnerSolution solve_inner(const DrCvarProgram& p, double lambda, const PlanOptions& opt) {
  const int nu = p.inputs();
  const int ns = p.samples();
  const int nz = nu + 1 + ns;
  Matrix c;
  Vector d;
  build_constraints(p, lambda, c, d);

  InnerSolution out;
  // Feasibility: minimize the budget row subject to the others.
  QuadraticProgram phase1;
  phase1.H = Matrix::Zero(nz, nz);
  phase1.H.topLeftCorner(nu, nu).diagonal().setConstant(opt.phase1_ridge);
  phase1.f = Vector::Zero(nz);
  phase1.f.tail(ns) = p.weights;
  phase1.C = c.bottomRows(c.rows() - 1);
  phase1.d = d.tail(d.size() - 1);
  const auto r1 = solve_with_fallback(phase1, opt.qp);
  const Vector z1 = r1.z;
  out.violation = std::max(0.0, p.weights.dot(z1.tail(ns)) - d(0));
  out.u = z1.head(nu);
  out.tau = z1(nu);
  out.s = z1.tail(ns);
  out.converged = r1.status == QpStatus::converged;
  if (out.violation > opt.feasibility_tol) return out;

  QuadraticProgram phase2;
  phase2.H = Matrix::Zero(nz, nz);
  phase2.H.topLeftCorner(nu, nu).diagonal().setConstant(2.0);
  phase2.f = Vector::Zero(nz);
  phase2.C = c;
  phase2.d = d;
  const auto r2 = solve_with_fallback(phase2, opt.qp);
  if (r2.status != QpStatus::converged) {
    // Keep the feasible phase-one point.
    out.feasible = true;
    out.converged = false;
    out.value = out.u.squaredNorm();
    return out;
  }
  out.feasible = true;
  out.converged = true;
  out.u = r2.z.head(nu);
  out.tau = r2.z(nu);
  out.s = r2.z.tail(ns);
  out.value = out.u.squaredNorm();
  return out;
}

/// Lexicographic merit: violation first, then cost.
inline bool inner_less(const InnerSolution& a, const InnerSolution& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.violation < b.violation;
  return a.value < b.value;
}

}  // namespace detail

/// Solves min ||u||^2 subject to the finite reformulation of the
/// distributionally robust CVaR constraint for fixed lambda, then searches
/// lambda (golden section on log lambda after a coarse grid).
inline PlanResult solve_drcvar_program(const DrCvarProgram& p, const PlanOptions& opt = {}) {
  detail::require_gamma(p.gamma, "plan_trajectory");
  detail::require(p.eps >= 0.0 && std::isfinite(p.eps), "plan_trajectory: eps must be >= 0");
  detail::require(p.samples() >= 1, "plan_trajectory: needs at least one sample");

  PlanResult res;
  detail::InnerSolution best;
  double best_lambda = std::numeric_limits<double>::infinity();

  if (p.eps == 0.0) {
    best = detail::solve_inner(p, best_lambda, opt);
  } else {
    const double lo = std::log(opt.lambda_lo);
    const double hi = std::log(opt.lambda_hi);
    const int g = std::max(3, opt.grid_points);
    std::vector<detail::InnerSolution> grid;
    grid.reserve(static_cast<std::size_t>(g));
    int k_best = 0;
    for (int k = 0; k < g; ++k) {
      grid.push_back(detail::solve_inner(p, std::exp(lo + (hi - lo) * k / (g - 1)), opt));
      if (detail::inner_less(grid.back(), grid[static_cast<std::size_t>(k_best)])) k_best = k;
    }
    // Convexity in lambda means the grid merit falls, then rises.
    const auto worse = [&](const detail::InnerSolution& a, const detail::InnerSolution& b) {
      if (a.feasible && b.feasible) return a.value > b.value + 1e-8 * std::max(1.0, std::abs(b.value));
      if (!a.feasible && !b.feasible) return a.violation > b.violation + 1e-9 * std::max(1.0, b.violation);
      return !a.feasible && b.feasible;
    };
    bool unimodal = true;
    for (int k = 1; k <= k_best; ++k) {
      if (worse(grid[static_cast<std::size_t>(k)], grid[static_cast<std::size_t>(k - 1)])) unimodal = false;
    }
    for (int k = k_best + 1; k < g; ++k) {
      if (worse(grid[static_cast<std::size_t>(k - 1)], grid[static_cast<std::size_t>(k)])) unimodal = false;
    }
    if (!unimodal) res.warnings.emplace_back("lambda grid is not unimodal; the search may have missed the optimum");

    const double step = (hi - lo) / (g - 1);
    const double a = lo + step * std::max(0, k_best - 1);
    const double b = lo + step * std::min(g - 1, k_best + 1);
    best = grid[static_cast<std::size_t>(k_best)];
    best_lambda = std::exp(lo + step * k_best);
    const auto eval = [&](double x) {
      auto sol = detail::solve_inner(p, std::exp(x), opt);
      if (detail::inner_less(sol, best)) {
        best = sol;
        best_lambda = std::exp(x);
      }
      return sol;
    };
    detail::golden_section(eval, a, b, opt.golden_iters, detail::inner_less);
    if (best_lambda <= opt.lambda_lo * (1.0 + 1e-9)) {
      res.warnings.emplace_back("lambda reached the lower bracket end (regularizer cap)");
    } else if (best_lambda >= opt.lambda_hi * (1.0 - 1e-9)) {
      res.warnings.emplace_back("lambda reached the upper bracket end");
    }
  }

  res.u_star = best.u;
  res.cost = best.u.squaredNorm();
  res.certificate = {best.tau, best_lambda, best.s};
  res.violation = best.violation;
  if (best.violation > opt.infeasibility_tol) {
    res.status = PlanStatus::infeasible;
  } else if (!best.feasible || !best.converged) {
    res.status = PlanStatus::max_iter;
    if (best.feasible) res.warnings.emplace_back("inner solver did not converge at the selected lambda");
  } else {
    res.status = PlanStatus::optimal;
  }
  if (best.violation > opt.feasibility_tol && best.violation <= opt.infeasibility_tol) {
    res.warnings.emplace_back("constraint set is nearly empty; violation " + std::to_string(best.violation));
  }
  return res;
}

/// Noise-sample set of the planner: uniform over stacked samples, cost ||.||^2.
inline OTAmbiguitySet noise_sample_set(const std::vector<std::vector<Vector>>& samples, double eps) {
  detail::require(!samples.empty(), "noise_sample_set: needs at least one sample");
  std::vector<Vector> stacked;
  stacked.reserve(samples.size());
  for (const auto& traj : samples) stacked.push_back(stack_sequence(traj));
  auto center = EmpiricalDistribution::from_points(stacked);
  const int dim = center.dim();
  return OTAmbiguitySet(std::move(center), eps, TransportCost::squared_euclidean(dim), true);
}

/// Minimum-energy inputs steering x0 so that the DR-CVaR_gamma constraint on
/// the terminal state holds over the eps-ball around the noise samples.
/// Each sample is a chronological noise trajectory w_0, ..., w_{T-1}.
inline PlanResult plan_trajectory(const LTISystem& sys, const Vector& x0,
                                  const std::vector<std::vector<Vector>>& samples, const PolyhedralTarget& target,
                                  double eps, double gamma, int horizon, const PlanOptions& opt = {}) {
  detail::require(horizon >= 1, "plan_trajectory: horizon must be >= 1");
  detail::require(!samples.empty(), "plan_trajectory: needs at least one sample");
  detail::require_dim(x0.size(), sys.n(), "plan_trajectory: x0 dimension");
  detail::require_dim(target.dim(), sys.n(), "plan_trajectory: target dimension");
  for (const auto& traj : samples) {
    detail::require_dim(static_cast<long>(traj.size()), horizon, "plan_trajectory: sample length vs horizon");
    for (const auto& w : traj) detail::require_dim(w.size(), sys.r(), "plan_trajectory: noise dimension");
  }
  const auto ops = stack(sys, horizon);
  if (!linalg::has_full_row_rank(ops.D_stack)) {
    throw PreconditionError("plan_trajectory: stacked noise matrix must have full row rank");
  }

  const auto noise = noise_sample_set(samples, eps);
  const Vector drift = ops.A_pow * x0;
  const Matrix e = (ops.D_stack * noise.center.atoms()).colwise() + drift;
  // Omega = (D^+)^T D^+, whose pseudo-inverse is D D^T for full row rank D.
  const Matrix d_pinv = linalg::pinv(ops.D_stack);
  const Matrix omega = d_pinv.transpose() * d_pinv;

  DrCvarProgram prog{ops.B_stack,
                     e,
                     noise.center.weights(),
                     target,
                     detail::regularizer_weights(0.5 * (omega + omega.transpose()), target),
                     eps,
                     gamma};
  auto res = solve_drcvar_program(prog, opt);
  res.inputs = unstack_sequence(res.u_star, sys.m());
  const auto terminal = propagate_additive(sys, x0, res.inputs, noise, horizon);
  res.worst_case_cvar = worst_case_cvar(terminal, target, gamma).value;
  return res;
}

struct ValidationReport {
  double empirical_cvar = 0.0;
  double fraction_in_target = 0.0;
  /// One terminal state per column.
  Matrix terminal_states;
};

/// Simulates every test trajectory under the chronological inputs u and
/// scores the terminal target slack.
inline ValidationReport validate_plan(const LTISystem& sys, const Vector& x0, const std::vector<Vector>& u,
                                      const std::vector<std::vector<Vector>>& test_samples,
                                      const PolyhedralTarget& target, double gamma) {
  detail::require(!test_samples.empty(), "validate_plan: needs at least one test sample");
  detail::require_dim(target.dim(), sys.n(), "validate_plan: target dimension");
  ValidationReport out;
  const auto n = static_cast<Eigen::Index>(test_samples.size());
  out.terminal_states.resize(sys.n(), n);
  Vector slack(n);
  int inside = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = simulate(sys, x0, u, test_samples[static_cast<std::size_t>(i)]);
    out.terminal_states.col(i) = x;
    slack(i) = target.slack(x);
    if (slack(i) <= 1e-9) ++inside;
  }
  out.empirical_cvar = cvar_empirical(slack, gamma);
  out.fraction_in_target = static_cast<double>(inside) / static_cast<double>(n);
  return out;
}

}  // namespace otprop
