#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "otprop/error.hpp"
#include "otprop/linalg.hpp"

namespace otprop {

/// min 1/2 z^T H z + f^T z  s.t.  C z <= d, with H symmetric PSD.
struct QuadraticProgram {
  Matrix H;
  Vector f;
  Matrix C;
  Vector d;
};

struct QpOptions {
  int max_iter = 200;
  double tol = 1e-10;
  /// Added to the diagonal of the reduced Newton matrix.
  double regularization = 1e-13;
};

enum class QpStatus { converged, max_iter, failed };

struct QpResult {
  Vector z;
  /// Multipliers of C z <= d.
  Vector y;
  /// d - C z at the returned point.
  Vector slack;
  double objective = 0.0;
  QpStatus status = QpStatus::failed;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

namespace detail {

inline double max_step(const Vector& v, const Vector& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  }
  return a;
}

}  // namespace detail

/// Primal-dual interior point method with Mehrotra predictor-corrector steps.
/// Starts from an infeasible point; the slack variables carry feasibility.
inline QpResult solve_qp(const QuadraticProgram& qp, const QpOptions& opt = {}) {
  const auto n = qp.H.rows();
  const auto m = qp.C.rows();
  detail::require(qp.H.cols() == n && qp.f.size() == n, "solve_qp: H and f sizes");
  detail::require(qp.C.cols() == n && qp.d.size() == m, "solve_qp: C and d sizes");
  detail::require(m > 0, "solve_qp: needs at least one constraint");

  Vector z = Vector::Zero(n);
  Vector s = (qp.d - qp.C * z).cwiseMax(1.0);
  Vector y = Vector::Ones(m);

  const double norm_d = qp.d.cwiseAbs().maxCoeff();
  const double norm_f = qp.f.cwiseAbs().maxCoeff();
  QpResult out;
  out.status = QpStatus::max_iter;

  Eigen::LDLT<Matrix> ldlt;
  const auto solve_direction = [&](const Vector& r_d, const Vector& r_p, const Vector& r_c, Vector& dz, Vector& ds,
                                   Vector& dy) {
    const Vector w = (r_c + y.cwiseProduct(r_p)).cwiseQuotient(s);
    dz = ldlt.solve(-r_d - qp.C.transpose() * w);
    ds = -r_p - qp.C * dz;
    dy = (r_c - y.cwiseProduct(ds)).cwiseQuotient(s);
  };

  for (int it = 0; it < opt.max_iter; ++it) {
    const Vector r_d = qp.H * z + qp.f + qp.C.transpose() * y;
    const Vector r_p = qp.C * z + s - qp.d;
    const double mu = s.dot(y) / static_cast<double>(m);
    // Residuals are measured relative to the size of the terms that produce them.
    const Vector cz = qp.C * z;
    const Vector cty = qp.C.transpose() * y;
    const double scale_d = 1.0 + std::max(norm_d, cz.cwiseAbs().maxCoeff());
    const double scale_f = 1.0 + std::max({norm_f, (qp.H * z).cwiseAbs().maxCoeff(), cty.cwiseAbs().maxCoeff()});
    out.iterations = it;
    out.primal_residual = r_p.cwiseAbs().maxCoeff();
    out.dual_residual = r_d.cwiseAbs().maxCoeff();
    out.gap = mu;
    if (out.primal_residual <= opt.tol * scale_d && out.dual_residual <= opt.tol * scale_f && mu <= opt.tol) {
      out.status = QpStatus::converged;
      break;
    }
    if (!std::isfinite(mu) || !z.allFinite()) {
      out.status = QpStatus::failed;
      break;
    }

    Matrix k = qp.H + qp.C.transpose() * y.cwiseQuotient(s).asDiagonal() * qp.C;
    k.diagonal().array() += opt.regularization * std::max(1.0, k.diagonal().cwiseAbs().maxCoeff());
    ldlt.compute(k);
    if (ldlt.info() != Eigen::Success) {
      out.status = QpStatus::failed;
      break;
    }

    Vector dz, ds, dy;
    solve_direction(r_d, r_p, -s.cwiseProduct(y), dz, ds, dy);
    const double a_aff = std::min(detail::max_step(s, ds), detail::max_step(y, dy));
    const double mu_aff = (s + a_aff * ds).dot(y + a_aff * dy) / static_cast<double>(m);
    const double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);

    // Keeping mu near the tolerance stops the gap from collapsing before the residuals do.
    const double target = std::max(sigma * mu, 0.01 * opt.tol);
    const Vector r_c = -s.cwiseProduct(y) - ds.cwiseProduct(dy) + Vector::Constant(m, target);
    solve_direction(r_d, r_p, r_c, dz, ds, dy);
    const double a = std::min(1.0, 0.995 * std::min(detail::max_step(s, ds), detail::max_step(y, dy)));
    z += a * dz;
    s += a * ds;
    y += a * dy;
    s = s.cwiseMax(std::numeric_limits<double>::min());
    y = y.cwiseMax(std::numeric_limits<double>::min());
  }

  out.z = z;
  out.y = y;
  out.slack = qp.d - qp.C * z;
  out.objective = 0.5 * z.dot(qp.H * z) + qp.f.dot(z);
  return out;
}

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::converged: return "converged";
    case QpStatus::max_iter: return "max_iter";
    case QpStatus::failed: return "failed";
  }
  return "?";
}

}  // namespace otprop
