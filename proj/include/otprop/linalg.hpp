#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "otprop/error.hpp"

namespace otprop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace linalg {

/// Relative singular-value cutoff used by pinv().
inline constexpr double kPinvRtol = 1e-12;
/// Relative singular-value cutoff used for rank decisions.
inline constexpr double kRankRtol = 1e-10;

inline Eigen::JacobiSVD<Matrix> svd(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

/// Moore-Penrose pseudoinverse. Singular values below rtol * sigma_max are
/// treated as zero.
inline Matrix pinv(const Matrix& a, double rtol = kPinvRtol) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  const auto dec = svd(a);
  const Vector& s = dec.singularValues();
  const double cutoff = rtol * (s.size() > 0 ? s(0) : 0.0);
  Vector s_inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) s_inv(i) = 1.0 / s(i);
  }
  return dec.matrixV() * s_inv.asDiagonal() * dec.matrixU().transpose();
}

inline Eigen::Index numerical_rank(const Matrix& a, double rtol = kRankRtol) {
  if (a.size() == 0) return 0;
  const Vector s = svd(a).singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return static_cast<Eigen::Index>(
      std::count_if(s.begin(), s.end(), [&](double v) { return v > rtol * s(0); }));
}

inline bool has_full_row_rank(const Matrix& a, double rtol = kRankRtol) {
  return a.rows() <= a.cols() && numerical_rank(a, rtol) == a.rows();
}

inline bool has_full_column_rank(const Matrix& a, double rtol = kRankRtol) {
  return a.cols() <= a.rows() && numerical_rank(a, rtol) == a.cols();
}

inline double sigma_max(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Vector s = svd(a).singularValues();
  return s.size() > 0 ? s(0) : 0.0;
}

inline Matrix matrix_power(const Matrix& a, int k) {
  detail::require(a.rows() == a.cols(), "matrix_power: matrix must be square");
  detail::require(k >= 0, "matrix_power: negative exponent");
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) result = a * result;
  return result;
}

/// Exact (bitwise-value) equality, false on shape mismatch.
template <typename A, typename B>
bool same_values(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

inline bool is_symmetric(const Matrix& a, double tol) {
  return a.rows() == a.cols() && (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

/// True when m^T m = alpha^2 I for some alpha; alpha is written to `alpha`.
inline bool is_scaled_isometry(const Matrix& m, double* alpha, double tol = 1e-10) {
  if (m.size() == 0) return false;
  const Matrix g = m.transpose() * m;
  const double a2 = g.diagonal().mean();
  const double scale = std::max(1.0, std::abs(a2));
  if ((g - a2 * Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol * scale) {
    return false;
  }
  if (alpha != nullptr) *alpha = std::sqrt(std::max(a2, 0.0));
  return true;
}

/// Symmetric eigen-decomposition with eigenvalues in [-tol, 0) clamped to 0.
/// Throws if an eigenvalue is below -tol.
inline Matrix clamp_psd(const Matrix& w, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(w);
  const Vector& ev = es.eigenvalues();
  if (ev.size() == 0 || ev.minCoeff() >= 0.0) return w;
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol * scale) {
    throw PreconditionError("matrix is not positive semidefinite");
  }
  const Vector clamped = ev.cwiseMax(0.0);
  Matrix out = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace linalg
}  // namespace otprop
