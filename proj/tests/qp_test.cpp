#include <gtest/gtest.h>

#include <limits>
#include <vector>

#include "otprop/qp.hpp"
#include "test_support.hpp"

using namespace otprop;
using otprop::testing::Rng;
namespace ot = otprop::testing;

namespace {

// Brute-force active-set enumeration: every subset of at most n constraints
// is made active, the equality-constrained KKT system is solved, and the
// best primal-feasible stationary point with nonnegative multipliers wins.
struct Enumerated {
  Vector z;
  double objective = std::numeric_limits<double>::infinity();
};

Enumerated enumerate_active_sets(const QuadraticProgram& qp) {
  const auto n = qp.H.rows();
  const auto m = qp.C.rows();
  Enumerated best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    if (static_cast<Eigen::Index>(act.size()) > n) continue;
    const auto k = static_cast<Eigen::Index>(act.size());
    Matrix kkt = Matrix::Zero(n + k, n + k);
    Vector rhs(n + k);
    kkt.topLeftCorner(n, n) = qp.H;
    rhs.head(n) = -qp.f;
    for (Eigen::Index r = 0; r < k; ++r) {
      kkt.block(0, n + r, n, 1) = qp.C.row(act[static_cast<std::size_t>(r)]).transpose();
      kkt.block(n + r, 0, 1, n) = qp.C.row(act[static_cast<std::size_t>(r)]);
      rhs(n + r) = qp.d(act[static_cast<std::size_t>(r)]);
    }
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (lu.rank() < n + k) continue;
    const Vector sol = lu.solve(rhs);
    const Vector z = sol.head(n);
    if (((qp.C * z - qp.d).array() > 1e-9).any()) continue;
    if ((sol.tail(k).array() < -1e-9).any()) continue;
    const double obj = 0.5 * z.dot(qp.H * z) + qp.f.dot(z);
    if (obj < best.objective) best = {z, obj};
  }
  return best;
}

}  // namespace

TEST(SolveQp, BoxProjectionExample) {
  QuadraticProgram qp;
  qp.H = Matrix::Identity(2, 2);
  qp.f = Vector(2);
  qp.f << -3.0, 0.5;  // target point (3, -0.5)
  qp.C.resize(4, 2);
  qp.C << 1, 0, -1, 0, 0, 1, 0, -1;
  qp.d = Vector::Ones(4);
  const auto r = solve_qp(qp);
  ASSERT_EQ(r.status, QpStatus::converged);
  EXPECT_NEAR(r.z(0), 1.0, 1e-8);
  EXPECT_NEAR(r.z(1), -0.5, 1e-8);
}

TEST(SolveQp, LinearProgramVertex) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0: vertex (1.6, 1.2).
  QuadraticProgram qp;
  qp.H = Matrix::Zero(2, 2);
  qp.f = -Vector::Ones(2);
  qp.C.resize(4, 2);
  qp.C << 1, 2, 3, 1, -1, 0, 0, -1;
  qp.d.resize(4);
  qp.d << 4, 6, 0, 0;
  const auto r = solve_qp(qp);
  ASSERT_EQ(r.status, QpStatus::converged);
  EXPECT_NEAR(r.z(0), 1.6, 1e-8);
  EXPECT_NEAR(r.z(1), 1.2, 1e-8);
  EXPECT_NEAR(r.objective, -2.8, 1e-8);
}

TEST(SolveQp, RejectsBadShapes) {
  QuadraticProgram qp;
  qp.H = Matrix::Identity(2, 2);
  qp.f = Vector::Zero(3);
  qp.C = Matrix::Identity(2, 2);
  qp.d = Vector::Zero(2);
  EXPECT_THROW(solve_qp(qp), PreconditionError);
}

TEST(SolveQpProperty, MatchesActiveSetEnumeration) {
  Rng rng(11);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_int_distribution<int> rows(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng);
    const int m = rows(rng);
    QuadraticProgram qp;
    const Matrix l = ot::random_matrix(rng, n, n);
    qp.H = l * l.transpose() + 0.1 * Matrix::Identity(n, n);
    qp.f = ot::random_vector(rng, n, 3.0);
    qp.C = ot::random_matrix(rng, m, n);
    // Interior point at the origin keeps the feasible set nonempty.
    qp.d = ot::random_vector(rng, m).cwiseAbs() + Vector::Constant(m, 0.05);
    const auto r = solve_qp(qp);
    ASSERT_EQ(r.status, QpStatus::converged) << "trial " << trial;
    const auto oracle = enumerate_active_sets(qp);
    ASSERT_TRUE(std::isfinite(oracle.objective));
    EXPECT_NEAR(r.objective, oracle.objective, 1e-8 * std::max(1.0, std::abs(oracle.objective))) << trial;
    EXPECT_LE((r.z - oracle.z).norm(), 1e-6) << trial;
    EXPECT_LE((qp.C * r.z - qp.d).maxCoeff(), 1e-9);
    EXPECT_GE(r.y.minCoeff(), 0.0);
  }
}

TEST(SolveQpProperty, KktResidualsOnDegenerateLps) {
  // Random bounded LPs: box plus random cuts. Check KKT conditions directly.
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3;
    const int cuts = 4;
    QuadraticProgram qp;
    qp.H = Matrix::Zero(n, n);
    qp.f = ot::random_vector(rng, n);
    qp.C.resize(2 * n + cuts, n);
    qp.d.resize(2 * n + cuts);
    qp.C.topRows(n) = Matrix::Identity(n, n);
    qp.C.middleRows(n, n) = -Matrix::Identity(n, n);
    qp.d.head(2 * n).setOnes();
    qp.C.bottomRows(cuts) = ot::random_matrix(rng, cuts, n);
    qp.d.tail(cuts) = ot::random_vector(rng, cuts).cwiseAbs();
    const auto r = solve_qp(qp);
    ASSERT_EQ(r.status, QpStatus::converged) << trial;
    const Vector stationarity = qp.f + qp.C.transpose() * r.y;
    EXPECT_LE(stationarity.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GE(r.slack.minCoeff(), -1e-9);
    EXPECT_LE(r.slack.dot(r.y), 1e-8);
    const auto oracle = enumerate_active_sets(qp);
    EXPECT_NEAR(r.objective, oracle.objective, 1e-8) << trial;
  }
}
