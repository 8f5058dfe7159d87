#pragma once

// The two-state planning scenario used by the drcvar tests and the
// acceptance binary: an unstable plant prestabilized by LQR, small additive
// noise, and a unit box target away from the origin.

#include <random>
#include <vector>

#include "otprop/drcvar.hpp"
#include "otprop/systems.hpp"
#include "test_support.hpp"

namespace otprop::testing {

struct PlanningScenario {
  LTISystem sys;
  Vector x0;
  PolyhedralTarget target;
  int horizon;
  double gamma;
};

inline PlanningScenario planning_scenario() {
  Matrix a(2, 2);
  a << 0.5, -0.5, 1.0, 0.5;
  const LTISystem raw(a, Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2));
  Vector lo(2), hi(2);
  lo << 1.0, 1.0;
  hi << 2.0, 2.0;
  return {prestabilize_lqr(raw), Vector::Zero(2), PolyhedralTarget::box(lo, hi), 10, 0.1};
}

/// n trajectories of T standard normal noise vectors of size r.
inline std::vector<std::vector<Vector>> gaussian_samples(Rng& rng, int n, int horizon, int r) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<Vector>> out(static_cast<std::size_t>(n));
  for (auto& traj : out) {
    traj.resize(static_cast<std::size_t>(horizon));
    for (auto& w : traj) {
      w.resize(r);
      for (Eigen::Index k = 0; k < r; ++k) w(k) = normal(rng);
    }
  }
  return out;
}

}  // namespace otprop::testing
