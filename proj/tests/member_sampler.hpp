#pragma once

// Certified members of an ambiguity ball: every center atom is split into a
// few pieces and each piece is displaced. The displacement scale is tuned so
// that the cost of this explicit coupling is a chosen fraction of the
// radius, which bounds the OT discrepancy from above without sampling the
// ball itself.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "otprop/ambiguity.hpp"
#include "test_support.hpp"

namespace otprop::testing {

struct Member {
  EmpiricalDistribution dist;
  /// Center atom each member atom was split off from.
  std::vector<Eigen::Index> source;
  /// Cost of the splitting coupling; an upper bound on W_c(center, dist).
  double coupling_cost = 0.0;
};

struct MemberOptions {
  /// Coupling cost as a fraction of the radius, drawn from [lo, hi].
  double fraction_lo = 0.2;
  double fraction_hi = 1.0;
  int max_split = 2;
  double displacement_scale = 1.0;
};

namespace detail_member {

inline double coupling_cost(const OTAmbiguitySet& s, const Matrix& atoms, const Vector& weights,
                            const std::vector<Eigen::Index>& source) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < atoms.cols(); ++k) {
    total += weights(k) * s.cost(s.center.atom(source[static_cast<std::size_t>(k)]), atoms.col(k));
  }
  return total;
}

}  // namespace detail_member

inline Member sample_member(Rng& rng, const OTAmbiguitySet& s, const MemberOptions& opt = {}) {
  std::uniform_int_distribution<int> split(1, std::max(1, opt.max_split));
  std::uniform_real_distribution<double> share(0.2, 1.0);
  std::vector<Eigen::Index> source;
  std::vector<double> w;
  for (Eigen::Index i = 0; i < s.center.size(); ++i) {
    const int k = split(rng);
    std::vector<double> parts(static_cast<std::size_t>(k));
    double total = 0.0;
    for (auto& p : parts) total += (p = share(rng));
    for (const double p : parts) {
      source.push_back(i);
      w.push_back(s.center.weight(i) * p / total);
    }
  }
  const auto n = static_cast<Eigen::Index>(source.size());
  Vector weights = Eigen::Map<const Vector>(w.data(), n);
  weights /= weights.sum();
  const Matrix disp = random_matrix(rng, s.dim(), n, opt.displacement_scale);
  Matrix base(s.dim(), n);
  for (Eigen::Index k = 0; k < n; ++k) base.col(k) = s.center.atom(source[static_cast<std::size_t>(k)]);

  const double target = s.radius * std::uniform_real_distribution<double>(opt.fraction_lo, opt.fraction_hi)(rng);
  const auto cost_at = [&](double t) {
    return detail_member::coupling_cost(s, base + t * disp, weights, source);
  };
  // Largest step t in [0, t_max] (by bisection) with coupling cost <= target.
  double lo = 0.0;
  double hi = 1.0;
  while (cost_at(hi) <= target && hi < 64.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 80 && hi < 64.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cost_at(mid) <= target) lo = mid; else hi = mid;
  }
  Matrix atoms = base + lo * disp;
  const double c = detail_member::coupling_cost(s, atoms, weights, source);
  return Member{EmpiricalDistribution(std::move(atoms), std::move(weights)), std::move(source), c};
}

/// A member of the ball around P = `center` with radius `eps` for cost `c`.
inline Member sample_member(Rng& rng, const EmpiricalDistribution& center, double eps, const TransportCost& c,
                            const MemberOptions& opt = {}) {
  return sample_member(rng, OTAmbiguitySet(center, eps, c), opt);
}

}  // namespace otprop::testing
