#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "otprop/error.hpp"
#include "otprop/linalg.hpp"

namespace otprop::detail {

/// Primal network simplex for the dense transportation problem
///
///   min sum_ij C_ij g_ij  s.t.  sum_j g_ij = a_i,  sum_i g_ij = b_j,  g >= 0.
///
/// Rows and columns are joined to an artificial root by big-M arcs, which
/// gives a strongly feasible starting tree. The leaving arc is chosen by the
/// strongly-feasible-tree rule, so degenerate pivots cannot cycle. Entering
/// arcs come from block search pricing. After each pivot only the subtree that
/// changes parent is re-threaded.
class TransportationSimplex {
 public:
  struct Result {
    Matrix flow;
    double value = 0.0;
    long pivots = 0;
  };

  TransportationSimplex(const Matrix& cost, const Vector& supply, const Vector& demand)
      : cost_(cost), n_(cost.rows()), m_(cost.cols()) {
    require_dim(supply.size(), n_, "transportation: supply size");
    require_dim(demand.size(), m_, "transportation: demand size");
    require(n_ > 0 && m_ > 0, "transportation: empty problem");
    require(cost.allFinite(), "transportation: non-finite cost");
    supply_ = supply;
    demand_ = demand;
  }

  Result solve() {
    init();
    long pivots = 0;
    const long max_pivots = 2000L * (n_ + m_) + 100000L;
    while (true) {
      const long in = find_entering();
      if (in < 0) break;
      pivot(in);
      if (++pivots > max_pivots) {
        throw NumericalFailure("transportation simplex: pivot limit reached");
      }
    }
    Result r;
    r.pivots = pivots;
    r.flow = Matrix::Zero(n_, m_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = 0; j < m_; ++j) {
        const double f = flow_[static_cast<std::size_t>(i * m_ + j)];
        if (f > 0.0) {
          r.flow(i, j) = f;
          r.value += f * cost_(i, j);
        }
      }
    }
    return r;
  }

 private:
  long num_arcs() const { return n_ * m_ + n_ + m_; }
  long root() const { return n_ + m_; }

  long source(long a) const {
    if (a < n_ * m_) return a / m_;
    if (a < n_ * m_ + n_) return a - n_ * m_;
    return root();
  }
  long target(long a) const {
    if (a < n_ * m_) return n_ + a % m_;
    if (a < n_ * m_ + n_) return root();
    return n_ + (a - n_ * m_ - n_);
  }
  double arc_cost(long a) const {
    if (a < n_ * m_) return cost_(a / m_, a % m_);
    return artificial_cost_;
  }
  double reduced_cost(long a) const {
    return arc_cost(a) + pi_[static_cast<std::size_t>(source(a))] -
           pi_[static_cast<std::size_t>(target(a))];
  }

  void init() {
    const long nodes = n_ + m_ + 1;
    const double max_cost = cost_.cwiseAbs().maxCoeff();
    artificial_cost_ = (max_cost + 1.0) * static_cast<double>(nodes);
    tolerance_ = 1e-11 * (max_cost + 1.0);

    flow_.assign(static_cast<std::size_t>(num_arcs()), 0.0);
    parent_.assign(static_cast<std::size_t>(nodes), -1);
    pred_.assign(static_cast<std::size_t>(nodes), -1);
    up_.assign(static_cast<std::size_t>(nodes), false);
    depth_.assign(static_cast<std::size_t>(nodes), 0);
    pi_.assign(static_cast<std::size_t>(nodes), 0.0);
    adj_.assign(static_cast<std::size_t>(nodes), {});

    for (long i = 0; i < n_; ++i) {
      const long a = n_ * m_ + i;
      attach(i, root(), a, true);
      flow_[static_cast<std::size_t>(a)] = supply_(i);
      pi_[static_cast<std::size_t>(i)] = -artificial_cost_;
    }
    for (long j = 0; j < m_; ++j) {
      const long node = n_ + j;
      const long a = n_ * m_ + n_ + j;
      attach(node, root(), a, false);
      flow_[static_cast<std::size_t>(a)] = demand_(j);
      pi_[static_cast<std::size_t>(node)] = artificial_cost_;
    }
    block_size_ = std::max(10L, static_cast<long>(std::sqrt(static_cast<double>(num_arcs()))));
    next_arc_ = 0;
  }

  void attach(long child, long par, long arc, bool up) {
    const auto c = static_cast<std::size_t>(child);
    parent_[c] = par;
    pred_[c] = arc;
    up_[c] = up;
    depth_[c] = depth_[static_cast<std::size_t>(par)] + 1;
    adj_[c].push_back(arc);
    adj_[static_cast<std::size_t>(par)].push_back(arc);
  }

  long find_entering() {
    const long total = num_arcs();
    double best = -tolerance_;
    long best_arc = -1;
    long scanned_in_block = 0;
    for (long k = 0; k < total; ++k) {
      const long a = (next_arc_ + k) % total;
      const double rc = reduced_cost(a);
      if (rc < best) {
        best = rc;
        best_arc = a;
      }
      if (++scanned_in_block == block_size_) {
        if (best_arc >= 0) {
          next_arc_ = (a + 1) % total;
          return best_arc;
        }
        scanned_in_block = 0;
      }
    }
    return best_arc;
  }

  void pivot(long in) {
    const long first = source(in);
    const long second = target(in);

    long u = first, v = second;
    while (u != v) {
      if (depth_[static_cast<std::size_t>(u)] >= depth_[static_cast<std::size_t>(v)]) {
        u = parent_[static_cast<std::size_t>(u)];
      } else {
        v = parent_[static_cast<std::size_t>(v)];
      }
    }
    const long join = u;

    // Flow travels join -> first -> second -> join. Only arcs traversed
    // against their orientation can block (capacities are infinite).
    double delta = std::numeric_limits<double>::infinity();
    long u_out = -1;
    int side = 0;
    for (long w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto ws = static_cast<std::size_t>(w);
      if (up_[ws] && flow_[static_cast<std::size_t>(pred_[ws])] < delta) {
        delta = flow_[static_cast<std::size_t>(pred_[ws])];
        u_out = w;
        side = 1;
      }
    }
    for (long w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto ws = static_cast<std::size_t>(w);
      if (!up_[ws] && flow_[static_cast<std::size_t>(pred_[ws])] <= delta) {
        delta = flow_[static_cast<std::size_t>(pred_[ws])];
        u_out = w;
        side = 2;
      }
    }
    if (side == 0) throw NumericalFailure("transportation simplex: unbounded cycle");
    delta = std::max(delta, 0.0);

    flow_[static_cast<std::size_t>(in)] += delta;
    for (long w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto ws = static_cast<std::size_t>(w);
      double& f = flow_[static_cast<std::size_t>(pred_[ws])];
      f = up_[ws] ? std::max(f - delta, 0.0) : f + delta;
    }
    for (long w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto ws = static_cast<std::size_t>(w);
      double& f = flow_[static_cast<std::size_t>(pred_[ws])];
      f = up_[ws] ? f + delta : std::max(f - delta, 0.0);
    }
    const long leaving = pred_[static_cast<std::size_t>(u_out)];
    flow_[static_cast<std::size_t>(leaving)] = 0.0;

    remove_adj(u_out, leaving);
    remove_adj(parent_[static_cast<std::size_t>(u_out)], leaving);
    adj_[static_cast<std::size_t>(first)].push_back(in);
    adj_[static_cast<std::size_t>(second)].push_back(in);

    // The subtree below the leaving arc is re-hung on the entering arc.
    const long sub_root = side == 1 ? first : second;
    const long new_parent = side == 1 ? second : first;
    const auto sr = static_cast<std::size_t>(sub_root);
    parent_[sr] = new_parent;
    pred_[sr] = in;
    up_[sr] = (side == 1);
    depth_[sr] = depth_[static_cast<std::size_t>(new_parent)] + 1;
    pi_[sr] = side == 1 ? pi_[static_cast<std::size_t>(second)] - arc_cost(in)
                        : pi_[static_cast<std::size_t>(first)] + arc_cost(in);
    rethread(sub_root);
  }

  void remove_adj(long node, long arc) {
    auto& list = adj_[static_cast<std::size_t>(node)];
    const auto it = std::find(list.begin(), list.end(), arc);
    if (it == list.end()) throw NumericalFailure("transportation simplex: corrupt tree");
    *it = list.back();
    list.pop_back();
  }

  void rethread(long sub_root) {
    stack_.clear();
    stack_.push_back(sub_root);
    while (!stack_.empty()) {
      const long node = stack_.back();
      stack_.pop_back();
      const auto ns = static_cast<std::size_t>(node);
      for (const long a : adj_[ns]) {
        if (a == pred_[ns]) continue;
        const long s = source(a);
        const long child = (s == node) ? target(a) : s;
        const auto cs = static_cast<std::size_t>(child);
        parent_[cs] = node;
        pred_[cs] = a;
        up_[cs] = (s == child);
        depth_[cs] = depth_[ns] + 1;
        pi_[cs] = up_[cs] ? pi_[ns] - arc_cost(a) : pi_[ns] + arc_cost(a);
        stack_.push_back(child);
      }
    }
  }

  Matrix cost_;
  long n_;
  long m_;
  Vector supply_;
  Vector demand_;
  double artificial_cost_ = 0.0;
  double tolerance_ = 0.0;
  long block_size_ = 10;
  long next_arc_ = 0;
  std::vector<double> flow_;
  std::vector<long> parent_;
  std::vector<long> pred_;
  std::vector<bool> up_;
  std::vector<long> depth_;
  std::vector<double> pi_;
  std::vector<std::vector<long>> adj_;
  std::vector<long> stack_;
};

}  // namespace otprop::detail
