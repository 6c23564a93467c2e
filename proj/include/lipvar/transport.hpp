#pragma once

// Exact solver for the localized Wasserstein distance
//
//   dist_F(a, b) = sup { sum_i g_i (a_i - b_i) : |g_i - g_j| <= |x_i - x_j|, |g_i| <= dist(x_i, F^c) }
//
// through its dual, an uncapacitated min-cost flow in which a ground node stands for
// the complement of F. The flow is solved by a primal network simplex; pair arcs are
// generated lazily from a k-nearest-neighbour seed until no pair constraint is violated.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "lipvar/core.hpp"

namespace lipvar::transport {

/// Primal network simplex for uncapacitated min-cost flow with real supplies.
/// Arcs may be added after a solve; the current basis stays feasible, so the next
/// solve continues from it.
class NetworkSimplex {
 public:
  /// cost_bound must dominate every arc cost that will ever be added.
  NetworkSimplex(int nodes, double cost_bound)
      : nodes_(nodes), root_(nodes), supply_(static_cast<std::size_t>(nodes), 0.0) {
    require(nodes >= 1, "NetworkSimplex: need at least one node");
    require(cost_bound >= 0.0 && std::isfinite(cost_bound), "NetworkSimplex: invalid cost bound");
    cost_scale_ = std::max(cost_bound, 1e-300);
    art_cost_ = (static_cast<double>(nodes) + 1.0) * std::max(cost_bound, 1.0) + 1.0;
  }

  int add_arc(int from, int to, double cost) {
    require(from >= 0 && from < nodes_ && to >= 0 && to < nodes_ && from != to, "NetworkSimplex: bad arc");
    require(cost >= 0.0 && cost <= cost_scale_ * (1.0 + 1e-9), "NetworkSimplex: arc cost outside bound");
    src_.push_back(from);
    tgt_.push_back(to);
    cost_.push_back(cost);
    flow_.push_back(0.0);
    in_tree_.push_back(false);
    artificial_.push_back(false);
    return static_cast<int>(src_.size()) - 1;
  }

  void set_supply(int node, double s) {
    require(!initialized_, "NetworkSimplex: supplies are fixed after the first solve");
    supply_[static_cast<std::size_t>(node)] = s;
  }

  /// Returns the minimum cost. Throws ComputationError when flow must use the artificial arcs.
  double solve() {
    if (!initialized_) init();
    const std::size_t max_pivots = 50 * (src_.size() + static_cast<std::size_t>(nodes_)) + 10000;
    std::size_t pivots = 0;
    for (;;) {
      const int in = find_entering();
      if (in < 0) break;
      pivot(in);
      if (++pivots > max_pivots) throw ComputationError("NetworkSimplex: pivot limit exceeded");
    }
    double art_flow = 0.0;
    double value = 0.0;
    double supply_scale = 0.0;
    for (double s : supply_) supply_scale += std::abs(s);
    for (std::size_t e = 0; e < src_.size(); ++e) {
      if (artificial_[e]) art_flow += flow_[e];
      else value += cost_[e] * flow_[e];
    }
    if (art_flow > 1e-9 * std::max(supply_scale, 1e-300)) {
      throw ComputationError("NetworkSimplex: infeasible supplies");
    }
    return value;
  }

  double potential(int node) const { return pi_[static_cast<std::size_t>(node)]; }
  double flow(int arc) const { return flow_[static_cast<std::size_t>(arc)]; }
  std::size_t arc_count() const { return src_.size(); }

 private:
  void init() {
    double total = 0.0;
    for (double s : supply_) total += s;
    double scale = 0.0;
    for (double s : supply_) scale += std::abs(s);
    if (std::abs(total) > 1e-9 * std::max(scale, 1e-300)) {
      throw InvalidArgument("NetworkSimplex: supplies must sum to zero");
    }
    const std::size_t total_nodes = static_cast<std::size_t>(nodes_) + 1;
    parent_.assign(total_nodes, -1);
    pred_.assign(total_nodes, -1);
    up_.assign(total_nodes, false);
    depth_.assign(total_nodes, 0);
    pi_.assign(total_nodes, 0.0);
    children_.assign(total_nodes, {});
    for (int v = 0; v < nodes_; ++v) {
      const double s = supply_[static_cast<std::size_t>(v)];
      const bool up = s >= 0.0;
      src_.push_back(up ? v : root_);
      tgt_.push_back(up ? root_ : v);
      cost_.push_back(art_cost_);
      flow_.push_back(std::abs(s));
      in_tree_.push_back(true);
      artificial_.push_back(true);
      const auto vi = static_cast<std::size_t>(v);
      parent_[vi] = root_;
      pred_[vi] = static_cast<int>(src_.size()) - 1;
      up_[vi] = up;
      depth_[vi] = 1;
      pi_[vi] = up ? -art_cost_ : art_cost_;
      children_[static_cast<std::size_t>(root_)].push_back(v);
    }
    initialized_ = true;
  }

  double reduced_cost(std::size_t e) const {
    return cost_[e] + pi_[static_cast<std::size_t>(src_[e])] - pi_[static_cast<std::size_t>(tgt_[e])];
  }

  int find_entering() {
    const std::size_t m = src_.size();
    if (m == 0) return -1;
    const std::size_t block = std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
    const double tol = 1e-12 * std::max(cost_scale_, 1.0) * 8.0;
    std::size_t scanned = 0;
    int best = -1;
    double best_rc = -tol;
    std::size_t in_block = 0;
    while (scanned < m) {
      const std::size_t e = next_arc_;
      next_arc_ = (next_arc_ + 1) % m;
      ++scanned;
      if (!in_tree_[e]) {
        const double rc = reduced_cost(e);
        if (rc < best_rc) {
          best_rc = rc;
          best = static_cast<int>(e);
        }
      }
      if (++in_block == block) {
        if (best >= 0) return best;
        in_block = 0;
      }
    }
    return best;
  }

  void pivot(int in) {
    const auto ein = static_cast<std::size_t>(in);
    const int first = src_[ein];
    const int second = tgt_[ein];
    // Join of the two tree paths.
    int a = first;
    int b = second;
    while (a != b) {
      if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)]) a = parent_[static_cast<std::size_t>(a)];
      else b = parent_[static_cast<std::size_t>(b)];
    }
    const int join = a;
    // Leaving arc (strongly feasible rule: last blocking arc along the cycle).
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double delta = kInf;
    int u_out = -1;
    int side = 0;
    for (int w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto wi = static_cast<std::size_t>(w);
      if (up_[wi]) {
        const double d = flow_[static_cast<std::size_t>(pred_[wi])];
        if (d < delta) {
          delta = d;
          u_out = w;
          side = 1;
        }
      }
    }
    for (int w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto wi = static_cast<std::size_t>(w);
      if (!up_[wi]) {
        const double d = flow_[static_cast<std::size_t>(pred_[wi])];
        if (d <= delta) {
          delta = d;
          u_out = w;
          side = 2;
        }
      }
    }
    if (u_out < 0) throw ComputationError("NetworkSimplex: unbounded cycle");
    if (delta > 0.0) {
      flow_[ein] += delta;
      for (int w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
        const auto wi = static_cast<std::size_t>(w);
        double& f = flow_[static_cast<std::size_t>(pred_[wi])];
        f = up_[wi] ? std::max(0.0, f - delta) : f + delta;
      }
      for (int w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
        const auto wi = static_cast<std::size_t>(w);
        double& f = flow_[static_cast<std::size_t>(pred_[wi])];
        f = up_[wi] ? f + delta : std::max(0.0, f - delta);
      }
    }
    const int leaving = pred_[static_cast<std::size_t>(u_out)];
    flow_[static_cast<std::size_t>(leaving)] = 0.0;
    in_tree_[static_cast<std::size_t>(leaving)] = false;
    in_tree_[ein] = true;

    // Re-hang the cut subtree: reverse the path from the entering endpoint to u_out.
    const int p0 = side == 1 ? first : second;
    const int new_parent = side == 1 ? second : first;
    path_.clear();
    for (int w = p0;; w = parent_[static_cast<std::size_t>(w)]) {
      path_.push_back(w);
      if (w == u_out) break;
    }
    detach(parent_[static_cast<std::size_t>(u_out)], u_out);
    old_pred_.resize(path_.size());
    old_up_.resize(path_.size());
    for (std::size_t i = 0; i < path_.size(); ++i) {
      old_pred_[i] = pred_[static_cast<std::size_t>(path_[i])];
      old_up_[i] = up_[static_cast<std::size_t>(path_[i])];
    }
    for (std::size_t i = 1; i < path_.size(); ++i) {
      const int child = path_[i - 1];
      const int node = path_[i];
      detach(node, child);
      children_[static_cast<std::size_t>(child)].push_back(node);
      const auto ni = static_cast<std::size_t>(node);
      parent_[ni] = child;
      pred_[ni] = old_pred_[i - 1];
      up_[ni] = !old_up_[i - 1];
    }
    const auto p0i = static_cast<std::size_t>(p0);
    parent_[p0i] = new_parent;
    pred_[p0i] = in;
    up_[p0i] = (src_[ein] == p0);
    children_[static_cast<std::size_t>(new_parent)].push_back(p0);
    refresh_subtree(p0);
  }

  void detach(int parent, int child) {
    auto& c = children_[static_cast<std::size_t>(parent)];
    auto it = std::find(c.begin(), c.end(), child);
    if (it != c.end()) {
      *it = c.back();
      c.pop_back();
    }
  }

  void refresh_subtree(int top) {
    stack_.clear();
    stack_.push_back(top);
    while (!stack_.empty()) {
      const int v = stack_.back();
      stack_.pop_back();
      const auto vi = static_cast<std::size_t>(v);
      const auto pi = static_cast<std::size_t>(parent_[vi]);
      const double c = cost_[static_cast<std::size_t>(pred_[vi])];
      pi_[vi] = up_[vi] ? pi_[pi] - c : pi_[pi] + c;
      depth_[vi] = depth_[pi] + 1;
      for (int ch : children_[vi]) stack_.push_back(ch);
    }
  }

  int nodes_;
  int root_;
  double cost_scale_ = 1.0;
  double art_cost_ = 1.0;
  bool initialized_ = false;
  std::size_t next_arc_ = 0;
  std::vector<double> supply_;
  std::vector<int> src_, tgt_;
  std::vector<double> cost_, flow_;
  std::vector<bool> in_tree_, artificial_;
  std::vector<int> parent_, pred_, depth_;
  std::vector<bool> up_;
  std::vector<double> pi_;
  std::vector<std::vector<int>> children_;
  std::vector<int> path_, stack_, old_pred_;
  std::vector<bool> old_up_;
};

struct WeightedCloud {
  int dim = 2;
  std::vector<double> coords;  // row-major
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(coords).subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  }
};

struct TransportStats {
  std::size_t nodes = 0;
  std::size_t arcs = 0;
  int rounds = 0;
};

/// dist_F between two weighted clouds. depth_a[i] / depth_b[j] are dist(x, F^c);
/// points with zero depth carry g = 0 and are dropped.
struct TransportSolution {
  double value = 0.0;
  std::vector<double> dual_a;  // optimal g at the points of a (0 where the depth is 0)
  std::vector<double> dual_b;
  TransportStats stats;
};

/// Pair arcs carried between solves that share the same point indexing (same clouds up to
/// coordinates and weights), so later solves start from the constraints found earlier.
struct ArcHint {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// dist_F together with an optimal dual potential g.
inline TransportSolution localized_w1_solve(const WeightedCloud& a, std::span<const double> depth_a,
                                            const WeightedCloud& b, std::span<const double> depth_b,
                                            int neighbours = 10, ArcHint* hint = nullptr) {
  require(a.dim == b.dim, "localized_w1: dimension mismatch");
  require(depth_a.size() == a.size() && depth_b.size() == b.size(), "localized_w1: depth size mismatch");
  const int dim = a.dim;
  std::vector<double> pts;
  std::vector<double> supply;
  std::vector<double> depth;
  auto take = [&](const WeightedCloud& c, std::span<const double> dep, double sign) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!(dep[i] > 0.0)) continue;
      const auto p = c.point(i);
      pts.insert(pts.end(), p.begin(), p.end());
      supply.push_back(sign * c.weights[i]);
      depth.push_back(dep[i]);
    }
  };
  take(a, depth_a, 1.0);
  take(b, depth_b, -1.0);
  const std::size_t k = supply.size();
  TransportSolution sol;
  sol.dual_a.assign(a.size(), 0.0);
  sol.dual_b.assign(b.size(), 0.0);
  if (k == 0) return sol;
  auto pt = [&](std::size_t i) {
    return std::span<const double>(pts).subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  };
  // Pairwise distances never need to exceed the ground route r_i + r_j.
  auto pair_cost = [&](std::size_t i, std::size_t j) { return std::min(distance(pt(i), pt(j)), depth[i] + depth[j]); };
  double bound = 0.0;
  for (double r : depth) bound = std::max(bound, 2.0 * r);
  const int ground = static_cast<int>(k);
  NetworkSimplex ns(static_cast<int>(k) + 1, bound);
  double net = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    ns.set_supply(static_cast<int>(i), supply[i]);
    net += supply[i];
    ns.add_arc(static_cast<int>(i), ground, depth[i]);
    ns.add_arc(ground, static_cast<int>(i), depth[i]);
  }
  ns.set_supply(ground, -net);

  std::vector<char> have(k * k, 0);
  auto link = [&](std::size_t i, std::size_t j) {
    if (i == j || have[i * k + j]) return;
    have[i * k + j] = have[j * k + i] = 1;
    const double c = pair_cost(i, j);
    ns.add_arc(static_cast<int>(i), static_cast<int>(j), c);
    ns.add_arc(static_cast<int>(j), static_cast<int>(i), c);
  };
  {
    std::vector<std::pair<double, std::size_t>> cand;
    const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(neighbours), k - 1);
    for (std::size_t i = 0; i < k && nb > 0; ++i) {
      cand.clear();
      for (std::size_t j = 0; j < k; ++j) {
        if (j != i) cand.emplace_back(distance(pt(i), pt(j)), j);
      }
      std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(nb - 1), cand.end());
      for (std::size_t t = 0; t < nb; ++t) link(i, cand[t].second);
    }
  }
  if (hint) {
    for (auto [i, j] : hint->pairs) {
      if (i < k && j < k) link(i, j);
    }
  }
  constexpr std::size_t kPerRound = 4;  // violated pairs added per node and round
  double value = 0.0;
  int rounds = 0;
  const double tol = 1e-12 * std::max(bound, 1e-300);
  for (;;) {
    value = ns.solve();
    ++rounds;
    std::vector<std::pair<std::size_t, std::size_t>> violated;
    std::vector<std::pair<double, std::size_t>> worst;
    for (std::size_t i = 0; i < k; ++i) {
      worst.clear();
      const double pi_i = ns.potential(static_cast<int>(i));
      for (std::size_t j = i + 1; j < k; ++j) {
        if (have[i * k + j]) continue;
        const double excess = std::abs(pi_i - ns.potential(static_cast<int>(j))) - pair_cost(i, j);
        if (excess > tol) worst.emplace_back(-excess, j);
      }
      const std::size_t keep = std::min(kPerRound, worst.size());
      std::partial_sort(worst.begin(), worst.begin() + static_cast<std::ptrdiff_t>(keep), worst.end());
      for (std::size_t t = 0; t < keep; ++t) violated.emplace_back(i, worst[t].second);
    }
    if (violated.empty()) break;
    for (auto [i, j] : violated) {
      link(i, j);
      if (hint) hint->pairs.emplace_back(i, j);
    }
    if (rounds > 200) throw ComputationError("localized_w1: constraint generation did not converge");
  }
  sol.value = value;
  sol.stats.nodes = k + 1;
  sol.stats.arcs = ns.arc_count();
  sol.stats.rounds = rounds;
  // Dual of the flow problem: g_i = pi_G - pi_i.
  const double pg = ns.potential(ground);
  std::size_t node = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (depth_a[i] > 0.0) sol.dual_a[i] = pg - ns.potential(static_cast<int>(node++));
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (depth_b[i] > 0.0) sol.dual_b[i] = pg - ns.potential(static_cast<int>(node++));
  }
  return sol;
}

inline double localized_w1(const WeightedCloud& a, std::span<const double> depth_a, const WeightedCloud& b,
                           std::span<const double> depth_b, TransportStats* stats = nullptr) {
  auto sol = localized_w1_solve(a, depth_a, b, depth_b);
  if (stats) *stats = sol.stats;
  return sol.value;
}

}  // namespace lipvar::transport
