#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "quadplan/geometry.hpp"

namespace quadplan {

// Complete graph over target ids with a validated metric distance table.
class MetricGraph {
 public:
  MetricGraph(std::vector<int> ids, std::vector<std::vector<double>> distances)
      : ids_(std::move(ids)), d_(std::move(distances)) {
    validate();
  }

  static MetricGraph from_targets(const std::vector<Target>& targets) {
    std::vector<Target> sorted = targets;
    std::sort(sorted.begin(), sorted.end(),
              [](const Target& a, const Target& b) { return a.id < b.id; });
    const std::size_t n = sorted.size();
    std::vector<int> ids(n);
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      ids[i] = sorted[i].id;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dij = dist(sorted[i].position, sorted[j].position);
        d[i][j] = dij;
        d[j][i] = dij;
      }
    }
    return MetricGraph(std::move(ids), std::move(d));
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<int>& ids() const { return ids_; }
  double distance(std::size_t i, std::size_t j) const { return d_[i][j]; }

 private:
  void validate() const {
    const std::size_t n = ids_.size();
    if (n == 0) throw std::invalid_argument("metric graph needs at least one node");
    if (d_.size() != n) throw std::invalid_argument("distance table is not square");
    for (std::size_t i = 1; i < n; ++i) {
      if (ids_[i] <= ids_[i - 1]) {
        throw std::invalid_argument("node ids must be strictly increasing");
      }
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d_[i].size() != n) throw std::invalid_argument("distance table is not square");
      for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(d_[i][j]));
    }
    const double tol = 1e-9 * std::max(1.0, scale);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(d_[i][i]) > tol) throw std::invalid_argument("nonzero diagonal");
      for (std::size_t j = 0; j < n; ++j) {
        if (d_[i][j] < -tol) throw std::invalid_argument("negative distance");
        if (std::abs(d_[i][j] - d_[j][i]) > tol) {
          throw std::invalid_argument("distance table is not symmetric");
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          if (d_[i][k] > d_[i][j] + d_[j][k] + tol) {
            throw std::invalid_argument("triangle inequality violated");
          }
        }
      }
    }
  }

  std::vector<int> ids_;
  std::vector<std::vector<double>> d_;
};

struct TspTour {
  std::vector<int> order;  // node ids, Hamiltonian cycle (closing edge implied)
  double length = 0.0;     // cycle length including the closing edge
  bool matching_exact = true;  // whether the odd-vertex matching was exact
};

namespace detail {

inline double cycle_length(const MetricGraph& g, const std::vector<std::size_t>& order) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) len += g.distance(order[i], order[i + 1]);
  if (order.size() > 1) len += g.distance(order.back(), order.front());
  return len;
}

// Prim MST rooted at node 0; ties broken toward the lowest node index.
inline std::vector<std::pair<std::size_t, std::size_t>> prim_mst(const MetricGraph& g) {
  const std::size_t n = g.size();
  std::vector<bool> in_tree(n, false);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);
  key[0] = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (best == n || key[v] < key[best])) best = v;
    }
    in_tree[best] = true;
    if (best != 0) edges.emplace_back(parent[best], best);
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && g.distance(best, v) < key[v]) {
        key[v] = g.distance(best, v);
        parent[v] = best;
      }
    }
  }
  return edges;
}

// Exact minimum-weight perfect matching by subset DP. Feasible up to ~16 odd
// vertices; the caller falls back to greedy beyond that.
inline std::vector<std::pair<std::size_t, std::size_t>> exact_matching(
    const MetricGraph& g, const std::vector<std::size_t>& odd) {
  const std::size_t k = odd.size();
  const std::uint32_t full = (1u << k) - 1u;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(full + 1u, inf);
  std::vector<std::uint32_t> choice(full + 1u, 0);
  best[0] = 0.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int i = std::countr_zero(mask);
    const std::uint32_t rest = mask & ~(1u << i);
    for (std::uint32_t bits = rest; bits != 0; bits &= bits - 1u) {
      const int j = std::countr_zero(bits);
      const std::uint32_t sub = rest & ~(1u << j);
      if (best[sub] == inf) continue;
      const double cand = best[sub] + g.distance(odd[i], odd[j]);
      if (cand < best[mask]) {
        best[mask] = cand;
        choice[mask] = (1u << i) | (1u << j);
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::uint32_t mask = full;
  while (mask != 0) {
    const std::uint32_t pick = choice[mask];
    const int i = std::countr_zero(pick);
    const int j = std::countr_zero(pick & (pick - 1u));
    pairs.emplace_back(odd[i], odd[j]);
    mask &= ~pick;
  }
  return pairs;
}

inline std::vector<std::pair<std::size_t, std::size_t>> greedy_matching(
    const MetricGraph& g, std::vector<std::size_t> odd) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  while (!odd.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < odd.size(); ++i) {
      for (std::size_t j = i + 1; j < odd.size(); ++j) {
        if (g.distance(odd[i], odd[j]) < best) {
          best = g.distance(odd[i], odd[j]);
          bi = i;
          bj = j;
        }
      }
    }
    pairs.emplace_back(odd[bi], odd[bj]);
    odd.erase(odd.begin() + bj);
    odd.erase(odd.begin() + bi);
  }
  return pairs;
}

// Hierholzer Euler circuit over an undirected multigraph, always following
// the lowest-indexed unused edge.
inline std::vector<std::size_t> euler_circuit(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (neighbor, edge id)
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].first].emplace_back(edges[e].second, e);
    adj[edges[e].second].emplace_back(edges[e].first, e);
  }
  for (auto& lst : adj) std::sort(lst.begin(), lst.end());
  std::vector<bool> used(edges.size(), false);
  std::vector<std::size_t> cursor(n, 0);
  std::vector<std::size_t> stack{0};
  std::vector<std::size_t> circuit;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    auto& pos = cursor[v];
    while (pos < adj[v].size() && used[adj[v][pos].second]) ++pos;
    if (pos == adj[v].size()) {
      circuit.push_back(v);
      stack.pop_back();
    } else {
      used[adj[v][pos].second] = true;
      stack.push_back(adj[v][pos].first);
    }
  }
  std::reverse(circuit.begin(), circuit.end());
  return circuit;
}

}  // namespace detail

// Christofides 3/2-approximation: MST + minimum-weight matching on odd-degree
// vertices + Euler circuit + shortcut. Deterministic: every tie breaks toward
// the lowest node id. matching_exact reports whether the DP (exact) matching
// was used; the 3/2 guarantee only applies on that path.
inline TspTour christofides(const MetricGraph& g) {
  const std::size_t n = g.size();
  if (n == 1) return {{g.ids()[0]}, 0.0, true};
  if (n == 2) return {{g.ids()[0], g.ids()[1]}, 2.0 * g.distance(0, 1), true};

  auto edges = detail::prim_mst(g);
  std::vector<std::size_t> degree(n, 0);
  for (auto [a, b] : edges) {
    ++degree[a];
    ++degree[b];
  }
  std::vector<std::size_t> odd;
  for (std::size_t v = 0; v < n; ++v) {
    if (degree[v] % 2 == 1) odd.push_back(v);
  }
  bool exact = true;
  std::vector<std::pair<std::size_t, std::size_t>> matching;
  if (odd.size() <= 16) {
    matching = detail::exact_matching(g, odd);
  } else {
    matching = detail::greedy_matching(g, odd);
    exact = false;
  }
  edges.insert(edges.end(), matching.begin(), matching.end());

  const auto circuit = detail::euler_circuit(n, edges);
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t v : circuit) {
    if (!seen[v]) {
      seen[v] = true;
      order.push_back(v);
    }
  }

  TspTour result;
  result.length = detail::cycle_length(g, order);
  result.matching_exact = exact;
  result.order.reserve(n);
  for (std::size_t v : order) result.order.push_back(g.ids()[v]);
  return result;
}

// Exact minimum Hamiltonian cycle by exhaustive permutation with the first
// node fixed. Guarded against factorial blowup.
inline TspTour brute_force_tsp(const MetricGraph& g) {
  const std::size_t n = g.size();
  if (n > 12) throw std::invalid_argument("brute_force_tsp limited to 12 nodes");
  if (n == 1) return {{g.ids()[0]}, 0.0, true};

  std::vector<std::size_t> perm(n - 1);
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<std::size_t> best_order;
  double best = std::numeric_limits<double>::infinity();
  do {
    double len = g.distance(0, perm.front());
    for (std::size_t i = 0; i + 1 < perm.size(); ++i) len += g.distance(perm[i], perm[i + 1]);
    len += g.distance(perm.back(), 0);
    if (len < best) {
      best = len;
      best_order = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TspTour result;
  result.length = best;
  result.order.push_back(g.ids()[0]);
  for (std::size_t v : best_order) result.order.push_back(g.ids()[v]);
  return result;
}

// Quality guarantees attached to the tour construction, for reporting only.
// Christofides is 3/2 on a metric cycle with exact matching. Frederickson's
// m-path variant tightens the team bound to 3/2 - 1/m, and combining that
// with the empirical factor-3 gap between the dynamic vehicle and a
// holonomic one yields 4.5 - 3/m against the holonomic team optimum.
inline constexpr double kChristofidesApproximationFactor = 1.5;

inline double mtsp_path_approximation_factor(int fleet_size) {
  if (fleet_size < 1) throw std::invalid_argument("fleet size must be positive");
  return 1.5 - 1.0 / fleet_size;
}

inline double quad_team_approximation_factor(int fleet_size) {
  if (fleet_size < 1) throw std::invalid_argument("fleet size must be positive");
  return 4.5 - 3.0 / fleet_size;
}

// Rotate a cycle so the node nearest to the anchor comes first; cyclic order
// is preserved and distance ties break toward the lowest node id.
inline std::vector<int> rotate_tour_to_nearest(const std::vector<int>& cycle, Point anchor,
                                               const TargetMap& targets) {
  if (cycle.empty()) throw std::invalid_argument("cannot rotate an empty cycle");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    const double d = dist(anchor, resolve_target(targets, cycle[i]).position);
    if (d < best_dist || (d == best_dist && cycle[i] < cycle[best])) {
      best_dist = d;
      best = i;
    }
  }
  std::vector<int> rotated;
  rotated.reserve(cycle.size());
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    rotated.push_back(cycle[(best + i) % cycle.size()]);
  }
  return rotated;
}

}  // namespace quadplan
