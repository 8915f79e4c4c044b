#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "quadplan/geometry.hpp"
#include "quadplan/rng.hpp"

namespace quadplan {

struct Clustering {
  int k = 0;
  std::map<int, int> assignments;  // target id -> cluster index
  std::vector<Point> centroids;
  std::vector<double> wcss_history;  // within-cluster sum of squares per Lloyd iteration
};

struct KMeansConfig {
  int max_iterations = 100;
};

// Targets that were merged into a single representative loiter. The
// representative sits at the group centroid, takes the lowest member id, and
// inherits the widest member's loiter radius so one scan covers the group.
struct MergedTargetSet {
  std::vector<Target> representatives;
  std::map<int, int> merge_map;  // original id -> representative id
};

namespace detail {

inline double sq_dist(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline std::size_t nearest_centroid(Point p, const std::vector<Point>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// k-means++ seeding: first centroid uniform, the rest weighted by squared
// distance to the nearest chosen centroid. Falls back to unchosen points when
// every remaining distance is zero (duplicate positions).
inline std::vector<Point> kmeanspp_seed(const std::vector<Target>& targets, int k, Rng& rng) {
  const std::size_t n = targets.size();
  std::vector<Point> centroids;
  std::vector<bool> chosen(n, false);
  const std::size_t first = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)));
  centroids.push_back(targets[first].position);
  chosen[first] = true;
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = chosen[i] ? 0.0 : sq_dist(targets[i].position, centroids[detail::nearest_centroid(
                                                                 targets[i].position, centroids)]);
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // numerical tail
        for (std::size_t i = n; i-- > 0;) {
          if (!chosen[i]) {
            pick = i;
            break;
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(targets[pick].position);
  }
  return centroids;
}

}  // namespace detail

// Lloyd's K-means over target positions, seeded k-means++ style from the
// given RNG seed. Runs to an assignment fixpoint or the iteration cap and
// never returns an empty cluster.
inline Clustering kmeans(const std::vector<Target>& targets, int k, std::uint64_t seed,
                         const KMeansConfig& cfg = {}) {
  if (targets.empty()) throw std::invalid_argument("kmeans needs at least one target");
  if (k < 1) throw std::invalid_argument("kmeans needs k >= 1");
  if (static_cast<std::size_t>(k) > targets.size()) {
    throw std::invalid_argument("kmeans k exceeds target count");
  }

  std::vector<Target> pts = targets;
  std::sort(pts.begin(), pts.end(), [](const Target& a, const Target& b) { return a.id < b.id; });
  const std::size_t n = pts.size();

  Rng rng(seed);
  std::vector<Point> centroids = detail::kmeanspp_seed(pts, k, rng);
  std::vector<int> assign(n, -1);
  Clustering result;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    bool changed = false;
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(detail::nearest_centroid(pts[i].position, centroids));
      if (c != assign[i]) changed = true;
      assign[i] = c;
      ++count[c];
    }

    // Empty-cluster repair: donate the farthest member of the nearest
    // multi-member cluster.
    for (int e = 0; e < k; ++e) {
      while (count[e] == 0) {
        int donor = -1;
        double donor_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          if (c == e || count[c] < 2) continue;
          const double d = detail::sq_dist(centroids[e], centroids[c]);
          if (d < donor_d) {
            donor_d = d;
            donor = c;
          }
        }
        if (donor < 0) throw std::logic_error("kmeans: unrepairable empty cluster");
        std::size_t far_i = n;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (assign[i] != donor) continue;
          const double d = detail::sq_dist(pts[i].position, centroids[donor]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        assign[far_i] = e;
        --count[donor];
        ++count[e];
        changed = true;
      }
    }

    for (int c = 0; c < k; ++c) centroids[c] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      centroids[assign[i]].x += pts[i].position.x;
      centroids[assign[i]].y += pts[i].position.y;
    }
    for (int c = 0; c < k; ++c) {
      centroids[c].x /= static_cast<double>(count[c]);
      centroids[c].y /= static_cast<double>(count[c]);
    }

    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) wcss += detail::sq_dist(pts[i].position, centroids[assign[i]]);
    result.wcss_history.push_back(wcss);
    if (!changed) break;
  }

  result.k = k;
  result.centroids = centroids;
  for (std::size_t i = 0; i < n; ++i) result.assignments[pts[i].id] = assign[i];
  return result;
}

// Single-linkage agglomeration with a distance cutoff: any chain of targets
// whose consecutive gaps stay within merge_radius collapses to one
// representative. merge_radius of zero is the identity.
inline MergedTargetSet truncate_targets(const std::vector<Target>& targets, double merge_radius) {
  if (merge_radius < 0.0) throw std::invalid_argument("merge_radius must be nonnegative");
  std::vector<Target> pts = targets;
  std::sort(pts.begin(), pts.end(), [](const Target& a, const Target& b) { return a.id < b.id; });
  const std::size_t n = pts.size();

  MergedTargetSet out;
  if (merge_radius == 0.0) {
    out.representatives = pts;
    for (const Target& t : pts) out.merge_map[t.id] = t.id;
    return out;
  }

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist(pts[i].position, pts[j].position) <= merge_radius) {
        parent[find(i)] = find(j);
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> groups;  // root -> member indices
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

  for (auto& [root, members] : groups) {
    Target rep;
    rep.id = std::numeric_limits<int>::max();
    rep.position = {0.0, 0.0};
    rep.loiter_radius = 0.0;
    for (std::size_t i : members) {
      rep.id = std::min(rep.id, pts[i].id);
      rep.position.x += pts[i].position.x;
      rep.position.y += pts[i].position.y;
      rep.loiter_radius = std::max(rep.loiter_radius, pts[i].loiter_radius);
    }
    rep.position.x /= static_cast<double>(members.size());
    rep.position.y /= static_cast<double>(members.size());
    out.representatives.push_back(rep);
    for (std::size_t i : members) out.merge_map[pts[i].id] = rep.id;
  }
  std::sort(out.representatives.begin(), out.representatives.end(),
            [](const Target& a, const Target& b) { return a.id < b.id; });
  return out;
}

// Assign one incoming target to the cluster with the nearest centroid.
// Centroids are deliberately not recomputed; ties go to the lowest index.
inline Clustering absorb_target(const Clustering& c, const Target& t) {
  if (c.k < 1 || c.centroids.empty()) {
    throw std::invalid_argument("absorb_target needs a nonempty clustering");
  }
  Clustering out = c;
  out.assignments[t.id] = static_cast<int>(detail::nearest_centroid(t.position, c.centroids));
  return out;
}

}  // namespace quadplan
