#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "quadplan/clustering.hpp"
#include "quadplan/geometry.hpp"
#include "quadplan/rng.hpp"
#include "quadplan/tsp.hpp"

namespace quadplan {

struct AllocationConfig {
  // Cutoff for merging near-coincident targets. Negative selects the default:
  // twice the smallest loiter radius in the cluster (circles that certainly
  // overlap collapse to one scan).
  double merge_radius = -1.0;
  KMeansConfig kmeans;
};

enum class VehicleStatus { at_depot, touring, idle_at_last_target };

struct VehicleState {
  Point position;
  VehicleStatus status = VehicleStatus::at_depot;
};

struct FleetState {
  std::vector<VehicleState> vehicles;
};

// Timed batch of target arrivals and removals.
struct ArrivalEvent {
  double time = 0.0;
  std::vector<Target> added;
  std::vector<int> removed_ids;
};

namespace detail {

inline double resolve_merge_radius(const AllocationConfig& cfg,
                                   const std::vector<Target>& members) {
  if (cfg.merge_radius >= 0.0) return cfg.merge_radius;
  double r = std::numeric_limits<double>::infinity();
  for (const Target& t : members) r = std::min(r, t.loiter_radius);
  return members.empty() ? 0.0 : 2.0 * r;
}

// Tour for one cluster: merge near-coincident members, run Christofides on
// the representatives, open the cycle at the node nearest the anchor.
inline Tour build_cluster_tour(int vehicle_id, const std::vector<Target>& members,
                               Point anchor, const AllocationConfig& cfg,
                               MergedTargetSet& merged_out) {
  Tour tour;
  tour.vehicle_id = vehicle_id;
  if (members.empty()) {
    merged_out = {};
    return tour;
  }
  merged_out = truncate_targets(members, resolve_merge_radius(cfg, members));
  const TargetMap reps = make_target_map(merged_out.representatives);
  if (merged_out.representatives.size() == 1) {
    tour.sequence = {merged_out.representatives.front().id};
    return tour;
  }
  const auto graph = MetricGraph::from_targets(merged_out.representatives);
  const TspTour cycle = christofides(graph);
  tour.sequence = rotate_tour_to_nearest(cycle.order, anchor, reps);
  return tour;
}

}  // namespace detail

// Static assignment result. Tours reference representative ids; tour_targets
// resolves them and merged maps every original target to its representative.
struct StaticAssignment {
  Allocation allocation;
  Clustering clustering;
  MergedTargetSet merged;
  TargetMap tour_targets;
};

// Static depot-returning assignment: K-means partition, per-cluster
// truncation and Christofides tour, each tour opened at the depot-nearest
// node. Deterministic for a fixed seed.
inline StaticAssignment assign_static(const std::vector<Target>& targets, int fleet_size,
                                      const Depot& depot, std::uint64_t seed,
                                      const AllocationConfig& cfg = {}) {
  if (fleet_size < 1) throw std::invalid_argument("fleet size must be at least 1");
  if (targets.empty()) throw std::invalid_argument("no targets to assign");
  if (static_cast<std::size_t>(fleet_size) > targets.size()) {
    throw std::invalid_argument("more vehicles than targets: empty clusters are unrepairable");
  }

  StaticAssignment out;
  out.clustering = kmeans(targets, fleet_size, seed, cfg.kmeans);

  std::vector<std::vector<Target>> members(fleet_size);
  for (const Target& t : targets) members[out.clustering.assignments.at(t.id)].push_back(t);
  for (auto& m : members) {
    std::sort(m.begin(), m.end(), [](const Target& a, const Target& b) { return a.id < b.id; });
  }

  for (int q = 0; q < fleet_size; ++q) {
    MergedTargetSet merged_q;
    Tour tour = detail::build_cluster_tour(q, members[q], depot.position, cfg, merged_q);
    out.allocation.tours.push_back(std::move(tour));
    for (const Target& rep : merged_q.representatives) out.tour_targets.emplace(rep.id, rep);
    out.merged.representatives.insert(out.merged.representatives.end(),
                                      merged_q.representatives.begin(),
                                      merged_q.representatives.end());
    out.merged.merge_map.insert(merged_q.merge_map.begin(), merged_q.merge_map.end());
  }
  std::sort(out.merged.representatives.begin(), out.merged.representatives.end(),
            [](const Target& a, const Target& b) { return a.id < b.id; });
  return out;
}

// One planning iteration of the dynamic assigner.
struct IterationResult {
  Allocation allocation;
  TargetMap tour_targets;             // representatives referenced by the tours
  std::map<int, int> merge_map;       // original id -> representative id, this iteration
  std::vector<Point> start_positions; // where each vehicle began the iteration
  double cost = 0.0;                  // sum of continuation tour costs
};

// Absorb-and-continue assignment: clusters are computed once up front and
// frozen; arrivals join their nearest cluster, removals drop unvisited
// targets, and each iteration tours whatever is still unvisited starting from
// the vehicle's current position (the depot on the first iteration only).
class DynamicAssigner {
 public:
  DynamicAssigner(const std::vector<Target>& initial, int fleet_size, const Depot& depot,
                  std::uint64_t seed, const AllocationConfig& cfg = {})
      : depot_(depot), cfg_(cfg), fleet_size_(fleet_size) {
    if (fleet_size < 1) throw std::invalid_argument("fleet size must be at least 1");
    if (initial.empty()) throw std::invalid_argument("no targets to assign");
    if (static_cast<std::size_t>(fleet_size) > initial.size()) {
      throw std::invalid_argument("more vehicles than targets: empty clusters are unrepairable");
    }
    targets_ = make_target_map(initial);
    clustering_ = kmeans(initial, fleet_size, seed, cfg.kmeans);
    fleet_.vehicles.assign(fleet_size, VehicleState{depot.position, VehicleStatus::at_depot});
  }

  // Run one Algorithm-3 iteration over the pending events.
  IterationResult step(const std::vector<ArrivalEvent>& pending = {}) {
    for (const ArrivalEvent& ev : pending) {
      for (int id : ev.removed_ids) {
        if (visited_.count(id) != 0) continue;  // already scanned; nothing to undo
        targets_.erase(id);
        clustering_.assignments.erase(id);
      }
      for (const Target& t : ev.added) {
        if (!targets_.emplace(t.id, t).second) {
          throw std::invalid_argument("arriving target reuses id " + std::to_string(t.id));
        }
        clustering_ = absorb_target(clustering_, t);
      }
    }

    IterationResult result;
    std::vector<std::vector<Target>> members(fleet_size_);
    for (const auto& [id, t] : targets_) {
      if (visited_.count(id) == 0) members[clustering_.assignments.at(id)].push_back(t);
    }

    for (int q = 0; q < fleet_size_; ++q) {
      const Point anchor = iteration_ == 0 ? depot_.position : fleet_.vehicles[q].position;
      result.start_positions.push_back(anchor);
      MergedTargetSet merged_q;
      Tour tour = detail::build_cluster_tour(q, members[q], anchor, cfg_, merged_q);
      for (const Target& rep : merged_q.representatives) result.tour_targets.emplace(rep.id, rep);
      result.merge_map.insert(merged_q.merge_map.begin(), merged_q.merge_map.end());
      if (!tour.sequence.empty()) {
        result.cost += tour_cost_from(anchor, tour, result.tour_targets);
        const Target& last = result.tour_targets.at(tour.sequence.back());
        fleet_.vehicles[q] = {last.position, VehicleStatus::idle_at_last_target};
        for (const Target& t : members[q]) visited_.insert(t.id);
      }
      result.allocation.tours.push_back(std::move(tour));
    }
    ++iteration_;
    return result;
  }

  const FleetState& fleet() const { return fleet_; }
  const Clustering& clustering() const { return clustering_; }
  const TargetMap& targets() const { return targets_; }
  const std::set<int>& visited() const { return visited_; }
  int iteration() const { return iteration_; }

 private:
  Depot depot_;
  AllocationConfig cfg_;
  int fleet_size_;
  TargetMap targets_;
  Clustering clustering_;
  std::set<int> visited_;
  FleetState fleet_;
  int iteration_ = 0;
};

// Cost of handling arrivals by re-running the static assignment: first tours,
// straight return legs to the depot, then a fresh assignment over the new
// targets only.
inline double procedure1_total_cost(const std::vector<Target>& initial,
                                    const std::vector<Target>& arrivals, int fleet_size,
                                    const Depot& depot, std::uint64_t seed,
                                    const AllocationConfig& cfg = {}) {
  const StaticAssignment run1 =
      assign_static(initial, fleet_size, depot, derive_stream(seed, 0), cfg);
  double total = team_cost(run1.allocation, depot, run1.tour_targets);
  for (const Tour& tour : run1.allocation.tours) {
    if (!tour.sequence.empty()) {
      total += dist(run1.tour_targets.at(tour.sequence.back()).position, depot.position);
    }
  }
  if (arrivals.empty()) return total;

  const int k2 = std::min<int>(fleet_size, static_cast<int>(arrivals.size()));
  const StaticAssignment run2 = assign_static(arrivals, k2, depot, derive_stream(seed, 1), cfg);
  return total + team_cost(run2.allocation, depot, run2.tour_targets);
}

// Cost of handling arrivals by absorption: identical first tours, no depot
// returns, second iteration starts from each vehicle's final target.
inline double procedure2_total_cost(const std::vector<Target>& initial,
                                    const std::vector<Target>& arrivals, int fleet_size,
                                    const Depot& depot, std::uint64_t seed,
                                    const AllocationConfig& cfg = {}) {
  DynamicAssigner assigner(initial, fleet_size, depot, derive_stream(seed, 0), cfg);
  double total = assigner.step().cost;
  if (!arrivals.empty()) {
    ArrivalEvent ev;
    ev.added = arrivals;
    total += assigner.step({ev}).cost;
  }
  return total;
}

}  // namespace quadplan
