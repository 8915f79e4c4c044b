#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace quadplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Planar position in meters.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point p, Vec2 v) { return {p.x + v.x, p.y + v.y}; }

inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Euclidean distance between two points.
inline double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// A point of interest with its standoff circle. One full revolution of the
// circle yields a 360-degree scan of the target.
struct Target {
  int id = 0;
  Point position;
  double loiter_radius = 1.0;
};

struct Depot {
  Point position;
};

// Ordered visiting sequence (target ids) for one vehicle. The vehicle flies
// depot -> sequence[0] -> ... -> sequence[k-1] and does not return.
struct Tour {
  int vehicle_id = 0;
  std::vector<int> sequence;
};

// One tour per vehicle; together the tours cover every target exactly once.
struct Allocation {
  std::vector<Tour> tours;
};

using TargetMap = std::map<int, Target>;

inline TargetMap make_target_map(const std::vector<Target>& targets) {
  TargetMap map;
  for (const Target& t : targets) {
    if (!map.emplace(t.id, t).second) {
      throw std::invalid_argument("duplicate target id " + std::to_string(t.id));
    }
  }
  return map;
}

inline const Target& resolve_target(const TargetMap& targets, int id) {
  auto it = targets.find(id);
  if (it == targets.end()) {
    throw std::out_of_range("unresolved target id " + std::to_string(id));
  }
  return it->second;
}

// Distance flown around a target for a full 360-degree scan.
inline double loiter_arc_length(const Target& t) {
  return 2.0 * std::numbers::pi * t.loiter_radius;
}

// Path cost of a tour started from an arbitrary point: leg to the first
// target, legs between consecutive targets, plus one full loiter per target.
// Legs are measured center-to-center so the distance table stays metric.
inline double tour_cost_from(Point start, const Tour& tour, const TargetMap& targets) {
  if (tour.sequence.empty()) return 0.0;
  double cost = dist(start, resolve_target(targets, tour.sequence.front()).position);
  for (std::size_t j = 0; j + 1 < tour.sequence.size(); ++j) {
    cost += dist(resolve_target(targets, tour.sequence[j]).position,
                 resolve_target(targets, tour.sequence[j + 1]).position);
  }
  for (int id : tour.sequence) cost += loiter_arc_length(resolve_target(targets, id));
  return cost;
}

inline double tour_cost(const Tour& tour, const Depot& depot, const TargetMap& targets) {
  return tour_cost_from(depot.position, tour, targets);
}

// Team cost: plain sum of tour costs in vehicle order.
inline double team_cost(const Allocation& alloc, const Depot& depot, const TargetMap& targets) {
  double total = 0.0;
  for (const Tour& tour : alloc.tours) total += tour_cost(tour, depot, targets);
  return total;
}

}  // namespace quadplan
