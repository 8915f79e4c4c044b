#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quadplan/allocation.hpp"
#include "quadplan/dynamics.hpp"
#include "quadplan/geometry.hpp"

namespace quadplan {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a planning run needs: fleet, world, timed events, and solver
// overrides. Parsed strictly; unknown keys are rejected.
struct Scenario {
  int version = 1;
  Depot depot;
  QuadParams quad;
  int fleet_size = 1;
  std::vector<Target> targets;
  std::vector<ArrivalEvent> events;
  std::uint64_t seed = 0;
  AllocationConfig alloc;
  int entry_samples = 8;
  int segments = 20;
};

namespace detail_scn {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& context, const std::string& message) {
  throw ScenarioError(context + ": " + message);
}

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& context) {
  for (const auto& [key, _] : obj.items()) {
    if (allowed.count(key) == 0) fail(context, "unknown key \"" + key + "\"");
  }
}

inline double require_number(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key)) fail(context, std::string("missing field \"") + key + "\"");
  if (!obj[key].is_number()) fail(context, std::string("field \"") + key + "\" must be a number");
  return obj[key].get<double>();
}

inline double optional_number(const json& obj, const char* key, double fallback,
                              const std::string& context) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(context, std::string("field \"") + key + "\" must be a number");
  return obj[key].get<double>();
}

inline Point parse_point(const json& obj, const std::string& context) {
  if (!obj.is_object()) fail(context, "must be an object with x and y");
  reject_unknown_keys(obj, {"x", "y"}, context);
  const Point p{require_number(obj, "x", context), require_number(obj, "y", context)};
  if (!is_finite(p)) fail(context, "coordinates must be finite");
  return p;
}

inline Target parse_target(const json& obj, const std::string& context) {
  if (!obj.is_object()) fail(context, "must be an object");
  reject_unknown_keys(obj, {"id", "x", "y", "loiter_radius"}, context);
  Target t;
  const double id = require_number(obj, "id", context);
  if (id != static_cast<int>(id)) fail(context, "id must be an integer");
  t.id = static_cast<int>(id);
  t.position = {require_number(obj, "x", context), require_number(obj, "y", context)};
  if (!is_finite(t.position)) fail(context, "coordinates must be finite");
  t.loiter_radius = optional_number(obj, "loiter_radius", 3.0, context);
  if (!(t.loiter_radius > 0.0)) fail(context, "loiter_radius must be positive");
  return t;
}

inline int line_of_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace detail_scn

inline Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  using detail_scn::fail;
  using nlohmann::json;

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ScenarioError(origin + ":" +
                        std::to_string(detail_scn::line_of_offset(text, err.byte)) +
                        ": malformed JSON: " + err.what());
  }
  if (!root.is_object()) fail(origin, "scenario must be a JSON object");
  detail_scn::reject_unknown_keys(
      root, {"version", "depot", "quad", "fleet_size", "targets", "events", "seed", "config"},
      origin);

  Scenario sc;
  const double version = detail_scn::require_number(root, "version", origin);
  if (version != 1) fail(origin, "unsupported scenario version");
  sc.version = 1;

  if (!root.contains("depot")) fail(origin, "missing field \"depot\"");
  sc.depot.position = detail_scn::parse_point(root["depot"], origin + ".depot");

  const double m = detail_scn::require_number(root, "fleet_size", origin);
  if (m != static_cast<int>(m) || m < 1) fail(origin, "fleet_size must be a positive integer");
  sc.fleet_size = static_cast<int>(m);

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) fail(origin, "seed must be a nonnegative integer");
    sc.seed = root["seed"].get<std::uint64_t>();
  }

  if (root.contains("quad")) {
    const json& q = root["quad"];
    const std::string ctx = origin + ".quad";
    if (!q.is_object()) fail(ctx, "must be an object");
    detail_scn::reject_unknown_keys(q, {"mass", "max_thrust", "drag_coeff", "gravity"}, ctx);
    sc.quad.mass = detail_scn::optional_number(q, "mass", sc.quad.mass, ctx);
    sc.quad.max_thrust = detail_scn::optional_number(q, "max_thrust", sc.quad.max_thrust, ctx);
    sc.quad.drag_coeff = detail_scn::optional_number(q, "drag_coeff", sc.quad.drag_coeff, ctx);
    sc.quad.gravity = detail_scn::optional_number(q, "gravity", sc.quad.gravity, ctx);
    try {
      validate(sc.quad);
    } catch (const std::invalid_argument& err) {
      fail(ctx, err.what());
    }
  }

  if (!root.contains("targets") || !root["targets"].is_array() || root["targets"].empty()) {
    fail(origin, "field \"targets\" must be a nonempty array");
  }
  std::set<int> ids;
  int index = 0;
  for (const auto& item : root["targets"]) {
    const Target t =
        detail_scn::parse_target(item, origin + ".targets[" + std::to_string(index++) + "]");
    if (!ids.insert(t.id).second) {
      fail(origin, "duplicate target id " + std::to_string(t.id));
    }
    sc.targets.push_back(t);
  }

  if (root.contains("events")) {
    if (!root["events"].is_array()) fail(origin, "field \"events\" must be an array");
    double prev_time = -std::numeric_limits<double>::infinity();
    index = 0;
    for (const auto& item : root["events"]) {
      const std::string ctx = origin + ".events[" + std::to_string(index++) + "]";
      if (!item.is_object()) fail(ctx, "must be an object");
      detail_scn::reject_unknown_keys(item, {"time", "add", "remove"}, ctx);
      ArrivalEvent ev;
      ev.time = detail_scn::require_number(item, "time", ctx);
      if (ev.time < 0.0) fail(ctx, "time must be nonnegative");
      if (ev.time < prev_time) fail(origin, "events must be sorted by time");
      prev_time = ev.time;
      if (item.contains("add")) {
        if (!item["add"].is_array()) fail(ctx, "\"add\" must be an array");
        int tindex = 0;
        for (const auto& titem : item["add"]) {
          const Target t = detail_scn::parse_target(
              titem, ctx + ".add[" + std::to_string(tindex++) + "]");
          if (!ids.insert(t.id).second) fail(ctx, "duplicate target id " + std::to_string(t.id));
          ev.added.push_back(t);
        }
      }
      if (item.contains("remove")) {
        if (!item["remove"].is_array()) fail(ctx, "\"remove\" must be an array");
        for (const auto& ritem : item["remove"]) {
          if (!ritem.is_number_integer()) fail(ctx, "\"remove\" entries must be integer ids");
          ev.removed_ids.push_back(ritem.get<int>());
        }
      }
      sc.events.push_back(ev);
    }
  }

  if (root.contains("config")) {
    const json& c = root["config"];
    const std::string ctx = origin + ".config";
    if (!c.is_object()) fail(ctx, "must be an object");
    detail_scn::reject_unknown_keys(
        c, {"merge_radius", "kmeans_max_iterations", "entry_samples", "segments"}, ctx);
    sc.alloc.merge_radius =
        detail_scn::optional_number(c, "merge_radius", sc.alloc.merge_radius, ctx);
    sc.alloc.kmeans.max_iterations = static_cast<int>(detail_scn::optional_number(
        c, "kmeans_max_iterations", sc.alloc.kmeans.max_iterations, ctx));
    if (sc.alloc.kmeans.max_iterations < 1) fail(ctx, "kmeans_max_iterations must be positive");
    sc.entry_samples =
        static_cast<int>(detail_scn::optional_number(c, "entry_samples", sc.entry_samples, ctx));
    if (sc.entry_samples < 2) fail(ctx, "entry_samples must be at least 2");
    sc.segments = static_cast<int>(detail_scn::optional_number(c, "segments", sc.segments, ctx));
    if (sc.segments < 10) fail(ctx, "segments must be at least 10");
  }
  return sc;
}

inline Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path.filename().string());
}

}  // namespace quadplan
