// Command-line front end: static allocation, trajectory generation, and the
// three seeded simulation studies. All randomness flows from the scenario or
// --seed value; reruns with the same seed produce byte-identical outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "quadplan/allocation.hpp"
#include "quadplan/scenario.hpp"
#include "quadplan/simharness.hpp"
#include "quadplan/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace quadplan;

namespace {

std::string fmt(double v) { return detail_sim::fmt(v); }

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> merge_radius;
  std::optional<int> entries;
  std::optional<int> segments;
};

Scenario load_scenario(const CommonArgs& args) {
  Scenario sc = parse_scenario(args.scenario_path);
  if (args.seed) sc.seed = *args.seed;
  if (args.merge_radius) sc.alloc.merge_radius = *args.merge_radius;
  if (args.entries) sc.entry_samples = *args.entries;
  if (args.segments) sc.segments = *args.segments;
  return sc;
}

json tour_to_json(const Tour& tour, const StaticAssignment& s, const Depot& depot) {
  json merged = json::object();
  for (const auto& [orig, rep] : s.merged.merge_map) {
    if (std::find(tour.sequence.begin(), tour.sequence.end(), rep) != tour.sequence.end()) {
      merged[std::to_string(rep)].push_back(orig);
    }
  }
  return {{"vehicle_id", tour.vehicle_id},
          {"sequence", tour.sequence},
          {"cost", tour_cost(tour, depot, s.tour_targets)},
          {"merged", merged}};
}

int cmd_allocate(const CommonArgs& args) {
  const Scenario sc = load_scenario(args);
  fs::create_directories(args.out_dir);
  const StaticAssignment s =
      assign_static(sc.targets, sc.fleet_size, sc.depot, sc.seed, sc.alloc);

  for (const Tour& tour : s.allocation.tours) {
    std::ofstream out(fs::path(args.out_dir) /
                      ("tour-" + std::to_string(tour.vehicle_id) + ".json"));
    out << tour_to_json(tour, s, sc.depot).dump(2) << '\n';
  }

  std::ofstream csv(fs::path(args.out_dir) / "allocation-summary.csv");
  csv << "vehicle_id,targets,tour_cost\n";
  double total = 0.0;
  std::size_t covered = 0;
  for (const Tour& tour : s.allocation.tours) {
    const double cost = tour_cost(tour, sc.depot, s.tour_targets);
    total += cost;
    covered += tour.sequence.size();
    csv << tour.vehicle_id << ',' << tour.sequence.size() << ',' << fmt(cost) << '\n';
  }
  csv << "total," << covered << ',' << fmt(total) << '\n';
  std::printf("allocated %zu targets (%zu after merging) to %d vehicles, team cost %.3f\n",
              sc.targets.size(), s.tour_targets.size(), sc.fleet_size, total);
  return 0;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  out << "time,x,y,vx,vy,phase\n";
  for (const auto& s : traj.samples) {
    out << fmt(s.t) << ',' << fmt(s.state.position.x) << ',' << fmt(s.state.position.y) << ','
        << fmt(s.state.velocity.x) << ',' << fmt(s.state.velocity.y) << ','
        << to_string(s.phase) << '\n';
  }
}

int cmd_trajectory(const CommonArgs& args) {
  const Scenario sc = load_scenario(args);
  fs::create_directories(args.out_dir);
  const StaticAssignment s =
      assign_static(sc.targets, sc.fleet_size, sc.depot, sc.seed, sc.alloc);

  json overlay = json::array();
  json failures = json::array();
  for (const Tour& tour : s.allocation.tours) {
    json entry{{"vehicle_id", tour.vehicle_id}};
    json polyline = json::array();
    polyline.push_back({sc.depot.position.x, sc.depot.position.y});
    for (int id : tour.sequence) {
      const Target& t = s.tour_targets.at(id);
      polyline.push_back({t.position.x, t.position.y});
    }
    entry["tour"] = polyline;
    try {
      const Trajectory traj = tour_trajectory(tour, sc.depot, s.tour_targets, sc.quad,
                                              sc.entry_samples, sc.segments);
      write_trajectory_csv(fs::path(args.out_dir) /
                               ("trajectory-" + std::to_string(tour.vehicle_id) + ".csv"),
                           traj);
      json path = json::array();
      for (const auto& sample : traj.samples) {
        path.push_back({sample.state.position.x, sample.state.position.y});
      }
      entry["path"] = path;
      entry["flight_time"] = traj.total_time;
      entry["flight_length"] = traj.total_length;
      entry["tour_cost"] = tour_cost(tour, sc.depot, s.tour_targets);
    } catch (const TransitionSolveError& err) {
      failures.push_back({{"vehicle_id", tour.vehicle_id}, {"error", err.what()}});
    }
    overlay.push_back(entry);
  }
  std::ofstream(fs::path(args.out_dir) / "overlay.json") << overlay.dump(2) << '\n';
  if (!failures.empty()) {
    std::ofstream(fs::path(args.out_dir) / "failures.json") << failures.dump(2) << '\n';
    std::fprintf(stderr, "%zu vehicle(s) failed to solve; see failures.json\n", failures.size());
    return 1;
  }
  std::printf("wrote %zu trajectories to %s\n", s.allocation.tours.size(),
              args.out_dir.c_str());
  return 0;
}

struct StudyArgs {
  std::string kind;
  std::string out_dir;
  std::string scenario_path;
  std::uint64_t seed = 0;
  int trials = 0;  // 0: keep study default
  int threads = 1;
  std::vector<int> ns, ms;
  int arrivals = -1;
  std::optional<double> merge_radius;
  std::optional<int> entries;
  std::optional<int> segments;
};

int cmd_study(const StudyArgs& args) {
  ExperimentConfig cfg;
  if (args.kind == "cost-vs-fleet") {
    cfg.kind = StudyKind::cost_vs_fleet;
  } else if (args.kind == "holonomic-ratio") {
    cfg.kind = StudyKind::holonomic_ratio;
    cfg.trials = 200;
  } else if (args.kind == "dynamic-ratio") {
    cfg.kind = StudyKind::dynamic_ratio;
    cfg.target_counts = {40};
    cfg.fleet_sizes = {4};
  } else {
    std::fprintf(stderr, "unknown study kind \"%s\"\n", args.kind.c_str());
    return 1;
  }
  if (!args.scenario_path.empty()) {
    const Scenario sc = parse_scenario(args.scenario_path);
    cfg.quad = sc.quad;
    cfg.alloc = sc.alloc;
    cfg.entry_samples = sc.entry_samples;
    cfg.segments = sc.segments;
  }
  cfg.master_seed = args.seed;
  if (args.trials > 0) cfg.trials = args.trials;
  cfg.threads = args.threads;
  if (!args.ns.empty()) cfg.target_counts = args.ns;
  if (!args.ms.empty()) cfg.fleet_sizes = args.ms;
  if (args.arrivals >= 0) cfg.arrival_count = args.arrivals;
  if (args.merge_radius) cfg.alloc.merge_radius = *args.merge_radius;
  if (args.entries) cfg.entry_samples = *args.entries;
  if (args.segments) cfg.segments = *args.segments;

  switch (cfg.kind) {
    case StudyKind::cost_vs_fleet: {
      const auto result = run_cost_study(cfg, args.out_dir);
      for (const auto& cell : result.cells) {
        std::printf("n=%d m=%d mean cost/vehicle %.2f\n", cell.n, cell.m,
                    cell.mean_cost_per_vehicle);
      }
      break;
    }
    case StudyKind::holonomic_ratio: {
      const auto result = run_holonomic_study(cfg, args.out_dir);
      std::printf("ratio mean %.3f min %.3f max %.3f (%d failures, %d excluded)\n",
                  result.mean_ratio, result.min_ratio, result.max_ratio, result.failures,
                  result.excluded);
      break;
    }
    case StudyKind::dynamic_ratio: {
      const auto result = run_dynamic_study(cfg, args.out_dir);
      std::printf("n=%d m=%d r=%d mean rho %.4f\n", cfg.target_counts.front(),
                  cfg.fleet_sizes.front(), cfg.arrival_count, result.mean_rho);
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-vehicle loiter-aware tour planning toolkit"};
  app.require_subcommand(1);

  CommonArgs alloc_args;
  auto* allocate = app.add_subcommand("allocate", "Assign targets to vehicles and write tours");
  allocate->add_option("--scenario", alloc_args.scenario_path, "Scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  allocate->add_option("--out", alloc_args.out_dir, "Output directory")->required();
  allocate->add_option("--seed", alloc_args.seed, "Override the scenario seed");
  allocate->add_option("--merge-radius", alloc_args.merge_radius,
                       "Target merge cutoff in meters");

  CommonArgs traj_args;
  auto* trajectory =
      app.add_subcommand("trajectory", "Generate flight trajectories for the allocation");
  trajectory->add_option("--scenario", traj_args.scenario_path, "Scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  trajectory->add_option("--out", traj_args.out_dir, "Output directory")->required();
  trajectory->add_option("--seed", traj_args.seed, "Override the scenario seed");
  trajectory->add_option("--merge-radius", traj_args.merge_radius,
                         "Target merge cutoff in meters");
  trajectory->add_option("--entries", traj_args.entries, "Entry candidates per circle");
  trajectory->add_option("--segments", traj_args.segments, "Collocation segments per transit");

  StudyArgs study_args;
  auto* study = app.add_subcommand("study", "Run a seeded Monte Carlo study");
  study
      ->add_option("kind", study_args.kind,
                   "One of cost-vs-fleet, holonomic-ratio, dynamic-ratio")
      ->required();
  study->add_option("--out", study_args.out_dir, "Output directory")->required();
  study->add_option("--scenario", study_args.scenario_path,
                    "Optional scenario file supplying quad parameters")
      ->check(CLI::ExistingFile);
  study->add_option("--seed", study_args.seed, "Master seed");
  study->add_option("--trials", study_args.trials, "Trials per configuration");
  study->add_option("--threads", study_args.threads, "Worker threads");
  study->add_option("--n", study_args.ns, "Target counts (repeatable)");
  study->add_option("--m", study_args.ms, "Fleet sizes (repeatable)");
  study->add_option("--arrivals", study_args.arrivals, "New targets in the dynamic study");
  study->add_option("--merge-radius", study_args.merge_radius, "Target merge cutoff in meters");
  study->add_option("--entries", study_args.entries, "Entry candidates per circle");
  study->add_option("--segments", study_args.segments, "Collocation segments per transit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (allocate->parsed()) return cmd_allocate(alloc_args);
    if (trajectory->parsed()) return cmd_trajectory(traj_args);
    if (study->parsed()) return cmd_study(study_args);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 1;
}
