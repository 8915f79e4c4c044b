#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "quadplan/allocation.hpp"
#include "quadplan/dynamics.hpp"
#include "quadplan/geometry.hpp"
#include "quadplan/rng.hpp"
#include "quadplan/trajectory.hpp"

namespace quadplan {

enum class StudyKind { cost_vs_fleet, holonomic_ratio, dynamic_ratio };

inline const char* to_string(StudyKind k) {
  switch (k) {
    case StudyKind::cost_vs_fleet: return "cost-vs-fleet";
    case StudyKind::holonomic_ratio: return "holonomic-ratio";
    case StudyKind::dynamic_ratio: return "dynamic-ratio";
  }
  return "unknown";
}

struct Region {
  double min_x = -1000.0, max_x = 1000.0;
  double min_y = -1000.0, max_y = 1000.0;
};

struct ExperimentConfig {
  StudyKind kind = StudyKind::cost_vs_fleet;
  std::vector<int> target_counts{10, 20, 40};  // n values; cost study crosses them with m
  std::vector<int> fleet_sizes{2, 4, 8};       // m values; other studies use the first entry
  int arrival_count = 16;                      // r, dynamic study
  Region region;
  int trials = 200;
  std::uint64_t master_seed = 0;
  double loiter_radius = 3.0;  // radius of synthetic targets
  QuadParams quad;
  int entry_samples = 8;
  int segments = 20;
  double min_transition_gap = 5.0;  // holonomic study: exit-to-circle distance range
  double max_transition_gap = 60.0;
  int threads = 1;
  AllocationConfig alloc;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (!(cfg.region.min_x < cfg.region.max_x) || !(cfg.region.min_y < cfg.region.max_y)) {
    throw std::invalid_argument("region bounds are malformed");
  }
  if (cfg.target_counts.empty() || cfg.fleet_sizes.empty()) {
    throw std::invalid_argument("need at least one n and one m");
  }
  for (int n : cfg.target_counts) {
    if (n < 1) throw std::invalid_argument("target count must be positive");
  }
  for (int m : cfg.fleet_sizes) {
    if (m < 1) throw std::invalid_argument("fleet size must be positive");
  }
  if (cfg.arrival_count < 0) throw std::invalid_argument("arrival count must be nonnegative");
  if (!(cfg.loiter_radius > 0.0)) throw std::invalid_argument("loiter radius must be positive");
  if (cfg.kind == StudyKind::holonomic_ratio) {
    if (!(cfg.min_transition_gap > 0.0) || !(cfg.max_transition_gap >= cfg.min_transition_gap)) {
      throw std::invalid_argument("transition gap range is malformed");
    }
    if (!(cfg.quad.drag_coeff > 0.0)) {
      throw std::invalid_argument("holonomic study needs positive drag");
    }
  }
  validate(cfg.quad);
}

// Per-trial record; fields beyond the study at hand stay zero.
struct TrialResult {
  std::vector<double> per_vehicle_costs;
  double team_cost = 0.0;
  double proc1 = 0.0;
  double proc2 = 0.0;
  double rho = 0.0;
  double transition_ratio = 0.0;
  double initial_distance = 0.0;
  double quad_time = 0.0;
  double holonomic_time = 0.0;
  bool solved = true;
};

namespace detail_sim {

// %.17g round-trips doubles exactly, keeping per-trial records authoritative.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Deterministic indexed work pool: results land in preassigned slots, so the
// thread count never changes any output byte.
template <typename Fn>
void run_indexed(int count, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i; (i = next.fetch_add(1)) < count;) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

inline std::filesystem::path study_file(const std::filesystem::path& out_dir, StudyKind kind,
                                        int n, int m, std::uint64_t seed, const char* ext) {
  return out_dir / (std::string(to_string(kind)) + "-" + std::to_string(n) + "-" +
                    std::to_string(m) + "-" + std::to_string(seed) + ext);
}

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
  return {
      {"kind", to_string(cfg.kind)},
      {"target_counts", cfg.target_counts},
      {"fleet_sizes", cfg.fleet_sizes},
      {"arrival_count", cfg.arrival_count},
      {"region", {{"min_x", cfg.region.min_x}, {"max_x", cfg.region.max_x},
                  {"min_y", cfg.region.min_y}, {"max_y", cfg.region.max_y}}},
      {"trials", cfg.trials},
      {"master_seed", cfg.master_seed},
      {"loiter_radius", cfg.loiter_radius},
      {"quad", {{"mass", cfg.quad.mass}, {"max_thrust", cfg.quad.max_thrust},
                {"drag_coeff", cfg.quad.drag_coeff}, {"gravity", cfg.quad.gravity}}},
      {"entry_samples", cfg.entry_samples},
      {"segments", cfg.segments},
      {"min_transition_gap", cfg.min_transition_gap},
      {"max_transition_gap", cfg.max_transition_gap},
  };
}

inline std::vector<Target> sample_targets(Rng& rng, int count, const Region& region,
                                          double radius, int first_id = 0) {
  std::vector<Target> ts;
  ts.reserve(count);
  for (int i = 0; i < count; ++i) {
    ts.push_back({first_id + i,
                  {rng.uniform(region.min_x, region.max_x), rng.uniform(region.min_y, region.max_y)},
                  radius});
  }
  return ts;
}

}  // namespace detail_sim

// ---------------------------------------------------------------------------
// Cost study: mean per-vehicle Eq.-1 cost across the (n, m) grid.

struct CostCell {
  int n = 0;
  int m = 0;
  double mean_cost_per_vehicle = 0.0;
  double min_cost_per_vehicle = 0.0;
  double max_cost_per_vehicle = 0.0;
};

struct CostStudyResult {
  std::vector<CostCell> cells;
  std::vector<std::filesystem::path> trial_files;
  std::filesystem::path summary_file;
};

inline CostStudyResult run_cost_study(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir) {
  validate(cfg);
  std::filesystem::create_directories(out_dir);
  const Depot depot{{0.0, 0.0}};
  CostStudyResult result;
  nlohmann::json table = nlohmann::json::array();

  for (int n : cfg.target_counts) {
    for (int m : cfg.fleet_sizes) {
      if (m > n) continue;  // unassignable cell
      std::vector<TrialResult> trials(cfg.trials);
      detail_sim::run_indexed(cfg.trials, cfg.threads, [&](int i) {
        Rng rng(derive_stream(cfg.master_seed, static_cast<std::uint64_t>(i) * 1000003 + n * 97 + m));
        const auto targets = detail_sim::sample_targets(rng, n, cfg.region, cfg.loiter_radius);
        const auto s = assign_static(targets, m, depot, rng.next_u64(), cfg.alloc);
        TrialResult& tr = trials[i];
        for (const Tour& tour : s.allocation.tours) {
          tr.per_vehicle_costs.push_back(tour_cost(tour, depot, s.tour_targets));
          tr.team_cost += tr.per_vehicle_costs.back();
        }
      });

      const auto csv_path =
          detail_sim::study_file(out_dir, cfg.kind, n, m, cfg.master_seed, ".csv");
      std::ofstream csv(csv_path);
      csv << "trial,team_cost,cost_per_vehicle,min_vehicle_cost,max_vehicle_cost\n";
      CostCell cell{n, m, 0.0, std::numeric_limits<double>::infinity(), 0.0};
      for (int i = 0; i < cfg.trials; ++i) {
        const TrialResult& tr = trials[i];
        const double per = tr.team_cost / m;
        const auto [lo, hi] =
            std::minmax_element(tr.per_vehicle_costs.begin(), tr.per_vehicle_costs.end());
        csv << i << ',' << detail_sim::fmt(tr.team_cost) << ',' << detail_sim::fmt(per) << ','
            << detail_sim::fmt(*lo) << ',' << detail_sim::fmt(*hi) << '\n';
        cell.mean_cost_per_vehicle += per;
        cell.min_cost_per_vehicle = std::min(cell.min_cost_per_vehicle, per);
        cell.max_cost_per_vehicle = std::max(cell.max_cost_per_vehicle, per);
      }
      cell.mean_cost_per_vehicle /= cfg.trials;
      result.cells.push_back(cell);
      result.trial_files.push_back(csv_path);
      table.push_back({{"n", n},
                       {"m", m},
                       {"mean_cost_per_vehicle", cell.mean_cost_per_vehicle},
                       {"min_cost_per_vehicle", cell.min_cost_per_vehicle},
                       {"max_cost_per_vehicle", cell.max_cost_per_vehicle}});
    }
  }

  nlohmann::json aggregate{{"config", detail_sim::config_echo(cfg)}, {"table", table}};
  result.summary_file =
      out_dir / (std::string(to_string(cfg.kind)) + "-summary-" + std::to_string(cfg.master_seed) + ".json");
  std::ofstream(result.summary_file) << aggregate.dump(2) << '\n';
  return result;
}

// ---------------------------------------------------------------------------
// Holonomic study: transition-phase time of the quad against a straight-line
// vehicle flying at the sustainable straight-flight speed to the same entry
// point. That speed upper-bounds anything the quad can reach, so the ratio is
// at least one by construction.

struct HolonomicBin {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  double avg = 0.0, max = 0.0, min = 0.0;
};

struct HolonomicStudyResult {
  std::vector<TrialResult> trials;
  std::vector<HolonomicBin> bins;
  double mean_ratio = 0.0, max_ratio = 0.0, min_ratio = 0.0;
  int failures = 0;  // candidate solves that never converged
  int excluded = 0;  // degenerate zero-distance instances
  std::filesystem::path trial_file, aggregate_file;
};

inline HolonomicStudyResult run_holonomic_study(const ExperimentConfig& cfg,
                                                const std::filesystem::path& out_dir) {
  validate(cfg);
  std::filesystem::create_directories(out_dir);
  HolonomicStudyResult result;
  result.trials.resize(cfg.trials);
  const double v_exit = v_max(cfg.quad, cfg.loiter_radius);
  const double v_hol = v_straight_bound(cfg.quad);

  detail_sim::run_indexed(cfg.trials, cfg.threads, [&](int i) {
    Rng rng(derive_stream(cfg.master_seed, 0x484f4c4fULL + i));
    TrialResult& tr = result.trials[i];
    const Point center{rng.uniform(cfg.region.min_x, cfg.region.max_x),
                       rng.uniform(cfg.region.min_y, cfg.region.max_y)};
    const double gap = rng.uniform(cfg.min_transition_gap, cfg.max_transition_gap);
    const double approach = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Point exit_pos{center.x + (cfg.loiter_radius + gap) * std::cos(approach),
                         center.y + (cfg.loiter_radius + gap) * std::sin(approach)};
    const PlanarState exit_state{exit_pos,
                                 {v_exit * std::cos(heading), v_exit * std::sin(heading)}};
    const Target target{0, center, cfg.loiter_radius};

    tr.initial_distance = gap;
    if (gap <= 1e-12) {  // degenerate, skip
      tr.solved = false;
      return;
    }
    try {
      const auto choice =
          transition_to_target(exit_state, target, cfg.quad, cfg.entry_samples, cfg.segments);
      tr.quad_time = choice.transition.solution.t_f;
      tr.holonomic_time = holonomic_transition_time(exit_pos, choice.best.entry, v_hol);
      tr.transition_ratio = tr.quad_time / tr.holonomic_time;
      tr.solved = true;
    } catch (const TransitionSolveError&) {
      tr.solved = false;
    }
  });

  // fixed bin edges over the configured gap range
  constexpr int kBins = 4;
  for (int b = 0; b < kBins; ++b) {
    HolonomicBin bin;
    bin.lo = cfg.min_transition_gap +
             (cfg.max_transition_gap - cfg.min_transition_gap) * b / kBins;
    bin.hi = cfg.min_transition_gap +
             (cfg.max_transition_gap - cfg.min_transition_gap) * (b + 1) / kBins;
    bin.min = std::numeric_limits<double>::infinity();
    result.bins.push_back(bin);
  }

  result.trial_file =
      detail_sim::study_file(out_dir, cfg.kind, cfg.target_counts.front(),
                             cfg.fleet_sizes.front(), cfg.master_seed, ".csv");
  std::ofstream csv(result.trial_file);
  csv << "trial,distance,quad_time,holonomic_time,ratio,solved\n";
  int solved_count = 0;
  result.min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.trials; ++i) {
    const TrialResult& tr = result.trials[i];
    csv << i << ',' << detail_sim::fmt(tr.initial_distance) << ',' << detail_sim::fmt(tr.quad_time)
        << ',' << detail_sim::fmt(tr.holonomic_time) << ',' << detail_sim::fmt(tr.transition_ratio)
        << ',' << (tr.solved ? 1 : 0) << '\n';
    if (!tr.solved) {
      if (tr.initial_distance <= 1e-12) {
        ++result.excluded;
      } else {
        ++result.failures;
      }
      continue;
    }
    ++solved_count;
    result.mean_ratio += tr.transition_ratio;
    result.max_ratio = std::max(result.max_ratio, tr.transition_ratio);
    result.min_ratio = std::min(result.min_ratio, tr.transition_ratio);
    const double span = cfg.max_transition_gap - cfg.min_transition_gap;
    int b = span > 0.0 ? static_cast<int>((tr.initial_distance - cfg.min_transition_gap) /
                                          span * kBins)
                       : 0;
    b = std::clamp(b, 0, kBins - 1);
    auto& bin = result.bins[b];
    ++bin.count;
    bin.avg += tr.transition_ratio;
    bin.max = std::max(bin.max, tr.transition_ratio);
    bin.min = std::min(bin.min, tr.transition_ratio);
  }
  if (solved_count > 0) result.mean_ratio /= solved_count;
  nlohmann::json bins = nlohmann::json::array();
  for (auto& bin : result.bins) {
    if (bin.count > 0) bin.avg /= bin.count;
    bins.push_back({{"lo", bin.lo},
                    {"hi", bin.hi},
                    {"count", bin.count},
                    {"avg_ratio", bin.avg},
                    {"max_ratio", bin.max},
                    {"min_ratio", bin.count ? bin.min : 0.0}});
  }

  result.aggregate_file =
      detail_sim::study_file(out_dir, cfg.kind, cfg.target_counts.front(),
                             cfg.fleet_sizes.front(), cfg.master_seed, ".json");
  nlohmann::json aggregate{{"config", detail_sim::config_echo(cfg)},
                           {"holonomic_speed", v_hol},
                           {"mean_ratio", result.mean_ratio},
                           {"max_ratio", result.max_ratio},
                           {"min_ratio", result.min_ratio},
                           {"failures", result.failures},
                           {"excluded", result.excluded},
                           {"bins", bins}};
  std::ofstream(result.aggregate_file) << aggregate.dump(2) << '\n';
  return result;
}

// ---------------------------------------------------------------------------
// Dynamic study: Procedure 1 vs Procedure 2 cost ratio over arrival batches.

struct DynamicStudyResult {
  std::vector<TrialResult> trials;
  double mean_rho = 0.0;
  std::vector<double> histogram_edges;
  std::vector<int> histogram_counts;
  int underflow = 0, overflow = 0;
  std::filesystem::path trial_file, aggregate_file;
};

inline DynamicStudyResult run_dynamic_study(const ExperimentConfig& cfg,
                                            const std::filesystem::path& out_dir) {
  validate(cfg);
  std::filesystem::create_directories(out_dir);
  const Depot depot{{0.0, 0.0}};
  const int n = cfg.target_counts.front();
  const int m = cfg.fleet_sizes.front();
  if (m > n) throw std::invalid_argument("dynamic study needs m <= n");

  DynamicStudyResult result;
  result.trials.resize(cfg.trials);
  detail_sim::run_indexed(cfg.trials, cfg.threads, [&](int i) {
    Rng rng(derive_stream(cfg.master_seed, 0x44594eULL + i));
    const auto initial = detail_sim::sample_targets(rng, n, cfg.region, cfg.loiter_radius);
    const auto arrivals =
        detail_sim::sample_targets(rng, cfg.arrival_count, cfg.region, cfg.loiter_radius, n);
    const std::uint64_t seed = rng.next_u64();
    TrialResult& tr = result.trials[i];
    tr.proc1 = procedure1_total_cost(initial, arrivals, m, depot, seed, cfg.alloc);
    tr.proc2 = procedure2_total_cost(initial, arrivals, m, depot, seed, cfg.alloc);
    tr.rho = tr.proc1 / tr.proc2;
  });

  // fixed histogram: 50 bins across [0.5, 2.5]
  constexpr int kBins = 50;
  result.histogram_edges.resize(kBins + 1);
  for (int b = 0; b <= kBins; ++b) result.histogram_edges[b] = 0.5 + 2.0 * b / kBins;
  result.histogram_counts.assign(kBins, 0);

  result.trial_file = detail_sim::study_file(out_dir, cfg.kind, n, m, cfg.master_seed, ".csv");
  std::ofstream csv(result.trial_file);
  csv << "trial,proc1_cost,proc2_cost,rho\n";
  for (int i = 0; i < cfg.trials; ++i) {
    const TrialResult& tr = result.trials[i];
    csv << i << ',' << detail_sim::fmt(tr.proc1) << ',' << detail_sim::fmt(tr.proc2) << ','
        << detail_sim::fmt(tr.rho) << '\n';
    result.mean_rho += tr.rho;
    if (tr.rho < 0.5) {
      ++result.underflow;
    } else if (tr.rho >= 2.5) {
      ++result.overflow;
    } else {
      ++result.histogram_counts[static_cast<int>((tr.rho - 0.5) / 2.0 * kBins)];
    }
  }
  result.mean_rho /= cfg.trials;

  result.aggregate_file = detail_sim::study_file(out_dir, cfg.kind, n, m, cfg.master_seed, ".json");
  nlohmann::json aggregate{{"config", detail_sim::config_echo(cfg)},
                           {"mean_rho", result.mean_rho},
                           {"histogram_edges", result.histogram_edges},
                           {"histogram_counts", result.histogram_counts},
                           {"underflow", result.underflow},
                           {"overflow", result.overflow}};
  std::ofstream(result.aggregate_file) << aggregate.dump(2) << '\n';
  return result;
}

}  // namespace quadplan
