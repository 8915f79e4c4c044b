// Acceptance suite: one binary, one pass/fail line per criterion, nonzero
// exit when anything fails. Each criterion pins its tolerance in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "quadplan/allocation.hpp"
#include "quadplan/rng.hpp"
#include "quadplan/simharness.hpp"
#include "quadplan/trajectory.hpp"
#include "quadplan/tsp.hpp"

using namespace quadplan;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  const char* name;
  bool (*run)(std::string& detail);
};

const QuadParams kQuad{1.5, 25.0, 0.5, 9.81};

// --- 1. Christofides quality -----------------------------------------------

bool christofides_quality(std::string& detail) {
  Rng rng(0xC0FFEE);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + rng.uniform_int(8);  // n <= 10
    std::vector<Target> ts;
    for (int i = 0; i < n; ++i) {
      ts.push_back({i, {rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)}, 3.0});
    }
    const auto g = MetricGraph::from_targets(ts);
    const auto heur = christofides(g);
    const auto opt = brute_force_tsp(g);
    if (!heur.matching_exact) {
      detail = "matching fell back to greedy";
      return false;
    }
    if (heur.length > 1.5 * opt.length + 1e-9) {
      detail = "ratio " + std::to_string(heur.length / opt.length) + " at trial " +
               std::to_string(trial);
      return false;
    }
    worst = std::max(worst, heur.length / opt.length);
  }
  detail = "200/200 instances within 3/2, worst ratio " + std::to_string(worst);
  return true;
}

// --- 2. v_max force-balance oracle ------------------------------------------

double bisect(double lo, double hi, double (*f)(double, const QuadParams&, double, double),
              const QuadParams& p, double a, double b) {
  double flo = f(lo, p, a, b);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid, p, a, b) < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = f(lo, p, a, b);
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool vmax_oracle(std::string& detail) {
  Rng rng(0x56A);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    QuadParams p;
    p.mass = rng.uniform(0.4, 3.0);
    p.gravity = rng.uniform(9.0, 10.5);
    p.max_thrust = p.mass * p.gravity * rng.uniform(1.05, 4.0);
    p.drag_coeff = rng.uniform(0.0, 2.0);
    const double r = rng.uniform(0.5, 30.0);
    const double v = v_max(p, r);

    // independent recovery of pitch from the drag equation, roll from the
    // radial equation, both by bisection
    const double v2 = v * v;
    auto pitch_eq = +[](double th, const QuadParams& q, double vv, double) {
      return q.max_thrust * std::sin(th) - 0.5 * q.drag_coeff * vv;
    };
    auto roll_eq = +[](double ph, const QuadParams& q, double vv, double extra) {
      return q.max_thrust * std::cos(extra) * std::sin(ph) - q.mass * vv;
    };
    const double pitch = bisect(0.0, std::numbers::pi / 2 - 1e-12, pitch_eq, p, v2, 0.0);
    const double roll = bisect(0.0, std::numbers::pi / 2 - 1e-12, roll_eq, p, v2 / r, pitch);
    const auto res = force_balance_residual(p, r, {roll, pitch, v});
    const double norm = std::sqrt(res[0] * res[0] + res[1] * res[1] + res[2] * res[2]);
    worst = std::max(worst, norm);
    if (norm >= 1e-9) {
      detail = "residual " + std::to_string(norm) + " at trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "100/100 draws, worst residual " + std::to_string(worst);
  return true;
}

// --- 3. Trajectory feasibility regression suite -----------------------------

PlanarState tangent_state(Point center, double r, double angle, double speed, bool cw) {
  const double sign = cw ? -1.0 : 1.0;
  return {{center.x + r * std::cos(angle), center.y + r * std::sin(angle)},
          {-sign * speed * std::sin(angle), sign * speed * std::cos(angle)}};
}

double recomputed_defect(const colloc::Solution& sol, const QuadParams& p) {
  const int n = static_cast<int>(sol.knots.size()) - 1;
  const double h = sol.t_f / n;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto fi = transition_dynamics(sol.knots[i], sol.controls[i], p);
    const auto fj = transition_dynamics(sol.knots[i + 1], sol.controls[i + 1], p);
    const Vec2 dp = sol.knots[i + 1].position - sol.knots[i].position -
                    0.5 * h * (fi.position_rate + fj.position_rate);
    const Vec2 dv = sol.knots[i + 1].velocity - sol.knots[i].velocity -
                    0.5 * h * (fi.velocity_rate + fj.velocity_rate);
    worst = std::max({worst, std::abs(dp.x), std::abs(dp.y), std::abs(dv.x), std::abs(dv.y)});
  }
  return worst;
}

bool trajectory_feasibility(std::string& detail) {
  Rng rng(0x7247);
  const double v = v_max(kQuad, 3.0);
  double worst_defect = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const bool from_rest = trial % 5 == 0;
    const double gap = rng.uniform(5.0, 80.0);
    const double approach = rng.uniform(0.0, 2 * std::numbers::pi);
    const Point center{gap * std::cos(approach), gap * std::sin(approach)};
    const PlanarState start =
        from_rest ? PlanarState{{0, 0}, {0, 0}}
                  : tangent_state({0, 0}, 3.0, rng.uniform(0.0, 2 * std::numbers::pi), v,
                                  rng.coin());
    const PlanarState goal = tangent_state(center, 3.0, rng.uniform(0.0, 2 * std::numbers::pi),
                                           v, rng.coin());

    const auto coarse = min_time_transition(start, goal, kQuad, 20);
    const double defect = recomputed_defect(coarse.solution, kQuad);
    const double brp =
        std::max(norm(coarse.solution.knots.front().position - start.position),
                 norm(coarse.solution.knots.back().position - goal.position));
    const double brv =
        std::max(norm(coarse.solution.knots.front().velocity - start.velocity),
                 norm(coarse.solution.knots.back().velocity - goal.velocity));
    if (defect >= 1e-6 || brp >= 1e-6 || brv >= 1e-6) {
      detail = "defect " + std::to_string(defect) + " boundary " +
               std::to_string(std::max(brp, brv)) + " at trial " + std::to_string(trial);
      return false;
    }
    const auto fine = min_time_transition(start, goal, kQuad, 40);
    const double shift =
        std::abs(coarse.solution.t_f - fine.solution.t_f) / fine.solution.t_f;
    if (shift >= 0.02) {
      detail = "t_f shifted " + std::to_string(100 * shift) + "% under segment doubling";
      return false;
    }
    worst_defect = std::max(worst_defect, defect);
    worst_shift = std::max(worst_shift, shift);
  }
  std::ostringstream os;
  os << "50/50 solved; worst defect " << worst_defect << ", worst refinement shift "
     << 100 * worst_shift << "%";
  detail = os.str();
  return true;
}

// --- 4. Bang-bang oracle -----------------------------------------------------

bool bangbang_oracle(std::string& detail) {
  QuadParams dragless = kQuad;
  dragless.drag_coeff = 0.0;
  const double a = max_accel(dragless);
  Rng rng(0xBB);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double d = rng.uniform(2.0, 120.0);
    const double heading = rng.uniform(0.0, 2 * std::numbers::pi);
    const Point goal{d * std::cos(heading), d * std::sin(heading)};
    const auto r = min_time_transition({{0, 0}, {0, 0}}, {goal, {0, 0}}, dragless, 20);
    const double oracle = 2.0 * std::sqrt(d / a);
    const double rel = std::abs(r.solution.t_f - oracle) / oracle;
    worst = std::max(worst, rel);
    if (rel >= 0.01) {
      detail = "relative error " + std::to_string(100 * rel) + "% at d=" + std::to_string(d);
      return false;
    }
  }
  std::ostringstream os;
  os << "20/20 within 1%, worst " << 100 * worst << "%";
  detail = os.str();
  return true;
}

// --- 5. Cost-vs-fleet trend --------------------------------------------------

bool fig5_trend(std::string& detail) {
  ExperimentConfig cfg;
  cfg.kind = StudyKind::cost_vs_fleet;
  cfg.target_counts = {40};
  cfg.fleet_sizes = {2, 4, 8};
  cfg.trials = 500;
  cfg.master_seed = 5;
  cfg.threads = 4;
  const auto result = run_cost_study(cfg, fs::temp_directory_path() / "quadplan-acc" / "fig5");
  std::ostringstream os;
  os << "mean cost/vehicle:";
  for (const auto& cell : result.cells) os << " m=" << cell.m << ":" << cell.mean_cost_per_vehicle;
  detail = os.str();
  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    if (!(result.cells[i].mean_cost_per_vehicle < result.cells[i - 1].mean_cost_per_vehicle)) {
      return false;
    }
  }
  return true;
}

// --- 6. Holonomic ratio claim -------------------------------------------------

bool fig7_claim(std::string& detail) {
  ExperimentConfig cfg;
  cfg.kind = StudyKind::holonomic_ratio;
  cfg.trials = 200;
  cfg.master_seed = 7;
  cfg.threads = 4;
  cfg.quad = kQuad;
  const auto result =
      run_holonomic_study(cfg, fs::temp_directory_path() / "quadplan-acc" / "fig7");
  std::ostringstream os;
  os << "ratio min " << result.min_ratio << " mean " << result.mean_ratio << " max "
     << result.max_ratio << " (" << result.failures << " failures)";
  detail = os.str();
  if (result.failures > 0) return false;
  return result.min_ratio >= 1.0 && result.max_ratio <= 3.5 && result.mean_ratio <= 3.0;
}

// --- 7. Dynamic-ratio trend ----------------------------------------------------

bool fig9_trend(std::string& detail) {
  std::ostringstream os;
  bool ok = true;
  for (int r : {8, 16, 32}) {
    ExperimentConfig cfg;
    cfg.kind = StudyKind::dynamic_ratio;
    cfg.target_counts = {40};
    cfg.fleet_sizes = {4};
    cfg.arrival_count = r;
    cfg.trials = 200;
    cfg.master_seed = 9;
    cfg.threads = 4;
    const auto result = run_dynamic_study(
        cfg, fs::temp_directory_path() / "quadplan-acc" / ("fig9-r" + std::to_string(r)));
    os << " r=" << r << ": mean rho " << result.mean_rho;
    ok = ok && result.mean_rho > 1.0;
  }
  detail = os.str();
  return ok;
}

// --- 8. Determinism under parallelism ------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool determinism(std::string& detail) {
  ExperimentConfig cfg;
  cfg.kind = StudyKind::dynamic_ratio;
  cfg.target_counts = {20};
  cfg.fleet_sizes = {3};
  cfg.arrival_count = 8;
  cfg.trials = 60;
  cfg.master_seed = 1234;

  const auto base = fs::temp_directory_path() / "quadplan-acc" / "determinism";
  cfg.threads = 1;
  const auto r1 = run_dynamic_study(cfg, base / "t1");
  cfg.threads = 4;
  const auto r4 = run_dynamic_study(cfg, base / "t4");
  cfg.threads = 7;
  const auto r7 = run_dynamic_study(cfg, base / "t7");

  const std::string a = slurp(r1.trial_file);
  if (a.empty() || a != slurp(r4.trial_file) || a != slurp(r7.trial_file)) {
    detail = "per-trial CSVs differ across thread counts";
    return false;
  }
  detail = "byte-identical per-trial CSVs across 1, 4 and 7 threads";
  return true;
}

// --- 9. Coverage invariant under fuzzing ----------------------------------------

// Every non-removed target must be scanned exactly once across all emitted
// tours, counting merged targets through their representatives.
bool coverage_fuzz(std::string& detail) {
  Rng rng(0xC04E);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + rng.uniform_int(18);
    const int m = 1 + rng.uniform_int(std::min(n, 5));
    std::vector<Target> initial;
    int next_id = 0;
    for (int i = 0; i < n; ++i) {
      initial.push_back({next_id++,
                         {rng.uniform(-500, 500), rng.uniform(-500, 500)},
                         rng.uniform(1.0, 5.0)});
    }
    // roughly half the cases exercise target merging
    AllocationConfig cfg;
    cfg.merge_radius = rng.coin() ? rng.uniform(0.0, 30.0) : 0.0;

    DynamicAssigner da(initial, m, Depot{{0, 0}}, trial, cfg);
    std::map<int, int> scans;  // original id -> times scanned
    std::set<int> live;
    for (const Target& t : initial) live.insert(t.id);

    const int iterations = 1 + rng.uniform_int(3);
    for (int iter = 0; iter < iterations; ++iter) {
      std::vector<ArrivalEvent> events;
      if (iter > 0) {
        ArrivalEvent ev;
        ev.time = iter;
        for (int id : live) {
          if (scans.count(id) == 0 && rng.uniform() < 0.08) ev.removed_ids.push_back(id);
        }
        for (int id : ev.removed_ids) live.erase(id);
        const int adds = rng.uniform_int(6);
        for (int a = 0; a < adds; ++a) {
          Target t{next_id++, {rng.uniform(-500, 500), rng.uniform(-500, 500)},
                   rng.uniform(1.0, 5.0)};
          ev.added.push_back(t);
          live.insert(t.id);
        }
        events.push_back(ev);
      }
      const auto result = da.step(events);

      // expand representatives back to the originals they cover
      std::map<int, std::vector<int>> members;
      for (const auto& [orig, rep] : result.merge_map) members[rep].push_back(orig);
      for (const Tour& tour : result.allocation.tours) {
        for (int rep : tour.sequence) {
          for (int orig : members.at(rep)) ++scans[orig];
        }
      }
    }

    for (int id : live) {
      auto it = scans.find(id);
      if (it == scans.end()) {
        detail = "orphaned target " + std::to_string(id) + " at trial " + std::to_string(trial);
        return false;
      }
      if (it->second != 1) {
        detail = "target " + std::to_string(id) + " scanned " + std::to_string(it->second) +
                 " times at trial " + std::to_string(trial);
        return false;
      }
    }
    for (const auto& [id, count] : scans) {
      if (count != 1) {
        detail = "target " + std::to_string(id) + " scanned " + std::to_string(count) + " times";
        return false;
      }
    }
  }
  detail = "1000/1000 fuzz cases covered exactly once";
  return true;
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"christofides-quality", christofides_quality},
      {"vmax-oracle", vmax_oracle},
      {"trajectory-feasibility", trajectory_feasibility},
      {"bangbang-oracle", bangbang_oracle},
      {"fig5-cost-trend", fig5_trend},
      {"fig7-holonomic-ratio", fig7_claim},
      {"fig9-dynamic-ratio", fig9_trend},
      {"determinism", determinism},
      {"coverage-invariant", coverage_fuzz},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& err) {
      detail = std::string("exception: ") + err.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %-24s %s (%.1fs)\n", ok ? "PASS" : "FAIL", criterion.name,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  const std::size_t total = sizeof(criteria) / sizeof(criteria[0]);
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, total);
    return 1;
  }
  std::printf("all %zu criteria passed\n", total);
  return 0;
}
