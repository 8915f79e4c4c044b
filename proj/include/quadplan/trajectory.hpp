#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadplan/collocation.hpp"
#include "quadplan/dynamics.hpp"
#include "quadplan/geometry.hpp"

namespace quadplan {

enum class Phase { transit, loiter };

inline const char* to_string(Phase p) { return p == Phase::transit ? "transit" : "loiter"; }

struct TrajectorySample {
  double t = 0.0;
  PlanarState state;
  Phase phase = Phase::transit;  // phase of the segment starting at this sample
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double total_time = 0.0;
  double total_length = 0.0;  // integrated polyline length of the samples

  static double polyline_length(const std::vector<TrajectorySample>& samples) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      len += dist(samples[i].state.position, samples[i + 1].state.position);
    }
    return len;
  }
};

enum class LoiterDirection { ccw, cw };

inline const char* to_string(LoiterDirection d) {
  return d == LoiterDirection::ccw ? "ccw" : "cw";
}

// Raised when no candidate of a transition solve converges; carries the best
// iterate diagnostics.
class TransitionSolveError : public std::runtime_error {
 public:
  TransitionSolveError(const std::string& what, double best_defect, double best_t_f)
      : std::runtime_error(what + " (best defect " + std::to_string(best_defect) +
                           ", best t_f " + std::to_string(best_t_f) + ")"),
        best_defect(best_defect),
        best_t_f(best_t_f) {}
  double best_defect;
  double best_t_f;
};

constexpr double kSampleRate = 50.0;  // samples per second of trajectory time

// Full 360-degree scan arc flown at v_max(p, r), starting and ending at the
// entry point so the exit state equals the entry state.
inline Trajectory loiter_trajectory(const Target& t, Point entry, LoiterDirection direction,
                                    const QuadParams& p) {
  const double r = t.loiter_radius;
  const Vec2 radial = entry - t.position;
  if (std::abs(norm(radial) - r) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument("loiter entry point is not on the target circle");
  }
  const double v = v_max(p, r);
  if (v <= 0.0) throw std::domain_error("zero loiter speed: no thrust margin");
  const double duration = 2.0 * std::numbers::pi * r / v;
  const double alpha0 = std::atan2(radial.y, radial.x);
  const double omega = (direction == LoiterDirection::ccw ? 1.0 : -1.0) * v / r;

  Trajectory traj;
  const int steps = std::max(2, static_cast<int>(std::ceil(duration * kSampleRate)));
  traj.samples.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    const double time = duration * i / steps;
    const double a = alpha0 + omega * time;
    TrajectorySample s;
    s.t = time;
    s.phase = Phase::loiter;
    s.state.position = {t.position.x + r * std::cos(a), t.position.y + r * std::sin(a)};
    s.state.velocity = {-v * std::sin(a) * (omega > 0 ? 1.0 : -1.0),
                        v * std::cos(a) * (omega > 0 ? 1.0 : -1.0)};
    traj.samples.push_back(s);
  }
  traj.samples.back().state = traj.samples.front().state;  // exact closure
  traj.total_time = duration;
  traj.total_length = Trajectory::polyline_length(traj.samples);
  return traj;
}

// Minimum-time transition between two boundary states.
struct TransitionResult {
  Trajectory trajectory;
  colloc::Solution solution;  // knots, controls, defect diagnostics
};

namespace detail {

inline PlanarState lerp_state(const PlanarState& a, const PlanarState& b, double w) {
  return {{a.position.x + w * (b.position.x - a.position.x),
           a.position.y + w * (b.position.y - a.position.y)},
          {a.velocity.x + w * (b.velocity.x - a.velocity.x),
           a.velocity.y + w * (b.velocity.y - a.velocity.y)}};
}

inline Trajectory sample_solution(const colloc::Solution& sol, int segments) {
  Trajectory traj;
  const double tf = sol.t_f;
  std::vector<double> times;
  for (int k = 0; k <= segments; ++k) times.push_back(tf * k / segments);
  for (int j = 1; j < static_cast<int>(tf * kSampleRate); ++j) times.push_back(j / kSampleRate);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [tf](double a, double b) { return std::abs(a - b) < 1e-12 * std::max(tf, 1.0); }),
              times.end());

  const double h = tf / segments;
  for (double time : times) {
    const int k = std::min(segments - 1, static_cast<int>(time / h));
    const double w = (time - k * h) / h;
    TrajectorySample s;
    s.t = time;
    s.phase = Phase::transit;
    s.state = lerp_state(sol.knots[k], sol.knots[k + 1], w);
    traj.samples.push_back(s);
  }
  traj.total_time = tf;
  traj.total_length = Trajectory::polyline_length(traj.samples);
  return traj;
}

}  // namespace detail

// Direct transcription of the minimum-time Bolza problem between two states.
// Retries a ladder of initial duration guesses before giving up.
inline TransitionResult min_time_transition(const PlanarState& start, const PlanarState& goal,
                                            const QuadParams& p, int segments = 20) {
  if (segments < 10) throw std::invalid_argument("need at least 10 collocation segments");
  validate(p);
  const double vsb = v_straight_bound(p);
  if (norm(start.velocity) > vsb * (1.0 + 1e-9) || norm(goal.velocity) > vsb * (1.0 + 1e-9)) {
    throw std::invalid_argument("boundary speed exceeds the sustainable straight-line speed");
  }

  const double gap = dist(start.position, goal.position);
  const double dv = norm(goal.velocity - start.velocity);
  if (gap < 1e-9 && dv < 1e-9) {  // degenerate: already there
    TransitionResult result;
    result.trajectory.samples = {{0.0, start, Phase::transit}};
    result.trajectory.total_time = 0.0;
    result.trajectory.total_length = 0.0;
    result.solution.converged = true;
    result.solution.t_f = 0.0;
    result.solution.knots = {start};
    result.solution.controls = {{0.0, 0.0}};
    result.solution.max_defect = 0.0;
    return result;
  }

  // Always try two duration guesses (local minima differ between them), then
  // stop at the first success.
  colloc::Solution best;
  const double ladder[] = {1.0, 2.0, 0.5, 4.0};
  for (int attempt = 0; attempt < 4; ++attempt) {
    colloc::Options opt;
    opt.segments = segments;
    opt.time_guess_scale = ladder[attempt];
    colloc::Solution sol = colloc::solve_min_time(start, goal, p, opt);
    if (sol.converged && (!best.converged || sol.t_f < best.t_f)) {
      best = sol;
    } else if (!best.converged && sol.max_defect < best.max_defect) {
      best = sol;
    }
    if (best.converged && attempt >= 1) break;
  }
  if (!best.converged) {
    throw TransitionSolveError("transition solve failed to converge", best.max_defect,
                               best.t_f);
  }
  return {detail::sample_solution(best, segments), best};
}

// One sampled entry point on a target circle with its solved approach.
struct EntryCandidate {
  Point entry;
  LoiterDirection direction = LoiterDirection::ccw;
  double solved_time = std::numeric_limits<double>::infinity();
  bool solved = false;
  int index = 0;  // position in the candidate enumeration
};

struct TransitionChoice {
  TransitionResult transition;
  EntryCandidate best;
  std::vector<EntryCandidate> candidates;  // all 2k, enumeration order
};

// Sample k equi-spaced entry points on the target circle (anchored at the
// approach direction), solve both loiter directions for each, and keep the
// quickest. Ties break toward the lowest candidate index.
inline TransitionChoice transition_to_target(const PlanarState& exit_state, const Target& t,
                                             const QuadParams& p, int k_entries = 8,
                                             int segments = 20) {
  if (k_entries < 2) throw std::invalid_argument("need at least 2 entry candidates");
  const double r = t.loiter_radius;
  const double v_loiter = v_max(p, r);
  const Vec2 approach = exit_state.position - t.position;
  const double theta0 = norm(approach) > 1e-12 ? std::atan2(approach.y, approach.x) : 0.0;

  TransitionChoice choice;
  std::optional<TransitionResult> best_result;
  double best_defect = std::numeric_limits<double>::infinity();
  double best_tf_diag = 0.0;

  int index = 0;
  for (int j = 0; j < k_entries; ++j) {
    const double theta = theta0 + 2.0 * std::numbers::pi * j / k_entries;
    const Point entry{t.position.x + r * std::cos(theta), t.position.y + r * std::sin(theta)};
    for (LoiterDirection dir : {LoiterDirection::ccw, LoiterDirection::cw}) {
      const double sign = dir == LoiterDirection::ccw ? 1.0 : -1.0;
      const Vec2 tangent{-sign * std::sin(theta), sign * std::cos(theta)};
      const PlanarState goal{entry, v_loiter * tangent};

      EntryCandidate cand;
      cand.entry = entry;
      cand.direction = dir;
      cand.index = index++;
      try {
        TransitionResult result = min_time_transition(exit_state, goal, p, segments);
        cand.solved = true;
        cand.solved_time = result.solution.t_f;
        if (!best_result || cand.solved_time < choice.best.solved_time) {
          choice.best = cand;
          best_result = std::move(result);
        }
      } catch (const TransitionSolveError& err) {
        best_defect = std::min(best_defect, err.best_defect);
        best_tf_diag = err.best_t_f;
      }
      choice.candidates.push_back(cand);
    }
  }
  if (!best_result) {
    throw TransitionSolveError("all entry candidates failed to converge", best_defect,
                               best_tf_diag);
  }
  choice.transition = std::move(*best_result);
  return choice;
}

// Flight path realizing a whole tour: depot departure at rest, then
// transition + full loiter per target. Position and velocity are continuous
// at phase joins because each loiter starts at the winning entry state and
// the vehicle leaves a circle where it entered it.
inline Trajectory tour_trajectory(const Tour& tour, const Depot& depot, const TargetMap& targets,
                                  const QuadParams& p, int k_entries = 8, int segments = 20) {
  Trajectory out;
  if (tour.sequence.empty()) return out;

  PlanarState state{depot.position, {0.0, 0.0}};
  double clock = 0.0;
  auto append = [&](const Trajectory& piece) {
    for (std::size_t i = 0; i < piece.samples.size(); ++i) {
      TrajectorySample s = piece.samples[i];
      s.t += clock;
      if (!out.samples.empty() && i == 0 &&
          s.t <= out.samples.back().t + 1e-12 * std::max(1.0, s.t)) {
        out.samples.back().phase = s.phase;  // coincident join: keep one sample
        continue;
      }
      out.samples.push_back(s);
    }
    clock += piece.total_time;
    out.total_length += piece.total_length;
  };

  for (int id : tour.sequence) {
    const Target& t = resolve_target(targets, id);
    TransitionChoice choice = transition_to_target(state, t, p, k_entries, segments);
    if (choice.transition.trajectory.total_time > 0.0) append(choice.transition.trajectory);
    const Trajectory loiter = loiter_trajectory(t, choice.best.entry, choice.best.direction, p);
    append(loiter);
    state = loiter.samples.back().state;
  }
  out.total_time = clock;
  return out;
}

// Straight-line flight time of an idealized vehicle with no motion
// constraints at the given speed.
inline double holonomic_transition_time(Point a, Point b, double speed) {
  if (!(speed > 0.0)) throw std::invalid_argument("holonomic speed must be positive");
  return dist(a, b) / speed;
}

}  // namespace quadplan
