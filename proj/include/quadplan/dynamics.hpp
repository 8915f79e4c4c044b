#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "quadplan/geometry.hpp"

namespace quadplan {

// Physical constants of the vehicle. Defaults describe a mid-size quadcopter;
// they are a config default, not a measured value.
struct QuadParams {
  double mass = 1.5;         // kg
  double max_thrust = 25.0;  // N
  double drag_coeff = 0.5;   // N s^2 / m^2
  double gravity = 9.81;     // m/s^2
};

inline void validate(const QuadParams& p) {
  if (!(p.mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(p.gravity > 0.0)) throw std::invalid_argument("gravity must be positive");
  if (!(p.drag_coeff >= 0.0)) throw std::invalid_argument("drag_coeff must be nonnegative");
  if (!(p.max_thrust > p.mass * p.gravity)) {
    throw std::invalid_argument("max_thrust must exceed hover thrust mass*gravity");
  }
}

// Equilibrium attitude and speed on a steady loiter circle.
struct TiltSolution {
  double roll = 0.0;   // rad
  double pitch = 0.0;  // rad
  double speed = 0.0;  // m/s
};

struct PlanarState {
  Point position;
  Vec2 velocity;
};

// Top sustainable speed on a circle of radius r:
//   v = [(T^2 - m^2 g^2) / (m^2/r^2 + c_d^2/4)]^(1/4)
inline double v_max(const QuadParams& p, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("loiter radius must be positive");
  const double mg = p.mass * p.gravity;
  if (p.max_thrust < mg) {
    throw std::domain_error("cannot sustain flight: max_thrust below mass*gravity");
  }
  const double num = p.max_thrust * p.max_thrust - mg * mg;
  const double den = p.mass * p.mass / (r * r) + p.drag_coeff * p.drag_coeff / 4.0;
  return std::pow(num / den, 0.25);
}

// Force balance on the loiter circle, in (vertical, radial, tangential) order:
//   T cos(roll) cos(pitch) - m g
//   T cos(pitch) sin(roll) - m v^2 / r
//   T sin(pitch) - (1/2) c_d v^2
// All three vanish exactly when the solution is the loiter equilibrium.
inline std::array<double, 3> force_balance_residual(const QuadParams& p, double r,
                                                    const TiltSolution& sol) {
  const double v2 = sol.speed * sol.speed;
  return {
      p.max_thrust * std::cos(sol.roll) * std::cos(sol.pitch) - p.mass * p.gravity,
      p.max_thrust * std::cos(sol.pitch) * std::sin(sol.roll) - p.mass * v2 / r,
      p.max_thrust * std::sin(sol.pitch) - 0.5 * p.drag_coeff * v2,
  };
}

// Largest horizontal acceleration available while holding altitude.
inline double max_accel(const QuadParams& p) {
  const double tw = p.max_thrust / p.mass;
  return std::sqrt(tw * tw - p.gravity * p.gravity);
}

// Top sustainable straight-line speed: vertical balance with zero roll plus
// the drag equation. Equals the r->infinity limit of v_max. Infinite when
// drag is zero.
inline double v_straight_bound(const QuadParams& p) {
  if (p.drag_coeff <= 0.0) return std::numeric_limits<double>::infinity();
  const double mg = p.mass * p.gravity;
  const double num = p.max_thrust * p.max_thrust - mg * mg;
  return std::pow(4.0 * num / (p.drag_coeff * p.drag_coeff), 0.25);
}

struct StateDerivative {
  Vec2 position_rate;
  Vec2 velocity_rate;
};

namespace detail {

// Same right-hand side as transition_dynamics without the command check; the
// transition solver evaluates it at infeasible intermediate iterates.
inline StateDerivative transition_rhs(const PlanarState& s, Vec2 accel_cmd,
                                      const QuadParams& p) {
  const double speed = norm(s.velocity);
  const double k = p.drag_coeff / (2.0 * p.mass);
  return {s.velocity, accel_cmd - (k * speed) * s.velocity};
}

}  // namespace detail

// Planar point-mass transition model: commanded horizontal acceleration
// bounded by max_accel, quadratic drag opposing motion.
inline StateDerivative transition_dynamics(const PlanarState& s, Vec2 accel_cmd,
                                           const QuadParams& p) {
  const double bound = max_accel(p);
  if (norm(accel_cmd) > bound * (1.0 + 1e-12)) {
    throw std::domain_error("acceleration command exceeds thrust margin");
  }
  return detail::transition_rhs(s, accel_cmd, p);
}

}  // namespace quadplan
