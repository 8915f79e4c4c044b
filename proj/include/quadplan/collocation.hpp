#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "quadplan/dynamics.hpp"
#include "quadplan/geometry.hpp"

// Minimum-time two-point boundary value solver. The continuous problem
// (minimize t_f subject to the planar transition dynamics, fixed boundary
// states and the thrust-margin acceleration bound) is transcribed with
// trapezoidal collocation on a uniform grid whose duration is itself a
// decision variable. The resulting NLP is solved with an augmented
// Lagrangian over the defect constraints, L-BFGS on the inner problem, and a
// Gauss-Newton projection that polishes the defects to machine precision.
// Boundary states are eliminated (held fixed), so boundary residuals are
// zero by construction.
namespace quadplan::colloc {

struct Options {
  int segments = 20;
  int max_outer = 60;
  int max_inner = 900;
  double constraint_tol = 1e-8;    // scaled infinity norm before polish
  // Fraction of max_accel held back so the feasibility polish (which moves
  // controls by up to defect/h ~ 1e-7) cannot push commands past the bound.
  double control_margin = 1e-6;
  double time_guess_scale = 1.0;   // multiplier on the initial duration guess
};

struct Solution {
  bool converged = false;
  double t_f = 0.0;
  std::vector<PlanarState> knots;  // segments + 1 states
  std::vector<Vec2> controls;      // accel command per knot, physical units
  double max_defect = std::numeric_limits<double>::infinity();  // physical, per node
  double boundary_residual = 0.0;  // physical (zero: boundaries eliminated)
  int outer_iterations = 0;
  long function_evaluations = 0;
};

namespace detail {

using Eigen::VectorXd;

// Armijo-backtracking L-BFGS. Returns the final gradient infinity norm.
template <typename Func>
double lbfgs_minimize(Func&& eval, VectorXd& x, int max_iters, double grad_tol,
                      long& eval_count) {
  constexpr int kMemory = 10;
  constexpr double kArmijo = 1e-4;
  const int n = static_cast<int>(x.size());

  std::vector<VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;
  VectorXd g(n), g_new(n), d(n), x_new(n);
  double f = eval(x, g);
  ++eval_count;

  for (int iter = 0; iter < max_iters; ++iter) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm < grad_tol) return gnorm;

    // two-loop recursion
    d = -g;
    if (!s_hist.empty()) {
      std::vector<double> alpha(s_hist.size());
      for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
        alpha[i] = rho_hist[i] * s_hist[i].dot(d);
        d -= alpha[i] * y_hist[i];
      }
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      d *= s.dot(y) / y.dot(y);
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        const double beta = rho_hist[i] * y_hist[i].dot(d);
        d += (alpha[i] - beta) * s_hist[i];
      }
    }
    double slope = g.dot(d);
    if (slope > -1e-16 * g.norm() * d.norm()) {  // not a descent direction
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * d;
      f_new = eval(x_new, g_new);
      ++eval_count;
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return g.lpNorm<Eigen::Infinity>();

    VectorXd s = x_new - x;
    VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x.swap(x_new);
    f = f_new;
    g.swap(g_new);
  }
  return g.lpNorm<Eigen::Infinity>();
}

// Scaled transcription: lengths by L, time by sqrt(L/a_max), so the
// acceleration bound becomes 1 and drag scales to kappa * L.
class Transcription {
 public:
  Transcription(const PlanarState& start, const PlanarState& goal, const QuadParams& p,
                const Options& opt)
      : n_(opt.segments), cap_(1.0 - opt.control_margin) {
    const double a_max = max_accel(p);
    const double kappa = p.drag_coeff / (2.0 * p.mass);
    const double d = dist(start.position, goal.position);
    const double v_ref = std::max(norm(start.velocity), norm(goal.velocity));
    length_scale_ = std::max({d, v_ref * v_ref / a_max, 1e-2});
    time_scale_ = std::sqrt(length_scale_ / a_max);
    vel_scale_ = length_scale_ / time_scale_;
    accel_scale_ = a_max;
    kappa_ = kappa * length_scale_;

    x0_ << 0.0, 0.0, start.velocity.x / vel_scale_, start.velocity.y / vel_scale_;
    xn_ << (goal.position.x - start.position.x) / length_scale_,
        (goal.position.y - start.position.y) / length_scale_,
        goal.velocity.x / vel_scale_, goal.velocity.y / vel_scale_;
    origin_ = start.position;

    const double vsb = v_straight_bound(p);
    t_lb_ = std::isfinite(vsb) ? (d / vsb) / time_scale_ : 0.0;
    t_lb_ = std::max(t_lb_, 1e-3);
  }

  int segments() const { return n_; }
  int num_vars() const { return 1 + 4 * (n_ - 1) + 2 * (n_ + 1); }
  int num_defects() const { return 4 * n_; }
  double control_cap() const { return cap_; }
  double t_lb() const { return t_lb_; }

  int control_offset(int k) const { return 1 + 4 * (n_ - 1) + 2 * k; }

  Eigen::Vector4d state(const VectorXd& z, int k) const {
    if (k == 0) return x0_;
    if (k == n_) return xn_;
    return z.segment<4>(1 + 4 * (k - 1));
  }
  Eigen::Vector2d control(const VectorXd& z, int k) const {
    return z.segment<2>(control_offset(k));
  }

  // Scaled dynamics right-hand side.
  Eigen::Vector4d rhs(const Eigen::Vector4d& x, const Eigen::Vector2d& u) const {
    const double speed = std::hypot(x[2], x[3]);
    Eigen::Vector4d f;
    f[0] = x[2];
    f[1] = x[3];
    f[2] = u[0] - kappa_ * speed * x[2];
    f[3] = u[1] - kappa_ * speed * x[3];
    return f;
  }

  // d(velocity_rate)/d(velocity), symmetric 2x2.
  Eigen::Matrix2d drag_jacobian(const Eigen::Vector4d& x) const {
    const double speed = std::hypot(x[2], x[3]);
    Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
    if (speed > 1e-300) {
      d(0, 0) = -kappa_ * (speed + x[2] * x[2] / speed);
      d(1, 1) = -kappa_ * (speed + x[3] * x[3] / speed);
      d(0, 1) = d(1, 0) = -kappa_ * (x[2] * x[3] / speed);
    }
    return d;
  }

  void defects(const VectorXd& z, VectorXd& c) const {
    const double h = z[0] / n_;
    c.resize(num_defects());
    Eigen::Vector4d xi = state(z, 0);
    Eigen::Vector4d fi = rhs(xi, control(z, 0));
    for (int i = 0; i < n_; ++i) {
      const Eigen::Vector4d xj = state(z, i + 1);
      const Eigen::Vector4d fj = rhs(xj, control(z, i + 1));
      c.segment<4>(4 * i) = xj - xi - 0.5 * h * (fi + fj);
      xi = xj;
      fi = fj;
    }
  }

  // Augmented Lagrangian value and gradient.
  double augmented_lagrangian(const VectorXd& z, VectorXd& grad, const VectorXd& lambda,
                              const VectorXd& sigma_u, double sigma_t, double mu) const {
    const double t = z[0];
    const double h = t / n_;
    grad.setZero(num_vars());

    std::vector<Eigen::Vector4d> x(n_ + 1), f(n_ + 1);
    std::vector<Eigen::Vector2d> u(n_ + 1);
    for (int k = 0; k <= n_; ++k) {
      x[k] = state(z, k);
      u[k] = control(z, k);
      f[k] = rhs(x[k], u[k]);
    }

    double value = t;
    grad[0] += 1.0;

    std::vector<Eigen::Vector4d> w(n_);  // defect adjoints lambda + mu*c
    for (int i = 0; i < n_; ++i) {
      const Eigen::Vector4d c = x[i + 1] - x[i] - 0.5 * h * (f[i] + f[i + 1]);
      const Eigen::Vector4d l = lambda.segment<4>(4 * i);
      value += l.dot(c) + 0.5 * mu * c.squaredNorm();
      w[i] = l + mu * c;
      grad[0] += w[i].dot(-(f[i] + f[i + 1]) / (2.0 * n_));
    }

    for (int k = 0; k <= n_; ++k) {
      const Eigen::Vector4d wl = (k > 0) ? w[k - 1] : Eigen::Vector4d::Zero();
      const Eigen::Vector4d wr = (k < n_) ? w[k] : Eigen::Vector4d::Zero();
      if (k >= 1 && k <= n_ - 1) {
        Eigen::Vector4d gx = wl - wr;
        const Eigen::Vector2d wp_sum = wl.head<2>() + wr.head<2>();
        const Eigen::Vector2d wv_sum = wl.tail<2>() + wr.tail<2>();
        gx.tail<2>() -= 0.5 * h * (wp_sum + drag_jacobian(x[k]) * wv_sum);
        grad.segment<4>(1 + 4 * (k - 1)) += gx;
      }
      grad.segment<2>(control_offset(k)) -= 0.5 * h * (wl.tail<2>() + wr.tail<2>());
    }

    // control-norm inequalities |u|^2 <= cap^2 (PHR form)
    const double cap2 = cap_ * cap_;
    for (int k = 0; k <= n_; ++k) {
      const double g = u[k].squaredNorm() - cap2;
      const double y = std::max(0.0, sigma_u[k] + mu * g);
      value += (y * y - sigma_u[k] * sigma_u[k]) / (2.0 * mu);
      grad.segment<2>(control_offset(k)) += y * 2.0 * u[k];
    }
    // duration lower bound t >= t_lb
    {
      const double g = t_lb_ - t;
      const double y = std::max(0.0, sigma_t + mu * g);
      value += (y * y - sigma_t * sigma_t) / (2.0 * mu);
      grad[0] -= y;
    }
    return value;
  }

  // Defect Jacobian with respect to everything except the duration.
  void defect_jacobian(const VectorXd& z, Eigen::MatrixXd& jac) const {
    const double h = z[0] / n_;
    const int cols = num_vars() - 1;  // z without the leading T
    jac.setZero(num_defects(), cols);
    auto state_col = [&](int k) { return 4 * (k - 1); };
    auto control_col = [&](int k) { return 4 * (n_ - 1) + 2 * k; };

    for (int i = 0; i < n_; ++i) {
      for (int side = 0; side <= 1; ++side) {
        const int k = i + side;
        const double sign = side == 1 ? 1.0 : -1.0;
        if (k >= 1 && k <= n_ - 1) {
          const int col = state_col(k);
          const Eigen::Matrix2d d = drag_jacobian(state(z, k));
          for (int r = 0; r < 4; ++r) jac(4 * i + r, col + r) += sign;
          // -h/2 * df/dx: position rows depend on velocity, velocity rows on drag
          jac(4 * i + 0, col + 2) -= 0.5 * h;
          jac(4 * i + 1, col + 3) -= 0.5 * h;
          jac.block<2, 2>(4 * i + 2, col + 2) -= 0.5 * h * d;
        }
        const int ucol = control_col(k);
        jac(4 * i + 2, ucol + 0) -= 0.5 * h;
        jac(4 * i + 3, ucol + 1) -= 0.5 * h;
      }
    }
  }

  // Gauss-Newton minimum-norm projection onto the defect manifold, duration
  // held fixed. Returns the final scaled defect infinity norm.
  double polish(VectorXd& z) const {
    VectorXd c;
    Eigen::MatrixXd jac;
    defects(z, c);
    double best = c.lpNorm<Eigen::Infinity>();
    for (int iter = 0; iter < 20 && best > 1e-14; ++iter) {
      defect_jacobian(z, jac);
      Eigen::MatrixXd jjt = jac * jac.transpose();
      jjt.diagonal().array() += 1e-14;
      const VectorXd y = jjt.ldlt().solve(-c);
      const VectorXd dz = jac.transpose() * y;
      VectorXd z_try = z;
      double step = 1.0;
      bool improved = false;
      for (int halve = 0; halve < 12; ++halve) {
        z_try.tail(z.size() - 1) = z.tail(z.size() - 1) + step * dz;
        VectorXd c_try;
        defects(z_try, c_try);
        if (c_try.lpNorm<Eigen::Infinity>() < best) {
          z = z_try;
          c = c_try;
          best = c.lpNorm<Eigen::Infinity>();
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    return best;
  }

  // Initial guess: straight line, linearly interpolated boundary velocities,
  // drag-compensating controls.
  VectorXd initial_guess(double time_scale_factor) const {
    const double d = (xn_.head<2>() - x0_.head<2>()).norm();
    const double dv = (xn_.tail<2>() - x0_.tail<2>()).norm();
    const double v_cruise = kappa_ > 0.0 ? 1.0 / std::sqrt(kappa_) : 1.0;
    double t0 = std::max({2.0 * std::sqrt(std::max(d, 1e-6)), 1.2 * d / v_cruise, dv, 4.0 * t_lb_ / 3.0});
    t0 *= time_scale_factor;

    VectorXd z(num_vars());
    z[0] = t0;
    for (int k = 1; k <= n_ - 1; ++k) {
      const double a = static_cast<double>(k) / n_;
      z.segment<4>(1 + 4 * (k - 1)) = (1.0 - a) * x0_ + a * xn_;
    }
    for (int k = 0; k <= n_; ++k) {
      const Eigen::Vector4d x = state(z, k);
      const double speed = std::hypot(x[2], x[3]);
      Eigen::Vector2d u = (xn_.tail<2>() - x0_.tail<2>()) / t0;
      u[0] += kappa_ * speed * x[2];
      u[1] += kappa_ * speed * x[3];
      const double n = u.norm();
      if (n > cap_) u *= cap_ / n;
      z.segment<2>(control_offset(k)) = u;
    }
    return z;
  }

  Solution unscale(const VectorXd& z, double scaled_defect) const {
    Solution sol;
    sol.t_f = z[0] * time_scale_;
    sol.knots.resize(n_ + 1);
    sol.controls.resize(n_ + 1);
    for (int k = 0; k <= n_; ++k) {
      const Eigen::Vector4d x = state(z, k);
      sol.knots[k].position = {origin_.x + x[0] * length_scale_,
                               origin_.y + x[1] * length_scale_};
      sol.knots[k].velocity = {x[2] * vel_scale_, x[3] * vel_scale_};
      const Eigen::Vector2d u = control(z, k);
      sol.controls[k] = {u[0] * accel_scale_, u[1] * accel_scale_};
    }
    // scaled defect components map back through the larger of the two scales
    sol.max_defect = scaled_defect * std::max(length_scale_, vel_scale_);
    sol.boundary_residual = 0.0;
    return sol;
  }

 private:
  int n_;
  double cap_;
  double length_scale_, time_scale_, vel_scale_, accel_scale_, kappa_, t_lb_;
  Point origin_;
  Eigen::Vector4d x0_, xn_;
};

}  // namespace detail

// Solve the scaled NLP for one boundary pair. Not guaranteed to converge for
// every guess; the caller retries with other time_guess_scale values.
inline Solution solve_min_time(const PlanarState& start, const PlanarState& goal,
                               const QuadParams& p, const Options& opt = {}) {
  using detail::Transcription;
  using Eigen::VectorXd;

  const Transcription tr(start, goal, p, opt);
  VectorXd z = tr.initial_guess(opt.time_guess_scale);

  VectorXd lambda = VectorXd::Zero(tr.num_defects());
  VectorXd sigma_u = VectorXd::Zero(opt.segments + 1);
  double sigma_t = 0.0;
  double mu = 10.0;
  long evals = 0;
  double viol_prev = std::numeric_limits<double>::infinity();
  bool feasible = false;
  int outer = 0;

  double tf_at_last_feasible = std::numeric_limits<double>::quiet_NaN();
  for (outer = 0; outer < opt.max_outer; ++outer) {
    const double inner_tol = std::max(3e-8, 1e-3 * std::pow(0.3, outer));
    auto eval = [&](const VectorXd& x, VectorXd& g) {
      return tr.augmented_lagrangian(x, g, lambda, sigma_u, sigma_t, mu);
    };
    const double gnorm = detail::lbfgs_minimize(eval, z, opt.max_inner, inner_tol, evals);

    VectorXd c;
    tr.defects(z, c);
    double viol = c.lpNorm<Eigen::Infinity>();
    const double cap2 = tr.control_cap() * tr.control_cap();
    for (int k = 0; k <= opt.segments; ++k) {
      viol = std::max(viol,
                      std::max(0.0, z.segment<2>(tr.control_offset(k)).squaredNorm() - cap2));
    }
    viol = std::max(viol, std::max(0.0, tr.t_lb() - z[0]));

    if (viol <= opt.constraint_tol) {
      feasible = true;
      // stop on stationarity, or once the duration has stopped moving across
      // feasible outers: feasibility alone leaves t_f suboptimal
      const bool tf_settled =
          std::isfinite(tf_at_last_feasible) &&
          std::abs(z[0] - tf_at_last_feasible) <= 1e-9 * std::max(z[0], 1.0);
      if (gnorm <= 1e-7 || tf_settled) break;
      tf_at_last_feasible = z[0];
    }

    // first-order multiplier update every outer; penalty growth only when the
    // violation stagnates. The cap matters: past ~1e6 the hinge terms wreck
    // the inner conditioning and multiplier refinement works better.
    lambda += mu * c;
    for (int k = 0; k <= opt.segments; ++k) {
      const double g = z.segment<2>(tr.control_offset(k)).squaredNorm() - cap2;
      sigma_u[k] = std::max(0.0, sigma_u[k] + mu * g);
    }
    sigma_t = std::max(0.0, sigma_t + mu * (tr.t_lb() - z[0]));
    if (viol > 0.25 * viol_prev) mu = std::min(mu * 6.0, 1e6);
    viol_prev = viol;
  }

  // feasibility of the final iterate, not of whichever outer set the flag
  {
    VectorXd c;
    tr.defects(z, c);
    double viol = c.lpNorm<Eigen::Infinity>();
    const double cap2 = tr.control_cap() * tr.control_cap();
    for (int k = 0; k <= opt.segments; ++k) {
      viol = std::max(viol,
                      std::max(0.0, z.segment<2>(tr.control_offset(k)).squaredNorm() - cap2));
    }
    viol = std::max(viol, std::max(0.0, tr.t_lb() - z[0]));
    feasible = viol <= 10.0 * opt.constraint_tol;
  }

  const double polished = tr.polish(z);
  double u_worst = 0.0;
  for (int k = 0; k <= opt.segments; ++k) {
    u_worst = std::max(u_worst, z.segment<2>(tr.control_offset(k)).norm());
  }
  Solution sol = tr.unscale(z, polished);
  sol.outer_iterations = outer;
  sol.function_evaluations = evals;
  sol.converged = feasible && polished < 1e-9 && sol.t_f > 0.0 && u_worst <= 1.0;
  return sol;
}

}  // namespace quadplan::colloc
