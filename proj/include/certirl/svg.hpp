#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "certirl/model.hpp"

namespace certirl {

// Closed-form reward with exact gradients, evaluated over the (recast) state
// and the input. Kept as callables so benchmarks can mix polynomial and
// non-polynomial shapes without touching the rollout code.
struct RewardSpec {
  std::function<double(const std::vector<double>&, const std::vector<double>&)> r;
  std::function<Eigen::VectorXd(const std::vector<double>&, const std::vector<double>&)> r_x;
  std::function<Eigen::VectorXd(const std::vector<double>&, const std::vector<double>&)> r_u;
};

// r(x, u) = -|x - goal|^2 - u_weight * |u|^2
RewardSpec quadratic_reward(std::vector<double> goal, double u_weight = 0.0);

// One deterministic closed-loop run. All three series cover t = 0..T
// inclusive, so the terminal state also carries its input and reward; an
// early shield stop just shortens the series.
struct Trajectory {
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> u;
  std::vector<double> r;
  double dt = 0.0;
  bool terminated_by_shield = false;

  int steps() const { return static_cast<int>(x.size()) - 1; }
};

// Simulate under the ground-truth plant inside the model. With the shield on,
// a step whose successor trips the one-step-lookahead predicate is discarded
// and the run ends at the current state.
Trajectory rollout(const DiscreteModel& model, const Controller& ctrl,
                   const RewardSpec& reward, const std::vector<double>& x0, int T,
                   bool shield);

struct ValueGradient {
  Eigen::MatrixXd V_theta;                  // same shape as Controller::theta
  std::vector<Eigen::VectorXd> V_x_trace;   // dV/dx at every visited state
  double value = 0.0;                       // sum_t gamma^t r(t)
};

// Backward pass of the deterministic Bellman recursion along a recorded
// trajectory, differentiated through the *identified* model (fd_est), not the
// environment truth:
//   V_x = r_x + r_u pi_x + gamma V'_x' (f^d_x + f^d_u pi_x)
//   V_th = r_u pi_th + gamma V'_x' f^d_u pi_th + gamma V'_th
// with V'_x and V'_th zero beyond the final state.
ValueGradient value_gradient(const Trajectory& traj, const DiscreteModel& model,
                             const Controller& ctrl, const RewardSpec& reward,
                             double gamma);

// One least-squares gradient step on the prediction residuals
//   e(t) = x(t+1) - f^d(x(t), u(t); alpha)
// i.e. alpha += lr * sum_t J_alpha(t)' e(t), clamped to the declared bounds.
std::vector<double> identify(const Trajectory& traj, const DiscreteModel& model,
                             double lr);

}  // namespace certirl
