#include "certirl/svg.hpp"

#include <algorithm>
#include <cmath>

namespace certirl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// basis monomial values phi (nb) and Jacobian dphi/dx (nb x n)
void basis_eval(const std::vector<Monomial>& basis, const std::vector<double>& x,
                VectorXd& phi, MatrixXd& jac) {
  const int nb = static_cast<int>(basis.size());
  const int n = static_cast<int>(x.size());
  phi.resize(nb);
  jac.setZero(nb, n);
  for (int k = 0; k < nb; ++k) {
    const auto& e = basis[k].e;
    double w = 1.0;
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < e[i]; ++r) w *= x[i];
    phi[k] = w;
    for (int i = 0; i < n; ++i) {
      if (e[i] == 0) continue;
      double d = static_cast<double>(e[i]);
      for (int j = 0; j < n; ++j) {
        const int p = (j == i) ? e[j] - 1 : e[j];
        for (int r = 0; r < p; ++r) d *= x[j];
      }
      jac(k, i) = d;
    }
  }
}

// evaluate a row-major FlatPoly table into an Eigen matrix at the point [x u]
void eval_table(const std::vector<FlatPoly>& table, int rows, int cols,
                const std::vector<double>& xu, MatrixXd& out) {
  out.resize(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = table[i * cols + j].eval(xu.data());
}

std::vector<double> concat(const std::vector<double>& x, const std::vector<double>& u) {
  std::vector<double> xu(x.size() + u.size());
  std::copy(x.begin(), x.end(), xu.begin());
  std::copy(u.begin(), u.end(), xu.begin() + x.size());
  return xu;
}

}  // namespace

RewardSpec quadratic_reward(std::vector<double> goal, double u_weight) {
  RewardSpec spec;
  spec.r = [goal, u_weight](const std::vector<double>& x, const std::vector<double>& u) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - goal[i];
      v -= d * d;
    }
    for (double ui : u) v -= u_weight * ui * ui;
    return v;
  };
  spec.r_x = [goal](const std::vector<double>& x, const std::vector<double>&) {
    VectorXd out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -2.0 * (x[i] - goal[i]);
    return out;
  };
  spec.r_u = [u_weight](const std::vector<double>&, const std::vector<double>& u) {
    VectorXd out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = -2.0 * u_weight * u[i];
    return out;
  };
  return spec;
}

Trajectory rollout(const DiscreteModel& model, const Controller& ctrl,
                   const RewardSpec& reward, const std::vector<double>& x0, int T,
                   bool shield) {
  Trajectory traj;
  traj.dt = model.dt;
  std::vector<double> x = x0;
  for (int t = 0;; ++t) {
    std::vector<double> u = ctrl.eval(x);
    traj.x.push_back(x);
    traj.u.push_back(u);
    traj.r.push_back(reward.r(x, u));
    if (t == T) break;
    std::vector<double> next = model.step_truth(x, u);
    if (shield && in_shield(next, model, *model.sys, ctrl)) {
      traj.terminated_by_shield = true;
      break;
    }
    x = std::move(next);
  }
  return traj;
}

ValueGradient value_gradient(const Trajectory& traj, const DiscreteModel& model,
                             const Controller& ctrl, const RewardSpec& reward,
                             double gamma) {
  const int n = model.sys->n();
  const int m = model.sys->m();
  const int nb = static_cast<int>(ctrl.basis.size());
  const int T = traj.steps();

  ValueGradient out;
  out.V_x_trace.assign(T + 1, VectorXd());
  out.value = 0.0;
  double disc = 1.0;
  for (int t = 0; t <= T; ++t, disc *= gamma) out.value += disc * traj.r[t];

  VectorXd phi;
  MatrixXd dphi, A, B;
  VectorXd Vx_next = VectorXd::Zero(n);
  MatrixXd Vth = MatrixXd::Zero(m, nb);
  for (int t = T; t >= 0; --t) {
    basis_eval(ctrl.basis, traj.x[t], phi, dphi);
    const MatrixXd pi_x = ctrl.theta * dphi;  // m x n
    const VectorXd rx = reward.r_x(traj.x[t], traj.u[t]);
    const VectorXd ru = reward.r_u(traj.x[t], traj.u[t]);
    VectorXd g = ru;   // r_u + gamma B' V'_x, the common factor of both lines
    VectorXd vx = rx;
    if (t < T) {
      const std::vector<double> xu = concat(traj.x[t], traj.u[t]);
      eval_table(model.fd_x, n, n, xu, A);
      eval_table(model.fd_u, n, m, xu, B);
      g += gamma * (B.transpose() * Vx_next);
      vx += gamma * (A.transpose() * Vx_next);
    }
    vx += pi_x.transpose() * g;
    Vth = g * phi.transpose() + gamma * Vth;
    out.V_x_trace[t] = vx;
    Vx_next = std::move(vx);
  }
  out.V_theta = Vth;
  return out;
}

std::vector<double> identify(const Trajectory& traj, const DiscreteModel& model,
                             double lr) {
  const int n = model.sys->n();
  const int na = model.sys->n_alpha;
  VectorXd grad = VectorXd::Zero(na);
  MatrixXd J;
  for (int t = 0; t < traj.steps(); ++t) {
    const std::vector<double> xu = concat(traj.x[t], traj.u[t]);
    const std::vector<double> pred = model.step_est(traj.x[t], traj.u[t]);
    VectorXd e(n);
    for (int i = 0; i < n; ++i) e[i] = traj.x[t + 1][i] - pred[i];
    eval_table(model.fd_alpha, n, na, xu, J);
    grad += J.transpose() * e;
  }
  std::vector<double> alpha = model.alpha;
  for (int j = 0; j < na; ++j) {
    alpha[j] += lr * grad[j];
    alpha[j] = std::clamp(alpha[j], model.alpha_bounds[j][0], model.alpha_bounds[j][1]);
  }
  return alpha;
}

}  // namespace certirl
