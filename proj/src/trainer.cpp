#include "certirl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include "certirl/errors.hpp"
#include "certirl/parallel.hpp"

namespace certirl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> bounds_midpoint(const DynamicalSystem& sys) {
  std::vector<double> a(sys.n_alpha);
  for (int j = 0; j < sys.n_alpha; ++j)
    a[j] = 0.5 * (sys.alpha_bounds[j][0] + sys.alpha_bounds[j][1]);
  return a;
}

}  // namespace

Trainer::Trainer(DynamicalSystem sys, Controller ctrl, TrainConfig cfg)
    : sys_(std::move(sys)), cfg_(std::move(cfg)), ctrl_(std::move(ctrl)) {
  if (cfg_.certs.empty()) throw ConfigError("no certificates requested");
  if (cfg_.rollouts < 1 || cfg_.horizon < 1)
    throw ConfigError("need at least one rollout of at least one step");
  for (const auto& req : cfg_.certs)
    if (req.kind == CertificateKind::barrier && !sys_.Xu)
      throw ConfigError("barrier requested but the system has no unsafe set");
  if (sys_.n_alpha > 0 && sys_.alpha_offset != ctrl_.theta_dim())
    throw ConfigError("parameter layout mismatch: alpha_offset " +
                      std::to_string(sys_.alpha_offset) + " vs controller dimension " +
                      std::to_string(ctrl_.theta_dim()));

  // the product path needs the redundant box faces to have anything to work with
  if (cfg_.backend == Backend::handelman) sys_ = with_box_cuts(sys_);

  if (ctrl_.theta.rows() != ctrl_.n_inputs ||
      ctrl_.theta.cols() != static_cast<int>(ctrl_.basis.size()))
    ctrl_.theta = Eigen::MatrixXd::Zero(ctrl_.n_inputs, ctrl_.basis.size());
  state_.theta = ctrl_.theta;
  state_.alpha = bounds_midpoint(sys_);
  state_.lambda_pen = cfg_.penalty0;

  std::vector<double> goal = sys_.goal;
  if (goal.empty()) goal.assign(sys_.n(), 0.0);
  reward_ = quadratic_reward(goal, cfg_.u_weight);

  // alpha stays a symbolic program parameter when the dynamics allow it; when
  // alpha multiplies the input the closed loop has theta*alpha products, so the
  // program is rebuilt with alpha bound numerically at every iterate instead
  try {
    compile_program(state_.alpha);
  } catch (const ParamDegreeError&) {
    alpha_symbolic_ = false;
    compile_program(state_.alpha);
  }
}

void Trainer::compile_program(const std::vector<double>& alpha) {
  const int n = sys_.n();
  const DynamicalSystem* src = &sys_;
  DynamicalSystem bound;
  if (!alpha_symbolic_) {
    bound = bind_alpha(sys_, alpha);
    src = &bound;
  }

  ConditionOptions copt{cfg_.decrease_margin, cfg_.shell_delta};
  std::vector<PositivityCondition> conds;
  std::vector<BetaBlockInfo> blocks;
  int offset = 0;
  for (const auto& req : cfg_.certs) {
    CertificateTemplate tmpl = make_template(req.kind, req.degree, n, cfg_.lambda_rate);
    auto part = req.kind == CertificateKind::barrier
                    ? barrier_conditions(*src, ctrl_, tmpl, true, offset)
                    : lyapunov_conditions(*src, ctrl_, tmpl, copt, true, offset);
    conds.insert(conds.end(), part.begin(), part.end());
    blocks.push_back(BetaBlockInfo{tmpl, offset});
    offset += static_cast<int>(tmpl.basis.size());
  }

  CompileOptions opts;
  opts.strict_eps = cfg_.strict_eps;
  opts.n_theta = ctrl_.theta_dim();
  opts.alpha_offset = alpha_symbolic_ ? sys_.alpha_offset : ctrl_.theta_dim();
  opts.n_alpha = alpha_symbolic_ ? sys_.n_alpha : 0;
  opts.beta_blocks = std::move(blocks);
  prog_ = cfg_.backend == Backend::sos
              ? compile_sos(conds, cfg_.sos_mult_degree, opts)
              : compile_handelman(conds, cfg_.handelman_degree, opts);
}

bool Trainer::try_certify(const std::vector<double>& params) {
  ConeSolveOptions sop = default_solve_options();
  sop.exact = true;
  if (cfg_.solver_tol > 0.0) sop.ipm.tol = cfg_.solver_tol;
  SolveResult exact = solve(prog_, params, sop);
  if (exact.status == IpmStatus::numerical_failure) return false;

  std::vector<Certificate> certs;
  std::vector<CertificateReport> reps;
  for (int b = 0; b < static_cast<int>(prog_.beta_blocks.size()); ++b) {
    Certificate cert = extract_certificate(prog_, exact.u, state_.alpha, b);
    cert.cond_opts = ConditionOptions{cfg_.decrease_margin, cfg_.shell_delta};
    CertificateReport rep =
        check_certificate(sys_, ctrl_, cert, state_.alpha, cfg_.verify_samples, cfg_.seed);
    if (!rep.pass) return false;  // sound by construction: no pass, no certificate
    certs.push_back(std::move(cert));
    reps.push_back(std::move(rep));
  }
  state_.certificates = std::move(certs);
  state_.reports = std::move(reps);
  return true;
}

const IterRow& Trainer::step() {
  const auto t0 = Clock::now();
  const int it = state_.iteration;
  ctrl_.theta = state_.theta;

  // rollouts under the environment truth, shielded; one rng stream per slot
  DiscreteModel model = discretize(sys_, cfg_.dt, state_.alpha);
  std::vector<Trajectory> trajs(cfg_.rollouts);
  par_for(cfg_.rollouts, [&](std::int64_t k) {
    Rng rng(cfg_.seed, Rng::tag(31, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(k)));
    trajs[k] = rollout(model, ctrl_, reward_, sys_.sample_x0(rng), cfg_.horizon, cfg_.shield);
  });

  // identification: one gradient pass per trajectory, model refreshed between
  for (const auto& tr : trajs) {
    state_.alpha = identify(tr, model, cfg_.id_lr);
    model = discretize(sys_, cfg_.dt, state_.alpha);
  }

  // averaged value gradient through the identified model
  double value = 0.0;
  Eigen::MatrixXd vth = Eigen::MatrixXd::Zero(state_.theta.rows(), state_.theta.cols());
  for (const auto& tr : trajs) {
    ValueGradient vg = value_gradient(tr, model, ctrl_, reward_, cfg_.gamma);
    value += vg.value;
    vth += vg.V_theta;
  }
  value /= cfg_.rollouts;
  vth /= cfg_.rollouts;
  const double rollout_secs = seconds_since(t0);

  // lower level at the current iterate
  const auto t1 = Clock::now();
  if (!alpha_symbolic_) compile_program(state_.alpha);
  std::vector<double> params = alpha_symbolic_
                                   ? pack_params(prog_, state_.theta, state_.alpha)
                                   : pack_params(prog_, state_.theta, {});
  ConeSolveOptions sop = default_solve_options();
  if (cfg_.solver_tol > 0.0) sop.ipm.tol = cfg_.solver_tol;
  SolveResult sol = solve(prog_, params, sop);

  const bool solver_ok = sol.status != IpmStatus::numerical_failure;
  if (!solver_ok) {
    if (++fails_ >= 5)
      throw SolverFailure("lower-level solver failed " + std::to_string(fails_) +
                          " consecutive times, last at iteration " + std::to_string(it) +
                          " (" + std::to_string(prog_.decision_count()) + " decisions, c by then " +
                          std::to_string(state_.best_c) + ")");
  } else {
    fails_ = 0;
  }

  if (solver_ok && sol.c_star < state_.best_c) {
    state_.best_c = sol.c_star;
    state_.best_theta = state_.theta;
    state_.best_alpha = state_.alpha;
  }

  IterRow row;
  row.iteration = it;
  row.value = value;
  row.c_star = solver_ok ? sol.c_star : std::numeric_limits<double>::quiet_NaN();
  row.vtheta_norm = vth.norm();
  row.lambda_pen = state_.lambda_pen;
  row.alpha = state_.alpha;

  // certification gate: confirm with the exact (slack-free) solve, extract,
  // and run the posterior check before believing the slack
  if (solver_ok && sol.c_star <= cfg_.c_tol && try_certify(params)) {
    state_.status = TrainStatus::certified;
    state_.best_c = sol.c_star;
    state_.best_theta = state_.theta;
    state_.best_alpha = state_.alpha;
    row.ctheta_norm = 0.0;
    state_.log.push_back(std::move(row));
    state_.timings.push_back(
        TimingRow{it, rollout_secs, seconds_since(t1), seconds_since(t0)});
    ++state_.iteration;
    return state_.log.back();
  }

  // penalized ascent; the slack term vanishes when c* is already zero
  Eigen::MatrixXd cth = Eigen::MatrixXd::Zero(state_.theta.rows(), state_.theta.cols());
  if (solver_ok && sol.c_star > 0.0) {
    std::vector<int> fd_cols;
    if (sol.degenerate_dual && cfg_.fd_fallback)
      for (int j = 0; j < prog_.n_theta; ++j) fd_cols.push_back(j);
    GradResult gr = grad_slack(prog_, params, sol, fd_cols, sop);
    const int nb = static_cast<int>(ctrl_.basis.size());
    for (int i = 0; i < ctrl_.n_inputs; ++i)
      for (int k = 0; k < nb; ++k) cth(i, k) = gr.d_params[i * nb + k];
  }
  row.ctheta_norm = cth.norm();
  const double c_for_update = solver_ok ? sol.c_star : 0.0;
  state_.theta += cfg_.step * (vth - 2.0 * state_.lambda_pen * c_for_update * cth);
  state_.lambda_pen = std::min(state_.lambda_pen * cfg_.penalty_growth, cfg_.penalty_cap);

  state_.log.push_back(std::move(row));
  state_.timings.push_back(TimingRow{it, rollout_secs, seconds_since(t1), seconds_since(t0)});
  ++state_.iteration;
  return state_.log.back();
}

TrainState& Trainer::train() {
  while (state_.status == TrainStatus::running && state_.iteration < cfg_.max_iters) step();
  if (state_.status != TrainStatus::certified) {
    state_.status = TrainStatus::budget_exhausted;
    // hand back the best iterate seen, not wherever the ascent wandered off to
    if (std::isfinite(state_.best_c)) {
      state_.theta = state_.best_theta;
      state_.alpha = state_.best_alpha;
    }
    ctrl_.theta = state_.theta;
  }
  return state_;
}

TrainState train(const DynamicalSystem& sys, const Controller& ctrl, const TrainConfig& cfg) {
  Trainer t(sys, ctrl, cfg);
  t.train();
  return std::move(t.state());
}

}  // namespace certirl
