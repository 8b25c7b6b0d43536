#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "certirl/conelayer.hpp"
#include "certirl/model.hpp"
#include "certirl/relax.hpp"
#include "certirl/svg.hpp"
#include "certirl/verify.hpp"

namespace certirl {

// one certificate synthesized jointly with the controller; several requests
// share a single program (and its slack), e.g. barrier + Lyapunov
struct CertRequest {
  CertificateKind kind = CertificateKind::barrier;
  int degree = 2;
};

struct TrainConfig {
  // upper level
  double step = 1e-3;           // ascent rate on theta
  double penalty0 = 1.0;        // slack penalty at iteration 0
  double penalty_growth = 1.5;  // multiplied in every iteration
  double penalty_cap = 1e6;
  int max_iters = 100;

  // lower level
  Backend backend = Backend::sos;
  std::vector<CertRequest> certs;
  double c_tol = 1e-8;           // slack level at which certification is attempted
  double lambda_rate = 1.0;      // barrier decay rate
  double decrease_margin = 1e-3; // Lyapunov decrease shaping (mu)
  double shell_delta = 0.0;      // Handelman: excise a ball around the goal
  int handelman_degree = 4;      // product multiplicity D
  int sos_mult_degree = -1;      // -1: smallest valid even degrees
  double strict_eps = 1e-4;      // margin standing in for strict inequalities

  // rollouts / identification
  int horizon = 200;       // steps per rollout (T)
  int rollouts = 8;        // rollouts per iteration (K)
  double gamma = 0.99;
  double dt = 0.01;
  double id_lr = 1e-2;     // identification gradient rate
  double u_weight = 1e-2;  // input penalty in the quadratic reward
  bool shield = true;

  std::uint64_t seed = 0;
  double solver_tol = 0.0;   // 0: solver default (or CERTIRL_SOLVER_TOL)
  long long verify_samples = 20000;  // posterior check budget per condition
  bool fd_fallback = true;   // recompute theta slots of dc*/dtheta by finite
                             // differences when the duals are degenerate
                             // (one solve per entry; disable for wide theta)
};

enum class TrainStatus { running, certified, budget_exhausted };

// deterministic per-iteration log row (everything train_log.csv carries; wall
// times deliberately live elsewhere so the log is bit-reproducible)
struct IterRow {
  int iteration = 0;
  double value = 0.0;        // mean discounted return over the K rollouts
  double c_star = 0.0;
  double vtheta_norm = 0.0;  // Frobenius norm of the value gradient
  double ctheta_norm = 0.0;  // norm of the slack gradient (theta slots)
  double lambda_pen = 0.0;   // penalty weight used in this update
  std::vector<double> alpha; // estimate after this iteration's identification
};

struct TimingRow {
  int iteration = 0;
  double rollout_seconds = 0.0;
  double solve_seconds = 0.0;
  double total_seconds = 0.0;
};

struct TrainState {
  Eigen::MatrixXd theta;      // current controller coefficients
  std::vector<double> alpha;  // current plant estimate
  double lambda_pen = 1.0;
  int iteration = 0;
  TrainStatus status = TrainStatus::running;

  std::vector<IterRow> log;
  std::vector<TimingRow> timings;

  // best iterate by slack, restored on budget exhaustion
  Eigen::MatrixXd best_theta;
  std::vector<double> best_alpha;
  double best_c = std::numeric_limits<double>::infinity();

  // populated once status == certified (one entry per requested certificate)
  std::vector<Certificate> certificates;
  std::vector<CertificateReport> reports;
};

// Bilevel loop: shielded rollouts under the environment, identification of
// alpha from the observed transitions, one relaxed certificate solve at the
// current (theta, alpha), then the penalized ascent step
//   theta += step * (V_theta - 2 lambda_pen c* c*_theta).
// When the slack reaches c_tol the program is re-solved in exact form and the
// extracted certificate goes through the posterior check; only a passing
// check flips the status to certified.
class Trainer {
 public:
  Trainer(DynamicalSystem sys, Controller ctrl, TrainConfig cfg);

  const IterRow& step();  // one iteration; appends to the log
  TrainState& train();    // run to certification or budget exhaustion

  TrainState& state() { return state_; }
  const TrainConfig& config() const { return cfg_; }
  const Controller& controller() const { return ctrl_; }
  // the system the lower level actually sees (cut-augmented for Handelman)
  const DynamicalSystem& system() const { return sys_; }

 private:
  void compile_program(const std::vector<double>& alpha);
  bool try_certify(const std::vector<double>& params);

  DynamicalSystem sys_;
  TrainConfig cfg_;
  Controller ctrl_;
  RewardSpec reward_;
  TrainState state_;

  ConeProgram prog_;
  bool alpha_symbolic_ = true;  // false: alpha enters products with theta,
                                // program recompiled at every iterate
  int fails_ = 0;               // consecutive lower-level failures
};

// convenience wrapper over Trainer for the common fire-and-forget path
TrainState train(const DynamicalSystem& sys, const Controller& ctrl, const TrainConfig& cfg);

}  // namespace certirl
