#pragma once

#include <Eigen/Dense>
#include <vector>

#include "certirl/ipm.hpp"
#include "certirl/relax.hpp"

namespace certirl {

// Numeric instantiation of a ConeProgram at a concrete parameter vector
// (theta and alpha share one index space; see ConeProgram layout fields).
//
// Relaxed form: decisions u = [beta | lambda | svec | c],
//   min c   s.t.  |row_r(u; p)| <= c,  lambda >= 0,  c >= 0,  Q blocks PSD.
// Exact form drops c and pins every row to equality (used to confirm a
// certificate once the relaxed optimum reaches zero).

struct ConeSolveOptions {
  bool exact = false;
  IpmOptions ipm;  // tol defaulted from CERTIRL_SOLVER_TOL when set
};

ConeSolveOptions default_solve_options();

struct SolveResult {
  IpmStatus status = IpmStatus::numerical_failure;
  double c_star = 0.0;          // clamped at zero
  Eigen::VectorXd u;            // [beta | lambda | svec] (+ c in relaxed form)
  Eigen::VectorXd z_match;      // per match row: dual of (+row) minus dual of (-row)
  bool degenerate_dual = false; // duals unreliable; gradient falls back to differences
  double gap = 0.0, pres = 0.0, dres = 0.0;
  int iters = 0;
  double solve_seconds = 0.0;
};

// full parameter vector [theta | ... | alpha] per the program's layout
std::vector<double> pack_params(const ConeProgram& prog, const Eigen::MatrixXd& theta,
                                const std::vector<double>& alpha);

SolveResult solve(const ConeProgram& prog, const std::vector<double>& params,
                  const ConeSolveOptions& opts = default_solve_options());

// d c* / d params via the match-row duals:
//   dc*/dp_j = sum_r (z+_r - z-_r) * d row_r / dp_j
// evaluated at the relaxed optimum. When the solve flagged degenerate duals the
// entries in `fd_cols` (typically the theta slots) are recomputed by forward
// differences, each requiring one extra solve.
struct GradResult {
  Eigen::VectorXd d_params;
  bool used_fd = false;
};

GradResult grad_slack(const ConeProgram& prog, const std::vector<double>& params,
                      const SolveResult& at, const std::vector<int>& fd_cols = {},
                      const ConeSolveOptions& opts = default_solve_options());

// dense numeric form, also what the program dump file records
struct NumericCone {
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  ConeDims cone;
  int n_match = 0;  // leading 2*n_match rows are the +/- match pairs (relaxed)
};

NumericCone instantiate(const ConeProgram& prog, const std::vector<double>& params,
                        bool exact);

}  // namespace certirl
