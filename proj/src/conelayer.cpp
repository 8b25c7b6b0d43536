#include "certirl/conelayer.hpp"

#include <chrono>
#include <cstdlib>
#include <cmath>

namespace certirl {

ConeSolveOptions default_solve_options() {
  ConeSolveOptions o;
  if (const char* env = std::getenv("CERTIRL_SOLVER_TOL")) {
    char* end = nullptr;
    double t = std::strtod(env, &end);
    if (end != env && t > 0.0 && t < 1.0) o.ipm.tol = t;
  }
  return o;
}

std::vector<double> pack_params(const ConeProgram& prog, const Eigen::MatrixXd& theta,
                                const std::vector<double>& alpha) {
  const int nt = static_cast<int>(theta.rows() * theta.cols());
  if (nt != prog.n_theta)
    throw ConfigError("controller has " + std::to_string(nt) + " entries, program expects " +
                      std::to_string(prog.n_theta));
  if (static_cast<int>(alpha.size()) != prog.n_alpha)
    throw ConfigError("alpha has " + std::to_string(alpha.size()) + " entries, program expects " +
                      std::to_string(prog.n_alpha));
  std::vector<double> p(std::max(prog.n_theta, prog.alpha_offset + prog.n_alpha), 0.0);
  for (int i = 0; i < theta.rows(); ++i)
    for (int k = 0; k < theta.cols(); ++k) p[i * theta.cols() + k] = theta(i, k);
  for (int j = 0; j < prog.n_alpha; ++j) p[prog.alpha_offset + j] = alpha[j];
  return p;
}

NumericCone instantiate(const ConeProgram& prog, const std::vector<double>& params,
                        bool exact) {
  const int nb = prog.n_beta, nl = prog.n_lambda, ns = prog.n_svec;
  const int R = static_cast<int>(prog.rows.size());
  const int N = nb + nl + ns + (exact ? 0 : 1);
  const int ccol = prog.c_col();

  NumericCone nc;
  nc.n_match = R;
  nc.cone.zero = exact ? R : 0;
  nc.cone.nonneg = (exact ? 0 : 2 * R + 1) + nl;
  for (const auto& blk : prog.grams) nc.cone.psd.push_back(static_cast<int>(blk.basis.size()));

  const int M = nc.cone.rows();
  nc.q = Eigen::VectorXd::Zero(N);
  if (!exact) nc.q[ccol] = 1.0;
  nc.G = Eigen::MatrixXd::Zero(M, N);
  nc.h = Eigen::VectorXd::Zero(M);

  int row = 0;
  if (exact) {
    for (int r = 0; r < R; ++r, ++row) {
      for (const auto& [col, ap] : prog.rows[r].lhs) nc.G(row, col) = ap.eval(params);
      nc.h[row] = prog.rows[r].rhs.eval(params);
    }
    for (int i = 0; i < nl; ++i, ++row) nc.G(row, nb + i) = -1.0;
  } else {
    // |row_r| <= c as the pair  c - row_r >= 0,  c + row_r >= 0
    for (int r = 0; r < R; ++r) {
      const double rv = prog.rows[r].rhs.eval(params);
      for (const auto& [col, ap] : prog.rows[r].lhs) {
        const double v = ap.eval(params);
        nc.G(row, col) = v;
        nc.G(row + 1, col) = -v;
      }
      nc.G(row, ccol) = -1.0;
      nc.G(row + 1, ccol) = -1.0;
      nc.h[row] = rv;
      nc.h[row + 1] = -rv;
      row += 2;
    }
    for (int i = 0; i < nl; ++i, ++row) nc.G(row, nb + i) = -1.0;
    nc.G(row, ccol) = -1.0;
    ++row;
  }
  for (int k = 0; k < ns; ++k, ++row) nc.G(row, nb + nl + k) = -1.0;
  return nc;
}

SolveResult solve(const ConeProgram& prog, const std::vector<double>& params,
                  const ConeSolveOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  NumericCone nc = instantiate(prog, params, opts.exact);
  IpmSolution sol = ipm_solve(nc.q, nc.G, nc.h, nc.cone, opts.ipm);

  SolveResult res;
  res.status = sol.status;
  res.u = sol.x;
  res.gap = sol.gap;
  res.pres = sol.pres;
  res.dres = sol.dres;
  res.iters = sol.iters;
  res.c_star = opts.exact ? 0.0 : std::max(0.0, sol.x[prog.c_col()]);
  const int R = static_cast<int>(prog.rows.size());
  res.z_match = Eigen::VectorXd::Zero(R);
  if (!opts.exact)
    for (int r = 0; r < R; ++r) res.z_match[r] = sol.z[2 * r] - sol.z[2 * r + 1];
  res.degenerate_dual = sol.status == IpmStatus::numerical_failure || sol.pres > 1e-5 ||
                        sol.dres > 1e-5;
  res.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

GradResult grad_slack(const ConeProgram& prog, const std::vector<double>& params,
                      const SolveResult& at, const std::vector<int>& fd_cols,
                      const ConeSolveOptions& opts) {
  GradResult out;
  out.d_params = Eigen::VectorXd::Zero(static_cast<int>(params.size()));

  // stationarity of  c + z' (G(p) u - h(p))  in p, with the match pair folded
  // into one signed dual weight per row
  for (size_t r = 0; r < prog.rows.size(); ++r) {
    const double zr = at.z_match[static_cast<int>(r)];
    if (zr == 0.0) continue;
    for (const auto& [col, ap] : prog.rows[r].lhs) {
      const double uc = at.u[col];
      for (const auto& [j, w] : ap.lin) out.d_params[j] += zr * w * uc;
    }
    for (const auto& [j, w] : prog.rows[r].rhs.lin) out.d_params[j] -= zr * w;
  }

  if (at.degenerate_dual && !fd_cols.empty()) {
    out.used_fd = true;
    std::vector<double> p2 = params;
    for (int j : fd_cols) {
      const double h = 1e-5 * std::max(1.0, std::abs(params[j]));
      p2[j] = params[j] + h;
      SolveResult shifted = solve(prog, p2, opts);
      p2[j] = params[j];
      out.d_params[j] = (shifted.c_star - at.c_star) / h;
    }
  }
  return out;
}

}  // namespace certirl
