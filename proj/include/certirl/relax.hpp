#pragma once

#include <optional>
#include <string>
#include <vector>

#include "certirl/model.hpp"
#include "certirl/poly.hpp"

namespace certirl {

enum class Backend { sos, handelman };

enum class CertificateKind { barrier, lyapunov };

struct CertificateTemplate {
  CertificateKind kind = CertificateKind::barrier;
  int degree = 2;
  double lambda_rate = 1.0;        // exponential barrier rate
  std::vector<Monomial> basis;     // filled by make_template if empty
};

// basis: all monomials up to the degree; Lyapunov templates drop the constant
// (a constant offset is meaningless for a decrease certificate and would give
// the LP a free positive shift)
CertificateTemplate make_template(CertificateKind kind, int degree, int nvars,
                                  double lambda_rate = 1.0);

// Shaping knobs for the condition builders. decrease_margin adds
// mu*||x-goal||^2 to the Lyapunov decrease requirement so the zero function
// can never certify; shell_delta > 0 restricts Lyapunov conditions to
// X \ B_delta(goal), which the linear-programming path needs because products
// of inequalities that are strictly positive at the goal cannot represent a
// target vanishing there.
struct ConditionOptions {
  double decrease_margin = 0.0;
  double shell_delta = 0.0;
};

struct PositivityCondition {
  Polynomial target;        // to be shown >= 0 on the domain
  SemialgebraicSet domain;  // sampling hints preserved for posterior checks
  bool strict = false;      // "> 0": compiled as >= eps
  std::string label;
};

// Append the bounding-box faces of a ball-shaped set as redundant valid cuts.
// A lone quadratic inequality spans almost nothing under products, so the
// Handelman path needs these; the SOS path should not pay for the extra
// sigma blocks, which is why the cuts are opt-in rather than part of the
// set constructors. Idempotent: sets that already carry more than the ball
// inequality (or whose sampling metadata does not match the variable count,
// e.g. recast sets) come back unchanged.
SemialgebraicSet with_box_cuts(const SemialgebraicSet& s);

// cut-augmented copy of every domain the conditions can reference
DynamicalSystem with_box_cuts(const DynamicalSystem& sys);

// (-B on X0), (B strict on Xu), (-dB/dx . f_closed + lambda B on X)
std::vector<PositivityCondition> barrier_conditions(const DynamicalSystem& sys,
                                                    const Controller& ctrl,
                                                    const CertificateTemplate& tmpl,
                                                    bool symbolic_theta = true,
                                                    int beta_offset = 0);

// (V on X) and (-dV/dx . f_closed - mu ||x-goal||^2 on X), optionally on the
// shell domain
std::vector<PositivityCondition> lyapunov_conditions(const DynamicalSystem& sys,
                                                     const Controller& ctrl,
                                                     const CertificateTemplate& tmpl,
                                                     const ConditionOptions& opts = {},
                                                     bool symbolic_theta = true,
                                                     int beta_offset = 0);

// ------------------------------------------------------------------------
// Compiled relaxed certificate search
//   min c   s.t. |target_a(beta; theta, alpha) - expansion_a(Q, lambda)| <= c
//                per matched monomial a, Q blocks PSD, lambda >= 0, c >= 0.
// Columns: [beta | lambda | svec(Q) blocks]; c is appended last when the
// program is instantiated. All row data is affine in (theta, alpha).
// ------------------------------------------------------------------------

struct MatchRow {
  std::vector<std::pair<int, AffineParam>> lhs;  // column -> coefficient
  AffineParam rhs;
  int condition = 0;
  Monomial mono;
};

struct GramBlockInfo {
  int condition = 0;
  int ineq = -1;  // -1: main SOS block; otherwise index into the domain list
  std::vector<Monomial> basis;
  int col0 = 0;  // first svec column
};

struct LambdaInfo {
  int condition = 0;
  std::vector<int> powers;  // exponent per domain inequality
  int col = 0;
  double scale = 1.0;  // power product divided by this before entering rows
};

struct BetaBlockInfo {  // export metadata: which beta slice is which certificate
  CertificateTemplate tmpl;
  int offset = 0;
};

struct ConeProgram {
  Backend backend = Backend::sos;
  int n_state = 0;
  int n_beta = 0, n_lambda = 0, n_svec = 0;
  int n_theta = 0;        // parameter slots [0, n_theta)
  int alpha_offset = 0;   // alpha parameter slots [alpha_offset, alpha_offset+n_alpha)
  int n_alpha = 0;

  std::vector<MatchRow> rows;
  std::vector<GramBlockInfo> grams;
  std::vector<LambdaInfo> lambdas;
  std::vector<BetaBlockInfo> beta_blocks;
  std::vector<PositivityCondition> conditions;
  double strict_eps = 1e-4;

  int c_col() const { return n_beta + n_lambda + n_svec; }
  // reported program size: beta + multipliers + slack
  int decision_count() const { return n_beta + n_lambda + n_svec + 1; }
};

struct CompileOptions {
  double strict_eps = 1e-4;
  int n_theta = 0;       // parameter layout, forwarded into the program
  int alpha_offset = 0;
  int n_alpha = 0;
  std::vector<BetaBlockInfo> beta_blocks;  // export metadata (optional)
};

// Putinar path: target - sum sigma_i g_i = w' Q0 w with every sigma_i SOS.
// mult_degree < 0 picks, per inequality, the smallest even degree reaching the
// target degree; an explicit value must be even.
ConeProgram compile_sos(const std::vector<PositivityCondition>& conditions,
                        int mult_degree = -1, const CompileOptions& opts = {});

// Handelman path: target = sum lambda_a prod_j g_j^{a_j} over ||a||_1 <= D.
ConeProgram compile_handelman(const std::vector<PositivityCondition>& conditions,
                              int D, const CompileOptions& opts = {});

}  // namespace certirl
