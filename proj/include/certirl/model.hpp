#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "certirl/poly.hpp"
#include "certirl/rng.hpp"

namespace certirl {

// A set { x : g_i(x) >= 0 for all i } plus sampling metadata. The inequality
// list is what the relaxations consume; it may contain redundant valid cuts
// (e.g. bounding-box faces of a ball) that enlarge the Handelman product
// space without changing the set.
struct SemialgebraicSet {
  std::vector<Polynomial> ineqs;

  enum class Shape { ball, box, generic };
  Shape shape = Shape::generic;
  std::vector<double> center;  // ball sampling
  double radius = 0.0;
  std::vector<double> lo, hi;  // box sampling / rejection bounding box

  bool contains(const std::vector<double>& x, double tol = 0.0) const;
  int nvars() const { return ineqs.empty() ? 0 : ineqs.front().nvars(); }
};

// Continuous-time control-affine-in-reading polynomial system
//   xdot = f(x, u; alpha),  f_i over variables [x_1..x_n, u_1..u_m],
// with coefficients affine in the unknown plant parameters alpha. Parameter
// indices: theta occupies [0, theta_dim) of the shared parameter space and
// alpha lives at [alpha_offset, alpha_offset + n_alpha).
struct DynamicalSystem {
  std::string name;
  std::vector<std::string> state;
  std::vector<std::string> inputs;
  std::vector<Polynomial> f;

  int n_alpha = 0;
  int alpha_offset = 0;
  std::vector<std::array<double, 2>> alpha_bounds;
  std::vector<double> alpha_truth;  // hidden from the learner; used by the environment

  std::vector<double> goal;  // goal state in (possibly recast) coordinates
  SemialgebraicSet X, X0;
  std::optional<SemialgebraicSet> Xu;

  // recast bookkeeping: X0 is sampled in the original coordinates and lifted
  int n_original = 0;                   // original state dimension (== n() if no recast)
  std::vector<int> trig_of_original;   // for each recast angle: its original index

  int n() const { return static_cast<int>(state.size()); }
  int m() const { return static_cast<int>(inputs.size()); }
  int var_count() const { return n() + m(); }

  // lift a point of the original coordinates into the recast state
  std::vector<double> lift(const std::vector<double>& x_orig) const;
  // draw x(0): sample the X0 ball in original coordinates, then lift
  std::vector<double> sample_x0(Rng& rng) const;
};

// Pre-recast description: dynamics may reference sin/cos of declared angle
// states through extra trailing variables, ordered
//   [x_1..x_n, u_1..u_m, sin(a_1), cos(a_1), sin(a_2), ...]
// for the declared angle list a_1, a_2, ...
struct TrigSystem {
  DynamicalSystem base;          // f over the extended variable list
  std::vector<int> trig_vars;    // original state indices that are angles
};

// Exact polynomial recasting: p = sin(a), q = cos(a) appended per angle, with
// pdot = q*adot, qdot = -p*adot, the circle p^2+q^2 = 1 added to every set as
// an inequality pair, and p, q in [-1, 1] added to X as valid cuts.
DynamicalSystem recast_trig(const TrigSystem& sys);

struct Controller {
  std::vector<Monomial> basis;  // over the (recast) state
  int n_inputs = 0;
  Eigen::MatrixXd theta;  // n_inputs x |basis|

  std::vector<double> eval(const std::vector<double>& x) const;
  int theta_dim() const { return n_inputs * static_cast<int>(basis.size()); }
};

// closed-loop vector field over state variables only; theta symbolic
// (parameter indices i*|basis|+k) when symbolic_theta, else bound numerically
std::vector<Polynomial> closed_loop(const DynamicalSystem& sys, const Controller& ctrl,
                                    bool symbolic_theta = true);

// bind the alpha coefficients of a system to numeric values (used for plants
// whose alpha multiplies the input, where theta and alpha cannot both stay
// symbolic in the same product)
DynamicalSystem bind_alpha(const DynamicalSystem& sys, const std::vector<double>& alpha);

// Euler-discretized model around one controller + identified alpha. Holds the
// flattened evaluators for the rollout/identification/shield hot paths:
//  - environment truth step (alpha_truth),
//  - planted model step and Jacobians at the identified alpha,
//  - one-step closed-loop images at the alpha interval corners (shield).
struct DiscreteModel {
  const DynamicalSystem* sys = nullptr;
  double dt = 0.0;
  std::vector<double> alpha;  // identified estimate
  std::vector<std::array<double, 2>> alpha_bounds;

  std::vector<FlatPoly> fd_truth;   // over [x, u]
  std::vector<FlatPoly> fd_est;     // over [x, u]
  std::vector<FlatPoly> fd_x;       // n x n Jacobian of fd_est, row major
  std::vector<FlatPoly> fd_u;       // n x m
  std::vector<FlatPoly> fd_alpha;   // n x n_alpha (exact: dynamics alpha-affine)

  // shield evaluators (populated when the system has an unsafe set)
  std::vector<std::vector<FlatPoly>> fd_corners;  // midpoint first, then corners; over [x, u]
  std::vector<FlatPoly> xu_ineqs;                 // unsafe-set inequalities
  std::vector<FlatPoly> xu_grad;                  // their gradients, ineq-major
  std::vector<FlatPoly> xu_hess;                  // their Hessians, row-major per ineq

  std::vector<double> step_truth(const std::vector<double>& x,
                                 const std::vector<double>& u) const;
  std::vector<double> step_est(const std::vector<double>& x,
                               const std::vector<double>& u) const;
};

DiscreteModel discretize(const DynamicalSystem& sys, double dt,
                         const std::vector<double>& alpha_est);

// One-step-lookahead shield: true if x is already unsafe, or any corner/center
// of the alpha interval maps x into the unsafe set inflated by the spread of
// those predictions (first-order inflation with a quadratic remainder bound).
bool in_shield(const std::vector<double>& x, const DiscreteModel& model,
               const DynamicalSystem& sys, const Controller& ctrl);

}  // namespace certirl
