#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "certirl/model.hpp"
#include "certirl/rng.hpp"
#include "certirl/svg.hpp"

using namespace certirl;

namespace {

SemialgebraicSet ball_set(int n, std::vector<double> c, double r) {
  SemialgebraicSet s;
  s.shape = SemialgebraicSet::Shape::ball;
  s.center = c;
  s.radius = r;
  Polynomial d(n);
  for (int i = 0; i < n; ++i) {
    Polynomial xi = Polynomial::variable(n, i) - Polynomial::constant(n, c[i]);
    d += xi * xi;
  }
  s.ineqs.push_back(Polynomial::constant(n, r * r) - d);
  return s;
}

SemialgebraicSet box_set(int n, double half) {
  SemialgebraicSet s;
  s.shape = SemialgebraicSet::Shape::box;
  s.lo.assign(n, -half);
  s.hi.assign(n, half);
  for (int i = 0; i < n; ++i) {
    Polynomial xi = Polynomial::variable(n, i);
    s.ineqs.push_back(Polynomial::constant(n, half) - xi);
    s.ineqs.push_back(xi + Polynomial::constant(n, half));
  }
  return s;
}

// x1' = a1 x2, x2' = a2 x1^3 + u; truth (1, -1) is a damped-free oscillator
DynamicalSystem cubic_plant() {
  DynamicalSystem sys;
  sys.name = "cubic";
  sys.state = {"x1", "x2"};
  sys.inputs = {"u"};
  sys.n_alpha = 2;
  sys.alpha_offset = 2;
  sys.alpha_bounds = {{-1.5, 1.5}, {-1.5, 1.5}};
  sys.alpha_truth = {1.0, -1.0};
  sys.goal = {0.0, 0.0};
  sys.n_original = 2;
  Polynomial f1(3), f2(3);
  f1.add_term(Monomial{{0, 1, 0}}, ParamExpr::param(2));
  f2.add_term(Monomial{{3, 0, 0}}, ParamExpr::param(3));
  f2.add_term(Monomial{{0, 0, 1}}, ParamExpr::constant(1.0));
  sys.f = {f1, f2};
  sys.X = box_set(2, 100.0);
  sys.X0 = ball_set(2, {1.5, 0.0}, 0.5);
  sys.Xu = ball_set(2, {-0.8, -1.0}, 0.5);
  return sys;
}

// x' = a x + u on the line, one scalar unknown
DynamicalSystem scalar_plant(double truth) {
  DynamicalSystem sys;
  sys.name = "scalar";
  sys.state = {"x"};
  sys.inputs = {"u"};
  sys.n_alpha = 1;
  sys.alpha_offset = 1;
  sys.alpha_bounds = {{-1.5, 1.5}};
  sys.alpha_truth = {truth};
  sys.goal = {0.0};
  sys.n_original = 1;
  Polynomial f(2);
  f.add_term(Monomial{{1, 0}}, ParamExpr::param(1));
  f.add_term(Monomial{{0, 1}}, ParamExpr::constant(1.0));
  sys.f = {f};
  sys.X = box_set(1, 10.0);
  sys.X0 = ball_set(1, {1.0}, 0.1);
  return sys;
}

// constant drift straight into the unsafe ball; no unknowns
DynamicalSystem drift_plant() {
  DynamicalSystem sys;
  sys.name = "drift";
  sys.state = {"x1", "x2"};
  sys.inputs = {"u"};
  sys.goal = {0.0, 0.0};
  sys.n_original = 2;
  Polynomial f1(3), f2(3);
  f1.add_term(Monomial{{0, 0, 0}}, ParamExpr::constant(-1.0));
  f2.add_term(Monomial{{0, 0, 0}}, ParamExpr::constant(-1.0));
  f2.add_term(Monomial{{0, 0, 1}}, ParamExpr::constant(1.0));
  sys.f = {f1, f2};
  sys.X = box_set(2, 100.0);
  sys.X0 = ball_set(2, {0.2, 0.0}, 0.05);
  sys.Xu = ball_set(2, {-0.8, -1.0}, 0.5);
  return sys;
}

Controller linear_ctrl(std::vector<double> gains) {
  Controller ctrl;
  const int n = static_cast<int>(gains.size());
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(n, 0);
    e[i] = 1;
    ctrl.basis.push_back(Monomial{e});
  }
  ctrl.n_inputs = 1;
  ctrl.theta.resize(1, n);
  for (int i = 0; i < n; ++i) ctrl.theta(0, i) = gains[i];
  return ctrl;
}

double rollout_value(const DiscreteModel& md, const Controller& ctrl,
                     const RewardSpec& rw, const std::vector<double>& x0, int T,
                     double gamma) {
  auto traj = rollout(md, ctrl, rw, x0, T, false);
  double v = 0.0, disc = 1.0;
  for (double r : traj.r) {
    v += disc * r;
    disc *= gamma;
  }
  return v;
}

}  // namespace

TEST_CASE("rollout: series shapes, T = 0, and a frozen zero-field trajectory") {
  auto sys = scalar_plant(0.0);
  // zero the drift entirely: a = 0 estimate, theta = 0 controller
  sys.alpha_truth = {0.0};
  auto md = discretize(sys, 0.1, {0.0});
  auto ctrl = linear_ctrl({0.0});
  auto rw = quadratic_reward({0.0});

  auto t0 = rollout(md, ctrl, rw, {2.0}, 0, false);
  CHECK(t0.steps() == 0);
  CHECK(t0.x.size() == 1);
  CHECK(t0.u.size() == 1);
  CHECK(t0.r.size() == 1);
  CHECK(t0.r[0] == doctest::Approx(-4.0));
  CHECK(!t0.terminated_by_shield);

  // with f == 0 the state never moves and every reward is r(x0, 0)
  auto tr = rollout(md, ctrl, rw, {2.0}, 25, false);
  CHECK(tr.steps() == 25);
  for (const auto& x : tr.x) CHECK(x[0] == 2.0);
  for (double r : tr.r) CHECK(r == doctest::Approx(-4.0));
  CHECK(tr.dt == 0.1);
}

TEST_CASE("rollout: Euler truth step matches a hand-written stepper exactly") {
  auto sys = cubic_plant();
  const double dt = 0.02;
  auto md = discretize(sys, dt, {0.3, -0.7});  // estimate != truth on purpose
  auto ctrl = linear_ctrl({-0.4, -1.1});
  auto rw = quadratic_reward({0.0, 0.0}, 0.01);

  auto tr = rollout(md, ctrl, rw, {1.5, 0.0}, 200, false);
  REQUIRE(tr.steps() == 200);
  double x1 = 1.5, x2 = 0.0;
  for (int t = 0; t <= 200; ++t) {
    CHECK(tr.x[t][0] == doctest::Approx(x1).epsilon(1e-12));
    CHECK(tr.x[t][1] == doctest::Approx(x2).epsilon(1e-12));
    const double u = -0.4 * x1 - 1.1 * x2;
    CHECK(tr.u[t][0] == doctest::Approx(u).epsilon(1e-12));
    CHECK(tr.r[t] ==
          doctest::Approx(-(x1 * x1 + x2 * x2) - 0.01 * u * u).epsilon(1e-12));
    // truth dynamics, not the planted estimate
    const double d1 = x2, d2 = -x1 * x1 * x1 + u;
    x1 += dt * d1;
    x2 += dt * d2;
  }
}

TEST_CASE("rollout: short-horizon Euler stays near an RK4 reference") {
  auto sys = cubic_plant();
  const double dt = 5e-4;
  auto md = discretize(sys, dt, {1.0, -1.0});
  auto ctrl = linear_ctrl({0.0, 0.0});
  auto rw = quadratic_reward({0.0, 0.0});
  const int T = 500;

  auto tr = rollout(md, ctrl, rw, {1.5, 0.0}, T, false);
  double x1 = 1.5, x2 = 0.0;
  auto f1 = [](double, double b) { return b; };
  auto f2 = [](double a, double) { return -a * a * a; };
  for (int t = 0; t < T; ++t) {
    const double k11 = f1(x1, x2), k12 = f2(x1, x2);
    const double k21 = f1(x1 + 0.5 * dt * k11, x2 + 0.5 * dt * k12);
    const double k22 = f2(x1 + 0.5 * dt * k11, x2 + 0.5 * dt * k12);
    const double k31 = f1(x1 + 0.5 * dt * k21, x2 + 0.5 * dt * k22);
    const double k32 = f2(x1 + 0.5 * dt * k21, x2 + 0.5 * dt * k22);
    const double k41 = f1(x1 + dt * k31, x2 + dt * k32);
    const double k42 = f2(x1 + dt * k31, x2 + dt * k32);
    x1 += dt / 6.0 * (k11 + 2 * k21 + 2 * k31 + k41);
    x2 += dt / 6.0 * (k12 + 2 * k22 + 2 * k32 + k42);
  }
  CHECK(std::abs(tr.x[T][0] - x1) <= 1e-3);
  CHECK(std::abs(tr.x[T][1] - x2) <= 1e-3);
}

TEST_CASE("value gradient: hand-worked one-step chain") {
  // x' = x + dt (a x + u), pi = theta x, r = -x^2, T = 1, gamma = 1,
  // a = theta = 0, x(0) = 1. Backward pass gives V_theta = -dt 2 x(1) x(0).
  auto sys = scalar_plant(0.0);
  auto md = discretize(sys, 0.1, {0.0});
  auto ctrl = linear_ctrl({0.0});
  auto rw = quadratic_reward({0.0});

  auto tr = rollout(md, ctrl, rw, {1.0}, 1, false);
  auto vg = value_gradient(tr, md, ctrl, rw, 1.0);
  CHECK(vg.value == doctest::Approx(-2.0).epsilon(1e-15));
  REQUIRE(vg.V_theta.rows() == 1);
  REQUIRE(vg.V_theta.cols() == 1);
  CHECK(vg.V_theta(0, 0) == doctest::Approx(-0.2).epsilon(1e-12));
  // dV/dx at the root: -2 x(0) - 2 x(1) * dx(1)/dx(0) = -4
  CHECK(vg.V_x_trace[0][0] == doctest::Approx(-4.0).epsilon(1e-12));
}

TEST_CASE("value gradient: matches central differences on the cubic plant") {
  auto sys = cubic_plant();
  const double dt = 0.01, gamma = 0.99;
  const int T = 60;
  auto md = discretize(sys, dt, {1.0, -1.0});  // model == environment here
  auto rw = quadratic_reward({0.0, 0.0}, 0.01);

  Rng rng(4, Rng::tag(11));
  for (int trial = 0; trial < 6; ++trial) {
    auto ctrl = linear_ctrl({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    const std::vector<double> x0 = {rng.uniform(1.0, 2.0), rng.uniform(-0.5, 0.5)};
    auto tr = rollout(md, ctrl, rw, x0, T, false);
    auto vg = value_gradient(tr, md, ctrl, rw, gamma);

    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
      Controller cp = ctrl, cm = ctrl;
      cp.theta(0, k) += h;
      cm.theta(0, k) -= h;
      const double fd = (rollout_value(md, cp, rw, x0, T, gamma) -
                         rollout_value(md, cm, rw, x0, T, gamma)) /
                        (2 * h);
      CHECK(vg.V_theta(0, k) ==
            doctest::Approx(fd).epsilon(1e-4).scale(std::abs(fd) + 1e-9));
    }
  }
}

TEST_CASE("value gradient: central differences through a trig-recast plant") {
  // pendulum-shaped: a' = w, w' = -sin a + u, controller over {w, p, q}
  TrigSystem t;
  DynamicalSystem& b = t.base;
  b.name = "swing";
  b.state = {"a", "w"};
  b.inputs = {"u"};
  b.goal = {0.0, 0.0};
  b.n_original = 2;
  Polynomial fa(5), fw(5);
  fa.add_term(Monomial{{0, 1, 0, 0, 0}}, ParamExpr::constant(1.0));
  fw.add_term(Monomial{{0, 0, 0, 1, 0}}, ParamExpr::constant(-1.0));
  fw.add_term(Monomial{{0, 0, 1, 0, 0}}, ParamExpr::constant(1.0));
  b.f = {fa, fw};
  b.X = ball_set(2, {0, 0}, std::sqrt(2.0));
  b.X0 = ball_set(2, {0, 0}, 1.0);
  t.trig_vars = {0};
  auto sys = recast_trig(t);

  const double dt = 0.01, gamma = 0.99;
  const int T = 80;
  auto md = discretize(sys, dt, {});
  auto rw = quadratic_reward(sys.goal);

  Controller ctrl;
  ctrl.basis = {Monomial{{0, 1, 0, 0}}, Monomial{{0, 0, 1, 0}}, Monomial{{0, 0, 0, 1}}};
  ctrl.n_inputs = 1;
  ctrl.theta.resize(1, 3);
  Rng rng(4, Rng::tag(12));
  for (int trial = 0; trial < 4; ++trial) {
    for (int k = 0; k < 3; ++k) ctrl.theta(0, k) = rng.uniform(-0.5, 0.5);
    const auto x0 = sys.lift({rng.uniform(-0.8, 0.8), rng.uniform(-0.5, 0.5)});
    auto tr = rollout(md, ctrl, rw, x0, T, false);
    auto vg = value_gradient(tr, md, ctrl, rw, gamma);

    const double h = 1e-5;
    for (int k = 0; k < 3; ++k) {
      Controller cp = ctrl, cm = ctrl;
      cp.theta(0, k) += h;
      cm.theta(0, k) -= h;
      const double fd = (rollout_value(md, cp, rw, x0, T, gamma) -
                         rollout_value(md, cm, rw, x0, T, gamma)) /
                        (2 * h);
      CHECK(vg.V_theta(0, k) ==
            doctest::Approx(fd).epsilon(1e-4).scale(std::abs(fd) + 1e-9));
    }
  }
}

TEST_CASE("identify: stationary at the truth, correct ascent direction") {
  auto sys = scalar_plant(-1.0);
  auto md = discretize(sys, 0.5, {-1.0});
  auto ctrl = linear_ctrl({0.0});
  auto rw = quadratic_reward({0.0});
  auto tr = rollout(md, ctrl, rw, {1.0}, 20, false);

  // model already true: the residuals vanish and alpha stays put
  auto a = identify(tr, md, 0.7);
  CHECK(a[0] == doctest::Approx(-1.0).epsilon(1e-15));

  // model too optimistic (a_est > a_true): the step must push alpha down
  auto md2 = discretize(sys, 0.5, {0.5});
  auto a2 = identify(tr, md2, 0.7);
  CHECK(a2[0] < 0.5);

  // and a huge rate saturates at the declared bounds
  auto a3 = identify(tr, md2, 1e9);
  CHECK(a3[0] == -1.5);
}

TEST_CASE("identify: converges on the scalar plant from the midpoint guess") {
  auto sys = scalar_plant(-1.0);
  auto ctrl = linear_ctrl({0.0});
  auto rw = quadratic_reward({0.0});
  double a_est = 0.0;
  for (int it = 0; it < 50; ++it) {
    auto md = discretize(sys, 0.5, {a_est});
    auto tr = rollout(md, ctrl, rw, {1.0}, 20, false);
    a_est = identify(tr, md, 2.0)[0];
  }
  CHECK(std::abs(a_est - (-1.0)) <= 1e-3);
}

TEST_CASE("shield: truncates the series strictly before the unsafe set") {
  auto sys = drift_plant();
  auto md = discretize(sys, 0.05, {});
  auto ctrl = linear_ctrl({0.0, 0.0});
  auto rw = quadratic_reward({0.0, 0.0});
  const int T = 40;

  // unshielded, the drift runs straight through Xu
  auto open = rollout(md, ctrl, rw, {0.2, 0.0}, T, false);
  bool entered = false;
  for (const auto& x : open.x) entered = entered || sys.Xu->contains(x);
  CHECK(entered);
  CHECK(open.steps() == T);

  auto tr = rollout(md, ctrl, rw, {0.2, 0.0}, T, true);
  CHECK(tr.terminated_by_shield);
  CHECK(tr.steps() < T);
  CHECK(tr.x.size() == tr.u.size());
  CHECK(tr.x.size() == tr.r.size());
  for (const auto& x : tr.x) CHECK(!sys.Xu->contains(x));
}
