#include "certirl/bench.hpp"

#include <cmath>

#include "certirl/errors.hpp"

namespace certirl {

namespace {

SemialgebraicSet ball_set(int n, std::vector<double> c, double r) {
  SemialgebraicSet s;
  s.shape = SemialgebraicSet::Shape::ball;
  s.center = std::move(c);
  s.radius = r;
  Polynomial d(n);
  for (int i = 0; i < n; ++i) {
    Polynomial xi = Polynomial::variable(n, i) - Polynomial::constant(n, s.center[i]);
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

Monomial mono(std::vector<int> e) { return Monomial{std::move(e)}; }

// x1' = a1 x2, x2' = a2 x1^3 + u on [-100,100]^2; the interval admits the
// undamped cubic oscillator (1, -1) the original example fixes
BenchmarkSpec make_pj() {
  BenchmarkSpec b;
  b.name = "pj";

  DynamicalSystem& sys = b.sys;
  sys.name = "pj";
  sys.state = {"x1", "x2"};
  sys.inputs = {"u"};
  sys.n_alpha = 2;
  sys.alpha_offset = 2;
  sys.alpha_bounds = {{-1.5, 1.5}, {-1.5, 1.5}};
  sys.alpha_truth = {1.0, -1.0};
  sys.goal = {0.0, 0.0};
  sys.n_original = 2;
  Polynomial f1(3), f2(3);
  f1.add_term(mono({0, 1, 0}), ParamExpr::param(2));
  f2.add_term(mono({3, 0, 0}), ParamExpr::param(3));
  f2.add_term(mono({0, 0, 1}), ParamExpr::constant(1.0));
  sys.f = {f1, f2};
  sys.X = box_set(2, 100.0);
  sys.X0 = ball_set(2, {1.5, 0.0}, 0.5);
  sys.Xu = ball_set(2, {-0.8, -1.0}, 0.5);

  b.ctrl.basis = controller_basis(2, 1);
  b.ctrl.n_inputs = 1;
  b.ctrl.theta = Eigen::MatrixXd::Zero(1, b.ctrl.basis.size());

  TrainConfig& c = b.config;
  c.certs = {{CertificateKind::barrier, 2}};
  c.backend = Backend::sos;
  // negative decay rate: B may grow along trajectories it never needs to cross.
  // no quadratic barrier closes the flow condition on this box with a positive
  // rate (the unsafe tube exits the box), and -0.1 keeps the widest gain region
  c.lambda_rate = -0.1;
  c.step = 2e-3;
  c.max_iters = 150;
  c.horizon = 200;
  c.rollouts = 8;
  c.dt = 0.01;
  c.id_lr = 2.0;  // the interval midpoint zeroes the plant; identify fast
  c.u_weight = 1e-2;

  b.lp_degree = 4;  // the flow condition target is quartic
  b.notes = "truth (1,-1): the undamped cubic oscillator the interval is built around";
  return b;
}

// gym-style pendulum, recast to (phi, phidot, p, q) with p = sin phi; only
// gravity is unknown
BenchmarkSpec make_pendulum() {
  BenchmarkSpec b;
  b.name = "pendulum";

  TrigSystem ts;
  DynamicalSystem& base = ts.base;
  base.name = "pendulum";
  base.state = {"phi", "phidot"};
  base.inputs = {"u"};
  base.n_alpha = 1;
  base.alpha_offset = 3;  // controller basis below has three entries
  base.alpha_bounds = {{9.0, 10.5}};
  base.alpha_truth = {9.81};
  base.goal = {0.0, 0.0};
  // extended variable order: [phi, phidot, u, sin phi, cos phi]
  Polynomial f1(5), f2(5);
  f1.add_term(mono({0, 1, 0, 0, 0}), ParamExpr::constant(1.0));
  f2.add_term(mono({0, 0, 0, 1, 0}), ParamExpr::param(3, -1.0));  // -(g/l) sin
  f2.add_term(mono({0, 1, 0, 0, 0}), ParamExpr::constant(-0.1));  // -(d/ml^2)
  f2.add_term(mono({0, 0, 1, 0, 0}), ParamExpr::constant(1.0));   // u/(ml^2)
  base.f = {f1, f2};
  base.X = ball_set(2, {0.0, 0.0}, std::sqrt(2.0));
  base.X0 = ball_set(2, {0.0, 0.0}, 1.0);
  ts.trig_vars = {0};
  b.sys = recast_trig(ts);

  // the controller sees phidot, sin and cos but not the raw angle
  b.ctrl.basis = {mono({0, 1, 0, 0}), mono({0, 0, 1, 0}), mono({0, 0, 0, 1})};
  b.ctrl.n_inputs = 1;
  b.ctrl.theta = Eigen::MatrixXd::Zero(1, 3);

  TrainConfig& c = b.config;
  c.certs = {{CertificateKind::lyapunov, 2}};
  c.backend = Backend::sos;
  c.decrease_margin = 0.05;
  c.step = 2e-3;
  c.max_iters = 150;
  c.horizon = 300;
  c.rollouts = 8;
  c.dt = 0.01;
  c.id_lr = 0.1;
  c.u_weight = 1e-2;

  b.lp_shell_delta = 0.1;
  b.lp_degree = 3;  // decrease target is cubic over the recast state
  b.notes = "m = l = 1, d = 0.1; g in [9, 10.5], environment at 9.81";
  return b;
}

// linear bicycle model; the alpha intervals absorb unmodeled lateral effects
// and the environment sits at their midpoints (the source fixes no value)
BenchmarkSpec make_lane_keeping() {
  BenchmarkSpec b;
  b.name = "lane_keeping";

  const double cf = 1.2e5, cr = 1.2e5;  // tire stiffness front/rear
  const double mass = 1650.0, iz = 2315.0;
  const double la = 1.11, lb = 1.59;  // axle distances
  const double vx = 15.0;

  const double a11 = -(cf + cr) / (mass * vx);
  const double a13 = (lb * cr - la * cf) / (mass * vx) - vx;
  const double a31 = (lb * cr - la * cf) / (iz * vx);
  const double a33 = -(la * la * cf + lb * lb * cr) / (iz * vx);
  const double b1 = cf / mass, b3 = la * cf / iz;

  DynamicalSystem& sys = b.sys;
  sys.name = "lane_keeping";
  sys.state = {"y", "vy", "psi", "r"};
  sys.inputs = {"u"};
  sys.n_alpha = 2;
  sys.alpha_offset = 4;
  sys.alpha_bounds = {{-15.0, 5.0}, {-10.0, -1.0}};
  sys.alpha_truth = {-5.0, -5.5};
  sys.goal = {0.0, 0.0, 0.0, 0.0};
  sys.n_original = 4;

  Polynomial f0(5), f1(5), f2(5), f3(5);
  f0.add_term(mono({0, 1, 0, 0, 0}), ParamExpr::constant(1.0));
  f0.add_term(mono({0, 0, 1, 0, 0}), ParamExpr::constant(vx));
  f1.add_term(mono({0, 1, 0, 0, 0}), ParamExpr::constant(a11));
  {
    ParamExpr pe = ParamExpr::constant(a13);  // a13 + alpha_1
    pe.add(ParamExpr::param(4));
    f1.add_term(mono({0, 0, 0, 1, 0}), pe);
  }
  f1.add_term(mono({0, 0, 0, 0, 1}), ParamExpr::constant(b1));
  f2.add_term(mono({0, 0, 0, 1, 0}), ParamExpr::constant(1.0));
  f3.add_term(mono({0, 1, 0, 0, 0}), ParamExpr::constant(a31));
  {
    ParamExpr pe = ParamExpr::constant(a33);  // a33 + alpha_2
    pe.add(ParamExpr::param(5));
    f3.add_term(mono({0, 0, 0, 1, 0}), pe);
  }
  f3.add_term(mono({0, 0, 0, 0, 1}), ParamExpr::constant(b3));
  sys.f = {f0, f1, f2, f3};

  sys.X = ball_set(4, {0.0, 0.0, 0.0, 0.0}, 3.0);
  sys.X0 = ball_set(4, {0.4, 2.0, 0.5, 0.0}, 0.2);
  sys.Xu = ball_set(4, {2.0, 2.0, 0.0, 1.0}, 1.0);

  b.ctrl.basis = controller_basis(4, 1);
  b.ctrl.n_inputs = 1;
  b.ctrl.theta = Eigen::MatrixXd::Zero(1, 4);

  TrainConfig& c = b.config;
  c.certs = {{CertificateKind::lyapunov, 2}};
  c.backend = Backend::sos;
  c.decrease_margin = 1e-3;
  c.step = 1e-4;  // the input matrix is large; small steps keep theta sane
  c.max_iters = 150;
  c.horizon = 400;
  c.rollouts = 8;
  c.dt = 0.005;
  c.id_lr = 1e-3;
  c.u_weight = 1.0;

  b.lp_shell_delta = 0.1;
  b.lp_degree = 2;  // linear plant, quadratic targets
  b.notes = "Cf = Cr = 1.2e5, m = 1650, Iz = 2315, a = 1.11, b = 1.59, vx = 15; "
            "alpha truth at the interval midpoints";
  return b;
}

// 6D rigid body: angular rates + Rodrigues parameters, torque on every axis;
// both unknowns scale input channels, so alpha is bound per iterate
BenchmarkSpec make_attitude() {
  BenchmarkSpec b;
  b.name = "attitude";

  DynamicalSystem& sys = b.sys;
  sys.name = "attitude";
  sys.state = {"w1", "w2", "w3", "s1", "s2", "s3"};
  sys.inputs = {"u1", "u2", "u3"};
  sys.n_alpha = 2;
  sys.alpha_offset = 249;  // 3 inputs x 83 cubic basis monomials
  sys.alpha_bounds = {{-1.0, 2.0}, {-0.5, 1.5}};
  sys.alpha_truth = {1.0, 1.0};
  sys.goal = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  sys.n_original = 6;

  // variables [w1 w2 w3 s1 s2 s3 u1 u2 u3]
  Polynomial f0(9), f1(9), f2(9), f3(9), f4(9), f5(9);
  f0.add_term(mono({0, 0, 0, 0, 0, 0, 1, 0, 0}), ParamExpr::param(249));
  f0.add_term(mono({0, 1, 1, 0, 0, 0, 0, 0, 0}), ParamExpr::param(249));
  f1.add_term(mono({0, 0, 0, 0, 0, 0, 0, 1, 0}), ParamExpr::param(250));
  f1.add_term(mono({1, 0, 1, 0, 0, 0, 0, 0, 0}), ParamExpr::param(250, -3.0));
  f2.add_term(mono({0, 0, 0, 0, 0, 0, 0, 0, 1}), ParamExpr::constant(1.0));
  f2.add_term(mono({1, 1, 0, 0, 0, 0, 0, 0, 0}), ParamExpr::constant(2.0));
  f3.add_term(mono({0, 1, 0, 1, 1, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f3.add_term(mono({0, 1, 0, 0, 0, 1, 0, 0, 0}), ParamExpr::constant(-0.5));
  f3.add_term(mono({0, 0, 1, 1, 0, 1, 0, 0, 0}), ParamExpr::constant(0.5));
  f3.add_term(mono({0, 0, 1, 0, 1, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f3.add_term(mono({1, 0, 0, 2, 0, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f3.add_term(mono({1, 0, 0, 0, 0, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f4.add_term(mono({1, 0, 0, 1, 1, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f4.add_term(mono({1, 0, 0, 0, 0, 1, 0, 0, 0}), ParamExpr::constant(0.5));
  f4.add_term(mono({0, 0, 1, 0, 1, 1, 0, 0, 0}), ParamExpr::constant(0.5));
  f4.add_term(mono({0, 0, 1, 1, 0, 0, 0, 0, 0}), ParamExpr::constant(-0.5));
  f4.add_term(mono({0, 1, 0, 2, 0, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f4.add_term(mono({0, 1, 0, 0, 0, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f5.add_term(mono({1, 0, 0, 1, 0, 1, 0, 0, 0}), ParamExpr::constant(0.5));
  f5.add_term(mono({1, 0, 0, 0, 1, 0, 0, 0, 0}), ParamExpr::constant(-0.5));
  f5.add_term(mono({0, 1, 0, 0, 1, 1, 0, 0, 0}), ParamExpr::constant(0.5));
  f5.add_term(mono({0, 1, 0, 1, 0, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  f5.add_term(mono({0, 0, 1, 0, 0, 2, 0, 0, 0}), ParamExpr::constant(0.5));
  f5.add_term(mono({0, 0, 1, 0, 0, 0, 0, 0, 0}), ParamExpr::constant(0.5));
  sys.f = {f0, f1, f2, f3, f4, f5};

  sys.X = ball_set(6, std::vector<double>(6, 0.0), 2.0);
  sys.X0 = ball_set(6, std::vector<double>(6, 0.0), 1.0);

  b.ctrl.basis = controller_basis(6, 3);
  b.ctrl.n_inputs = 3;
  b.ctrl.theta = Eigen::MatrixXd::Zero(3, b.ctrl.basis.size());

  TrainConfig& c = b.config;
  c.certs = {{CertificateKind::lyapunov, 2}};
  c.backend = Backend::sos;
  c.decrease_margin = 1e-3;
  c.step = 1e-3;
  c.max_iters = 80;
  c.horizon = 150;
  c.rollouts = 4;
  c.dt = 0.01;
  c.id_lr = 0.05;
  c.u_weight = 1e-2;
  c.fd_fallback = false;  // 249 theta entries; degenerate duals stay dual-based

  b.lp_shell_delta = 0.1;
  b.lp_degree = lp_multiplicity(2);
  b.notes = "rollouts start in the unit ball (the source only fixes X); truth (1,1) "
            "is the nominal unit-inertia body inside the declared intervals";
  return b;
}

}  // namespace

int lp_multiplicity(int cert_degree) { return std::max(2, (cert_degree + 1) / 2); }

std::vector<Monomial> controller_basis(int nvars, int deg) {
  std::vector<Monomial> all = monomial_basis(nvars, deg);
  return {all.begin() + 1, all.end()};
}

std::vector<std::string> builtin_names() {
  return {"pj", "pendulum", "lane_keeping", "attitude"};
}

BenchmarkSpec builtin(const std::string& name) {
  if (name == "pj") return make_pj();
  if (name == "pendulum") return make_pendulum();
  if (name == "lane_keeping") return make_lane_keeping();
  if (name == "attitude") return make_attitude();
  throw UnknownBenchmark("no builtin benchmark named '" + name + "'");
}

TrainConfig with_backend(const BenchmarkSpec& spec, Backend backend) {
  TrainConfig c = spec.config;
  c.backend = backend;
  if (backend == Backend::handelman) {
    c.shell_delta = spec.lp_shell_delta;
    c.handelman_degree = spec.lp_degree;
  } else {
    c.shell_delta = 0.0;
  }
  return c;
}

}  // namespace certirl
