#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "certirl/conelayer.hpp"
#include "certirl/model.hpp"
#include "certirl/relax.hpp"
#include "certirl/rng.hpp"
#include "certirl/verify.hpp"

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

SemialgebraicSet interval_set(double a, double b) {
  SemialgebraicSet s;
  s.shape = SemialgebraicSet::Shape::box;
  s.lo = {a};
  s.hi = {b};
  Polynomial x = Polynomial::variable(1, 0);
  s.ineqs.push_back(x - Polynomial::constant(1, a));
  s.ineqs.push_back(Polynomial::constant(1, b) - x);
  return s;
}

// x' = u on the line; theta = -1 makes the loop x' = -x
DynamicalSystem line_plant() {
  DynamicalSystem sys;
  sys.name = "line";
  sys.state = {"x"};
  sys.inputs = {"u"};
  sys.goal = {0.0};
  sys.n_original = 1;
  Polynomial f(2);
  f.add_term(Monomial{{0, 1}}, ParamExpr::constant(1.0));
  sys.f = {f};
  sys.X = box_set(1, 1.0);
  sys.X0 = box_set(1, 0.5);
  return sys;
}

Controller gain(double k) {
  Controller ctrl;
  ctrl.basis = {Monomial{{1}}};
  ctrl.n_inputs = 1;
  ctrl.theta = Eigen::MatrixXd::Constant(1, 1, k);
  return ctrl;
}

// V = x^2 proved by hand over the box conditions of line_plant with theta=-1
// and unit decrease margin: both targets reduce to x^2, whose SOS proof is
// the obvious Gram with zero multiplier blocks.
Certificate hand_v_x2() {
  Certificate cert;
  cert.tmpl = make_template(CertificateKind::lyapunov, 2, 1);
  cert.beta = {0.0, 1.0};
  cert.backend = Backend::sos;
  cert.cond_opts.decrease_margin = 1.0;
  for (int ci = 0; ci < 2; ++ci) {
    Certificate::Gram main;
    main.condition = ci;
    main.ineq = -1;
    main.basis = {Monomial{{0}}, Monomial{{1}}};
    main.Q = Eigen::MatrixXd::Zero(2, 2);
    main.Q(1, 1) = 1.0;
    cert.grams.push_back(main);
    for (int gi = 0; gi < 2; ++gi) {
      Certificate::Gram sigma;
      sigma.condition = ci;
      sigma.ineq = gi;
      sigma.basis = {Monomial{{0}}, Monomial{{1}}};
      sigma.Q = Eigen::MatrixXd::Zero(2, 2);
      cert.grams.push_back(sigma);
    }
  }
  return cert;
}

}  // namespace

TEST_CASE("hand-built V = x^2 on x' = -x verifies with zero residual") {
  auto sys = line_plant();
  auto cert = hand_v_x2();
  auto rep = check_certificate(sys, gain(-1.0), cert, {}, 500, 3);

  CHECK(rep.kind == CertificateKind::lyapunov);
  CHECK(rep.residual_max == 0.0);
  CHECK(rep.gram_min_eig == 0.0);
  CHECK(rep.samples == 1000);
  CHECK(rep.falsified == 0);
  CHECK(rep.pass);
  CHECK(!rep.witness);
  REQUIRE(rep.condition_residual.size() == 2);
  CHECK(rep.condition_label[0] == "value");
  CHECK(rep.condition_label[1] == "decrease");

  auto text = report_text(rep);
  CHECK(text.find("verdict: pass") != std::string::npos);
  CHECK(text.find("residual_max: 0") != std::string::npos);
}

TEST_CASE("slightly indefinite multiplier block flips only the PSD gate") {
  auto sys = line_plant();
  auto cert = hand_v_x2();
  cert.grams[1].Q(0, 0) = -1e-7;  // sigma_0 of the value condition

  auto rep = check_certificate(sys, gain(-1.0), cert, {}, 200, 3);
  CHECK(rep.residual_max <= 1e-6);  // expansion only moved by 1e-7 (1 - x)
  CHECK(rep.residual_max > 0.0);
  CHECK(rep.gram_min_eig == doctest::Approx(-1e-7));
  CHECK(rep.falsified == 0);
  CHECK(!rep.pass);
}

TEST_CASE("constant B = +1 fails on the initial set with a valid witness") {
  auto sys = line_plant();
  sys.Xu = interval_set(0.8, 1.0);

  Certificate cert;
  cert.tmpl = make_template(CertificateKind::barrier, 2, 1);
  cert.beta = {1.0, 0.0, 0.0};
  cert.backend = Backend::sos;

  auto rep = check_certificate(sys, gain(0.0), cert, {}, 300, 5);
  CHECK(!rep.pass);
  CHECK(rep.residual_max >= 1.0);  // nothing expands the bare constants
  REQUIRE(rep.witness);
  CHECK(rep.witness_condition == "init");
  CHECK(sys.X0.contains(*rep.witness, 1e-12));
  // the claimed inequality -B >= 0 is violated by a full unit
  CHECK(rep.witness_value == doctest::Approx(-1.0));
  CHECK(rep.witness_value < -1e-9);
  CHECK(rep.falsified == 300);  // every init sample
  CHECK(cert.eval(*rep.witness) == doctest::Approx(1.0));
}

TEST_CASE("solved 1d certificates round-trip through posterior checks") {
  auto sys = line_plant();
  auto ctrl = gain(-1.0);

  for (Backend backend : {Backend::sos, Backend::handelman}) {
    CAPTURE(backend == Backend::sos ? "sos" : "handelman");
    auto tmpl = make_template(CertificateKind::lyapunov, 2, 1);
    ConditionOptions co;
    co.decrease_margin = 0.25;
    if (backend == Backend::handelman) co.shell_delta = 0.05;
    auto conds = lyapunov_conditions(sys, ctrl, tmpl, co);

    CompileOptions cop;
    cop.n_theta = 1;
    cop.beta_blocks = {BetaBlockInfo{tmpl, 0}};
    auto prog = backend == Backend::sos ? compile_sos(conds, -1, cop)
                                        : compile_handelman(conds, 4, cop);

    auto relaxed = solve(prog, {-1.0});
    REQUIRE(relaxed.status == IpmStatus::optimal);
    REQUIRE(relaxed.c_star <= 1e-8);

    // confirm at zero slack, then hand the proof to the posterior gate
    ConeSolveOptions exact;
    exact.exact = true;
    auto confirmed = solve(prog, {-1.0}, exact);
    REQUIRE(confirmed.status == IpmStatus::optimal);

    auto cert = extract_certificate(prog, confirmed.u, {});
    cert.cond_opts = co;
    auto rep = check_certificate(sys, ctrl, cert, {}, 2000, 7);
    CHECK(rep.residual_max <= 1e-6);
    CHECK(rep.falsified == 0);
    CHECK(rep.pass);

    // agreement: a passing certificate survives simulation falsification
    auto fr = falsify(sys, ctrl, FalsifyProperty::stability, {}, 20, 200, 0.05, 11);
    CHECK(fr.max_final_dist <= 1e-3);
    CHECK(!fr.witness);
  }
}

TEST_CASE("extract_certificate requires the template metadata") {
  auto sys = line_plant();
  auto tmpl = make_template(CertificateKind::lyapunov, 2, 1);
  auto conds = lyapunov_conditions(sys, gain(-1.0), tmpl, {});
  CompileOptions cop;
  cop.n_theta = 1;
  auto prog = compile_sos(conds, -1, cop);  // no beta_blocks on purpose
  auto res = solve(prog, {-1.0});
  CHECK_THROWS_AS(extract_certificate(prog, res.u, {}), ConfigError);
}

TEST_CASE("falsify: unstable loop blows up the stability proxy") {
  // x' = x via theta = +1 on the line plant (f = u, so the loop is x' = x)
  auto sys = line_plant();
  sys.X0 = interval_set(0.9, 1.1);
  auto fr = falsify(sys, gain(1.0), FalsifyProperty::stability, {}, 10, 100, 0.1, 2);
  CHECK(fr.max_final_dist > 1e3);
  CHECK(fr.runs == 10);
}

TEST_CASE("falsify: safety witness inside the unsafe set, none when avoided") {
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

  Controller ctrl;
  ctrl.basis = {Monomial{{1, 0}}, Monomial{{0, 1}}};
  ctrl.n_inputs = 1;
  ctrl.theta = Eigen::MatrixXd::Zero(1, 2);

  auto hit = falsify(sys, ctrl, FalsifyProperty::safety, {}, 5, 60, 0.05, 4);
  REQUIRE(hit.witness);
  CHECK(sys.Xu->contains(*hit.witness, 1e-12));
  CHECK(hit.witness_run >= 0);

  // reverse the drift: the same budget finds nothing
  sys.f[0] = -sys.f[0];
  sys.f[1] = Polynomial(3);
  sys.f[1].add_term(Monomial{{0, 0, 0}}, ParamExpr::constant(1.0));
  auto miss = falsify(sys, ctrl, FalsifyProperty::safety, {}, 5, 60, 0.05, 4);
  CHECK(!miss.witness);
  CHECK(miss.steps_total == 5 * 60);
}

TEST_CASE("sample_domain: metadata-free sets fall back to inferred boxes") {
  DynamicalSystem sys = line_plant();
  Rng rng(9, Rng::tag(1));

  // ball pattern without sampling metadata
  auto ball = ball_set(2, {1.5, 0.0}, 0.5);
  ball.shape = SemialgebraicSet::Shape::generic;
  ball.center.clear();
  DynamicalSystem sys2;
  sys2.state = {"x1", "x2"};
  sys2.n_original = 2;
  auto pts = sample_domain(ball, sys2, 400, rng, "ball");
  CHECK(pts.size() == 400);
  for (const auto& p : pts) {
    const double d2 = (p[0] - 1.5) * (p[0] - 1.5) + p[1] * p[1];
    CHECK(d2 <= 0.25 + 1e-12);
  }

  // box faces without metadata
  auto box = box_set(1, 0.75);
  box.shape = SemialgebraicSet::Shape::generic;
  box.lo.clear();
  box.hi.clear();
  for (const auto& p : sample_domain(box, sys, 200, rng, "box"))
    CHECK(std::abs(p[0]) <= 0.75 + 1e-12);
}

TEST_CASE("sample_domain: starvation reports coverage") {
  // proposal box disjoint from the actual set
  SemialgebraicSet s = interval_set(2.0, 3.0);
  s.lo = {-1.0};
  s.hi = {0.0};
  auto sys = line_plant();
  Rng rng(9, Rng::tag(2));
  CHECK_THROWS_AS(sample_domain(s, sys, 1, rng, "gap"), SamplingStarvation);
  try {
    sample_domain(s, sys, 1, rng, "gap");
  } catch (const SamplingStarvation& e) {
    CHECK(std::string(e.what()).find("gap") != std::string::npos);
    CHECK(std::string(e.what()).find("0 of") != std::string::npos);
  }
}

TEST_CASE("robustness sweep flags the unstable part of the alpha interval") {
  // x' = a x + u with theta = 0; V = x^2 decreases iff a <= -1/2 at margin 1
  DynamicalSystem sys;
  sys.name = "scalar";
  sys.state = {"x"};
  sys.inputs = {"u"};
  sys.n_alpha = 1;
  sys.alpha_offset = 1;
  sys.alpha_truth = {-1.0};
  sys.goal = {0.0};
  sys.n_original = 1;
  Polynomial f(2);
  f.add_term(Monomial{{1, 0}}, ParamExpr::param(1));
  f.add_term(Monomial{{0, 1}}, ParamExpr::constant(1.0));
  sys.f = {f};
  sys.X = box_set(1, 1.0);
  sys.X0 = box_set(1, 0.5);

  Certificate cert = hand_v_x2();

  sys.alpha_bounds = {{-1.5, -0.8}};
  auto safe = robustness_sweep(sys, gain(0.0), cert, 8, 200, 6);
  CHECK(safe.draws == 8);
  CHECK(safe.violated_draws == 0);
  CHECK(safe.worst_margin >= 0.0);

  sys.alpha_bounds = {{-1.5, 1.5}};
  auto mixed = robustness_sweep(sys, gain(0.0), cert, 8, 200, 6);
  CHECK(mixed.violated_draws > 0);
  CHECK(mixed.worst_margin < 0.0);
  REQUIRE(mixed.worst_alpha.size() == 1);
  CHECK(mixed.worst_alpha[0] > -0.5);
}

TEST_CASE("level-set export: grid shape and values") {
  Certificate cert;
  cert.tmpl.kind = CertificateKind::barrier;
  cert.tmpl.basis = {Monomial{{2, 0}}, Monomial{{0, 2}}};
  cert.beta = {1.0, 1.0};

  std::ostringstream os;
  write_level_set(os, cert, 0, 1, {0.0, 0.0}, -1.0, 1.0, -1.0, 1.0, 5);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "x,y,value");
  int rows = 0;
  bool corner = false;
  while (std::getline(is, line)) {
    ++rows;
    if (line.rfind("1,1,", 0) == 0) corner = true;
  }
  CHECK(rows == 25);
  CHECK(corner);  // B(1, 1) = 2 at the last grid node
}
