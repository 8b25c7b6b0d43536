#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "certirl/model.hpp"
#include "certirl/relax.hpp"

using namespace certirl;

namespace {

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
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

// the two-state cubic plant used throughout: x1' = a1 x2, x2' = a2 x1^3 + u
DynamicalSystem cubic_plant(int alpha_offset) {
  DynamicalSystem sys;
  sys.name = "cubic";
  sys.state = {"x1", "x2"};
  sys.inputs = {"u"};
  sys.n_alpha = 2;
  sys.alpha_offset = alpha_offset;
  sys.alpha_bounds = {{-1.5, 1.5}, {-1.5, 1.5}};
  sys.alpha_truth = {1.0, -1.0};
  sys.goal = {0.0, 0.0};
  sys.n_original = 2;

  Polynomial f1(3), f2(3);
  Monomial x2{{0, 1, 0}}, x1cube{{3, 0, 0}}, u{{0, 0, 1}};
  f1.add_term(x2, ParamExpr::param(alpha_offset));
  f2.add_term(x1cube, ParamExpr::param(alpha_offset + 1));
  f2.add_term(u, ParamExpr::constant(1.0));
  sys.f = {f1, f2};

  sys.X = box_set(2, 100.0);
  sys.X0 = ball_set(2, {1.5, 0.0}, 0.5);
  sys.Xu = ball_set(2, {-0.8, -1.0}, 0.5);
  return sys;
}

Controller linear_ctrl2() {
  Controller c;
  c.basis = {Monomial{{1, 0}}, Monomial{{0, 1}}};
  c.n_inputs = 1;
  c.theta = Eigen::MatrixXd::Zero(1, 2);
  return c;
}

}  // namespace

TEST_CASE("templates: barrier keeps the constant, lyapunov drops it") {
  auto b = make_template(CertificateKind::barrier, 2, 2);
  auto v = make_template(CertificateKind::lyapunov, 2, 2);
  CHECK(b.basis.size() == 6);
  CHECK(v.basis.size() == 5);
  CHECK(b.basis.front().degree() == 0);
  CHECK(v.basis.front().degree() == 1);
}

TEST_CASE("barrier conditions: shapes, signs, unsafe strictness") {
  auto sys = cubic_plant(4);
  auto ctrl = linear_ctrl2();
  auto tmpl = make_template(CertificateKind::barrier, 2, 2, 1.0);
  auto conds = barrier_conditions(sys, ctrl, tmpl);
  REQUIRE(conds.size() == 3);
  CHECK(!conds[0].strict);
  CHECK(conds[1].strict);
  CHECK(!conds[2].strict);

  // -B on X0 must be exactly the negated template
  Monomial one{{0, 0}};
  CHECK(conds[0].target.coefficient(one).dec.at(0) == AffineParam::constant(-1.0));

  // flow condition degree: deg(dB/dx2 * a2 x1^3) = 1 + 3
  CHECK(conds[2].target.degree() == 4);
  // its x1^4 coefficient is -a2 * beta(x1 x2), via d(b x1 x2)/dx2 * a2 x1^3
  auto basis = tmpl.basis;
  int k_x1x2 = -1;
  for (size_t k = 0; k < basis.size(); ++k)
    if (basis[k] == Monomial{{1, 1}}) k_x1x2 = static_cast<int>(k);
  REQUIRE(k_x1x2 >= 0);
  auto pe = conds[2].target.coefficient(Monomial{{4, 0}});
  CHECK(pe.dec.at(k_x1x2) == AffineParam::param(5, -1.0));

  sys.Xu.reset();
  CHECK_THROWS_AS(barrier_conditions(sys, ctrl, tmpl), MissingSet);
}

TEST_CASE("lyapunov conditions: margin and shell cut") {
  auto sys = cubic_plant(4);
  auto ctrl = linear_ctrl2();
  auto tmpl = make_template(CertificateKind::lyapunov, 2, 2);

  ConditionOptions co;
  co.decrease_margin = 0.25;
  co.shell_delta = 0.1;
  auto conds = lyapunov_conditions(sys, ctrl, tmpl, co);
  REQUIRE(conds.size() == 2);

  // both domains pick up the shell inequality ||x||^2 - delta^2 >= 0
  CHECK(conds[0].domain.ineqs.size() == sys.X.ineqs.size() + 1);
  Polynomial shell = conds[0].domain.ineqs.back();
  CHECK(evaluate(shell, {0.1, 0.0}) == doctest::Approx(0.0));
  CHECK(evaluate(shell, {1.0, 0.0}) == doctest::Approx(0.99));

  // decrease target starts at -mu ||x||^2 when V's beta = 0
  std::vector<double> params(6, 0.0);
  std::vector<double> beta(tmpl.basis.size(), 0.0);
  Polynomial at_zero = conds[1].target.bind(params, beta);
  CHECK(evaluate(at_zero, {2.0, 0.0}) == doctest::Approx(-0.25 * 4.0));
}

TEST_CASE("sos compile: (x+1)^2 has one 2x2 gram and three rows") {
  Polynomial t(1);
  t.add_term(Monomial{{0}}, ParamExpr::constant(1.0));
  t.add_term(Monomial{{1}}, ParamExpr::constant(2.0));
  t.add_term(Monomial{{2}}, ParamExpr::constant(1.0));
  PositivityCondition cond{t, SemialgebraicSet{}, false, "global"};

  auto prog = compile_sos({cond});
  CHECK(prog.backend == Backend::sos);
  CHECK(prog.n_beta == 0);
  CHECK(prog.n_lambda == 0);
  REQUIRE(prog.grams.size() == 1);
  CHECK(prog.grams[0].basis.size() == 2);
  CHECK(prog.n_svec == 3);
  CHECK(prog.rows.size() == 3);
  CHECK(prog.decision_count() == 4);

  // constant row: -q00 = -1
  CHECK(prog.rows[0].rhs.c0 == -1.0);
  REQUIRE(prog.rows[0].lhs.size() == 1);
  CHECK(prog.rows[0].lhs[0].first == 0);
  CHECK(prog.rows[0].lhs[0].second.c0 == -1.0);
  // x row: the off-diagonal svec entry carries sqrt(2)
  CHECK(prog.rows[1].lhs[0].second.c0 == doctest::Approx(-std::sqrt(2.0)));
}

TEST_CASE("sos compile: multiplier degrees round up to even, explicit must be even") {
  // degree-3 target on a ball: sigma needs degree >= 1, so rounds to 2
  Polynomial t(2);
  t.add_term(Monomial{{3, 0}}, ParamExpr::constant(1.0));
  PositivityCondition cond{t, ball_set(2, {0, 0}, 1.0), false, "ball"};

  auto prog = compile_sos({cond});
  REQUIRE(prog.grams.size() == 2);
  CHECK(prog.grams[0].basis.size() == 6);  // main: monomials up to degree 2
  CHECK(prog.grams[1].basis.size() == 3);  // sigma: degree-2 gram over {1, x2, x1}

  auto fixed = compile_sos({cond}, 4);
  CHECK(fixed.grams[1].basis.size() == 6);

  CHECK_THROWS_AS(compile_sos({cond}, 3), DegreeMismatch);
}

TEST_CASE("handelman compile: product counts and row content") {
  Polynomial t(1);
  t.add_term(Monomial{{0}}, ParamExpr::constant(2.0));
  t.add_term(Monomial{{1}}, ParamExpr::constant(1.0));
  PositivityCondition cond{t, box_set(1, 1.0), false, "interval"};

  auto prog = compile_handelman({cond}, 1);
  CHECK(prog.backend == Backend::handelman);
  CHECK(prog.n_lambda == 3);  // 1, 1-x, 1+x
  CHECK(prog.n_svec == 0);
  CHECK(prog.rows.size() == 2);
  CHECK(prog.lambdas[0].powers == std::vector<int>{0, 0});
  CHECK(prog.lambdas[0].scale == 1.0);

  // counts follow the stars-and-bars formula
  auto prog3 = compile_handelman({PositivityCondition{t, box_set(1, 1.0), false, ""}}, 3);
  CHECK(prog3.n_lambda == binom(1 * 2 + 3, 3));

  Polynomial t2(3);
  t2.add_term(Monomial{{1, 1, 0}}, ParamExpr::constant(1.0));
  auto prog6 = compile_handelman({PositivityCondition{t2, box_set(3, 1.0), false, ""}}, 2);
  CHECK(prog6.n_lambda == binom(6 + 2, 2));

  SemialgebraicSet empty;
  CHECK_THROWS_AS(compile_handelman({PositivityCondition{t, empty, false, "bad"}}, 2),
                  EmptyDomain);
  CHECK_THROWS_AS(compile_handelman({cond}, -1), DegreeMismatch);
}

TEST_CASE("handelman compile: products equilibrated to unit max coefficient") {
  Polynomial t(1);
  t.add_term(Monomial{{2}}, ParamExpr::constant(1.0));
  SemialgebraicSet s = box_set(1, 100.0);
  auto prog = compile_handelman({PositivityCondition{t, s, false, ""}}, 2);

  for (const auto& li : prog.lambdas) {
    int deg = li.powers[0] + li.powers[1];
    if (deg == 0) CHECK(li.scale == 1.0);
    if (deg == 1) CHECK(li.scale == 100.0);
    if (deg == 2) CHECK(li.scale == 10000.0);
    // every row coefficient of this column must be <= 1 in magnitude
    for (const auto& row : prog.rows)
      for (const auto& [col, ap] : row.lhs)
        if (col == li.col) CHECK(std::abs(ap.c0) <= 1.0 + 1e-12);
  }
}

TEST_CASE("strict conditions shift the constant row by eps") {
  Polynomial t(1);
  t.add_term(Monomial{{0}}, ParamExpr::constant(1.0));
  t.add_term(Monomial{{2}}, ParamExpr::constant(1.0));
  CompileOptions co;
  co.strict_eps = 1e-4;
  auto prog = compile_sos({PositivityCondition{t, SemialgebraicSet{}, true, "s"}}, -1, co);
  // rhs of the constant row is -(1 - eps)
  CHECK(prog.rows[0].rhs.c0 == doctest::Approx(-(1.0 - 1e-4)).epsilon(1e-12));
}

TEST_CASE("full benchmark-shaped compile is deterministic") {
  auto sys = cubic_plant(4);
  auto ctrl = linear_ctrl2();
  auto tmpl = make_template(CertificateKind::barrier, 2, 2, 1.0);
  auto conds = barrier_conditions(sys, ctrl, tmpl);
  CompileOptions co;
  co.n_theta = 2;
  co.alpha_offset = 4;
  co.n_alpha = 2;

  auto a = compile_sos(conds, -1, co);
  auto b = compile_sos(conds, -1, co);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mono == b.rows[i].mono);
    REQUIRE(a.rows[i].lhs.size() == b.rows[i].lhs.size());
    for (size_t k = 0; k < a.rows[i].lhs.size(); ++k) {
      CHECK(a.rows[i].lhs[k].first == b.rows[i].lhs[k].first);
      CHECK(a.rows[i].lhs[k].second == b.rows[i].lhs[k].second);
    }
  }
  CHECK(a.n_beta == 6);
  CHECK(a.n_theta == 2);

  auto h1 = compile_handelman(conds, 4, co);
  auto h2 = compile_handelman(conds, 4, co);
  CHECK(h1.rows.size() == h2.rows.size());
  CHECK(h1.n_lambda == h2.n_lambda);
}
