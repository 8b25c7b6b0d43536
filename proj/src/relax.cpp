#include "certirl/relax.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace certirl {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

Monomial mono_add(const Monomial& a, const Monomial& b) {
  Monomial r = a;
  for (size_t i = 0; i < r.e.size(); ++i) r.e[i] += b.e[i];
  return r;
}

Polynomial template_poly(const CertificateTemplate& tmpl, int nvars, int beta_offset) {
  Polynomial p(nvars);
  for (size_t k = 0; k < tmpl.basis.size(); ++k)
    p.add_term(tmpl.basis[k], ParamExpr::decision(beta_offset + static_cast<int>(k)));
  return p;
}

Polynomial lie_derivative(const Polynomial& h, const std::vector<Polynomial>& f) {
  Polynomial lie(h.nvars());
  for (size_t i = 0; i < f.size(); ++i) lie += differentiate(h, static_cast<int>(i)) * f[i];
  return lie;
}

Polynomial goal_dist2(int nvars, const std::vector<double>& goal) {
  Polynomial d(nvars);
  for (int i = 0; i < nvars; ++i) {
    Polynomial xi = Polynomial::variable(nvars, i) - Polynomial::constant(nvars, goal[i]);
    d += xi * xi;
  }
  return d;
}

double numeric_coef(const ParamExpr& pe) {
  if (!pe.is_numeric()) throw ConfigError("domain inequality coefficients must be numeric");
  return pe.base.c0;
}

// row accumulation keyed by (condition, monomial); flattened at the end so a
// column touched twice merges instead of duplicating
struct RowKey {
  int cond;
  Monomial mono;
};
struct RowKeyLess {
  bool operator()(const RowKey& a, const RowKey& b) const {
    if (a.cond != b.cond) return a.cond < b.cond;
    return grlex_less(a.mono, b.mono);
  }
};
struct RowAccum {
  std::map<int, AffineParam> lhs;
  AffineParam rhs;
};
using RowMap = std::map<RowKey, RowAccum, RowKeyLess>;

// target_a(beta) = expansion_a, written as  sum_k d_k beta_k - expansion = -base_a
void match_target(RowMap& rows, int ci, const Polynomial& target) {
  for (const auto& [mono, pe] : target.terms()) {
    RowAccum& acc = rows[{ci, mono}];
    for (const auto& [k, ap] : pe.dec) acc.lhs[k].add(ap);
    acc.rhs.add(pe.base, -1.0);
  }
}

void add_expansion(RowMap& rows, int ci, const Monomial& mono, int col, double coef) {
  rows[{ci, mono}].lhs[col].add(AffineParam::constant(-coef));
}

int scan_beta(const std::vector<PositivityCondition>& conds) {
  int hi = 0;
  for (const auto& c : conds)
    for (const auto& [mono, pe] : c.target.terms())
      for (const auto& [k, ap] : pe.dec) hi = std::max(hi, k + 1);
  return hi;
}

int svec_block_len(int b) { return b * (b + 1) / 2; }
int svec_index(int i, int j, int b) {  // i >= j, lower triangle column-major
  return j * b - j * (j - 1) / 2 + (i - j);
}

Polynomial strict_shifted(const Polynomial& p, bool strict, double eps) {
  if (!strict) return p;
  Polynomial q = p;
  q.add_term(Monomial{std::vector<int>(p.nvars(), 0)}, ParamExpr::constant(-eps));
  return q;
}

void finish(ConeProgram& prog, RowMap& rows,
            const std::vector<PositivityCondition>& conds, const CompileOptions& opts) {
  prog.rows.reserve(rows.size());
  for (auto& [key, acc] : rows) {
    MatchRow r;
    r.condition = key.cond;
    r.mono = key.mono;
    r.rhs = acc.rhs;
    r.lhs.reserve(acc.lhs.size());
    for (auto& [col, ap] : acc.lhs)
      if (!ap.is_zero()) r.lhs.emplace_back(col, ap);
    prog.rows.push_back(std::move(r));
  }
  prog.conditions = conds;
  prog.beta_blocks = opts.beta_blocks;
  prog.strict_eps = opts.strict_eps;
  prog.n_theta = opts.n_theta;
  prog.alpha_offset = opts.alpha_offset;
  prog.n_alpha = opts.n_alpha;
}

}  // namespace

CertificateTemplate make_template(CertificateKind kind, int degree, int nvars,
                                  double lambda_rate) {
  CertificateTemplate t;
  t.kind = kind;
  t.degree = degree;
  t.lambda_rate = lambda_rate;
  t.basis = monomial_basis(nvars, degree);
  if (kind == CertificateKind::lyapunov) {
    // drop the constant term: it cannot help a decrease condition and hands
    // the relaxation a free positive offset
    t.basis.erase(t.basis.begin());
  }
  return t;
}

SemialgebraicSet with_box_cuts(const SemialgebraicSet& s) {
  const int n = s.nvars();
  if (s.shape != SemialgebraicSet::Shape::ball || s.ineqs.size() != 1 ||
      static_cast<int>(s.center.size()) != n || s.radius <= 0.0)
    return s;
  SemialgebraicSet out = s;
  for (int i = 0; i < n; ++i) {
    Polynomial xi = Polynomial::variable(n, i);
    out.ineqs.push_back(xi - Polynomial::constant(n, s.center[i] - s.radius));
    out.ineqs.push_back(Polynomial::constant(n, s.center[i] + s.radius) - xi);
  }
  return out;
}

DynamicalSystem with_box_cuts(const DynamicalSystem& sys) {
  DynamicalSystem out = sys;
  out.X = with_box_cuts(sys.X);
  out.X0 = with_box_cuts(sys.X0);
  if (sys.Xu) out.Xu = with_box_cuts(*sys.Xu);
  return out;
}

std::vector<PositivityCondition> barrier_conditions(const DynamicalSystem& sys,
                                                    const Controller& ctrl,
                                                    const CertificateTemplate& tmpl,
                                                    bool symbolic_theta, int beta_offset) {
  if (!sys.Xu) throw MissingSet("barrier synthesis needs an unsafe set");
  const int n = sys.n();
  Polynomial B = template_poly(tmpl, n, beta_offset);
  std::vector<Polynomial> fcl = closed_loop(sys, ctrl, symbolic_theta);
  Polynomial lie = lie_derivative(B, fcl);

  std::vector<PositivityCondition> out(3);
  out[0] = {-B, sys.X0, false, "init"};
  out[1] = {B, *sys.Xu, true, "unsafe"};
  out[2] = {-lie + B * tmpl.lambda_rate, sys.X, false, "flow"};
  return out;
}

std::vector<PositivityCondition> lyapunov_conditions(const DynamicalSystem& sys,
                                                     const Controller& ctrl,
                                                     const CertificateTemplate& tmpl,
                                                     const ConditionOptions& opts,
                                                     bool symbolic_theta, int beta_offset) {
  const int n = sys.n();
  Polynomial V = template_poly(tmpl, n, beta_offset);
  std::vector<Polynomial> fcl = closed_loop(sys, ctrl, symbolic_theta);
  Polynomial lie = lie_derivative(V, fcl);
  Polynomial d2 = goal_dist2(n, sys.goal);

  SemialgebraicSet dom = sys.X;
  if (opts.shell_delta > 0.0)
    dom.ineqs.push_back(d2 - Polynomial::constant(n, opts.shell_delta * opts.shell_delta));

  std::vector<PositivityCondition> out(2);
  out[0] = {V, dom, false, "value"};
  out[1] = {-lie - d2 * opts.decrease_margin, dom, false, "decrease"};
  return out;
}

ConeProgram compile_sos(const std::vector<PositivityCondition>& conditions,
                        int mult_degree, const CompileOptions& opts) {
  if (mult_degree >= 0 && mult_degree % 2 != 0)
    throw DegreeMismatch("multiplier degree must be even, got " + std::to_string(mult_degree));

  ConeProgram prog;
  prog.backend = Backend::sos;
  prog.n_beta = scan_beta(conditions);
  for (const auto& bb : opts.beta_blocks)
    prog.n_beta = std::max(prog.n_beta, bb.offset + static_cast<int>(bb.tmpl.basis.size()));
  prog.n_lambda = 0;

  int col = prog.n_beta;
  RowMap rows;
  for (size_t ci = 0; ci < conditions.size(); ++ci) {
    const PositivityCondition& cond = conditions[ci];
    const int n = cond.target.nvars();
    prog.n_state = n;
    const int dt = cond.target.degree();

    // main Gram: w' Q0 w over monomials up to ceil(dt/2)
    {
      GramBlockInfo blk;
      blk.condition = static_cast<int>(ci);
      blk.ineq = -1;
      blk.basis = monomial_basis(n, (dt + 1) / 2);
      blk.col0 = col;
      col += svec_block_len(static_cast<int>(blk.basis.size()));
      prog.grams.push_back(std::move(blk));
    }
    // one SOS multiplier per domain inequality
    for (size_t gi = 0; gi < cond.domain.ineqs.size(); ++gi) {
      const Polynomial& g = cond.domain.ineqs[gi];
      int e = mult_degree >= 0 ? mult_degree : std::max(0, dt - g.degree());
      if (e % 2 != 0) ++e;
      GramBlockInfo blk;
      blk.condition = static_cast<int>(ci);
      blk.ineq = static_cast<int>(gi);
      blk.basis = monomial_basis(n, e / 2);
      blk.col0 = col;
      col += svec_block_len(static_cast<int>(blk.basis.size()));
      prog.grams.push_back(std::move(blk));
    }

    match_target(rows, static_cast<int>(ci),
                 strict_shifted(cond.target, cond.strict, opts.strict_eps));
  }
  prog.n_svec = col - prog.n_beta;

  // expand w' Q w (and sigma_i * g_i) into the rows:
  // svec packs off-diagonals times sqrt(2), and w_i w_j (i != j) picks up the
  // symmetric pair, so the per-entry weight is 1 on the diagonal, sqrt2 off it
  for (const GramBlockInfo& blk : prog.grams) {
    const int b = static_cast<int>(blk.basis.size());
    const PositivityCondition& cond = conditions[blk.condition];
    for (int j = 0; j < b; ++j) {
      for (int i = j; i < b; ++i) {
        const int c = blk.col0 + svec_index(i, j, b);
        const double w = (i == j) ? 1.0 : kSqrt2;
        const Monomial wm = mono_add(blk.basis[i], blk.basis[j]);
        if (blk.ineq < 0) {
          add_expansion(rows, blk.condition, wm, c, w);
        } else {
          for (const auto& [gm, gpe] : cond.domain.ineqs[blk.ineq].terms())
            add_expansion(rows, blk.condition, mono_add(wm, gm), c, w * numeric_coef(gpe));
        }
      }
    }
  }

  finish(prog, rows, conditions, opts);
  return prog;
}

ConeProgram compile_handelman(const std::vector<PositivityCondition>& conditions,
                              int D, const CompileOptions& opts) {
  if (D < 0) throw DegreeMismatch("product degree cap must be nonnegative");

  ConeProgram prog;
  prog.backend = Backend::handelman;
  prog.n_beta = scan_beta(conditions);
  for (const auto& bb : opts.beta_blocks)
    prog.n_beta = std::max(prog.n_beta, bb.offset + static_cast<int>(bb.tmpl.basis.size()));
  prog.n_svec = 0;

  int col = prog.n_beta;
  RowMap rows;
  for (size_t ci = 0; ci < conditions.size(); ++ci) {
    const PositivityCondition& cond = conditions[ci];
    const int n = cond.target.nvars();
    prog.n_state = n;
    if (cond.domain.ineqs.empty())
      throw EmptyDomain("products of inequalities need a bounded domain description ('" +
                        cond.label + "' has none)");
    const int m = static_cast<int>(cond.domain.ineqs.size());

    // every exponent tuple with ||a||_1 <= D, grlex order; the zero tuple is
    // the constant product 1
    for (const Monomial& a : monomial_basis(m, D)) {
      Polynomial p = Polynomial::constant(n, 1.0);
      for (int j = 0; j < m; ++j)
        for (int t = 0; t < a.e[j]; ++t) p = p * cond.domain.ineqs[j];

      // equilibrate: the stored multiplier applies to p / scale
      double scale = 0.0;
      for (const auto& [pm, pe] : p.terms()) scale = std::max(scale, std::abs(numeric_coef(pe)));
      if (scale == 0.0) scale = 1.0;

      LambdaInfo info;
      info.condition = static_cast<int>(ci);
      info.powers = a.e;
      info.col = col;
      info.scale = scale;
      prog.lambdas.push_back(std::move(info));

      for (const auto& [pm, pe] : p.terms())
        add_expansion(rows, static_cast<int>(ci), pm, col, numeric_coef(pe) / scale);
      ++col;
    }

    match_target(rows, static_cast<int>(ci),
                 strict_shifted(cond.target, cond.strict, opts.strict_eps));
  }
  prog.n_lambda = col - prog.n_beta;

  finish(prog, rows, conditions, opts);
  return prog;
}

}  // namespace certirl
