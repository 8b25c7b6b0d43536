#include "certirl/poly.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace certirl {

bool grlex_less(const Monomial& a, const Monomial& b) {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  return a.e < b.e;  // lexicographic tie-break
}

std::vector<Monomial> monomial_basis(int nvars, int max_degree) {
  std::vector<Monomial> out;
  Monomial cur;
  cur.e.assign(nvars, 0);
  // enumerate exponent vectors with sum <= max_degree, then grlex-sort
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == nvars) {
      out.push_back(cur);
      return;
    }
    for (int ei = 0; ei <= remaining; ++ei) {
      cur.e[var] = ei;
      self(self, var + 1, remaining - ei);
    }
    cur.e[var] = 0;
  };
  rec(rec, 0, max_degree);
  std::sort(out.begin(), out.end(), grlex_less);
  return out;
}

// ---- AffineParam ------------------------------------------------------------

double AffineParam::eval(const std::vector<double>& params) const {
  double v = c0;
  for (const auto& [i, ci] : lin) v += ci * params.at(i);
  return v;
}

void AffineParam::add(const AffineParam& o, double scale) {
  c0 += scale * o.c0;
  for (const auto& [i, ci] : o.lin) {
    double& slot = lin[i];
    slot += scale * ci;
    if (slot == 0.0) lin.erase(i);
  }
}

AffineParam AffineParam::scaled(double s) const {
  AffineParam r;
  if (s == 0.0) return r;
  r.c0 = s * c0;
  for (const auto& [i, ci] : lin) r.lin[i] = s * ci;
  return r;
}

AffineParam AffineParam::mul(const AffineParam& o) const {
  if (is_constant()) return o.scaled(c0);
  if (o.is_constant()) return scaled(o.c0);
  throw ParamDegreeError("product of two parameter-dependent coefficients");
}

// ---- ParamExpr --------------------------------------------------------------

double ParamExpr::eval(const std::vector<double>& params,
                       const std::vector<double>& decisions) const {
  double v = base.eval(params);
  for (const auto& [i, ci] : dec) v += ci.eval(params) * decisions.at(i);
  return v;
}

void ParamExpr::add(const ParamExpr& o, double scale) {
  base.add(o.base, scale);
  for (const auto& [i, ci] : o.dec) {
    auto& slot = dec[i];
    slot.add(ci, scale);
    if (slot.is_zero()) dec.erase(i);
  }
}

ParamExpr ParamExpr::scaled(double s) const {
  ParamExpr r;
  if (s == 0.0) return r;
  r.base = base.scaled(s);
  for (const auto& [i, ci] : dec) r.dec[i] = ci.scaled(s);
  return r;
}

ParamExpr ParamExpr::mul(const ParamExpr& o) const {
  if (!dec.empty() && !o.dec.empty())
    throw ParamDegreeError("product of two decision-dependent coefficients");
  ParamExpr r;
  r.base = base.mul(o.base);
  for (const auto& [i, ci] : dec) r.dec[i] = ci.mul(o.base);
  for (const auto& [i, ci] : o.dec) {
    auto& slot = r.dec[i];
    slot.add(ci.mul(base));
    if (slot.is_zero()) r.dec.erase(i);
  }
  r.prune();
  return r;
}

void ParamExpr::prune() {
  for (auto it = dec.begin(); it != dec.end();)
    it = it->second.is_zero() ? dec.erase(it) : std::next(it);
}

// ---- Polynomial -------------------------------------------------------------

Polynomial Polynomial::constant(int nvars, double v) {
  Polynomial p(nvars);
  Monomial m;
  m.e.assign(nvars, 0);
  p.add_term(m, ParamExpr::constant(v));
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  Polynomial p(nvars);
  Monomial m;
  m.e.assign(nvars, 0);
  m.e.at(i) = 1;
  p.add_term(m, ParamExpr::constant(1.0));
  return p;
}

bool Polynomial::is_numeric() const {
  for (const auto& [m, c] : terms_)
    if (!c.is_numeric()) return false;
  return true;
}

void Polynomial::add_term(const Monomial& m, const ParamExpr& c) {
  if (static_cast<int>(m.e.size()) != nvars_)
    throw Error("monomial arity does not match polynomial");
  if (c.is_zero()) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
    return;
  }
  it->second.add(c);
  if (it->second.is_zero()) terms_.erase(it);
}

ParamExpr Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? ParamExpr{} : it->second;
}

Polynomial Polynomial::bind(const std::vector<double>& params,
                            const std::vector<double>& decisions) const {
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_)
    r.add_term(m, ParamExpr::constant(c.eval(params, decisions)));
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (nvars_ != o.nvars_) throw Error("polynomial arity mismatch");
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (nvars_ != o.nvars_) throw Error("polynomial arity mismatch");
  for (const auto& [m, c] : o.terms_) add_term(m, c.scaled(-1.0));
  return *this;
}

Polynomial operator-(const Polynomial& a) {
  Polynomial r(a.nvars_);
  for (const auto& [m, c] : a.terms_) r.terms_.emplace(m, c.scaled(-1.0));
  return r;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.nvars_ != b.nvars_) throw Error("polynomial arity mismatch");
  Polynomial r(a.nvars_);
  Monomial m;
  m.e.resize(a.nvars_);
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) {
      for (int i = 0; i < a.nvars_; ++i) m.e[i] = ma.e[i] + mb.e[i];
      r.add_term(m, ca.mul(cb));
    }
  return r;
}

Polynomial operator*(Polynomial a, double s) {
  Polynomial r(a.nvars());
  if (s == 0.0) return r;
  for (const auto& [m, c] : a.terms_) r.terms_.emplace(m, c.scaled(s));
  return r;
}

bool approx_equal(const Polynomial& a, const Polynomial& b, double tol) {
  if (a.nvars() != b.nvars()) return false;
  auto close = [&](const AffineParam& x, const AffineParam& y) {
    auto ok = [&](double u, double v) {
      return std::abs(u - v) <= tol * std::max({1.0, std::abs(u), std::abs(v)});
    };
    if (!ok(x.c0, y.c0)) return false;
    for (const auto& [i, ci] : x.lin)
      if (!ok(ci, y.lin.count(i) ? y.lin.at(i) : 0.0)) return false;
    for (const auto& [i, ci] : y.lin)
      if (!x.lin.count(i) && !ok(0.0, ci)) return false;
    return true;
  };
  auto close_expr = [&](const ParamExpr& x, const ParamExpr& y) {
    if (!close(x.base, y.base)) return false;
    for (const auto& [i, ci] : x.dec)
      if (!close(ci, y.dec.count(i) ? y.dec.at(i) : AffineParam{})) return false;
    for (const auto& [i, ci] : y.dec)
      if (!x.dec.count(i) && !close(AffineParam{}, ci)) return false;
    return true;
  };
  for (const auto& [m, c] : a.terms())
    if (!close_expr(c, b.coefficient(m))) return false;
  for (const auto& [m, c] : b.terms())
    if (!a.terms().count(m) && !close_expr(ParamExpr{}, c)) return false;
  return true;
}

Polynomial differentiate(const Polynomial& p, int var) {
  Polynomial r(p.nvars());
  for (const auto& [m, c] : p.terms()) {
    const int ei = m.e.at(var);
    if (ei == 0) continue;
    Monomial d = m;
    d.e[var] = ei - 1;
    r.add_term(d, c.scaled(static_cast<double>(ei)));
  }
  return r;
}

Polynomial substitute(const Polynomial& p, const std::map<int, Polynomial>& bindings) {
  const int n = p.nvars();
  for (const auto& [v, g] : bindings)
    if (g.nvars() != n) throw Error("substitution arity mismatch");
  // cache powers of each binding as they are needed
  std::map<int, std::vector<Polynomial>> powers;
  auto power = [&](int var, int k) -> const Polynomial& {
    auto& cache = powers[var];
    if (cache.empty()) cache.push_back(Polynomial::constant(n, 1.0));
    while (static_cast<int>(cache.size()) <= k)
      cache.push_back(cache.back() * bindings.at(var));
    return cache[k];
  };
  Polynomial out(n);
  for (const auto& [m, c] : p.terms()) {
    // unbound part of the monomial stays a single term
    Monomial rem;
    rem.e.assign(n, 0);
    Polynomial acc(n);
    acc.add_term(rem, c);
    for (int i = 0; i < n; ++i) {
      if (m.e[i] == 0) continue;
      if (bindings.count(i)) {
        acc = acc * power(i, m.e[i]);
      } else {
        rem.e[i] = m.e[i];
      }
    }
    if (rem.degree() > 0) {
      Polynomial shift(n);
      shift.add_term(rem, ParamExpr::constant(1.0));
      acc = acc * shift;
    }
    out += acc;
  }
  return out;
}

std::map<Monomial, ParamExpr, GrlexLess> coefficients(const Polynomial& p, int max_degree) {
  if (p.degree() > max_degree)
    throw DegreeOverflow("polynomial degree " + std::to_string(p.degree()) +
                         " exceeds requested map degree " + std::to_string(max_degree));
  std::map<Monomial, ParamExpr, GrlexLess> out;
  for (const auto& m : monomial_basis(p.nvars(), max_degree)) out[m] = ParamExpr{};
  for (const auto& [m, c] : p.terms()) out[m] = c;
  return out;
}

namespace {
double eval_mono(const Monomial& m, const double* x) {
  double v = 1.0;
  for (std::size_t i = 0; i < m.e.size(); ++i)
    for (int k = 0; k < m.e[i]; ++k) v *= x[i];
  return v;
}
}  // namespace

double evaluate(const Polynomial& p, const std::vector<double>& x) {
  return evaluate(p, x, {}, {});
}

double evaluate(const Polynomial& p, const std::vector<double>& x,
                const std::vector<double>& params, const std::vector<double>& decisions) {
  if (static_cast<int>(x.size()) != p.nvars()) throw Error("evaluation point arity mismatch");
  double v = 0.0;
  for (const auto& [m, c] : p.terms()) v += c.eval(params, decisions) * eval_mono(m, x.data());
  return v;
}

std::string poly_to_text(const Polynomial& p) {
  if (!p.is_numeric()) throw Error("text form only covers numeric polynomials");
  std::ostringstream os;
  os << "poly " << p.nvars() << " " << p.terms().size() << "\n";
  char buf[32];
  for (const auto& [m, c] : p.terms()) {
    for (int ei : m.e) os << ei << " ";
    std::snprintf(buf, sizeof buf, "%.17g", c.base.c0);
    os << buf << "\n";
  }
  return os.str();
}

Polynomial poly_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  int n = 0, k = 0;
  if (!(is >> tag >> n >> k) || tag != "poly")
    throw ConfigError("malformed polynomial text");
  Polynomial p(n);
  for (int t = 0; t < k; ++t) {
    Monomial m;
    m.e.resize(n);
    for (int i = 0; i < n; ++i)
      if (!(is >> m.e[i])) throw ConfigError("truncated polynomial text");
    double c;
    if (!(is >> c)) throw ConfigError("truncated polynomial text");
    p.add_term(m, ParamExpr::constant(c));
  }
  return p;
}

FlatPoly::FlatPoly(const Polynomial& p) : nvars(p.nvars()) {
  for (const auto& [m, c] : p.terms()) {
    if (!c.is_numeric()) throw Error("FlatPoly needs a numeric polynomial");
    exps.insert(exps.end(), m.e.begin(), m.e.end());
    coefs.push_back(c.base.c0);
  }
}

double FlatPoly::eval(const double* x) const {
  double v = 0.0;
  const int* e = exps.data();
  for (double c : coefs) {
    double t = c;
    for (int i = 0; i < nvars; ++i, ++e)
      for (int k = 0; k < *e; ++k) t *= x[i];
    v += t;
  }
  return v;
}

}  // namespace certirl
