#pragma once

#include <map>
#include <string>
#include <vector>

#include "certirl/errors.hpp"

namespace certirl {

// ---------------------------------------------------------------------------
// Multivariate polynomials whose coefficients live in a restricted symbolic
// class: affine in a set of scalar *parameters* (controller entries theta and
// plant parameters alpha share one index space) and affine in a disjoint set
// of *decision* symbols (certificate coefficients beta), with decision-level
// coefficients themselves allowed to be parameter-affine. That is exactly the
// class the relaxation needs: constraint rows linear in (beta, gram, lambda)
// with entries affine in (theta, alpha). Products that would leave the class
// raise ParamDegreeError instead of silently truncating.
// ---------------------------------------------------------------------------

struct Monomial {
  std::vector<int> e;  // exponent per variable
  int degree() const {
    int d = 0;
    for (int ei : e) d += ei;
    return d;
  }
  bool operator==(const Monomial& o) const { return e == o.e; }
};

// graded lexicographic, ascending: lower total degree first, ties broken by
// plain lex on the exponent vector (so x2 < x1 within a degree)
bool grlex_less(const Monomial& a, const Monomial& b);

struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const { return grlex_less(a, b); }
};

// all monomials in n variables with total degree <= max_degree, grlex ascending
std::vector<Monomial> monomial_basis(int nvars, int max_degree);

// affine function of the parameter vector: c0 + sum lin[i] * p[i]
struct AffineParam {
  double c0 = 0.0;
  std::map<int, double> lin;

  static AffineParam constant(double v) { return AffineParam{v, {}}; }
  static AffineParam param(int idx, double coeff = 1.0) {
    AffineParam a;
    if (coeff != 0.0) a.lin[idx] = coeff;
    return a;
  }
  bool is_constant() const { return lin.empty(); }
  bool is_zero() const { return c0 == 0.0 && lin.empty(); }
  double eval(const std::vector<double>& params) const;
  void add(const AffineParam& o, double scale = 1.0);
  AffineParam scaled(double s) const;
  AffineParam mul(const AffineParam& o) const;  // ParamDegreeError unless one side constant
  bool operator==(const AffineParam& o) const { return c0 == o.c0 && lin == o.lin; }
};

// affine in decision symbols; each coefficient is parameter-affine
struct ParamExpr {
  AffineParam base;
  std::map<int, AffineParam> dec;

  static ParamExpr constant(double v) { return ParamExpr{AffineParam::constant(v), {}}; }
  static ParamExpr param(int idx, double coeff = 1.0) {
    return ParamExpr{AffineParam::param(idx, coeff), {}};
  }
  static ParamExpr decision(int idx, double coeff = 1.0) {
    ParamExpr e;
    if (coeff != 0.0) e.dec[idx] = AffineParam::constant(coeff);
    return e;
  }
  bool is_zero() const { return base.is_zero() && dec.empty(); }
  bool is_numeric() const { return base.is_constant() && dec.empty(); }
  double eval(const std::vector<double>& params, const std::vector<double>& decisions) const;
  void add(const ParamExpr& o, double scale = 1.0);
  ParamExpr scaled(double s) const;
  ParamExpr mul(const ParamExpr& o) const;
  void prune();
  bool operator==(const ParamExpr& o) const { return base == o.base && dec == o.dec; }
};

class Polynomial {
 public:
  using TermMap = std::map<Monomial, ParamExpr, GrlexLess>;

  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}
  static Polynomial constant(int nvars, double v);
  static Polynomial variable(int nvars, int i);

  int nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_numeric() const;
  int degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.degree(); }

  void add_term(const Monomial& m, const ParamExpr& c);
  ParamExpr coefficient(const Monomial& m) const;
  Polynomial bind(const std::vector<double>& params, const std::vector<double>& decisions) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(const Polynomial& a);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double s);
  friend Polynomial operator*(double s, Polynomial a) { return std::move(a) * s; }
  bool operator==(const Polynomial& o) const {
    return nvars_ == o.nvars_ && terms_ == o.terms_;
  }

 private:
  int nvars_ = 0;
  TermMap terms_;
};

bool approx_equal(const Polynomial& a, const Polynomial& b, double tol);

Polynomial differentiate(const Polynomial& p, int var);

// simultaneous substitution var -> polynomial (unbound variables stay)
Polynomial substitute(const Polynomial& p, const std::map<int, Polynomial>& bindings);

// complete coefficient map against monomial_basis(nvars, max_degree), explicit
// zeros included; DegreeOverflow if p has terms above max_degree
std::map<Monomial, ParamExpr, GrlexLess> coefficients(const Polynomial& p, int max_degree);

double evaluate(const Polynomial& p, const std::vector<double>& x);
double evaluate(const Polynomial& p, const std::vector<double>& x,
                const std::vector<double>& params, const std::vector<double>& decisions);

// numeric-only text form used by the artifact files (%.17g, bit round-trip)
std::string poly_to_text(const Polynomial& p);
Polynomial poly_from_text(const std::string& text);

// flattened numeric polynomial for the sampling / rollout hot loops
struct FlatPoly {
  int nvars = 0;
  std::vector<int> exps;      // nterms x nvars, row major
  std::vector<double> coefs;  // nterms

  FlatPoly() = default;
  explicit FlatPoly(const Polynomial& p);
  double eval(const double* x) const;
  double eval(const std::vector<double>& x) const { return eval(x.data()); }
};

}  // namespace certirl
