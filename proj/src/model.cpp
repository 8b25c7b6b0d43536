#include "certirl/model.hpp"

#include <cmath>

#include "certirl/errors.hpp"

namespace certirl {

bool SemialgebraicSet::contains(const std::vector<double>& x, double tol) const {
  for (const auto& g : ineqs)
    if (evaluate(g, x) < -tol) return false;
  return true;
}

std::vector<double> DynamicalSystem::lift(const std::vector<double>& x_orig) const {
  std::vector<double> x(n());
  for (int i = 0; i < n_original; ++i) x[i] = x_orig[i];
  for (std::size_t k = 0; k < trig_of_original.size(); ++k) {
    x[n_original + 2 * k] = std::sin(x_orig[trig_of_original[k]]);
    x[n_original + 2 * k + 1] = std::cos(x_orig[trig_of_original[k]]);
  }
  return x;
}

std::vector<double> DynamicalSystem::sample_x0(Rng& rng) const {
  if (X0.shape == SemialgebraicSet::Shape::ball)
    return lift(rng.ball(X0.center, X0.radius));
  if (X0.shape == SemialgebraicSet::Shape::box) return lift(rng.box(X0.lo, X0.hi));
  throw Error("X0 has no sampling description");
}

namespace {

// remap a polynomial over old variable slots into a wider/reordered slot list;
// map[i] = new slot of old variable i
Polynomial remap_vars(const Polynomial& p, const std::vector<int>& map, int new_nvars) {
  Polynomial out(new_nvars);
  for (const auto& [m, c] : p.terms()) {
    Monomial nm;
    nm.e.assign(new_nvars, 0);
    for (std::size_t i = 0; i < m.e.size(); ++i) {
      if (m.e[i] == 0) continue;
      if (map[i] < 0) throw UnsupportedTranscendental("dynamics reference sin/cos of an undeclared angle");
      nm.e[map[i]] = m.e[i];
    }
    out.add_term(nm, c);
  }
  return out;
}

Polynomial drop_input_vars(const Polynomial& p, int n, int m) {
  Polynomial out(n);
  for (const auto& [mono, c] : p.terms()) {
    for (int j = 0; j < m; ++j)
      if (mono.e[n + j] != 0) throw Error("input variable survived substitution");
    Monomial nm;
    nm.e.assign(mono.e.begin(), mono.e.begin() + n);
    out.add_term(nm, c);
  }
  return out;
}

}  // namespace

DynamicalSystem recast_trig(const TrigSystem& tsys) {
  const DynamicalSystem& b = tsys.base;
  const int n0 = b.n(), m = b.m();
  const int t = static_cast<int>(tsys.trig_vars.size());
  const int n1 = n0 + 2 * t;

  DynamicalSystem out = b;
  out.state = b.state;
  for (int k = 0; k < t; ++k) {
    const std::string& a = b.state[tsys.trig_vars[k]];
    out.state.push_back("sin_" + a);
    out.state.push_back("cos_" + a);
  }
  out.n_original = n0;
  out.trig_of_original = tsys.trig_vars;

  // old extended order: [x(n0), u(m), sin/cos(t pairs)]
  // new order:          [x(n0), p/q(t pairs), u(m)]
  std::vector<int> dynmap(n0 + m + 2 * t);
  for (int i = 0; i < n0; ++i) dynmap[i] = i;
  for (int j = 0; j < m; ++j) dynmap[n0 + j] = n1 + j;
  for (int k = 0; k < t; ++k) {
    dynmap[n0 + m + 2 * k] = n0 + 2 * k;
    dynmap[n0 + m + 2 * k + 1] = n0 + 2 * k + 1;
  }
  out.f.clear();
  for (const auto& fi : b.f) out.f.push_back(remap_vars(fi, dynmap, n1 + m));
  // pdot = q * adot, qdot = -p * adot (exact chain rule); copy adot because
  // the push_backs below may reallocate out.f
  for (int k = 0; k < t; ++k) {
    const Polynomial adot = out.f[tsys.trig_vars[k]];
    Polynomial p = Polynomial::variable(n1 + m, n0 + 2 * k);
    Polynomial q = Polynomial::variable(n1 + m, n0 + 2 * k + 1);
    out.f.push_back(q * adot);
    out.f.push_back(-(p * adot));
  }

  // sets: same inequalities over the first n0 slots, plus the circle pair per
  // angle; X additionally gets the [-1,1] faces of p and q as valid cuts
  std::vector<int> setmap(n0);
  for (int i = 0; i < n0; ++i) setmap[i] = i;
  auto lift_set = [&](const SemialgebraicSet& s) {
    SemialgebraicSet r = s;
    r.ineqs.clear();
    for (const auto& g : s.ineqs) r.ineqs.push_back(remap_vars(g, setmap, n1));
    for (int k = 0; k < t; ++k) {
      Polynomial p = Polynomial::variable(n1, n0 + 2 * k);
      Polynomial q = Polynomial::variable(n1, n0 + 2 * k + 1);
      Polynomial circle = p * p + q * q - Polynomial::constant(n1, 1.0);
      r.ineqs.push_back(circle);
      r.ineqs.push_back(-circle);
    }
    return r;
  };
  out.X = lift_set(b.X);
  for (int k = 0; k < t; ++k)
    for (int off : {0, 1}) {
      Polynomial v = Polynomial::variable(n1, n0 + 2 * k + off);
      out.X.ineqs.push_back(Polynomial::constant(n1, 1.0) - v);
      out.X.ineqs.push_back(Polynomial::constant(n1, 1.0) + v);
    }
  out.X0 = lift_set(b.X0);
  if (b.Xu) out.Xu = lift_set(*b.Xu);

  out.goal.resize(n1);
  for (int i = 0; i < n0; ++i) out.goal[i] = b.goal[i];
  for (int k = 0; k < t; ++k) {
    out.goal[n0 + 2 * k] = std::sin(b.goal[tsys.trig_vars[k]]);
    out.goal[n0 + 2 * k + 1] = std::cos(b.goal[tsys.trig_vars[k]]);
  }
  return out;
}

std::vector<double> Controller::eval(const std::vector<double>& x) const {
  std::vector<double> u(n_inputs, 0.0);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    double w = 1.0;
    for (std::size_t i = 0; i < basis[k].e.size(); ++i)
      for (int r = 0; r < basis[k].e[i]; ++r) w *= x[i];
    for (int i = 0; i < n_inputs; ++i) u[i] += theta(i, k) * w;
  }
  return u;
}

std::vector<Polynomial> closed_loop(const DynamicalSystem& sys, const Controller& ctrl,
                                    bool symbolic_theta) {
  const int n = sys.n(), m = sys.m();
  const int nb = static_cast<int>(ctrl.basis.size());
  std::map<int, Polynomial> bindings;
  for (int i = 0; i < m; ++i) {
    Polynomial ui(n + m);
    for (int k = 0; k < nb; ++k) {
      Monomial mono;
      mono.e.assign(n + m, 0);
      for (int v = 0; v < n; ++v) mono.e[v] = ctrl.basis[k].e[v];
      ui.add_term(mono, symbolic_theta ? ParamExpr::param(i * nb + k)
                                       : ParamExpr::constant(ctrl.theta(i, k)));
    }
    bindings.emplace(n + i, ui);
  }
  std::vector<Polynomial> out;
  out.reserve(sys.f.size());
  for (const auto& fi : sys.f) out.push_back(drop_input_vars(substitute(fi, bindings), n, m));
  return out;
}

DynamicalSystem bind_alpha(const DynamicalSystem& sys, const std::vector<double>& alpha) {
  DynamicalSystem out = sys;
  // evaluate only the alpha slots and leave any theta slots untouched
  auto bind_coeff = [&](const AffineParam& a) {
    AffineParam r;
    r.c0 = a.c0;
    for (const auto& [idx, c] : a.lin) {
      if (idx >= sys.alpha_offset && idx < sys.alpha_offset + sys.n_alpha)
        r.c0 += c * alpha.at(idx - sys.alpha_offset);
      else
        r.lin[idx] = c;
    }
    return r;
  };
  out.f.clear();
  for (const auto& fi : sys.f) {
    Polynomial g(fi.nvars());
    for (const auto& [mono, c] : fi.terms()) {
      ParamExpr e;
      e.base = bind_coeff(c.base);
      for (const auto& [di, dc] : c.dec) e.dec[di] = bind_coeff(dc);
      e.prune();
      g.add_term(mono, e);
    }
    out.f.push_back(g);
  }
  return out;
}

namespace {

std::vector<double> flat_params(const DynamicalSystem& sys, const std::vector<double>& alpha) {
  std::vector<double> p(sys.alpha_offset + sys.n_alpha, 0.0);
  for (int i = 0; i < sys.n_alpha; ++i) p[sys.alpha_offset + i] = alpha[i];
  return p;
}

}  // namespace

std::vector<double> DiscreteModel::step_truth(const std::vector<double>& x,
                                              const std::vector<double>& u) const {
  std::vector<double> xu(x);
  xu.insert(xu.end(), u.begin(), u.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fd_truth[i].eval(xu.data());
  return out;
}

std::vector<double> DiscreteModel::step_est(const std::vector<double>& x,
                                            const std::vector<double>& u) const {
  std::vector<double> xu(x);
  xu.insert(xu.end(), u.begin(), u.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fd_est[i].eval(xu.data());
  return out;
}

DiscreteModel discretize(const DynamicalSystem& sys, double dt,
                         const std::vector<double>& alpha_est) {
  DiscreteModel md;
  md.sys = &sys;
  md.dt = dt;
  md.alpha = alpha_est;
  md.alpha_bounds = sys.alpha_bounds;
  const int n = sys.n(), m = sys.m();

  // f^d(x,u) = x + dt f(x,u)
  std::vector<Polynomial> fd;
  for (int i = 0; i < n; ++i)
    fd.push_back(Polynomial::variable(n + m, i) + sys.f[i] * dt);

  auto bind_all = [&](const std::vector<double>& alpha) {
    std::vector<FlatPoly> out;
    const auto p = flat_params(sys, alpha);
    for (const auto& g : fd) out.emplace_back(g.bind(p, {}));
    return out;
  };
  md.fd_truth = bind_all(sys.alpha_truth);
  md.fd_est = bind_all(alpha_est);

  const auto pe = flat_params(sys, alpha_est);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) md.fd_x.emplace_back(differentiate(fd[i], j).bind(pe, {}));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      md.fd_u.emplace_back(differentiate(fd[i], n + j).bind(pe, {}));

  // d f^d / d alpha_k: exact since the dynamics are alpha-affine
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < sys.n_alpha; ++k) {
      Polynomial dk(n + m);
      for (const auto& [mono, c] : fd[i].terms()) {
        auto it = c.base.lin.find(sys.alpha_offset + k);
        if (it != c.base.lin.end()) dk.add_term(mono, ParamExpr::constant(it->second));
      }
      md.fd_alpha.emplace_back(dk);
    }

  // shield evaluators: corner/midpoint one-step models and the unsafe-set
  // derivative polynomials used by the inflation bound
  if (sys.Xu) {
    std::vector<double> mid(sys.n_alpha);
    for (int i = 0; i < sys.n_alpha; ++i)
      mid[i] = 0.5 * (sys.alpha_bounds[i][0] + sys.alpha_bounds[i][1]);
    md.fd_corners.push_back(bind_all(mid));
    for (int mask = 0; mask < (1 << sys.n_alpha); ++mask) {
      std::vector<double> a(sys.n_alpha);
      for (int i = 0; i < sys.n_alpha; ++i) a[i] = sys.alpha_bounds[i][(mask >> i) & 1];
      md.fd_corners.push_back(bind_all(a));
    }
    const int nx = sys.X.nvars();
    for (const auto& g : sys.Xu->ineqs) {
      md.xu_ineqs.emplace_back(g);
      for (int i = 0; i < nx; ++i) {
        Polynomial gi = differentiate(g, i);
        md.xu_grad.emplace_back(gi);
        for (int j = 0; j < nx; ++j) md.xu_hess.emplace_back(differentiate(gi, j));
      }
    }
  }
  return md;
}

bool in_shield(const std::vector<double>& x, const DiscreteModel& model,
               const DynamicalSystem& sys, const Controller& ctrl) {
  if (!sys.Xu) return false;
  if (sys.Xu->contains(x)) return true;

  const std::vector<double> u = ctrl.eval(x);
  std::vector<double> xu(x);
  xu.insert(xu.end(), u.begin(), u.end());
  const int n = sys.n();

  // one-step images under the midpoint (index 0) and corner models
  std::vector<std::vector<double>> imgs(model.fd_corners.size(), std::vector<double>(n));
  for (std::size_t k = 0; k < imgs.size(); ++k)
    for (int i = 0; i < n; ++i) imgs[k][i] = model.fd_corners[k][i].eval(xu.data());
  const auto& x_mid = imgs.front();
  double rho = 0.0;
  for (std::size_t k = 1; k < imgs.size(); ++k) {
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += (imgs[k][i] - x_mid[i]) * (imgs[k][i] - x_mid[i]);
    rho = std::max(rho, std::sqrt(d2));
  }

  // inflate each inequality by a first-order bound plus quadratic remainder
  // (exact for the quadratic set descriptions used by the benchmarks)
  const int ng = static_cast<int>(model.xu_ineqs.size());
  for (const auto& img : imgs) {
    bool inside = true;
    for (int gi = 0; gi < ng && inside; ++gi) {
      const double gval = model.xu_ineqs[gi].eval(img.data());
      double grad2 = 0.0, hessf = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = model.xu_grad[gi * n + i].eval(x_mid.data());
        grad2 += d * d;
        for (int j = 0; j < n; ++j) {
          const double hij = model.xu_hess[(gi * n + i) * n + j].eval(x_mid.data());
          hessf += hij * hij;
        }
      }
      const double kappa = rho * std::sqrt(grad2) + rho * rho * std::sqrt(hessf);
      if (gval < -kappa) inside = false;
    }
    if (inside) return true;
  }
  return false;
}

}  // namespace certirl
