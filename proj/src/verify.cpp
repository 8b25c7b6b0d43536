#include "certirl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>

#include "certirl/parallel.hpp"

namespace certirl {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kWitnessTol = 1e-9;

int svec_index(int i, int j, int b) {  // i >= j, lower triangle column-major
  return j * b - j * (j - 1) / 2 + (i - j);
}

Monomial mono_add(const Monomial& a, const Monomial& b) {
  Monomial r = a;
  for (size_t i = 0; i < r.e.size(); ++i) r.e[i] += b.e[i];
  return r;
}

double coef_value(const ParamExpr& pe) {
  if (!pe.is_numeric()) throw Error("verification expected a fully numeric polynomial");
  return pe.base.c0;
}

// the conditions the certificate claims, rebuilt at numeric theta with alpha
// and beta left symbolic for later binding
std::vector<PositivityCondition> rebuild_conditions(const DynamicalSystem& sys,
                                                    const Controller& ctrl,
                                                    const Certificate& cert) {
  if (cert.tmpl.kind == CertificateKind::barrier)
    return barrier_conditions(sys, ctrl, cert.tmpl, /*symbolic_theta=*/false, 0);
  return lyapunov_conditions(sys, ctrl, cert.tmpl, cert.cond_opts,
                             /*symbolic_theta=*/false, 0);
}

std::vector<double> alpha_params(const DynamicalSystem& sys,
                                 const std::vector<double>& alpha) {
  std::vector<double> p(sys.alpha_offset + sys.n_alpha, 0.0);
  for (int i = 0; i < sys.n_alpha; ++i) p[sys.alpha_offset + i] = alpha[i];
  return p;
}

// numeric expansion polynomial of condition ci from the stored proof data
Polynomial expansion_poly(const Certificate& cert, int ci,
                          const PositivityCondition& cond, int nvars) {
  Polynomial acc(nvars);
  for (const auto& blk : cert.grams) {
    if (blk.condition != ci) continue;
    const int b = static_cast<int>(blk.basis.size());
    Polynomial sq(nvars);
    for (int j = 0; j < b; ++j)
      for (int i = j; i < b; ++i) {
        const double c = (i == j) ? blk.Q(i, i) : 2.0 * blk.Q(i, j);
        if (c != 0.0) sq.add_term(mono_add(blk.basis[i], blk.basis[j]),
                                  ParamExpr::constant(c));
      }
    if (blk.ineq >= 0) sq = sq * cond.domain.ineqs[blk.ineq];
    acc += sq;
  }
  for (const auto& lam : cert.lambdas) {
    if (lam.condition != ci) continue;
    Polynomial p = Polynomial::constant(nvars, lam.weight);
    for (size_t j = 0; j < lam.powers.size(); ++j)
      for (int t = 0; t < lam.powers[j]; ++t) p = p * cond.domain.ineqs[j];
    acc += p;
  }
  return acc;
}

// Rejection sampler over one semialgebraic set. Proposals come from the set's
// own sampling metadata when present; otherwise a bounding box is recovered
// from the inequalities (axis faces and diagonal ball/ellipsoid patterns).
// Trig-recast sets propose in the original coordinates and lift, so the
// circle constraints are satisfied by construction.
class DomainSampler {
 public:
  DomainSampler(const SemialgebraicSet& set, const DynamicalSystem& sys,
                std::string label)
      : set_(&set), sys_(&sys), label_(std::move(label)) {
    recast_ = !sys.trig_of_original.empty();
    if (set.shape == SemialgebraicSet::Shape::ball && !set.center.empty()) {
      ball_ = true;
    } else if (set.shape == SemialgebraicSet::Shape::box && !set.lo.empty()) {
      lo_ = set.lo;
      hi_ = set.hi;
    } else {
      infer_box();
    }
  }

  // stateless given the rng, so samples can be drawn from any thread
  std::vector<double> draw(Rng& rng) const {
    for (int k = 0; k < kMaxTries; ++k) {
      std::vector<double> x =
          ball_ ? rng.ball(set_->center, set_->radius) : rng.box(lo_, hi_);
      std::vector<double> z = recast_ ? sys_->lift(x) : std::move(x);
      if (set_->contains(z, 1e-9)) return z;
    }
    std::ostringstream os;
    os << "rejection sampling starved on domain '" << label_ << "': 0 of "
       << kMaxTries << " proposals accepted";
    throw SamplingStarvation(os.str());
  }

 private:
  static constexpr int kMaxTries = 200000;

  // per-variable bounds from the inequalities: linear faces give one-sided
  // cuts, a diagonal quadratic with negative squares gives a center +- radius
  // interval per variable after completing the square
  void infer_box() {
    if (recast_)
      throw SamplingStarvation("recast domain '" + label_ +
                               "' has no sampling metadata");
    const int n = set_->nvars();
    lo_.assign(n, -std::numeric_limits<double>::infinity());
    hi_.assign(n, std::numeric_limits<double>::infinity());
    for (const auto& g : set_->ineqs) {
      double c0 = 0.0;
      std::vector<double> lin(n, 0.0), quad(n, 0.0);
      bool shaped = true;
      for (const auto& [mono, pe] : g.terms()) {
        const double c = coef_value(pe);
        const int d = mono.degree();
        if (d == 0) {
          c0 = c;
        } else if (d == 1) {
          for (int i = 0; i < n; ++i)
            if (mono.e[i] == 1) lin[i] += c;
        } else if (d == 2) {
          int sq = -1;
          for (int i = 0; i < n; ++i)
            if (mono.e[i] == 2) sq = i;
          if (sq < 0) shaped = false;  // cross term: not a diagonal form
          else quad[sq] += c;
        } else {
          shaped = false;
        }
        if (!shaped) break;
      }
      if (!shaped) continue;
      const bool has_quad = std::any_of(quad.begin(), quad.end(),
                                        [](double q) { return q != 0.0; });
      if (!has_quad) {
        // a face c0 + s x_i >= 0 bounds x_i from one side
        int var = -1;
        int nlin = 0;
        for (int i = 0; i < n; ++i)
          if (lin[i] != 0.0) {
            var = i;
            ++nlin;
          }
        if (nlin != 1) continue;
        const double bound = -c0 / lin[var];
        if (lin[var] > 0) lo_[var] = std::max(lo_[var], bound);
        else hi_[var] = std::min(hi_[var], bound);
        continue;
      }
      // need every participating direction curved downward
      bool ball_like = true;
      for (int i = 0; i < n; ++i) {
        if (quad[i] > 0.0) ball_like = false;
        if (quad[i] == 0.0 && lin[i] != 0.0) ball_like = false;  // unbounded
      }
      if (!ball_like) continue;
      double cshift = c0;
      std::vector<double> mid(n, 0.0);
      for (int i = 0; i < n; ++i) {
        if (quad[i] == 0.0) continue;
        mid[i] = -lin[i] / (2.0 * quad[i]);
        cshift -= quad[i] * mid[i] * mid[i];
      }
      if (cshift < 0.0) continue;
      for (int i = 0; i < n; ++i) {
        if (quad[i] == 0.0) continue;
        const double r = std::sqrt(cshift / -quad[i]);
        lo_[i] = std::max(lo_[i], mid[i] - r);
        hi_[i] = std::min(hi_[i], mid[i] + r);
      }
    }
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || lo_[i] > hi_[i])
        throw SamplingStarvation("no bounding box derivable for domain '" + label_ +
                                 "' (variable " + std::to_string(i) + ")");
  }

  const SemialgebraicSet* set_;
  const DynamicalSystem* sys_;
  std::string label_;
  bool recast_ = false;
  bool ball_ = false;
  std::vector<double> lo_, hi_;
};

}  // namespace

double Certificate::eval(const std::vector<double>& x) const {
  double v = 0.0;
  for (size_t k = 0; k < tmpl.basis.size(); ++k) {
    double w = 1.0;
    for (size_t i = 0; i < tmpl.basis[k].e.size(); ++i)
      for (int r = 0; r < tmpl.basis[k].e[i]; ++r) w *= x[i];
    v += beta[k] * w;
  }
  return v;
}

Certificate extract_certificate(const ConeProgram& prog, const Eigen::VectorXd& u,
                                const std::vector<double>& alpha, int block) {
  if (block < 0 || block >= static_cast<int>(prog.beta_blocks.size()))
    throw ConfigError("program carries no template metadata for beta block " +
                      std::to_string(block));
  const BetaBlockInfo& bb = prog.beta_blocks[block];

  Certificate cert;
  cert.tmpl = bb.tmpl;
  cert.backend = prog.backend;
  cert.alpha = alpha;
  cert.strict_eps = prog.strict_eps;
  cert.beta.resize(bb.tmpl.basis.size());
  for (size_t k = 0; k < cert.beta.size(); ++k) cert.beta[k] = u[bb.offset + k];

  for (const auto& blk : prog.grams) {
    Certificate::Gram g;
    g.condition = blk.condition;
    g.ineq = blk.ineq;
    g.basis = blk.basis;
    const int b = static_cast<int>(blk.basis.size());
    g.Q.resize(b, b);
    for (int j = 0; j < b; ++j)
      for (int i = j; i < b; ++i) {
        const double v = u[blk.col0 + svec_index(i, j, b)];
        g.Q(i, j) = g.Q(j, i) = (i == j) ? v : v / kSqrt2;
      }
    cert.grams.push_back(std::move(g));
  }
  for (const auto& lam : prog.lambdas) {
    Certificate::Multiplier m;
    m.condition = lam.condition;
    m.powers = lam.powers;
    m.weight = u[lam.col] / lam.scale;
    cert.lambdas.push_back(std::move(m));
  }
  return cert;
}

CertificateReport check_certificate(const DynamicalSystem& sys, const Controller& ctrl,
                                    const Certificate& cert,
                                    const std::vector<double>& alpha, long long N,
                                    std::uint64_t seed) {
  CertificateReport rep;
  rep.kind = cert.tmpl.kind;

  auto conds = rebuild_conditions(sys, ctrl, cert);
  const auto params = alpha_params(sys, alpha);
  const int n = sys.n();

  // coefficient-matching residuals, monomial by monomial
  std::vector<Polynomial> targets;  // raw numeric targets, kept for sampling
  for (size_t ci = 0; ci < conds.size(); ++ci) {
    Polynomial tgt = conds[ci].target.bind(params, cert.beta);
    Polynomial eff = tgt;
    if (conds[ci].strict)
      eff.add_term(Monomial{std::vector<int>(n, 0)},
                   ParamExpr::constant(-cert.strict_eps));
    Polynomial resid = eff - expansion_poly(cert, static_cast<int>(ci), conds[ci], n);
    double worst = 0.0;
    for (const auto& [mono, pe] : resid.terms())
      worst = std::max(worst, std::abs(coef_value(pe)));
    rep.condition_residual.push_back(worst);
    rep.condition_label.push_back(conds[ci].label);
    rep.residual_max = std::max(rep.residual_max, worst);
    targets.push_back(std::move(tgt));
  }

  // positivity of the proof weights
  if (cert.backend == Backend::sos) {
    double mn = 0.0;
    bool first = true;
    for (const auto& blk : cert.grams) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.Q,
                                                        Eigen::EigenvaluesOnly);
      const double e0 = es.eigenvalues().minCoeff();
      mn = first ? e0 : std::min(mn, e0);
      first = false;
    }
    rep.gram_min_eig = first ? 0.0 : mn;
  } else {
    double mn = 0.0;
    bool first = true;
    for (const auto& lam : cert.lambdas) {
      mn = first ? lam.weight : std::min(mn, lam.weight);
      first = false;
    }
    rep.gram_min_eig = first ? 0.0 : mn;
  }

  // raw inequalities on fresh samples of every condition domain; one rng
  // stream per sample index, so the threaded and serial kernels agree bitwise
  for (size_t ci = 0; ci < conds.size(); ++ci) {
    DomainSampler sampler(conds[ci].domain, sys, conds[ci].label);
    FlatPoly ft(targets[ci]);
    std::vector<double> vals(static_cast<size_t>(N));
    std::mutex starve_mu;
    long long starve_k = -1;
    std::string starve_msg;
    par_for(N, [&](std::int64_t k) {
      try {
        Rng rng(seed, Rng::tag(21, ci, static_cast<std::uint64_t>(k)));
        vals[k] = ft.eval(sampler.draw(rng));
      } catch (const SamplingStarvation& e) {
        std::lock_guard<std::mutex> lock(starve_mu);
        if (starve_k < 0 || k < starve_k) {
          starve_k = k;
          starve_msg = e.what();
        }
      }
    });
    if (starve_k >= 0) throw SamplingStarvation(starve_msg);
    rep.samples += N;
    for (long long k = 0; k < N; ++k) {
      if (vals[k] < -kWitnessTol) {
        ++rep.falsified;
        if (!rep.witness) {
          Rng rng(seed, Rng::tag(21, ci, static_cast<std::uint64_t>(k)));
          rep.witness = sampler.draw(rng);  // replay the violating index
          rep.witness_condition = conds[ci].label;
          rep.witness_value = vals[k];
        }
      }
    }
  }

  const double mult_floor = cert.backend == Backend::sos ? -1e-8 : -1e-10;
  rep.pass = rep.residual_max <= 1e-6 && rep.gram_min_eig >= mult_floor &&
             rep.falsified == 0;
  return rep;
}

std::string report_text(const CertificateReport& rep) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  os << "kind: " << (rep.kind == CertificateKind::barrier ? "barrier" : "lyapunov")
     << "\n";
  os << "verdict: " << (rep.pass ? "pass" : "fail") << "\n";
  os << "residual_max: " << num(rep.residual_max) << "\n";
  os << "gram_min_eig: " << num(rep.gram_min_eig) << "\n";
  os << "samples: " << rep.samples << "\n";
  os << "falsified: " << rep.falsified << "\n";
  for (size_t i = 0; i < rep.condition_residual.size(); ++i)
    os << "condition " << rep.condition_label[i]
       << ": residual " << num(rep.condition_residual[i]) << "\n";
  if (rep.witness) {
    os << "witness (" << rep.witness_condition << ", value "
       << num(rep.witness_value) << "):";
    for (double xi : *rep.witness) os << " " << num(xi);
    os << "\n";
  }
  return os.str();
}

FalsifyResult falsify(const DynamicalSystem& sys, const Controller& ctrl,
                      FalsifyProperty property, const std::vector<double>& alpha,
                      int runs, int steps, double dt, std::uint64_t seed) {
  DiscreteModel md = discretize(sys, dt, alpha);

  struct RunOut {
    std::optional<std::vector<double>> witness;
    long long steps_done = 0;
    double final_dist = 0.0;
  };
  std::vector<RunOut> per(runs);

  // runs are independent given their rng stream; merged in index order below
  par_for(runs, [&](std::int64_t r) {
    RunOut& ro = per[r];
    Rng rng(seed, Rng::tag(22, static_cast<std::uint64_t>(r)));
    std::vector<double> x = sys.sample_x0(rng);
    for (int t = 0; t < steps; ++t) {
      if (property == FalsifyProperty::safety && sys.Xu && sys.Xu->contains(x)) {
        ro.witness = x;
        break;
      }
      double mag = 0.0;
      for (double xi : x) mag = std::max(mag, std::abs(xi));
      if (mag > 1e8) break;  // diverged; the final-distance proxy records it
      x = md.step_est(x, ctrl.eval(x));
      ++ro.steps_done;
    }
    double d2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - sys.goal[i];
      d2 += d * d;
    }
    ro.final_dist = std::sqrt(d2);
  });

  FalsifyResult out;
  out.runs = runs;
  for (int r = 0; r < runs; ++r) {
    out.steps_total += per[r].steps_done;
    if (per[r].witness && !out.witness) {
      out.witness = per[r].witness;
      out.witness_run = r;
    }
    if (!per[r].witness)
      out.max_final_dist = std::max(out.max_final_dist, per[r].final_dist);
  }
  return out;
}

RobustnessSweep robustness_sweep(const DynamicalSystem& sys, const Controller& ctrl,
                                 const Certificate& cert, int draws,
                                 long long n_per_draw, std::uint64_t seed) {
  auto conds = rebuild_conditions(sys, ctrl, cert);
  struct DrawOut {
    std::vector<double> alpha;
    double margin = std::numeric_limits<double>::infinity();
    bool violated = false;
  };
  std::vector<DrawOut> per(draws);

  par_for(draws, [&](std::int64_t d) {
    DrawOut& out = per[d];
    Rng arng(seed, Rng::tag(23, static_cast<std::uint64_t>(d)));
    std::vector<double> a(sys.n_alpha);
    for (int i = 0; i < sys.n_alpha; ++i)
      a[i] = arng.uniform(sys.alpha_bounds[i][0], sys.alpha_bounds[i][1]);
    const auto params = alpha_params(sys, a);
    for (size_t ci = 0; ci < conds.size(); ++ci) {
      FlatPoly ft(conds[ci].target.bind(params, cert.beta));
      DomainSampler sampler(conds[ci].domain, sys, conds[ci].label);
      Rng rng(seed, Rng::tag(24, static_cast<std::uint64_t>(d), ci));
      for (long long k = 0; k < n_per_draw; ++k) {
        const double v = ft.eval(sampler.draw(rng));
        out.margin = std::min(out.margin, v);
        if (v < -kWitnessTol) out.violated = true;
      }
    }
    out.alpha = std::move(a);
  });

  RobustnessSweep sweep;
  sweep.draws = draws;
  for (int d = 0; d < draws; ++d) {
    if (per[d].violated) ++sweep.violated_draws;
    if (d == 0 || per[d].margin < sweep.worst_margin) {
      sweep.worst_margin = per[d].margin;
      sweep.worst_alpha = per[d].alpha;
    }
  }
  return sweep;
}

std::vector<std::vector<double>> sample_domain(const SemialgebraicSet& set,
                                               const DynamicalSystem& sys, long long n,
                                               Rng& rng, const std::string& label) {
  DomainSampler sampler(set, sys, label);
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (long long k = 0; k < n; ++k) out.push_back(sampler.draw(rng));
  return out;
}

void write_level_set(std::ostream& os, const Certificate& cert, int xi, int yj,
                     const std::vector<double>& anchor, double x_lo, double x_hi,
                     double y_lo, double y_hi, int grid) {
  char buf[96];
  os << "x,y,value\n";
  std::vector<double> x = anchor;
  for (int a = 0; a < grid; ++a) {
    const double xv = x_lo + (x_hi - x_lo) * a / (grid - 1);
    for (int b = 0; b < grid; ++b) {
      const double yv = y_lo + (y_hi - y_lo) * b / (grid - 1);
      x[xi] = xv;
      x[yj] = yv;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", xv, yv, cert.eval(x));
      os << buf;
    }
  }
}

}  // namespace certirl
