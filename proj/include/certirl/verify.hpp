#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "certirl/conelayer.hpp"
#include "certirl/model.hpp"
#include "certirl/relax.hpp"
#include "certirl/rng.hpp"

namespace certirl {

// A certificate as returned by the synthesis: the function itself (basis +
// coefficients) together with the multipliers of the proof, so its validity
// can be re-derived here without trusting anything the solver reported.
struct Certificate {
  CertificateTemplate tmpl;   // kind, degree, lambda rate, basis
  std::vector<double> beta;   // coefficient per basis monomial
  Backend backend = Backend::sos;
  std::vector<double> alpha;  // plant estimate the proof was built at
  ConditionOptions cond_opts; // shaping used when the conditions were built
  double strict_eps = 1e-4;

  struct Gram {
    int condition = 0;
    int ineq = -1;  // -1: main block, else index into the domain ineq list
    std::vector<Monomial> basis;
    Eigen::MatrixXd Q;
  };
  struct Multiplier {
    int condition = 0;
    std::vector<int> powers;  // exponent per domain inequality
    double weight = 0.0;      // applies to the raw product of inequalities
  };
  std::vector<Gram> grams;           // SOS proof
  std::vector<Multiplier> lambdas;   // Handelman proof

  double eval(const std::vector<double>& x) const;
};

// pull the certificate out of a solved program; `block` selects which beta
// slice when several templates share the program (requires beta_blocks
// metadata to have been passed at compile time)
Certificate extract_certificate(const ConeProgram& prog, const Eigen::VectorXd& u,
                                const std::vector<double>& alpha, int block = 0);

struct CertificateReport {
  CertificateKind kind = CertificateKind::barrier;
  double residual_max = 0.0;  // worst coefficient-matching residual
  double gram_min_eig = 0.0;  // min eigenvalue over PSD blocks / min multiplier
  long long samples = 0;      // evaluated sample count, all conditions
  long long falsified = 0;    // samples violating a raw condition
  bool pass = false;
  std::optional<std::vector<double>> witness;  // a violating state, if any
  std::string witness_condition;
  double witness_value = 0.0;                   // target value at the witness
  std::vector<double> condition_residual;       // per condition
  std::vector<std::string> condition_label;
};

// Recompute the proof from scratch: rebuild the conditions at numeric theta
// and the given alpha, expand the stored multipliers, compare coefficients
// monomial by monomial, then rejection-sample every condition domain (N points
// each) and test the raw inequalities. pass iff residual_max <= 1e-6, blocks
// PSD to -1e-8 (multipliers >= -1e-10 on the product path), and no sample
// violates by more than 1e-9.
CertificateReport check_certificate(const DynamicalSystem& sys, const Controller& ctrl,
                                    const Certificate& cert,
                                    const std::vector<double>& alpha, long long N,
                                    std::uint64_t seed = 0);

std::string report_text(const CertificateReport& rep);

enum class FalsifyProperty { safety, stability };

struct FalsifyResult {
  std::optional<std::vector<double>> witness;  // first state found inside Xu
  int witness_run = -1;
  double max_final_dist = 0.0;  // stability proxy: worst ||x(T) - goal|| over runs
  int runs = 0;
  long long steps_total = 0;
};

// Independent cross-check by plain simulation: close the loop at the given
// alpha and integrate from random X0 starts. Safety looks for an Xu entry
// along the way; stability reports the worst final distance to the goal.
FalsifyResult falsify(const DynamicalSystem& sys, const Controller& ctrl,
                      FalsifyProperty property, const std::vector<double>& alpha,
                      int runs, int steps, double dt, std::uint64_t seed = 0);

// Informational only: the proof holds at the identified alpha; this measures
// how far it degrades over the declared interval. Each draw re-samples the
// raw conditions at a random alpha and records the worst margin seen.
struct RobustnessSweep {
  int draws = 0;
  int violated_draws = 0;
  double worst_margin = 0.0;  // most negative raw-condition value encountered
  std::vector<double> worst_alpha;
};

RobustnessSweep robustness_sweep(const DynamicalSystem& sys, const Controller& ctrl,
                                 const Certificate& cert, int draws, long long n_per_draw,
                                 std::uint64_t seed = 0);

// grid evaluation of the certificate over state dims (xi, yj), the remaining
// coordinates pinned to `anchor`; CSV rows "x,y,value"
void write_level_set(std::ostream& os, const Certificate& cert, int xi, int yj,
                     const std::vector<double>& anchor, double x_lo, double x_hi,
                     double y_lo, double y_hi, int grid);

// rejection-sample n points of a set, lifting through the system's recast if
// one is active; SamplingStarvation on persistent misses. Shared by the
// posterior checks above and by external diagnostics.
std::vector<std::vector<double>> sample_domain(const SemialgebraicSet& set,
                                               const DynamicalSystem& sys, long long n,
                                               Rng& rng, const std::string& label = "");

}  // namespace certirl
