#pragma once

#include <string>
#include <vector>

#include "certirl/model.hpp"
#include "certirl/trainer.hpp"

namespace certirl {

// Everything needed to reproduce one benchmark end to end: the plant with its
// hidden truth and declared parameter interval, the controller class (theta
// zeroed), and the training defaults for the backend named in the config.
struct BenchmarkSpec {
  std::string name;
  DynamicalSystem sys;
  Controller ctrl;
  TrainConfig config;

  // product-path knobs applied by with_backend when retargeting to Handelman
  double lp_shell_delta = 0.0;
  int lp_degree = 4;

  std::string notes;  // where non-obvious constants come from
};

// builtin systems: "pj", "pendulum", "lane_keeping", "attitude"
BenchmarkSpec builtin(const std::string& name);
std::vector<std::string> builtin_names();

// the spec's config retargeted to a backend; switching to the product path
// swaps in lp_shell_delta / lp_degree, switching to SOS clears the shell
TrainConfig with_backend(const BenchmarkSpec& spec, Backend backend);

// Handelman product multiplicity for the size-scaling study: tracks half the
// certificate degree (the cut-augmented domains are quadratic-rich), floored
// at 2 so degree-2 targets are always reachable
int lp_multiplicity(int cert_degree);

// all monomials of degree 1..deg, the controller class every builtin uses
// (no constant: the origin must stay a fixed point of the closed loop)
std::vector<Monomial> controller_basis(int nvars, int deg);

}  // namespace certirl
