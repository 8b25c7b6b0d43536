#pragma once

#include <stdexcept>
#include <string>

namespace certirl {

// Base class so callers can catch everything from this library at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// poly: a product would leave the representable class (decision x decision,
// or parameter x parameter between theta/alpha slots).
struct ParamDegreeError : Error {
  explicit ParamDegreeError(const std::string& msg) : Error(msg) {}
};

// poly: an operation produced monomials above the requested truncation degree.
struct DegreeOverflow : Error {
  explicit DegreeOverflow(const std::string& msg) : Error(msg) {}
};

// model: recasting hit a transcendental term it does not handle.
struct UnsupportedTranscendental : Error {
  explicit UnsupportedTranscendental(const std::string& msg) : Error(msg) {}
};

// relax: a required semialgebraic set is absent from the system description.
struct MissingSet : Error {
  explicit MissingSet(const std::string& msg) : Error(msg) {}
};

// relax: multiplier degrees cannot cover the target degree.
struct DegreeMismatch : Error {
  explicit DegreeMismatch(const std::string& msg) : Error(msg) {}
};

// relax: a condition domain has no inequality description at all.
struct EmptyDomain : Error {
  explicit EmptyDomain(const std::string& msg) : Error(msg) {}
};

// verify: rejection sampling of a domain keeps missing the set.
struct SamplingStarvation : Error {
  explicit SamplingStarvation(const std::string& msg) : Error(msg) {}
};

// trainer: the lower-level solver failed repeatedly; training cannot continue.
struct SolverFailure : Error {
  explicit SolverFailure(const std::string& msg) : Error(msg) {}
};

// bench: no builtin benchmark under that name.
struct UnknownBenchmark : Error {
  explicit UnknownBenchmark(const std::string& msg) : Error(msg) {}
};

// io / cli: malformed file or flag combination.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace certirl
