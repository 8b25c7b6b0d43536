#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "certirl/bench.hpp"
#include "certirl/svg.hpp"
#include "certirl/trainer.hpp"
#include "certirl/verify.hpp"

namespace certirl {

// ---------------------------------------------------------------------------
// Benchmark specs travel as json (floats in shortest round-trip form, so a
// save/load cycle is bit-exact). Certificates and controllers use a plain
// line-oriented text format with %.17g floats; see docs/formats.md.
// ---------------------------------------------------------------------------

void save_benchmark(const BenchmarkSpec& spec, const std::string& path);
BenchmarkSpec load_benchmark(const std::string& path);

// "pj" -> builtin or benchmarks/pj.json; an explicit path wins when it exists
BenchmarkSpec resolve_benchmark(const std::string& name_or_path);

void write_controller(std::ostream& os, const Controller& ctrl);
Controller read_controller(std::istream& is);
void save_controller(const Controller& ctrl, const std::string& path);
Controller load_controller(const std::string& path);

void write_certificate(std::ostream& os, const Certificate& cert);
Certificate read_certificate(std::istream& is);
void save_certificate(const Certificate& cert, const std::string& path);
Certificate load_certificate(const std::string& path);

// train_log.csv: one row per iteration, nothing wall-clock dependent
void write_train_log(std::ostream& os, const std::vector<IterRow>& rows);
// timings.csv: the wall-clock side channel
void write_timings(std::ostream& os, const std::vector<TimingRow>& rows);

// simulate artifact: run,t,time,x...,u...,reward,shielded
void write_trajectories(std::ostream& os, const std::vector<Trajectory>& runs,
                        const std::vector<std::string>& state,
                        const std::vector<std::string>& inputs);

}  // namespace certirl
