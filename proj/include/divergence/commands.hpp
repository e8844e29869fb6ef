#pragma once

// Entry points behind the command-line tool. Each returns a process exit
// code and writes human-readable progress to `log`.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "divergence/gn_example.hpp"
#include "divergence/report.hpp"

namespace divergence::cli {

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kUsageError = 2, kSolverFailure = 3 };

inline constexpr std::uint64_t kDefaultSeed = 20240229;

struct VerifyGnOptions {
  gn::GnConfig config;
  double tol = 1e-10;  // equality and zero-residual tolerance of the geometric checks
  std::string out;     // report JSON, optional
};

struct VerifyBfgsOptions {
  bool certify = true;
  std::uint64_t seed = kDefaultSeed;
  std::string load_solution;  // skip the solve and use this artifact
  std::string out;            // report JSON, optional
  std::string solution_out;   // solution artifact, optional
  int periods = 2;            // replay length in periods of 576
};

struct ReplayOptions {
  std::string which;  // "gn" or "bfgs"
  long steps = 0;
  std::string csv;       // trace CSV, optional
  std::string vertices;  // period vertices projected on the non-contracting block, optional
  std::uint64_t seed = kDefaultSeed;
  std::string load_solution;
};

struct SanityOptions {
  double alpha_floor = 1e-3;
  long max_iterations = 10000;
  int problems = -1;  // first n problems of the benign suite, all when negative
  bool demos = true;  // include the runs that violate a hypothesis
  std::string out;
};

int cmd_verify_gn(const VerifyGnOptions& o, std::ostream& log);
int cmd_verify_bfgs(const VerifyBfgsOptions& o, std::ostream& log);
int cmd_replay(const ReplayOptions& o, std::ostream& log);
int cmd_sanity_theorem1(const SanityOptions& o, std::ostream& log);
int cmd_moore_demo(const std::string& out, std::ostream& log);

// The report as the commands build it, for callers that want the data
// rather than the file.
report::VerificationReport verify_gn_report(const VerifyGnOptions& o);

}  // namespace divergence::cli
