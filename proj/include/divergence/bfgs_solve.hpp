#pragma once

// Solving for rho so that Psi(rho) has the prescribed spectrum: multistart
// Levenberg-Marquardt in double, chord-Newton refinement in extended
// precision, and a Moore existence certificate for the square subsystem.

#include <cstdint>
#include <vector>

#include "divergence/bfgs_algebra.hpp"
#include "divergence/moore.hpp"
#include "divergence/real.hpp"

namespace divergence::bfgs {

struct SolveOptions {
  std::uint64_t seed = 20240229;
  int seeds = 200;            // random starts in [-box, box]^11
  double box = 1.5;
  int sign_patterns = 32;     // extra starts with |rho| = 0.8 and varied signs
  int max_iterations = 150;
  double converged_tol = 1e-11;  // max |residual| in double for a start to count
  int max_refined = 6;        // best candidates refined and certified
  bool certify = true;
  double certify_radius = 1e-8;  // largest box tried; smaller ones follow
  int threads = 0;            // 0: hardware concurrency
};

struct RhoCandidate {
  std::vector<double> free;  // rho_0..rho_9, rho_18
  double residual = 0.0;
  double spread = 0.0;       // max_k |log |rho_k|| over the cycle
  int start_index = 0;
};

struct RhoSolution {
  std::vector<Real> free;
  ReducedSystem system;
  double residual_double = 0.0;  // max |c_i - target_i|, double evaluation at the rounded solution
  double residual_real = 0.0;    // same in extended precision
  double spread = 0.0;
  int start_index = -1;
  bool certify_requested = false;
  bool identities_hold = false;  // c_1, c_9 enclosures contain the target at the center
  interval::MooreCertificate certificate;
};

struct SolveResult {
  int starts = 0;
  std::vector<RhoCandidate> candidates;  // converged starts, best spread first
  std::vector<RhoSolution> solutions;    // refined (and certified when requested), same order
};

// Throws std::runtime_error when no start converges.
SolveResult solve_rho(const SolveOptions& options);

// Fix rho_8, rho_9 and the two further slots that leave the best-conditioned
// 7x7 Jacobian, refine the remaining seven in extended precision and, if
// requested, certify them.
RhoSolution refine_and_certify(const std::vector<double>& free, bool certify, double radius);

// Re-evaluates residuals and (optionally) the certificate for given values;
// used for solutions loaded from disk, which are not re-solved.
RhoSolution assess_solution(std::vector<Real> free, const ReducedSystem& system, bool certify, double radius);

double rho_spread(const std::vector<double>& free);

}  // namespace divergence::bfgs
