#pragma once

// BFGS divergence example in dimension 9 with unit steps: the gradients are
// gb_k = Z^-k Gamma_k e_1 with Gamma_{k+1} = Gamma_k Phi(rho_k), where rho
// solves the spectral problem for Psi, and the steps are the dual vectors
// sb_k = -sigma_k Z^k Gamma_k^-t e_1. The orbit has period 576 = 16 x 36.

#include <array>
#include <complex>
#include <vector>

#include "divergence/bfgs_solve.hpp"
#include "divergence/optimizer.hpp"
#include "divergence/real.hpp"
#include "divergence/schema_checks.hpp"

namespace divergence::bfgs {

using RVec = schema::Vec<Real>;
using RMat = schema::Mat<Real>;

struct BfgsExample {
  RhoSolution solution;
  Real lambda;  // (1 / (1 + sqrt(2 + sqrt 2)))^(1/72)
  Real u;       // lambda^36
  std::array<Real, kCycle> rho;
  RMat psi;
  RMat gamma0;
  RMat theta_one;     // diag(-1, R(7pi/8), R(pi/2), R(pi/4), R(5pi/4))
  RMat theta_lambda;  // Theta(1) Z^36
  RVec z;             // diagonal of Z = lam^4 D^-1
  double eigenvector_residual = 0.0;  // worst |Psi^t v - xi v|, v scaled to max modulus 1
  std::vector<Real> sigma;            // sigma_k for one period from the product formula
  Real gradient_scale;                // mu: gb is scaled so the decrease ratios stay in (0, 1/2]
  schema::BasicOrbitSchema<Real> orbit;
  schema::OrbitSchema schema;  // double copy for the geometry checks
};

inline constexpr int kBlockA = 3;
inline constexpr int kBlockB = 2;
inline constexpr int kBlockC = 4;

Real bfgs_lambda();

// Eigenvalues of Psi^t the construction needs: -u^4, u^4 e^(+-7 i pi/8),
// +-u^3 i, e^(+-i pi/4), e^(+-5 i pi/4).
std::vector<std::complex<double>> target_spectrum(double u);

RMat theta_one();
// Block diagonal with r R(theta) for each target eigenvalue r e^(i theta),
// built from the spectrum rather than from Theta(1) Z^36.
RMat theta_from_spectrum(const Real& u);

// Rows: Re of the eigenvector of -u^4, then (Re, Im) of one eigenvector per
// conjugate pair, each scaled so its largest-modulus entry is 1.
RMat gamma0_from_eigenvectors(const RMat& psi, const Real& u, double* worst_residual = nullptr);

// Never throws on data that fails the checks; those show up in the reports.
BfgsExample build_bfgs(const RhoSolution& solution);

// Normalized BFGS matrix lam^(-4k) D^k B_k D^k from the closed form
//   B_k = -sum_{i<9} g_{k+i} g_{k+i}^t / (g_{k+i}^t s_{k+i}).
RMat build_Bk(const BfgsExample& ex, long k);

schema::ReportBundle verify_bfgs_conditions(const BfgsExample& ex, const schema::Tolerances& tol = {});

struct BfgsReplay {
  replay::ReplayTrace trace;         // extended precision, rescaled every 36 steps
  replay::ReplayTrace double_trace;  // the same run in double, diagnostic only
  schema::ReportBundle reports;
};

// Textbook BFGS with unit steps on the orbit oracle, started from build_Bk(0)
// and rescaled every 36 steps. The extended-precision run samples the
// metric once per cycle.
replay::ReplayTrace run_bfgs_replay(const BfgsExample& ex, long steps);
replay::ReplayTrace run_bfgs_replay_double(const BfgsExample& ex, long steps);

BfgsReplay verify_bfgs_replay(const BfgsExample& ex, int periods = 2);

}  // namespace divergence::bfgs
