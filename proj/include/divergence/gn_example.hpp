#pragma once

// Gauss-Newton divergence example in dimension 7: residuals
// r_j = sqrt(kappa + phi_j) whose phi_j take the values lam^(3k) and
// gradients -lam^(3k) Q^k D^-k e_j along a 12-periodic orbit, with step
// sizes alpha_k = lam^(3k) / (2 (kappa + lam^(3k))) that tend to zero.

#include <vector>

#include "divergence/optimizer.hpp"
#include "divergence/schema_checks.hpp"

namespace divergence::gn {

using schema::Matrix;
using schema::Vector;

struct GnConfig {
  double kappa = 1.0;  // kappa + phi_j >= 1 on the orbit needs kappa >= 1
  int periods = 5;     // periods replayed and checked
  void validate() const;  // throws std::invalid_argument
};

struct GnExample {
  GnConfig config;
  double lambda = 0.0;
  schema::OrbitSchema schema;            // f = (7 kappa + sum_j phi_j) / 2
  std::vector<schema::OrbitSchema> phi;  // one schema per phi_j, j = 0..6
};

inline constexpr int kDimension = 7;
inline constexpr int kPeriod = 12;
inline constexpr int kExponent = 3;

double gn_lambda();  // (1 / (1 + sqrt 3))^(1/3)
Matrix gn_q();       // diag(R_pi/3, R_pi/6, R_pi/2, -1)

GnExample build_gn(const GnConfig& config);

double gn_alpha(long k, const GnConfig& config);

// G_k = J_r(x_k)^t and r(x_k) on the orbit.
Matrix gn_jacobian(const GnExample& ex, long k);
Vector gn_residuals(const GnExample& ex, long k);

struct GnReplay {
  replay::ReplayTrace trace;
  schema::ReportBundle reports;
};

// Gauss-Newton with the scheduled alpha_k on the orbit oracle for `steps`
// steps, compared against the closed-form iterates.
replay::ReplayTrace run_gn_replay(const GnExample& ex, long steps);

GnReplay verify_gn_replay(const GnExample& ex, int periods);

// Construction, geometry, convexity, line-search and divergence checks.
schema::ReportBundle verify_gn_conditions(const GnExample& ex, const schema::Tolerances& tol = {});

}  // namespace divergence::gn
