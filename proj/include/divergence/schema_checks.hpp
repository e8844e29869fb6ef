#pragma once

#include <optional>
#include <string>
#include <vector>

#include "divergence/orbit_schema.hpp"

namespace divergence::schema {

using Vector = Vec<double>;
using Matrix = Mat<double>;

enum class CheckStatus { Pass, Fail, ExpectedFail };

// One verified comparison "lhs relation rhs", evaluated at the worst index
// of k_range. status is Pass exactly when the comparison holds everywhere.
struct ConditionReport {
  std::string check_id;
  long k_lo = 0;
  long k_hi = 0;
  double lhs = 0.0;
  std::string relation = "<";
  double rhs = 0.0;
  double tolerance = 0.0;
  CheckStatus status = CheckStatus::Fail;
  std::vector<long> witness;  // k or (k, m) of the worst case, empty if none
  std::string note;
  bool mandatory = true;

  bool passed() const { return status == CheckStatus::Pass; }
};

using ReportBundle = std::vector<ConditionReport>;

// Builds a report from a measured value and a bound. For "<" and "<=" the
// comparison is lhs vs rhs; for "==" it is |lhs - rhs| <= tolerance.
ConditionReport make_report(std::string id, long k_lo, long k_hi, double lhs, std::string relation, double rhs,
                            double tolerance, std::vector<long> witness = {}, std::string note = {});

bool all_passed(const ReportBundle& bundle);

struct Tolerances {
  double equality = 1e-10;
  double zero_residual = 1e-12;
  double separation = 1e-6;
};

struct LimitLine {
  Vector point;
  Vector direction;
};

// Projection of the k-th search line by D(0): only the exponent-0 block survives.
LimitLine limit_line(const OrbitSchema& schema, long k);

// Least-squares residual of alpha*sb_{a,k} - beta*Q_a^m sb_{a,k+m} = sum_{j<m} Q_a^j sb_{a,k+j};
// zero exactly when the limit lines L_k and L_{k+m} meet.
double separation_residual(const OrbitSchema& schema, long k, long m);

// Distinct consecutive limit directions, separation of non-adjacent limit
// lines, and independence of the exponent-1 components of xb_k and sb_k.
ReportBundle check_line_separation(const OrbitSchema& schema, const Tolerances& tol = {});

// Normalized Hessian entries coupling exponents with e_i + e_j > dn vanish.
ConditionReport check_hessian_sparsity(const OrbitSchema& schema, const Tolerances& tol = {});

// Structural hypotheses: dn > 2, Q^p = I, Q commutes with D.
ReportBundle check_structure(const OrbitSchema& schema);

// sb^t gb < lam^dn fb_{k+1} - fb_k < lam^dn sb^t D^-1 Q gb_{k+1}, and
// positive curvature of hb_k and of the pulled-back hb_{k+1} along sb_k.
ReportBundle check_convexity(const OrbitSchema& schema, const Tolerances& tol = {});

struct LineSearchSummary {
  double sigma0 = 0.0;           // largest first-Wolfe constant valid on the whole orbit
  double goldstein_c_max = 0.0;  // Goldstein holds for every c in (0, c_max]
  double exact_search_residual = 0.0;
  std::vector<double> decrease_ratios;  // (lam^dn fb_{k+1} - fb_k) / (sb_k^t gb_k)
  ReportBundle reports;
};

LineSearchSummary check_linesearch_conditions(const OrbitSchema& schema, const Tolerances& tol = {});

struct WhitneyReport {
  double m_h = 0.0;
  double m_g = 0.0;
  double m_f = 0.0;
  long pair_count = 0;
};

// Suprema over ordered pairs j != k in [k_lo, k_hi] of
//   |h_j - h_k| / |x_j - x_k|,
//   |g_k - g_j - h_j (x_k - x_j)| / |x_k - x_j|^2,
//   |f_k - f_j - g_j^t (x_k - x_j) - (x_k - x_j)^t h_j (x_k - x_j) / 2| / |x_k - x_j|^3.
WhitneyReport whitney_ratios(const OrbitSchema& schema, long k_lo, long k_hi);

struct WhitneyStability {
  WhitneyReport inner;  // pairs in [k_lo, k_mid]
  WhitneyReport outer;  // pairs in [k_lo, k_hi]
  ReportBundle reports;
};

// The three suprema must be finite on [k_lo, k_hi] and grow by at most
// `factor` when the window is extended from k_mid to k_hi.
WhitneyStability check_whitney_stability(const OrbitSchema& schema, long k_lo = 12, long k_mid = 36,
                                         long k_hi = 48, double factor = 2.0);

struct DivergenceWitness {
  double min_gradient_norm = 0.0;
  double gradient_lower_bound = 0.0;  // min over one period of |gb| on the exponent-dn block
  double f_limit = 0.0;
  double max_vertex_ratio = 0.0;      // worst dist(x_{k+p}, v) / dist(x_k, v)
  double vertex_ratio_bound = 0.0;    // lam^p
  std::vector<Vector> vertices;       // D(0) Q^j xb_j, j < p
  ReportBundle reports;
};

DivergenceWitness divergence_witness(const OrbitSchema& schema, int periods);

}  // namespace divergence::schema
