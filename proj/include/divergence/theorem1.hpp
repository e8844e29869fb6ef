#pragma once

// Empirical convergence checks for line-search methods on benign problems:
// bounded metrics plus step sizes bounded below should drive the gradient to
// zero. Also a one-step probe of the Wolfe and Goldstein conditions.

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "divergence/jet.hpp"
#include "divergence/optimizer.hpp"
#include "divergence/schema_checks.hpp"

namespace divergence::replay {

using Residuals = std::function<std::vector<Jet<double>>(const std::vector<Jet<double>>&)>;

// f = |r(x)|^2 / 2 with exact gradients from jets and Hessians from central
// differences of the gradient.
class LeastSquaresObjective : public Objective<double> {
 public:
  LeastSquaresObjective(std::string name, int dimension, Residuals residuals)
      : name_(std::move(name)), n_(dimension), r_(std::move(residuals)) {}

  std::string name() const override { return name_; }
  int dimension() const override { return n_; }
  double value(const Vec<double>& x, long k) const override;
  Vec<double> gradient(const Vec<double>& x, long k) const override;
  std::optional<Mat<double>> hessian(const Vec<double>& x, long k) const override;
  std::optional<LeastSquares<double>> least_squares(const Vec<double>& x, long k) const override;

 private:
  std::string name_;
  int n_;
  Residuals r_;
};

struct BenignProblem {
  std::string name;
  std::shared_ptr<const Objective<double>> objective;
  Vec<double> start;
};

// Ten least-squares problems with bounded level sets.
std::vector<BenignProblem> benign_suite();

struct SuiteOptions {
  double alpha_floor = 1e-3;
  long max_iterations = 10000;
  double gradient_tol = 1e-6;
  double sigma = 1e-4;
  double mmt_tol = 1e-8;
  double metric_bound = 1e6;  // largest metric eigenvalue accepted as "bounded"
};

struct SuiteRun {
  std::string problem;
  Method method;
  ReplayTrace trace;
  bool hypotheses_hold = true;
  std::string violated;  // which hypothesis failed, if any
};

struct Theorem1Result {
  std::vector<SuiteRun> runs;
  schema::ReportBundle reports;
};

// Runs every method on every problem with backtracking above the alpha floor.
// Throws std::invalid_argument on an empty suite or method list.
Theorem1Result theorem1_check(const std::vector<BenignProblem>& suite, const std::vector<Method>& methods,
                              const SuiteOptions& options = {});

std::vector<Method> all_methods();

// Runs with a violated hypothesis: steepest descent with M_k = (k + 2) I, and
// steepest descent with the prescribed steps alpha_k = 1 / (k + 2)^2. Both
// should stop short of a stationary point and are reported as expected failures.
Theorem1Result theorem1_hypothesis_demos(const SuiteOptions& options = {});

struct ProbeResult {
  double first_wolfe_margin = 0.0;   // sigma g^t s - (f1 - f0), >= 0 when it holds
  double goldstein_lower_margin = 0.0;
  double goldstein_upper_margin = 0.0;
  double second_wolfe_margin = 0.0;  // g1^t s - beta g0^t s
  schema::ReportBundle reports;
};

// Evaluates first Wolfe, Goldstein and second Wolfe at x1 = x0 + alpha d.
// Margins down to -rel_tol |g0^t s| count as holding (boundary constants).
// Throws std::invalid_argument if d is not a descent direction.
template <class S>
ProbeResult wolfe_goldstein_probe(const Objective<S>& obj, const Vec<S>& x, const Vec<S>& d, const S& alpha,
                                  double sigma, double c, double beta, long k = 0,
                                  double rel_tol = 1e-12) {
  const S f0 = obj.value(x, k);
  const Vec<S> g0 = obj.gradient(x, k);
  if (!(S(g0.dot(d)) < S(0))) throw std::invalid_argument("probe direction is not a descent direction");
  const Vec<S> x1 = x + alpha * d;
  const S f1 = obj.value(x1, k);
  const Vec<S> g1 = obj.gradient(x1, k);
  const Vec<S> s = x1 - x;
  const S sg = g0.dot(s);
  const S df = f1 - f0;
  const double slack = -rel_tol * std::abs(static_cast<double>(sg));
  ProbeResult r;
  r.first_wolfe_margin = static_cast<double>(S(S(sigma) * sg - df));
  r.goldstein_lower_margin = static_cast<double>(S(df - (S(1) - S(c)) * sg));
  r.goldstein_upper_margin = static_cast<double>(S(S(c) * sg - df));
  r.second_wolfe_margin = static_cast<double>(S(S(g1.dot(s)) - S(beta) * sg));
  r.reports.push_back(schema::make_report("eq.first_wolfe", k, k, r.first_wolfe_margin, ">=", slack, 0.0));
  r.reports.push_back(schema::make_report("eq.goldstein.lower", k, k, r.goldstein_lower_margin, ">=", slack, 0.0));
  r.reports.push_back(schema::make_report("eq.goldstein.upper", k, k, r.goldstein_upper_margin, ">=", slack, 0.0));
  r.reports.push_back(schema::make_report("eq.second_wolfe", k, k, r.second_wolfe_margin, ">=", slack, 0.0));
  return r;
}

}  // namespace divergence::replay
