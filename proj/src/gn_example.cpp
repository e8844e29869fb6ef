#include "divergence/gn_example.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "divergence/exact_trig.hpp"
#include "divergence/theorem1.hpp"

namespace divergence::gn {

using schema::make_report;
using schema::ReportBundle;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix rotation(int k_pi24) {
  const auto r = rotation_pi24<double>(k_pi24);
  Matrix m(2, 2);
  m << r[0], r[1], r[2], r[3];
  return m;
}

double phi_value(const GnExample& ex, long k) { return std::pow(ex.lambda, 3.0 * k); }

}  // namespace

void GnConfig::validate() const {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be a finite number >= 1");
  if (periods < 1) throw std::invalid_argument("periods must be at least 1");
}

double gn_lambda() { return std::cbrt(1.0 / (1.0 + std::sqrt(3.0))); }

Matrix gn_q() {
  Matrix q = Matrix::Zero(kDimension, kDimension);
  q.block(0, 0, 2, 2) = rotation(8);
  q.block(2, 2, 2, 2) = rotation(4);
  q.block(4, 4, 2, 2) = rotation(12);
  q(6, 6) = -1.0;
  return q;
}

GnExample build_gn(const GnConfig& config) {
  config.validate();
  const double lambda = gn_lambda();
  schema::OrbitFrame frame({4, 2, 1}, kExponent, kPeriod, lambda, gn_q());
  const auto x = schema::steps_to_iterates(std::vector<Vector>(kPeriod, Vector::Ones(kDimension)), frame);

  Vector hd = Vector::Ones(kDimension);
  hd(6) = 0.0;
  const Matrix h = hd.asDiagonal();
  const double n = kDimension;
  schema::OrbitSchema sum(frame, x, std::vector<double>(kPeriod, n / 2), std::vector<Vector>(kPeriod, -0.5 * Vector::Ones(kDimension)),
                          std::vector<Matrix>(kPeriod, Matrix(n / 2 * h)), n * config.kappa / 2);
  std::vector<schema::OrbitSchema> phi;
  for (int j = 0; j < kDimension; ++j)
    phi.emplace_back(frame, x, std::vector<double>(kPeriod, 1.0),
                     std::vector<Vector>(kPeriod, -Vector::Unit(kDimension, j)), std::vector<Matrix>(kPeriod, h), 0.0);
  return GnExample{config, lambda, std::move(sum), std::move(phi)};
}

double gn_alpha(long k, const GnConfig& config) {
  if (k < 0) throw std::invalid_argument("gn_alpha: negative index");
  const double l = std::pow(gn_lambda(), 3.0 * k);
  return l / (2.0 * (config.kappa + l));
}

Matrix gn_jacobian(const GnExample& ex, long k) {
  const auto& frame = ex.schema.frame();
  frame.check_horizon(k);
  // lam^(3k) D^-k combined per entry.
  Vector scale(kDimension);
  for (int i = 0; i < kDimension; ++i) scale(i) = frame.lambda_power(k * (kExponent - frame.exponents()[i]));
  const double c = -1.0 / (2.0 * std::sqrt(ex.config.kappa + phi_value(ex, k)));
  return c * frame.q_power(k) * Matrix(scale.asDiagonal());
}

Vector gn_residuals(const GnExample& ex, long k) {
  return Vector::Constant(kDimension, std::sqrt(ex.config.kappa + phi_value(ex, k)));
}

replay::ReplayTrace run_gn_replay(const GnExample& ex, long steps) {
  if (steps < 0) throw std::invalid_argument("run_gn_replay: negative step count");
  replay::OrbitOracle<double> oracle(ex.schema, "gauss_newton_orbit", 0, 1e-8, [&ex](long k) {
    return replay::LeastSquares<double>{gn_residuals(ex, k), gn_jacobian(ex, k)};
  });
  replay::DriveOptions<double> opt;
  opt.max_steps = steps;
  const GnConfig cfg = ex.config;
  replay::Scheduled<double> schedule{[cfg](long k) { return gn_alpha(k, cfg); }};
  return replay::drive<double>(replay::Method::GaussNewton, oracle, oracle.point(0, 0), schedule, opt);
}

GnReplay verify_gn_replay(const GnExample& ex, int periods) {
  if (periods < 1) throw std::invalid_argument("verify_gn_replay: periods must be at least 1");
  const long steps = static_cast<long>(periods) * kPeriod;
  GnReplay out;
  out.trace = run_gn_replay(ex, steps);
  const auto& t = out.trace;
  out.reports.push_back(make_report("gn.replay_completed", 0, steps, static_cast<double>(t.steps), "==",
                                    static_cast<double>(steps), 0.0, {}, t.failure));
  out.reports.push_back(make_report("eq.def_gauss_newton", 0, steps - 1, t.max_step_residual, "<", 1e-10, 0.0,
                                    {}, "max |x_{k+1} - closed form| / |s_k|"));
  out.reports.push_back(make_report("eq.mmtsk", 0, steps - 1, t.max_mmt_residual, "<", 1e-10, 0.0, {},
                                    "max |G G^t s_k + alpha_k g_k| / (alpha_k |g_k|)"));
  out.reports.push_back(make_report("gn.gradient_lower_bound", 0, steps, t.min_grad_norm, ">=", 0.5 - 1e-12, 0.0,
                                    {}, "min_k |g_k|"));
  double worst_inc = -kInf;
  long kinc = 0;
  for (std::size_t i = 2; i < t.entries.size(); ++i)
    if (t.entries[i].alpha - t.entries[i - 1].alpha > worst_inc)
      worst_inc = t.entries[i].alpha - t.entries[i - 1].alpha, kinc = t.entries[i].k;
  out.reports.push_back(make_report("gn.alpha_decreasing", 0, steps - 1, worst_inc, "<", 0.0, 0.0, {kinc},
                                    "max alpha_{k+1} - alpha_k"));
  out.reports.push_back(make_report("gn.alpha_to_zero", steps - 1, steps - 1, t.entries.back().alpha, "<=",
                                    std::pow(ex.lambda, 3.0 * (steps - 1)) / (2 * ex.config.kappa), 0.0, {},
                                    "alpha_k <= lam^(3k) / (2 kappa)"));
  return out;
}

ReportBundle verify_gn_conditions(const GnExample& ex, const schema::Tolerances& tol) {
  const auto& s = ex.schema;
  const auto& frame = s.frame();
  const double l3 = std::pow(ex.lambda, 3);
  ReportBundle out;
  auto append = [&out](const ReportBundle& b) { out.insert(out.end(), b.begin(), b.end()); };

  append(schema::check_structure(s));

  // Q_a^j summed over one period.
  {
    Matrix acc = Matrix::Zero(4, 4);
    for (int j = 0; j < kPeriod; ++j) acc += frame.q_power(j).topLeftCorner(4, 4);
    out.push_back(make_report("gn.qa_period_sum", 0, kPeriod - 1, acc.cwiseAbs().maxCoeff(), "<=", 1e-12, 1e-12,
                              {}, "max |sum_j Q_a^j|"));
    const double row = Vector::Ones(4).dot(frame.q().topLeftCorner(4, 4) * Vector::Ones(4));
    out.push_back(make_report("gn.qa_ones_form", 0, 0, row, "==", 1.0 + std::sqrt(3.0), 1e-14, {},
                              "1_4^t Q_a 1_4"));
  }

  // Closed-form normalized iterates of the contracting blocks.
  {
    Matrix m = ex.lambda * frame.q().block(4, 4, 2, 2) - Matrix::Identity(2, 2);
    const Vector xb = m.inverse() * Vector::Ones(2);
    double worst = 0;
    for (long k = 0; k < kPeriod; ++k) {
      worst = std::max(worst, (s.x_bar(k).segment(4, 2) - xb).norm());
      worst = std::max(worst, std::abs(s.x_bar(k)(6) + 1.0 / (1.0 + l3)));
      Vector expect_a = Vector::Zero(4);
      for (long j = 0; j < k; ++j) expect_a += frame.q_power(j).topLeftCorner(4, 4) * Vector::Ones(4);
      expect_a = frame.q_power(k).topLeftCorner(4, 4).transpose() * expect_a;
      worst = std::max(worst, (s.x_bar(k).head(4) - expect_a).norm());
    }
    out.push_back(make_report("eq.xk_gauss_newton", 0, kPeriod - 1, worst, "<=", tol.equality, tol.equality, {},
                              "normalized iterates against their closed forms"));
  }

  append(schema::check_line_separation(s, tol));
  {
    double worst = 0;
    for (long k = 0; k < kPeriod; ++k)
      for (long m : {1L, 11L}) worst = std::max(worst, schema::separation_residual(s, k, m));
    out.push_back(make_report("eq.gn_alpha_beta.adjacent", 0, kPeriod - 1, worst, "<", 1e-10, 0.0, {},
                              "limit lines L_k and L_{k+m} meet for m = 1 and m = 11"));
  }
  out.push_back(schema::check_hessian_sparsity(s, tol));
  append(schema::check_convexity(s, tol));

  // Per-phi_j convexity: -1 < lam^3 - 1 < -lam^3 1^t Q D^-1 e_j, grouped by block.
  {
    const Vector dinv = frame.d_diag(-1);
    const Vector col = (Vector::Ones(kDimension).transpose() * frame.q()).transpose();
    const struct {
      const char* id;
      int lo, hi;
    } cases[] = {{"eq.gn_convex.case_a", 0, 4}, {"eq.gn_convex.case_b", 4, 6}, {"eq.gn_convex.case_c", 6, 7}};
    for (const auto& c : cases) {
      double bound = kInf;
      long wj = c.lo;
      for (int j = c.lo; j < c.hi; ++j) {
        const double b = -l3 * col(j) * dinv(j);
        if (b < bound) bound = b, wj = j;
      }
      out.push_back(make_report(c.id, 0, kPeriod - 1, l3 - 1.0, "<", bound, 0.0, {wj},
                                "lam^3 - 1 < -lam^3 1^t Q D^-1 e_j, worst j in block"));
    }
    out.push_back(make_report("eq.gn_convex.lower", 0, kPeriod - 1, -1.0, "<", l3 - 1.0, 0.0, {},
                              "-1 < lam^3 - 1"));
    double worst = kInf;
    for (const auto& p : ex.phi)
      for (const auto& r : schema::check_convexity(p, tol))
        if (r.check_id == "eq.curvature") worst = std::min(worst, r.lhs);
    out.push_back(make_report("gn.phi_curvature", 0, kPeriod - 1, worst, ">", 0.0, 0.0, {},
                              "min over j, k of sb_k^t hb_k sb_k for phi_j"));
  }

  // Line-search constants.
  const auto ls = schema::check_linesearch_conditions(s, tol);
  append(ls.reports);
  out.push_back(make_report("gn.first_wolfe_sigma", 0, kPeriod - 1, ls.sigma0, ">=", (1.0 - l3) * (1 - 1e-12), 0.0,
                            {}, "sigma = 1 - lam^3 admissible"));
  out.push_back(make_report("gn.goldstein_c", 0, kPeriod - 1, ls.goldstein_c_max, ">=", l3 * (1 - 1e-12), 0.0, {},
                            "c = lam^3 admissible"));

  // True-coordinate line-search identities over the first period.
  {
    double exact = 0, descent = 0;
    long ke = 0, kd = 0;
    for (long k = 0; k < kPeriod; ++k) {
      const auto p0 = schema::materialize(s, k);
      const auto p1 = schema::materialize(s, k + 1);
      const Vector step = p1.x - p0.x;
      const double e = std::abs(step.dot(p1.g));
      if (e > exact) exact = e, ke = k;
      const double d = std::abs(step.dot(p0.g) + 3.5 * std::pow(l3, k)) / std::pow(l3, k);
      if (d > descent) descent = d, kd = k;
    }
    out.push_back(make_report("gn.exact_search_true", 0, kPeriod - 1, exact, "<", 1e-13, 0.0, {ke},
                              "max |s_k^t g_{k+1}|"));
    out.push_back(make_report("gn.step_gradient_product", 0, kPeriod - 1, descent, "<=", 1e-12, 0.0, {kd},
                              "max |s_k^t g_k + 7 lam^(3k) / 2| / lam^(3k)"));
    const auto p0 = schema::materialize(s, 0);
    const double s0g0 = (schema::materialize(s, 1).x - p0.x).dot(p0.g);
    out.push_back(make_report("gn.s0_g0", 0, 0, s0g0, "==", -3.5, 1e-12, {}, "s_0^t g_0"));
  }

  // Probe of the first step on the orbit oracle with the stated constants.
  {
    replay::OrbitOracle<double> oracle(s, "gauss_newton_orbit");
    const Vector x0 = oracle.point(0, 0);
    const Vector d = oracle.point(1, 0) - x0;
    auto probe = replay::wolfe_goldstein_probe<double>(oracle, x0, d, 1.0, 1.0 - l3, l3, 0.9);
    for (auto& r : probe.reports) r.check_id = "gn.probe." + r.check_id.substr(3);
    append(probe.reports);
  }

  // Orbit points: kappa + phi_j(x_k) >= 1.
  out.push_back(make_report("gn.kappa_floor", 0, kPeriod * ex.config.periods, ex.config.kappa, ">=", 1.0, 0.0, {},
                            "kappa + phi_j(x_k) >= kappa >= 1"));

  // Jacobian identities: G r = g and (G G^t)^-1 = 4 lam^(-6k) (kappa + lam^(3k)) D^(2k).
  {
    double grad = 0, inv = 0;
    for (long k = 0; k < kPeriod * ex.config.periods; ++k) {
      const Matrix g = gn_jacobian(ex, k);
      const auto pt = schema::materialize(s, k);
      grad = std::max(grad, (g * gn_residuals(ex, k) - pt.g).norm() / pt.g.norm());
      const double c = 4.0 * (ex.config.kappa + phi_value(ex, k));
      Vector expect(kDimension);
      for (int i = 0; i < kDimension; ++i)
        expect(i) = c * frame.lambda_power(2 * k * frame.exponents()[i] - 6 * k);
      const Matrix ggt = g * g.transpose();
      const Matrix prod = ggt * Matrix(expect.asDiagonal());
      inv = std::max(inv, (prod - Matrix::Identity(kDimension, kDimension)).cwiseAbs().maxCoeff());
    }
    out.push_back(make_report("gn.jacobian_gradient", 0, kPeriod * ex.config.periods - 1, grad, "<=", 1e-12, 0.0,
                              {}, "|G_k r(x_k) - g_k| / |g_k|"));
    out.push_back(make_report("gn.jacobian_inverse", 0, kPeriod * ex.config.periods - 1, inv, "<=", 1e-10, 0.0, {},
                              "max |G G^t (4 lam^(-6k) (kappa + lam^(3k)) D^(2k)) - I|"));
  }

  append(schema::divergence_witness(s, ex.config.periods).reports);
  append(schema::check_whitney_stability(s).reports);
  return out;
}

}  // namespace divergence::gn
