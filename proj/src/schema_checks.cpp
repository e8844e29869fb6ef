#include "divergence/schema_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace divergence::schema {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// |sin| of the angle between u and v; 0 when either is zero.
double independence(const Vector& u, const Vector& v) {
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double c = u.dot(v) / (nu * nv);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

Matrix d_inverse_q(const OrbitFrame& frame) {
  return frame.q() * frame.d_diag(-1).asDiagonal();
}

}  // namespace

ConditionReport make_report(std::string id, long k_lo, long k_hi, double lhs, std::string relation, double rhs,
                            double tolerance, std::vector<long> witness, std::string note) {
  ConditionReport r;
  r.check_id = std::move(id);
  r.k_lo = k_lo;
  r.k_hi = k_hi;
  r.lhs = lhs;
  r.relation = relation;
  r.rhs = rhs;
  r.tolerance = tolerance;
  r.witness = std::move(witness);
  r.note = std::move(note);
  bool ok = false;
  if (relation == "<") ok = lhs < rhs;
  else if (relation == "<=") ok = lhs <= rhs;
  else if (relation == ">") ok = lhs > rhs;
  else if (relation == ">=") ok = lhs >= rhs;
  else if (relation == "==") ok = std::abs(lhs - rhs) <= tolerance;
  else throw std::invalid_argument("unknown relation " + relation);
  if (std::isnan(lhs) || std::isnan(rhs)) ok = false;
  r.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
  return r;
}

bool all_passed(const ReportBundle& bundle) {
  return std::all_of(bundle.begin(), bundle.end(),
                     [](const ConditionReport& r) { return r.passed() || !r.mandatory; });
}

LimitLine limit_line(const OrbitSchema& schema, long k) {
  const auto& frame = schema.frame();
  const int a = frame.blocks().a;
  const int n = schema.dimension();
  Vector mask = Vector::Zero(n);
  mask.head(a).setOnes();
  const Matrix& qk = frame.q_power(k);
  LimitLine line;
  line.point = mask.asDiagonal() * (qk * schema.x_bar(k));
  line.direction = mask.asDiagonal() * (qk * normalized_step(schema, k));
  if (line.direction.norm() <= 1e-14 * std::max(1.0, line.point.norm()))
    throw std::domain_error("limit line has zero direction at k = " + std::to_string(k));
  return line;
}

namespace {

// Cumulative sums P_k = sum_{j<k} Q_a^j sb_{a,j} and directions Q_a^k sb_{a,k}
// over two periods; L_k is {P_k + alpha * dir_k} up to a common rotation.
struct ALineData {
  std::vector<Vector> prefix;
  std::vector<Vector> dir;
};

ALineData a_line_data(const OrbitSchema& schema) {
  const auto& frame = schema.frame();
  const int a = frame.blocks().a;
  const int p = schema.period();
  ALineData d;
  d.prefix.assign(2 * p + 1, Vector::Zero(a));
  d.dir.resize(2 * p);
  for (int k = 0; k < 2 * p; ++k) {
    d.dir[k] = frame.q_power(k).topLeftCorner(a, a) * normalized_step(schema, k).head(a);
    d.prefix[k + 1] = d.prefix[k] + d.dir[k];
  }
  return d;
}

double separation_from_data(const ALineData& d, long k, long m) {
  const Vector& u = d.dir[k];
  const Vector& w = d.dir[k + m];
  const Vector c = d.prefix[k + m] - d.prefix[k];
  // minimize |alpha u - beta w - c| through the 2x2 normal equations
  const double uu = u.dot(u), ww = w.dot(w), uw = u.dot(w);
  const double uc = u.dot(c), wc = w.dot(c);
  const double det = uu * ww - uw * uw;
  if (uu == 0.0 && ww == 0.0) return c.norm();
  if (det <= 1e-12 * uu * ww || uu == 0.0 || ww == 0.0) {
    const Vector& v = uu >= ww ? u : w;
    const double vv = std::max(uu, ww);
    return (c - (v.dot(c) / vv) * v).norm();
  }
  const double alpha = (uc * ww - wc * uw) / det;
  const double beta = (uc * uw - wc * uu) / det;
  return (alpha * u - beta * w - c).norm();
}

}  // namespace

double separation_residual(const OrbitSchema& schema, long k, long m) {
  const int p = schema.period();
  if (schema.frame().blocks().a < 1) throw std::invalid_argument("separation needs a non-contracting block");
  const ALineData d = a_line_data(schema);
  k = schema.frame().wrap(k);
  m = ((m % p) + p) % p;
  return separation_from_data(d, k, m);
}

ReportBundle check_line_separation(const OrbitSchema& schema, const Tolerances& tol) {
  const auto& frame = schema.frame();
  const int a = frame.blocks().a;
  const int b = frame.blocks().b;
  const int p = schema.period();
  if (a < 2) throw std::invalid_argument("line separation needs a non-contracting block of dimension >= 2");
  ReportBundle out;

  {
    double worst = kInf;
    long wk = 0;
    for (long k = 0; k < p; ++k) {
      const Vector u = normalized_step(schema, k).head(a);
      const Vector v = frame.q().topLeftCorner(a, a) * normalized_step(schema, k + 1).head(a);
      const double s = independence(u, v);
      if (s < worst) worst = s, wk = k;
    }
    out.push_back(make_report("eq.distinct_limit_directions", 0, p - 1, worst, ">", tol.separation,
                              tol.separation, {wk}, "|sin angle| between D(0) sb_k and D(0) Q sb_{k+1}"));
  }

  {
    const ALineData d = a_line_data(schema);
    double worst = kInf;
    long wk = 0, wm = 0;
    for (long k = 0; k < p; ++k)
      for (long m = 2; m < p - 1; ++m) {
        const double r = separation_from_data(d, k, m);
        if (r < worst) worst = r, wk = k, wm = m;
      }
    if (p < 4) worst = kInf;  // no non-adjacent pairs to separate
    out.push_back(make_report("eq.line_separation", 0, p - 1, worst, ">", tol.separation, tol.separation,
                              {wk, wm}, "least-squares residual of L_k meeting L_{k+m}, 1 < m < p-1"));
  }

  if (b > 0) {
    double worst = kInf;
    long wk = 0;
    for (long k = 0; k < p; ++k) {
      const double s = independence(schema.x_bar(k).segment(a, b), normalized_step(schema, k).segment(a, b));
      if (s < worst) worst = s, wk = k;
    }
    out.push_back(make_report("eq.vertical_independence", 0, p - 1, worst, ">", tol.separation, tol.separation,
                              {wk}, "|sin angle| between the exponent-1 parts of xb_k and sb_k"));
  } else {
    out.push_back(make_report("eq.vertical_independence", 0, p - 1, 0.0, ">", tol.separation, tol.separation, {},
                              "no exponent-1 block"));
  }
  return out;
}

ConditionReport check_hessian_sparsity(const OrbitSchema& schema, const Tolerances& tol) {
  const auto& e = schema.frame().exponents();
  const int dn = schema.frame().dn();
  const int n = schema.dimension();
  double worst = 0.0;
  std::vector<long> witness;
  for (long k = 0; k < schema.period(); ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (e[i] + e[j] > dn && std::abs(schema.h_bar(k)(i, j)) > worst) {
          worst = std::abs(schema.h_bar(k)(i, j));
          witness = {k, i, j};
        }
  return make_report("eq.hessian_sparsity", 0, schema.period() - 1, worst, "<=", tol.zero_residual,
                     tol.zero_residual, witness, "max |hb_ij| over e_i + e_j > dn");
}

ReportBundle check_structure(const OrbitSchema& schema) {
  const auto& frame = schema.frame();
  const int n = schema.dimension();
  ReportBundle out;
  out.push_back(make_report("thm.largest_exponent", 0, 0, frame.dn(), ">", 2.0, 0.0, {}, "dn > 2"));
  Matrix qp = Matrix::Identity(n, n);
  for (int k = 0; k < schema.period(); ++k) qp = qp * frame.q();
  out.push_back(make_report("thm.q_period", 0, schema.period(), (qp - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(),
                            "<=", 1e-10, 1e-10, {}, "max |Q^p - I|"));
  const Matrix d = frame.d_diag(1).asDiagonal();
  out.push_back(make_report("thm.q_commutes_with_d", 0, 0, (frame.q() * d - d * frame.q()).cwiseAbs().maxCoeff(),
                            "<=", 1e-12, 1e-12, {}, "max |QD - DQ|"));
  return out;
}

ReportBundle check_convexity(const OrbitSchema& schema, const Tolerances& /*tol*/) {
  const auto& frame = schema.frame();
  const int p = schema.period();
  const double ld = frame.lambda_power(frame.dn());
  const Matrix qdi = d_inverse_q(frame);
  double lower = kInf, upper = kInf, curv = kInf, curv_next = kInf;
  long kl = 0, ku = 0, kc = 0, kn = 0;
  double lower_lhs = 0, lower_rhs = 0, upper_lhs = 0, upper_rhs = 0;
  for (long k = 0; k < p; ++k) {
    const Vector s = normalized_step(schema, k);
    const double sg = s.dot(schema.g_bar(k));
    const double df = ld * schema.f_bar(k + 1) - schema.f_bar(k);
    const double sg_next = ld * s.dot(qdi * schema.g_bar(k + 1));
    if (df - sg < lower) lower = df - sg, kl = k, lower_lhs = sg, lower_rhs = df;
    if (sg_next - df < upper) upper = sg_next - df, ku = k, upper_lhs = df, upper_rhs = sg_next;
    const double c0 = s.dot(schema.h_bar(k) * s);
    const Vector t = qdi.transpose() * s;
    const double c1 = t.dot(schema.h_bar(k + 1) * t);
    if (c0 < curv) curv = c0, kc = k;
    if (c1 < curv_next) curv_next = c1, kn = k;
  }
  ReportBundle out;
  out.push_back(make_report("eq.convexity_lower", 0, p - 1, lower_lhs, "<", lower_rhs, 0.0, {kl},
                            "sb_k^t gb_k < lam^dn fb_{k+1} - fb_k"));
  out.push_back(make_report("eq.convexity_upper", 0, p - 1, upper_lhs, "<", upper_rhs, 0.0, {ku},
                            "lam^dn fb_{k+1} - fb_k < lam^dn sb_k^t Q D^-1 gb_{k+1}"));
  out.push_back(make_report("eq.curvature", 0, p - 1, curv, ">", 0.0, 0.0, {kc}, "sb_k^t hb_k sb_k > 0"));
  out.push_back(make_report("eq.curvature_next", 0, p - 1, curv_next, ">", 0.0, 0.0, {kn},
                            "sb_k^t Q D^-1 hb_{k+1} D^-1 Q^t sb_k > 0"));
  return out;
}

LineSearchSummary check_linesearch_conditions(const OrbitSchema& schema, const Tolerances& tol) {
  const auto& frame = schema.frame();
  const int p = schema.period();
  const double ld = frame.lambda_power(frame.dn());
  const Matrix qdi = d_inverse_q(frame);
  LineSearchSummary out;
  double rmin = kInf, rmax = -kInf, max_sg = -kInf;
  long kmin = 0, kmax = 0, kres = 0, kdesc = 0;
  for (long k = 0; k < p; ++k) {
    const Vector s = normalized_step(schema, k);
    const double sg = s.dot(schema.g_bar(k));
    const double df = ld * schema.f_bar(k + 1) - schema.f_bar(k);
    const double r = df / sg;
    out.decrease_ratios.push_back(r);
    if (sg > max_sg) max_sg = sg, kdesc = k;
    if (r < rmin) rmin = r, kmin = k;
    if (r > rmax) rmax = r, kmax = k;
    const double res = std::abs(s.dot(qdi * schema.g_bar(k + 1)));
    if (res > out.exact_search_residual) out.exact_search_residual = res, kres = k;
  }
  const bool descent = max_sg < 0.0;
  out.sigma0 = descent ? rmin : -kInf;
  out.goldstein_c_max = descent ? std::min({rmin, 1.0 - rmax, 0.5}) : -kInf;
  out.reports.push_back(make_report("eq.descent", 0, p - 1, max_sg, "<", 0.0, 0.0, {kdesc}, "sb_k^t gb_k < 0"));
  out.reports.push_back(make_report("eq.first_wolfe", 0, p - 1, out.sigma0, ">", 0.0, 0.0, {kmin},
                                    "sigma0 = min_k (lam^dn fb_{k+1} - fb_k) / (sb_k^t gb_k)"));
  out.reports.push_back(make_report("eq.goldstein", 0, p - 1, out.goldstein_c_max, ">", 0.0, 0.0, {kmax},
                                    "admissible Goldstein constants form (0, c_max]"));
  out.reports.push_back(make_report("eq.exact_line_search", 0, p - 1, out.exact_search_residual, "<=",
                                    tol.zero_residual, tol.zero_residual, {kres}, "|sb_k^t Q D^-1 gb_{k+1}|"));
  return out;
}

WhitneyReport whitney_ratios(const OrbitSchema& schema, long k_lo, long k_hi) {
  if (k_lo < 0 || k_hi < k_lo) throw std::invalid_argument("whitney_ratios: bad index range");
  schema.frame().check_horizon(k_hi);
  std::vector<OrbitPoint<double>> pts;
  for (long k = k_lo; k <= k_hi; ++k) pts.push_back(materialize(schema, k));
  WhitneyReport r;
  for (std::size_t j = 0; j < pts.size(); ++j)
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (j == k) continue;
      const Vector dx = pts[k].x - pts[j].x;
      const double dist = dx.norm();
      if (dist <= 1e-12 * std::max(1.0, pts[j].x.norm())) continue;
      ++r.pair_count;
      const Matrix dh = pts[k].h - pts[j].h;
      const double hn = Eigen::SelfAdjointEigenSolver<Matrix>(dh, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .cwiseAbs()
                            .maxCoeff();
      r.m_h = std::max(r.m_h, hn / dist);
      const Vector hdx = pts[j].h * dx;
      r.m_g = std::max(r.m_g, (pts[k].g - pts[j].g - hdx).norm() / (dist * dist));
      const double taylor = pts[k].f - pts[j].f - pts[j].g.dot(dx) - 0.5 * dx.dot(hdx);
      r.m_f = std::max(r.m_f, std::abs(taylor) / (dist * dist * dist));
    }
  return r;
}

WhitneyStability check_whitney_stability(const OrbitSchema& schema, long k_lo, long k_mid, long k_hi,
                                         double factor) {
  if (!(k_lo < k_mid && k_mid < k_hi)) throw std::invalid_argument("whitney windows must be nested");
  WhitneyStability w;
  w.inner = whitney_ratios(schema, k_lo, k_mid);
  w.outer = whitney_ratios(schema, k_lo, k_hi);
  const double worst = std::max({w.outer.m_h, w.outer.m_g, w.outer.m_f});
  w.reports.push_back(make_report("whitney.finite", k_lo, k_hi, std::isfinite(worst) ? worst : kInf, "<", kInf,
                                  0.0, {}, "largest of the three ratio suprema"));
  auto growth = [&](const char* id, double in, double out) {
    const double g = out == in ? 1.0 : out / in;
    w.reports.push_back(make_report(id, k_lo, k_hi, g, "<=", factor, 0.0, {k_mid},
                                    "supremum over [k_lo, k_hi] / supremum over [k_lo, k_mid]"));
  };
  growth("whitney.hessian_growth", w.inner.m_h, w.outer.m_h);
  growth("whitney.gradient_growth", w.inner.m_g, w.outer.m_g);
  growth("whitney.value_growth", w.inner.m_f, w.outer.m_f);
  return w;
}

DivergenceWitness divergence_witness(const OrbitSchema& schema, int periods) {
  if (periods < 1) throw std::invalid_argument("divergence_witness: need at least one period");
  const auto& frame = schema.frame();
  const int p = schema.period();
  const int n = schema.dimension();
  const int a = frame.blocks().a;
  const int c = frame.blocks().c;
  const long count = static_cast<long>(periods) * p;
  frame.check_horizon(count);

  DivergenceWitness w;
  w.f_limit = schema.f_shift();
  w.vertex_ratio_bound = frame.lambda_power(p);

  w.gradient_lower_bound = kInf;
  for (long k = 0; k < p; ++k)
    w.gradient_lower_bound = std::min(w.gradient_lower_bound, c > 0 ? schema.g_bar(k).tail(c).norm() : 0.0);

  Vector mask = Vector::Zero(n);
  mask.head(a).setOnes();
  for (long j = 0; j < p; ++j) w.vertices.push_back(mask.asDiagonal() * (frame.q_power(j) * schema.x_bar(j)));

  std::vector<OrbitPoint<double>> pts;
  for (long k = 0; k <= count; ++k) pts.push_back(materialize(schema, k));

  w.min_gradient_norm = kInf;
  double max_increase = -kInf, min_above_limit = kInf;
  long kg = 0, kf = 0, kb = 0;
  for (long k = 0; k < count; ++k) {
    const double gn = pts[k].g.norm();
    if (gn < w.min_gradient_norm) w.min_gradient_norm = gn, kg = k;
    // Differences from the normalized values; subtracting the shifted f_k
    // would lose them to rounding once lam^(k dn) drops below epsilon.
    const double lk = frame.lambda_power(k * frame.dn());
    const double inc = lk * (frame.lambda_power(frame.dn()) * schema.f_bar(k + 1) - schema.f_bar(k));
    if (inc > max_increase) max_increase = inc, kf = k;
    if (lk * schema.f_bar(k) < min_above_limit) min_above_limit = lk * schema.f_bar(k), kb = k;
  }

  long kv = 0;
  for (long k = 0; k + p < count; ++k) {
    const Vector& v = w.vertices[k % p];
    const double d0 = (pts[k].x - v).norm();
    const double d1 = (pts[k + p].x - v).norm();
    if (d0 < 1e-300) continue;
    if (d1 / d0 > w.max_vertex_ratio) w.max_vertex_ratio = d1 / d0, kv = k;
  }

  w.reports.push_back(make_report("witness.gradient_bounded_below", 0, count - 1, w.min_gradient_norm, ">=",
                                  w.gradient_lower_bound * (1 - 1e-12), 0.0, {kg},
                                  "min |g_k| against the exponent-dn block bound"));
  if (!(w.gradient_lower_bound > 0.0)) w.reports.back().status = CheckStatus::Fail;
  w.reports.push_back(make_report("witness.f_decreasing", 0, count - 1, max_increase, "<", 0.0, 0.0, {kf},
                                  "max f_{k+1} - f_k"));
  w.reports.push_back(make_report("witness.f_bounded_below", 0, count - 1, min_above_limit, ">", 0.0, 0.0, {kb},
                                  "min f_k - lim f_k"));
  w.reports.push_back(make_report("witness.f_limit_positive", 0, 0, w.f_limit, ">", 0.0, 0.0, {}, "lim f_k"));
  w.reports.push_back(make_report("witness.polygon_contraction", 0, count - 1, w.max_vertex_ratio, "<=",
                                  w.vertex_ratio_bound * (1 + 1e-9), 0.0, {kv},
                                  "dist(x_{k+p}, v_k) / dist(x_k, v_k) against lam^p"));
  return w;
}

}  // namespace divergence::schema
