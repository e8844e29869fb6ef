#pragma once

// Line-search drivers x_{k+1} = x_k + alpha_k d_k for steepest descent,
// Newton with a steepest-descent fallback, BFGS and Gauss-Newton, written
// once over the scalar type. Objectives may change coordinates between
// steps (used to keep long orbit replays inside floating-point range); the
// driver keeps track of the accumulated change so traces are reported in
// the original coordinates.

#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "divergence/orbit_schema.hpp"

namespace divergence::replay {

using schema::Mat;
using schema::Vec;

template <class S>
struct LeastSquares {
  Vec<S> residuals;  // r(x), length m
  Mat<S> g_matrix;   // G = J_r(x)^t, n x m, so grad f = G r for f = |r|^2 / 2
};

// New coordinates y' = y ./ coordinate_scale and objective F' = value_scale * F.
template <class S>
struct FrameChange {
  Vec<S> coordinate_scale;
  S value_scale;
};

class OffOrbitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LineSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// k is the driver's iteration counter: queries at x_k and at trial points
// from x_k (including the accepted x_{k+1}) carry k. Ordinary objectives
// ignore it.
template <class S>
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::string name() const = 0;
  virtual int dimension() const = 0;
  virtual S value(const Vec<S>& x, long k) const = 0;
  virtual Vec<S> gradient(const Vec<S>& x, long k) const = 0;
  virtual std::optional<Mat<S>> hessian(const Vec<S>&, long) const { return std::nullopt; }
  virtual std::optional<LeastSquares<S>> least_squares(const Vec<S>&, long) const { return std::nullopt; }
  // Closed-form x_{k+1}, when known.
  virtual std::optional<Vec<S>> expected_next(long) const { return std::nullopt; }
  virtual std::optional<FrameChange<S>> frame_change_after(long) const { return std::nullopt; }
};

// Objective known only along a periodic orbit. Queries must lie within the
// lookup tolerance of an orbit point; with a rescale period R, steps
// k in [mR, (m+1)R) are expressed in the coordinates y = D^-(mR) x with
// objective lam^(-mR dn) f.
template <class S>
class OrbitOracle : public Objective<S> {
 public:
  using LeastSquaresAt = std::function<LeastSquares<S>(long)>;

  OrbitOracle(schema::BasicOrbitSchema<S> orbit, std::string name, long rescale_period = 0,
              double lookup_tol = 1e-8, LeastSquaresAt least_squares_at = {})
      : orbit_(std::move(orbit)),
        name_(std::move(name)),
        rescale_(rescale_period),
        tol_(lookup_tol),
        ls_(std::move(least_squares_at)) {}

  std::string name() const override { return name_; }
  int dimension() const override { return orbit_.dimension(); }
  const schema::BasicOrbitSchema<S>& orbit() const { return orbit_; }

  long frame_offset(long k) const { return rescale_ > 0 ? rescale_ * (k / rescale_) : 0; }

  // Orbit point k expressed in the frame that is active at step `frame_k`.
  Vec<S> point(long k, long frame_k) const {
    const auto& f = orbit_.frame();
    const long rel = k - frame_offset(frame_k);
    Vec<S> x(dimension());
    for (int i = 0; i < dimension(); ++i) x(i) = orbit_.x_bar(k)(i) * f.lambda_power(rel * f.exponents()[i]);
    return f.q_power(k) * x;
  }

  S value(const Vec<S>& x, long k) const override {
    const long j = locate(x, k);
    const auto& f = orbit_.frame();
    const long off = frame_offset(k);
    const S shift = off == 0 ? orbit_.f_shift() : orbit_.f_shift() * f.lambda_power(-off * f.dn());
    return f.lambda_power((j - off) * f.dn()) * orbit_.f_bar(j) + shift;
  }

  Vec<S> gradient(const Vec<S>& x, long k) const override {
    const long j = locate(x, k);
    const auto& f = orbit_.frame();
    const long rel = j - frame_offset(k);
    Vec<S> g(dimension());
    for (int i = 0; i < dimension(); ++i)
      g(i) = orbit_.g_bar(j)(i) * f.lambda_power(rel * (f.dn() - f.exponents()[i]));
    return f.q_power(j) * g;
  }

  std::optional<Mat<S>> hessian(const Vec<S>& x, long k) const override {
    const long j = locate(x, k);
    const auto& f = orbit_.frame();
    const long rel = j - frame_offset(k);
    const int n = dimension();
    Mat<S> h(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const S& v = orbit_.h_bar(j)(a, b);
        h(a, b) = v == S(0) ? S(0) : v * f.lambda_power(rel * (f.dn() - f.exponents()[a] - f.exponents()[b]));
      }
    return Mat<S>(f.q_power(j) * h * f.q_power(j).transpose());
  }

  std::optional<LeastSquares<S>> least_squares(const Vec<S>& x, long k) const override {
    if (!ls_) return std::nullopt;
    return ls_(locate(x, k));
  }

  std::optional<Vec<S>> expected_next(long k) const override { return point(k + 1, k); }

  std::optional<FrameChange<S>> frame_change_after(long k) const override {
    if (rescale_ == 0 || (k + 1) % rescale_ != 0) return std::nullopt;
    const auto& f = orbit_.frame();
    return FrameChange<S>{f.d_diag(rescale_), f.lambda_power(-rescale_ * f.dn())};
  }

 private:
  // Orbit index of x in the frame of step k: k or k + 1 in a replay,
  // otherwise anything within one period.
  long locate(const Vec<S>& x, long k) const {
    const Vec<S> y = point(k, k);
    const S scale = y.norm() > S(1) ? S(y.norm()) : S(1);
    auto near = [&](long j) { return S((x - point(j, k)).norm()) <= S(tol_) * scale; };
    if (near(k)) return k;
    if (near(k + 1)) return k + 1;
    const long lo = std::max(frame_offset(k), k - orbit_.period());
    for (long j = lo; j <= k + orbit_.period(); ++j)
      if (j != k && j != k + 1 && near(j)) return j;
    throw OffOrbitError(name_ + ": query at step " + std::to_string(k) + " is not on the orbit");
  }

  schema::BasicOrbitSchema<S> orbit_;
  std::string name_;
  long rescale_;
  double tol_;
  LeastSquaresAt ls_;
};

enum class Method { SteepestDescent, Newton, Bfgs, GaussNewton };

std::string method_name(Method m);
Method parse_method(const std::string& name);

// Halve from `initial` until first Wolfe holds; never go below `floor`.
struct Backtracking {
  double sigma = 1e-4;
  double initial = 1.0;
  double shrink = 0.5;
  double floor = 1e-3;
  int max_bisections = 60;
};

// Step sizes prescribed in advance (orbit replays).
template <class S>
struct Scheduled {
  std::function<S(long)> alpha;
};

// Root of phi'(alpha) = grad f(x + alpha d)^t d by safeguarded regula falsi.
struct ExactSearch {
  int max_iter = 200;
  double tol = 1e-15;
};

template <class S>
using LineSearchPolicy = std::variant<Backtracking, Scheduled<S>, ExactSearch>;

template <class S>
struct DriveOptions {
  long max_steps = 1000;
  double gradient_tol = 0.0;             // stop once |grad f| < gradient_tol (0: run all steps)
  std::optional<Mat<S>> initial_metric;  // B_0 for BFGS, identity if absent
  std::function<S(long)> metric_scale;   // steepest descent with M_k = m(k) I
  long metric_sample_period = 0;         // record metric eigenvalues every this many steps
  double wolfe_sigma = 1e-4;             // first-Wolfe constant verified when the policy has none
  bool record_entries = true;
};

struct TraceEntry {
  long k = 0;
  std::vector<double> x;
  double f = 0.0;
  double grad_norm = 0.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double step_residual = std::numeric_limits<double>::quiet_NaN();
};

struct MetricSample {
  long k = 0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

struct ReplayTrace {
  std::string method;
  std::string objective;
  std::vector<TraceEntry> entries;
  std::vector<MetricSample> metric;
  long steps = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
  double min_grad_norm = std::numeric_limits<double>::infinity();
  double max_step_residual = 0.0;
  long first_step_residual_above_1e_6 = -1;
  double max_mmt_residual = 0.0;  // |M M^t s + alpha g| / (alpha |g|)
  long wolfe_violations = 0;
  double min_alpha = std::numeric_limits<double>::infinity();
  double max_alpha = 0.0;
  long newton_fallbacks = 0;
  long bfgs_skipped_updates = 0;
  std::string failure;  // empty unless the run stopped early
};

void write_trace_csv(std::ostream& os, const ReplayTrace& trace, int dimension);

namespace detail {

template <class S>
double dbl(const S& v) {
  return static_cast<double>(v);
}

template <class S>
std::vector<double> to_std(const Vec<S>& v) {
  std::vector<double> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = dbl(v(i));
  return out;
}

template <class S>
Vec<S> solve_spd_or_lu(const Mat<S>& a, const Vec<S>& b) {
  Eigen::PartialPivLU<Mat<S>> lu(a);
  return lu.solve(b);
}

template <class S>
S exact_step(const Objective<S>& obj, const Vec<S>& x, const Vec<S>& d, long k, const ExactSearch& opt) {
  auto dphi = [&](const S& a) { return S(obj.gradient(Vec<S>(x + a * d), k).dot(d)); };
  S lo(0), hi(1);
  S flo = dphi(lo);
  if (!(flo < S(0))) throw LineSearchError("exact search: not a descent direction");
  S fhi = dphi(hi);
  for (int i = 0; fhi < S(0); ++i) {
    if (i > 200) throw LineSearchError("exact search: no bracket");
    lo = hi;
    flo = fhi;
    hi = hi * S(2);
    fhi = dphi(hi);
  }
  int side = 0;
  S a = hi;
  for (int it = 0; it < opt.max_iter; ++it) {
    a = (lo * fhi - hi * flo) / (fhi - flo);
    const S fa = dphi(a);
    using std::abs;
    if (abs(fa) <= S(opt.tol) * abs(S(d.norm())) || hi - lo <= S(opt.tol) * hi) break;
    if (fa < S(0)) {
      lo = a;
      flo = fa;
      if (side == -1) fhi /= S(2);
      side = -1;
    } else {
      hi = a;
      fhi = fa;
      if (side == 1) flo /= S(2);
      side = 1;
    }
  }
  return a;
}

// Cyclic Jacobi sweeps. Needs only sqrt, so it runs for scalar types that
// Eigen's solvers do not support; the sampled metrics can span dozens of
// orders of magnitude, which double eigenvalues cannot resolve.
template <class S>
Vec<S> symmetric_eigenvalues(Mat<S> a, int max_sweeps = 60) {
  using std::abs;
  using std::sqrt;
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    S off(0), diag(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off == S(0) || off < diag * S(std::numeric_limits<double>::epsilon()) * S(1e-30)) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == S(0)) continue;
        const S theta = (a(q, q) - a(p, p)) / (S(2) * a(p, q));
        const S t = (theta >= S(0) ? S(1) : S(-1)) / (S(abs(theta)) + sqrt(S(theta * theta + S(1))));
        const S c = S(1) / sqrt(S(t * t + S(1)));
        const S sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const S akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const S apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
  }
  return a.diagonal();
}

template <class S>
void sample_metric(ReplayTrace& trace, long k, const Mat<S>& metric, const Vec<S>& coord, const S& value_scale) {
  // Metric in original coordinates: (1/c) T^-1 M T^-1.
  const Eigen::Index n = metric.rows();
  Mat<S> m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = metric(i, j) / (coord(i) * coord(j) * value_scale);
  const Vec<S> ev = symmetric_eigenvalues(m);
  trace.metric.push_back({k, dbl(S(ev.minCoeff())), dbl(S(ev.maxCoeff()))});
}

}  // namespace detail

template <class S>
ReplayTrace drive(Method method, const Objective<S>& obj, Vec<S> x, const LineSearchPolicy<S>& policy,
                  const DriveOptions<S>& opt = {}) {
  using detail::dbl;
  const int n = obj.dimension();
  if (x.size() != n) throw std::invalid_argument("drive: starting point has the wrong dimension");
  ReplayTrace tr;
  tr.method = method_name(method);
  tr.objective = obj.name();

  Mat<S> bfgs = opt.initial_metric ? *opt.initial_metric : Mat<S>(Mat<S>::Identity(n, n));
  if (bfgs.rows() != n || bfgs.cols() != n) throw std::invalid_argument("drive: initial metric has the wrong shape");
  Vec<S> coord = Vec<S>::Ones(n);  // original x = coord .* current x
  S value_scale(1);                // current objective = value_scale * original
  const double sigma = std::holds_alternative<Backtracking>(policy) ? std::get<Backtracking>(policy).sigma
                                                                     : opt.wolfe_sigma;

  S fx = obj.value(x, 0);
  Vec<S> g = obj.gradient(x, 0);

  auto record = [&](long k, double alpha, double step_residual) {
    const Vec<S> g_orig = g.cwiseQuotient(coord) / value_scale;
    const double gn = dbl(S(g_orig.norm()));
    tr.final_grad_norm = gn;
    tr.min_grad_norm = std::min(tr.min_grad_norm, gn);
    if (!opt.record_entries) return gn;
    TraceEntry e;
    e.k = k;
    e.x = detail::to_std(Vec<S>(x.cwiseProduct(coord)));
    e.f = dbl(S(fx / value_scale));
    e.grad_norm = gn;
    e.alpha = alpha;
    e.step_residual = step_residual;
    tr.entries.push_back(std::move(e));
    return gn;
  };

  const double nan = std::numeric_limits<double>::quiet_NaN();
  double gn = record(0, nan, nan);
  long k = 0;
  try {
    for (; k < opt.max_steps; ++k) {
      if (opt.gradient_tol > 0 && gn < opt.gradient_tol) {
        tr.converged = true;
        break;
      }
      // Direction and the metric M M^t it came from.
      Mat<S> metric;
      Vec<S> grad_used = g;
      switch (method) {
        case Method::SteepestDescent: {
          const S m = opt.metric_scale ? opt.metric_scale(k) : S(1);
          metric = Mat<S>::Identity(n, n) * (m * m);
          break;
        }
        case Method::Newton: {
          auto h = obj.hessian(x, k);
          if (!h) throw std::invalid_argument("Newton's method needs Hessians");
          Eigen::LLT<Mat<S>> llt(*h);
          if (llt.info() == Eigen::Success) {
            metric = *h;
          } else {
            metric = Mat<S>::Identity(n, n);
            ++tr.newton_fallbacks;
          }
          break;
        }
        case Method::Bfgs:
          metric = bfgs;
          break;
        case Method::GaussNewton: {
          auto ls = obj.least_squares(x, k);
          if (!ls) throw std::invalid_argument("Gauss-Newton needs a least-squares objective");
          metric = ls->g_matrix * ls->g_matrix.transpose();
          grad_used = ls->g_matrix * ls->residuals;
          break;
        }
      }
      if (opt.metric_sample_period > 0 && k % opt.metric_sample_period == 0)
        detail::sample_metric(tr, k, metric, coord, value_scale);

      const Vec<S> d = -detail::solve_spd_or_lu(metric, grad_used);
      if (!d.allFinite()) throw std::runtime_error("singular metric at step " + std::to_string(k));
      const S slope = g.dot(d);

      S alpha;
      Vec<S> x_new;
      S f_new;
      if (const auto* bt = std::get_if<Backtracking>(&policy)) {
        if (!(slope < S(0))) throw LineSearchError("not a descent direction at step " + std::to_string(k));
        alpha = S(bt->initial);
        for (int i = 0;; ++i) {
          x_new = x + alpha * d;
          f_new = obj.value(x_new, k);
          if (f_new <= fx + S(bt->sigma) * alpha * slope) break;
          const S next = alpha * S(bt->shrink);
          if (i >= bt->max_bisections || next < S(bt->floor))
            throw LineSearchError("sufficient decrease not reached above the step floor at step " +
                                  std::to_string(k));
          alpha = next;
        }
      } else if (const auto* sc = std::get_if<Scheduled<S>>(&policy)) {
        alpha = sc->alpha(k);
        x_new = x + alpha * d;
        f_new = obj.value(x_new, k);
      } else {
        alpha = detail::exact_step(obj, x, d, k, std::get<ExactSearch>(policy));
        x_new = x + alpha * d;
        f_new = obj.value(x_new, k);
      }
      // alpha d rather than x_new - x: the difference cancels in blocks whose
      // coordinates are much larger than their steps.
      const Vec<S> s = alpha * d;
      const Vec<S> g_new = obj.gradient(x_new, k);

      double step_residual = nan;
      if (auto expect = obj.expected_next(k)) {
        const S sn = s.norm();
        step_residual = dbl(S(S((x_new - *expect).norm()) / (sn > S(0) ? sn : S(1))));
        tr.max_step_residual = std::max(tr.max_step_residual, step_residual);
        if (step_residual > 1e-6 && tr.first_step_residual_above_1e_6 < 0) tr.first_step_residual_above_1e_6 = k;
      }
      const S gu = grad_used.norm();
      if (gu > S(0) && alpha > S(0))
        tr.max_mmt_residual =
            std::max(tr.max_mmt_residual, dbl(S(S((metric * s + alpha * grad_used).norm()) / (alpha * gu))));
      if (!(f_new <= fx + S(sigma) * g.dot(s))) ++tr.wolfe_violations;
      tr.min_alpha = std::min(tr.min_alpha, dbl(alpha));
      tr.max_alpha = std::max(tr.max_alpha, dbl(alpha));

      if (method == Method::Bfgs) {
        const Vec<S> y = g_new - g;
        const S sy = s.dot(y);
        if (sy > S(0)) {
          const Vec<S> bs = bfgs * s;
          bfgs += (y * y.transpose()) / sy - (bs * bs.transpose()) / S(s.dot(bs));
        } else {
          ++tr.bfgs_skipped_updates;
        }
      }

      x = x_new;
      fx = f_new;
      g = g_new;
      if (auto fc = obj.frame_change_after(k)) {
        const Vec<S>& t = fc->coordinate_scale;
        x = x.cwiseQuotient(t);
        fx *= fc->value_scale;
        g = (g.cwiseProduct(t)) * fc->value_scale;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) bfgs(i, j) *= fc->value_scale * t(i) * t(j);
        coord = coord.cwiseProduct(t);
        value_scale *= fc->value_scale;
      }
      gn = record(k + 1, dbl(alpha), step_residual);
    }
    if (opt.gradient_tol > 0 && gn < opt.gradient_tol) tr.converged = true;
  } catch (const std::exception& e) {
    tr.failure = e.what();
  }
  tr.steps = k;
  return tr;
}

}  // namespace divergence::replay
