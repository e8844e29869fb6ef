#include "divergence/bfgs_solve.hpp"

#include "divergence/real_interval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

namespace divergence::bfgs {

namespace {

using JetD = Jet<double>;

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return std::isnan(m) ? std::numeric_limits<double>::infinity() : m;
}

// Rows 1..7 (c_2..c_8) of the residual Jacobian, and the residual vector.
void residual_and_jacobian(const Eigen::VectorXd& x, Eigen::VectorXd& f, Eigen::MatrixXd& jac) {
  std::vector<JetD> v;
  for (int i = 0; i < kFree; ++i) v.push_back(JetD::variable(x(i), kFree, i));
  const auto r = charpoly_residuals(v);
  f.resize(7);
  jac.resize(7, kFree);
  for (int i = 0; i < 7; ++i) {
    f(i) = r[i + 1].value();
    for (int j = 0; j < kFree; ++j) jac(i, j) = r[i + 1].derivative(j);
  }
}

double squared_residual(const Eigen::VectorXd& x) {
  const auto r = charpoly_residuals(std::vector<double>(x.data(), x.data() + kFree));
  double s = 0.0;
  for (int i = 1; i < 8; ++i) s += r[i] * r[i];
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

// Levenberg-Marquardt for the underdetermined system c_2..c_8 = target
// (minimum-norm damped steps).
RhoCandidate levenberg_marquardt(Eigen::VectorXd x, int start_index, const SolveOptions& o) {
  double mu = 1e-3;
  Eigen::VectorXd f;
  Eigen::MatrixXd jac;
  double current = squared_residual(x);
  for (int it = 0; it < o.max_iterations && std::isfinite(current); ++it) {
    if (std::sqrt(current) < 1e-3 * o.converged_tol) break;
    residual_and_jacobian(x, f, jac);
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Eigen::MatrixXd a = jac * jac.transpose();
      a.diagonal().array() += mu;
      const Eigen::VectorXd xn = x - jac.transpose() * a.ldlt().solve(f);
      const double next = squared_residual(xn);
      if (next < current) {
        x = xn;
        current = next;
        mu = std::max(mu / 10, 1e-15);
        accepted = true;
      } else {
        mu *= 10;
      }
    }
    if (!accepted) break;
  }
  RhoCandidate c;
  c.free.assign(x.data(), x.data() + kFree);
  c.residual = max_abs(charpoly_residuals(c.free));
  c.spread = rho_spread(c.free);
  c.start_index = start_index;
  return c;
}

std::vector<Eigen::VectorXd> make_starts(const SolveOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> dist(-o.box, o.box);
  std::vector<Eigen::VectorXd> starts;
  for (int s = 0; s < o.seeds; ++s) {
    Eigen::VectorXd x(kFree);
    for (int i = 0; i < kFree; ++i) x(i) = dist(rng);
    starts.push_back(x);
  }
  // Sign patterns: bit i of a scrambled pattern index picks the sign of slot i.
  for (int s = 0; s < o.sign_patterns; ++s) {
    const std::uint32_t bits = static_cast<std::uint32_t>(s) * 2654435761u;
    Eigen::VectorXd x(kFree);
    for (int i = 0; i < kFree; ++i) x(i) = ((bits >> (i + 5)) & 1u) ? -0.8 : 0.8;
    starts.push_back(x);
  }
  return starts;
}

Eigen::MatrixXd reduced_jacobian(const ReducedSystem& sys, const std::vector<double>& unknowns) {
  std::vector<JetD> v;
  for (std::size_t i = 0; i < unknowns.size(); ++i) v.push_back(JetD::variable(unknowns[i], unknowns.size(), i));
  const auto r = sys(v);
  Eigen::MatrixXd j(r.size(), unknowns.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t k = 0; k < unknowns.size(); ++k) j(i, k) = r[i].derivative(k);
  return j;
}

std::vector<double> to_doubles(const std::vector<Real>& v) {
  std::vector<double> out;
  for (const auto& x : v) out.push_back(static_cast<double>(x));
  return out;
}

}  // namespace

double rho_spread(const std::vector<double>& free) {
  const auto rho = expand_rho(free, constants<double>().u2);
  double m = 0.0;
  for (double r : rho) m = std::max(m, std::abs(std::log(std::abs(r))));
  return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
}

RhoSolution assess_solution(std::vector<Real> free, const ReducedSystem& system, bool certify, double radius) {
  RhoSolution s;
  s.system = system;
  s.free = std::move(free);
  const auto fd = to_doubles(s.free);
  s.residual_double = max_abs(charpoly_residuals(fd));
  Real worst(0);
  for (const Real& r : charpoly_residuals(s.free)) worst = std::max(worst, Real(abs(r)));
  s.residual_real = static_cast<double>(worst);
  s.spread = rho_spread(fd);
  s.certify_requested = certify;
  if (certify) {
    std::vector<double> center;
    for (int slot : system.unknown_slots()) center.push_back(fd[slot]);
    // c_1 and c_9 must hold identically; check their enclosures at the center.
    std::vector<interval::RealInterval> full_center;
    for (double v : system.full(center)) full_center.emplace_back(v);
    const auto enclosure = charpoly_residuals(full_center);
    s.identities_hold = enclosure.front().contains_zero() && enclosure.back().contains_zero();
    interval::IntervalVector f_center(7);
    for (int i = 0; i < 7; ++i) f_center[i] = enclosure[i + 1].to_interval();

    const Eigen::MatrixXd jac = reduced_jacobian(system, center);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      s.certificate.failure = "singular Jacobian at the solution";
    } else {
      // The contraction bound grows with the box, the residual bound does
      // not: shrink the box by factors of 100 until both fit.
      const Eigen::MatrixXd preconditioner = lu.inverse();
      for (double r = radius; r >= 1e-14; r /= 100) {
        s.certificate = interval::moore_certify(f_center, interval::jet_jacobian(system), center, r, preconditioner);
        if (s.certificate.certified) break;
      }
      if (s.certificate.certified && !s.identities_hold) {
        s.certificate.certified = false;
        s.certificate.failure = "c_1 or c_9 enclosure excludes the target";
      }
    }
  }
  return s;
}

RhoSolution refine_and_certify(const std::vector<double>& free, bool certify, double radius) {
  if (free.size() != kFree) throw std::invalid_argument("refine_and_certify: need 11 free values");
  // Choose the two extra fixed slots.
  std::vector<JetD> v;
  for (int i = 0; i < kFree; ++i) v.push_back(JetD::variable(free[i], kFree, i));
  const auto r = charpoly_residuals(v);
  Eigen::MatrixXd full(7, kFree);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < kFree; ++j) full(i, j) = r[i + 1].derivative(j);

  ReducedSystem best;
  double best_cond = std::numeric_limits<double>::infinity();
  for (int a = 0; a < kFree; ++a)
    for (int b = a + 1; b < kFree; ++b) {
      if (a == 8 || a == 9 || b == 8 || b == 9) continue;
      ReducedSystem sys;
      sys.fixed_slots = {8, 9, a, b};
      std::sort(sys.fixed_slots.begin(), sys.fixed_slots.end());
      Eigen::MatrixXd j(7, 7);
      const auto slots = sys.unknown_slots();
      for (int c = 0; c < 7; ++c) j.col(c) = full.col(slots[c]);
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
      const double cond = svd.singularValues()(0) / svd.singularValues()(6);
      if (cond < best_cond) best_cond = cond, best = sys;
    }
  for (int i = 0; i < 4; ++i) best.fixed_values[i] = free[best.fixed_slots[i]];

  // Chord Newton in extended precision with the double inverse Jacobian.
  const auto slots = best.unknown_slots();
  std::vector<double> y0;
  for (int s : slots) y0.push_back(free[s]);
  const Eigen::MatrixXd inv = reduced_jacobian(best, y0).inverse();
  std::vector<Real> y(y0.begin(), y0.end());
  const Real target_tol("1e-105");
  for (int it = 0; it < 40; ++it) {
    const auto f = best(y);
    Real norm(0);
    for (const auto& e : f) norm = std::max(norm, Real(abs(e)));
    if (norm < target_tol) break;
    for (int i = 0; i < 7; ++i) {
      Real step(0);
      for (int j = 0; j < 7; ++j) step += Real(inv(i, j)) * f[j];
      y[i] -= step;
    }
  }
  return assess_solution(best.full(y), best, certify, radius);
}

SolveResult solve_rho(const SolveOptions& o) {
  if (o.seeds + o.sign_patterns < 1) throw std::invalid_argument("solve_rho: need at least one start");
  const auto starts = make_starts(o);
  SolveResult out;
  out.starts = static_cast<int>(starts.size());

  std::vector<RhoCandidate> results(starts.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = o.threads > 0 ? o.threads : static_cast<int>(std::min(hw, 16u));
  std::vector<std::future<void>> jobs;
  for (int w = 0; w < workers; ++w)
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < starts.size(); i += workers)
        results[i] = levenberg_marquardt(starts[i], static_cast<int>(i), o);
    }));
  for (auto& j : jobs) j.get();

  for (auto& c : results)
    if (c.residual < o.converged_tol && std::isfinite(c.spread)) out.candidates.push_back(std::move(c));
  if (out.candidates.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : results) best = std::min(best, c.residual);
    throw std::runtime_error("solve_rho: no start converged; best residual " + std::to_string(best));
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const RhoCandidate& a, const RhoCandidate& b) { return a.spread < b.spread; });
  const int refine = std::min<int>(o.max_refined, out.candidates.size());
  for (int i = 0; i < refine; ++i) {
    auto s = refine_and_certify(out.candidates[i].free, o.certify, o.certify_radius);
    s.start_index = out.candidates[i].start_index;
    out.solutions.push_back(std::move(s));
  }
  return out;
}

}  // namespace divergence::bfgs
