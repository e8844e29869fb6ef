#include "divergence/bfgs_example.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "divergence/exact_trig.hpp"

namespace divergence::bfgs {

using schema::make_report;
using schema::Matrix;
using schema::ReportBundle;
using schema::Vector;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Target eigenvalues as (modulus exponent of u, angle in units of pi/24);
// one representative per conjugate pair, in the row order of Gamma_0.
struct Eigen9 {
  int u_power;
  int angle;
};
constexpr std::array<Eigen9, 5> kTargets = {{{4, 24}, {4, 21}, {3, 12}, {0, 6}, {0, 30}}};

double dbl(const Real& v) { return static_cast<double>(v); }

RMat to_matrix(const Square9<Real>& m) {
  RMat r(kN, kN);
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j) r(i, j) = m(i, j);
  return r;
}

Square9<Real> to_square(const RMat& m) {
  Square9<Real> r;
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j) r(i, j) = m(i, j);
  return r;
}

double max_abs(const RMat& m) { return dbl(m.cwiseAbs().maxCoeff()); }

struct Cx {
  Real re{0};
  Real im{0};
  friend Cx operator+(const Cx& a, const Cx& b) { return {a.re + b.re, a.im + b.im}; }
  friend Cx operator-(const Cx& a, const Cx& b) { return {a.re - b.re, a.im - b.im}; }
  friend Cx operator*(const Cx& a, const Cx& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
  friend Cx operator/(const Cx& a, const Cx& b) {
    const Real d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
  }
  Real abs2() const { return re * re + im * im; }
};

// Null vector of Psi^t - xi I by Gaussian elimination with full pivoting; the
// last pivot is the part the elimination cannot remove and is ignored, the
// free component is set to 1. Returns v scaled so max |v_i| = 1.
std::array<Cx, kN> left_null_vector(const RMat& psi, const Cx& xi, double& residual) {
  std::array<std::array<Cx, kN>, kN> a;
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j) a[i][j] = Cx{psi(j, i), Real(0)} - (i == j ? xi : Cx{});
  std::array<int, kN> col;
  for (int j = 0; j < kN; ++j) col[j] = j;
  for (int p = 0; p + 1 < kN; ++p) {
    int bi = p, bj = p;
    Real best(-1);
    for (int i = p; i < kN; ++i)
      for (int j = p; j < kN; ++j)
        if (a[i][j].abs2() > best) best = a[i][j].abs2(), bi = i, bj = j;
    std::swap(a[p], a[bi]);
    for (int i = 0; i < kN; ++i) std::swap(a[i][p], a[i][bj]);
    std::swap(col[p], col[bj]);
    for (int i = p + 1; i < kN; ++i) {
      const Cx f = a[i][p] / a[p][p];
      for (int j = p; j < kN; ++j) a[i][j] = a[i][j] - f * a[p][j];
    }
  }
  std::array<Cx, kN> y;
  y[kN - 1] = Cx{Real(1), Real(0)};
  for (int p = kN - 2; p >= 0; --p) {
    Cx acc;
    for (int j = p + 1; j < kN; ++j) acc = acc + a[p][j] * y[j];
    y[p] = (Cx{} - acc) / a[p][p];
  }
  std::array<Cx, kN> v;
  for (int j = 0; j < kN; ++j) v[col[j]] = y[j];
  int big = 0;
  for (int j = 1; j < kN; ++j)
    if (v[j].abs2() > v[big].abs2()) big = j;
  const Cx pivot = v[big];
  for (auto& e : v) e = e / pivot;

  residual = 0.0;
  for (int i = 0; i < kN; ++i) {
    Cx r = Cx{} - xi * v[i];
    for (int j = 0; j < kN; ++j) r = r + Cx{psi(j, i), Real(0)} * v[j];
    residual = std::max(residual, std::sqrt(dbl(r.abs2())));
  }
  return v;
}

RMat rotation(int k_pi24, const Real& scale) {
  const auto r = rotation_pi24<Real>(k_pi24);
  RMat m(2, 2);
  m << scale * r[0], scale * r[1], scale * r[2], scale * r[3];
  return m;
}

RMat block_theta(const std::array<Real, 5>& scales) {
  RMat t = RMat::Zero(kN, kN);
  t(0, 0) = -scales[0];
  for (int b = 1; b < 5; ++b) t.block(2 * b - 1, 2 * b - 1, 2, 2) = rotation(kTargets[b].angle, scales[b]);
  return t;
}

std::vector<RVec> rows_times(const std::vector<RMat>& powers, const std::vector<RVec>& base) {
  std::vector<RVec> out;
  out.reserve(powers.size() * base.size());
  for (const auto& p : powers)
    for (const auto& v : base) out.push_back(p * v);
  return out;
}

Real rel_error(const Real& a, const Real& b) {
  const Real scale = std::max(Real(abs(b)), Real(std::numeric_limits<double>::min()));
  return Real(abs(a - b)) / scale;
}

}  // namespace

Real bfgs_lambda() {
  const auto c = constants<Real>();
  return exp(log(c.u2) / 72);
}

std::vector<std::complex<double>> target_spectrum(double u) {
  std::vector<std::complex<double>> out;
  for (const auto& t : kTargets) {
    const double r = std::pow(u, t.u_power);
    const double c = cos_pi24<double>(t.angle), s = sin_pi24<double>(t.angle);
    out.emplace_back(r * c, r * s);
    if (t.angle != 24) out.emplace_back(r * c, -r * s);
  }
  return out;
}

RMat theta_one() { return block_theta({Real(1), Real(1), Real(1), Real(1), Real(1)}); }

RMat theta_from_spectrum(const Real& u) {
  std::array<Real, 5> s;
  for (int b = 0; b < 5; ++b) s[b] = schema::integer_power(u, kTargets[b].u_power);
  return block_theta(s);
}

RMat gamma0_from_eigenvectors(const RMat& psi, const Real& u, double* worst_residual) {
  RMat g(kN, kN);
  double worst = 0.0;
  for (int b = 0; b < 5; ++b) {
    const Real r = schema::integer_power(u, kTargets[b].u_power);
    const Cx xi{r * cos_pi24<Real>(kTargets[b].angle), r * sin_pi24<Real>(kTargets[b].angle)};
    double res = 0.0;
    const auto v = left_null_vector(psi, xi, res);
    worst = std::max(worst, res);
    const int row = b == 0 ? 0 : 2 * b - 1;
    for (int j = 0; j < kN; ++j) {
      g(row, j) = v[j].re;
      if (b > 0) g(row + 1, j) = v[j].im;
    }
  }
  if (worst_residual) *worst_residual = worst;
  return g;
}

BfgsExample build_bfgs(const RhoSolution& solution) {
  if (solution.free.size() != kFree) throw std::invalid_argument("build_bfgs: solution needs 11 free values");
  const Real lambda = bfgs_lambda();
  const Real u = schema::integer_power(lambda, kCycle);
  const auto rho = expand_rho(solution.free, constants<Real>().u2);
  const RMat psi = to_matrix(psi_product(rho));
  double eig_res = 0.0;
  const RMat gamma0 = gamma0_from_eigenvectors(psi, u, &eig_res);
  if (std::abs(dbl(Eigen::PartialPivLU<RMat>(gamma0).determinant())) == 0.0)
    throw std::runtime_error("build_bfgs: Gamma_0 is singular");

  RVec z(kN);
  const Real l3 = lambda * lambda * lambda, l4 = l3 * lambda;
  for (int i = 0; i < kN; ++i) z(i) = i < kBlockA ? l4 : (i < kBlockA + kBlockB ? l3 : Real(1));
  const RMat t1 = theta_one();
  RVec z36(kN);
  for (int i = 0; i < kN; ++i) z36(i) = schema::integer_power(z(i), kCycle);
  const RMat t_lambda = t1 * z36.asDiagonal();

  // sigma_k = u^-floor(k/9) prod_{i < floor(k/9)} rho_{9i + k mod 9}^2
  std::vector<Real> sigma(kPeriod);
  for (int k = 0; k < kPeriod; ++k) {
    const int q = k / 9;
    Real s = schema::integer_power(u, -q);
    for (int i = 0; i < q; ++i) s *= rho[(9 * i + k % 9) % kCycle] * rho[(9 * i + k % 9) % kCycle];
    sigma[k] = s;
  }
  const Real sigma_min = *std::min_element(sigma.begin(), sigma.begin() + kCycle);
  const Real mu = 2 * (1 - l4) / sigma_min;

  // One cycle from Gamma_k; later cycles by powers of Theta(1).
  std::vector<RVec> g_cycle, s_cycle;
  Square9<Real> gk = to_square(gamma0);
  for (int k = 0; k < kCycle; ++k) {
    const RMat gm = to_matrix(gk);
    RVec zk(kN);
    for (int i = 0; i < kN; ++i) zk(i) = schema::integer_power(z(i), k);
    const RVec e1 = RVec::Unit(kN, 0);
    g_cycle.push_back(mu * (gm.col(0).array() / zk.array()).matrix());
    const RVec dual = gm.transpose().partialPivLu().solve(e1);
    s_cycle.push_back(-sigma[k] * (zk.array() * dual.array()).matrix());
    gk = times_phi(gk, rho[k]);
  }
  std::vector<RMat> t_powers{RMat::Identity(kN, kN)};
  for (int m = 1; m < kRepeats; ++m) t_powers.push_back(t_powers.back() * t1);
  const auto g_bar = rows_times(t_powers, g_cycle);
  const auto s_bar = rows_times(t_powers, s_cycle);

  schema::BasicOrbitFrame<Real> frame({kBlockA, kBlockB, kBlockC}, kExponent, kPeriod, lambda,
                                      RMat::Identity(kN, kN));
  const auto x_bar = schema::steps_to_iterates(s_bar, frame);
  RVec hd = RVec::Zero(kN);
  hd.head(kBlockA + kBlockB).setOnes();
  const RMat h = hd.asDiagonal();
  schema::BasicOrbitSchema<Real> orbit(frame, x_bar, std::vector<Real>(kPeriod, Real(1)), g_bar,
                                       std::vector<RMat>(kPeriod, h), Real(1));
  auto dschema = orbit.cast<double>();
  return BfgsExample{solution, lambda, u,       rho, psi,   gamma0, t1, t_lambda, z, eig_res,
                     sigma,    mu,     std::move(orbit), std::move(dschema)};
}

RMat build_Bk(const BfgsExample& ex, long k) {
  RMat b = RMat::Zero(kN, kN);
  const Real l4inv = 1 / schema::integer_power(ex.lambda, kExponent);
  Real scale(1);
  RVec zi = RVec::Ones(kN);
  for (int i = 0; i < kN; ++i) {
    const RVec g = ex.orbit.g_bar(k + i);
    const RVec s = normalized_step(ex.orbit, k + i);
    const RVec w = (zi.array() * g.array()).matrix();
    b -= scale * (w * w.transpose()) / s.dot(g);
    scale *= l4inv;
    zi = (zi.array() * ex.z.array()).matrix();
  }
  return b;
}

ReportBundle verify_bfgs_conditions(const BfgsExample& ex, const schema::Tolerances& tol) {
  ReportBundle out;
  auto append = [&out](const ReportBundle& b) { out.insert(out.end(), b.begin(), b.end()); };
  const auto& sol = ex.solution;
  const auto& orbit = ex.orbit;
  const Real u4 = schema::integer_power(ex.u, 4);

  // Solution quality.
  out.push_back(make_report("bfgs.charpoly_residual", 0, 0, sol.residual_double, "<", 1e-12, 0.0, {},
                            "max |c_i(Psi) - target_i| in double"));
  if (sol.certify_requested) {
    const auto& c = sol.certificate;
    out.push_back(make_report("bfgs.certified", 0, 0, c.certified ? 1.0 : 0.0, "==", 1.0, 0.0, {},
                              c.certified ? "Moore test on the 7x7 subsystem" : c.failure));
    out.push_back(make_report("bfgs.certified_radius", 0, 0, c.solution_radius, "<", 1e-6, 0.0, {},
                              "root within this distance of the center"));
    out.push_back(make_report("bfgs.certified_identities", 0, 0, sol.identities_hold ? 1.0 : 0.0, "==", 1.0, 0.0,
                              {}, "c_1 and c_9 enclosures contain the target"));
  }
  {
    double worst = 0.0;
    long wk = 0;
    for (int k = 0; k < 9; ++k) {
      Real p(1);
      for (int i = 0; i < 4; ++i) p *= ex.rho[9 * i + k] * ex.rho[9 * i + k];
      const double e = dbl(rel_error(p, u4));
      if (e > worst) worst = e, wk = k;
    }
    out.push_back(make_report("bfgs.rho_products", 0, 8, worst, "<", 1e-10, 0.0, {wk},
                              "relative error of prod_i rho_{9i+k}^2 against u^4"));
  }
  {
    Real prod(1);
    for (const Real& r : ex.rho) prod *= r;
    const Real det = Eigen::PartialPivLU<RMat>(ex.psi).determinant();
    const Real target = -schema::integer_power(ex.u, 18);
    out.push_back(make_report("bfgs.det_product", 0, 0, dbl(rel_error(det, prod)), "<", 1e-10, 0.0, {},
                              "det Psi against prod rho_k"));
    out.push_back(make_report("bfgs.det_target", 0, 0, dbl(rel_error(prod, target)), "<", 1e-10, 0.0, {},
                              "prod rho_k against -u^18"));
  }
  {
    const Matrix psi = ex.psi.cast<double>();
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(psi.transpose(), false).eigenvalues();
    std::vector<bool> used(ev.size(), false);
    double worst = 0.0;
    for (const auto& t : target_spectrum(dbl(ex.u))) {
      int best = -1;
      double d = kInf;
      for (int i = 0; i < ev.size(); ++i)
        if (!used[i] && std::abs(ev(i) - t) < d) d = std::abs(ev(i) - t), best = i;
      if (best >= 0) used[best] = true;
      worst = std::max(worst, d);
    }
    out.push_back(make_report("bfgs.spectrum", 0, 0, worst, "<", 1e-8, 0.0, {},
                              "max distance from a target eigenvalue to the spectrum of Psi^t"));
  }
  {
    // Phi_{k+1} ... Phi_{k+j} e_1 = e_{j+1}, evaluated in double without tolerance.
    double worst = 0.0;
    for (int k = 0; k < kCycle; ++k) {
      Square9<double> m = Square9<double>::identity();
      for (int j = 1; j <= 8; ++j) {
        m = m * phi_matrix(dbl(ex.rho[(k + j) % kCycle]));
        for (int i = 0; i < kN; ++i) worst = std::max(worst, std::abs(m(i, 0) - (i == j ? 1.0 : 0.0)));
      }
    }
    out.push_back(make_report("bfgs.phi_shift", 0, kCycle - 1, worst, "==", 0.0, 0.0, {},
                              "max |Phi_{k+1}..Phi_{k+j} e_1 - e_{j+1}|"));
  }
  out.push_back(make_report("bfgs.eigenvectors", 0, 0, ex.eigenvector_residual, "<", 1e-8, 0.0, {},
                            "max |Psi^t v - xi v| with max |v_i| = 1"));
  {
    const double cond = [&] {
      const Eigen::JacobiSVD<Matrix> svd(ex.gamma0.cast<double>());
      return svd.singularValues()(0) / svd.singularValues()(kN - 1);
    }();
    out.push_back(make_report("bfgs.gamma0_condition", 0, 0, cond, "<", 1e12, 0.0, {}, "condition number of Gamma_0"));
  }
  out.push_back(make_report("eq.reduced", 0, 0, max_abs(ex.gamma0 * ex.psi - ex.theta_lambda * ex.gamma0), "<",
                            1e-8, 0.0, {}, "max |Gamma_0 Psi - Theta(lam) Gamma_0|"));
  out.push_back(make_report("bfgs.theta_factor", 0, 0, max_abs(ex.theta_lambda - theta_from_spectrum(ex.u)), "<",
                            1e-30, 0.0, {}, "Theta(1) Z^36 against the blocks r R(theta) of the spectrum"));
  {
    RMat sum = RMat::Zero(kN, kN), p = RMat::Identity(kN, kN);
    for (int m = 0; m < kRepeats; ++m) sum += p, p = p * ex.theta_one;
    out.push_back(make_report("bfgs.theta_period_sum", 0, kRepeats - 1, max_abs(sum), "<", 1e-30, 0.0, {},
                              "max |sum_{m<16} Theta(1)^m|"));
    out.push_back(make_report("bfgs.theta_period", 0, 0, max_abs(p - RMat::Identity(kN, kN)), "<", 1e-30, 0.0, {},
                              "max |Theta(1)^16 - I|"));
    out.push_back(make_report("bfgs.theta_commutes", 0, 0,
                              max_abs(ex.theta_one * ex.z.asDiagonal() - ex.z.asDiagonal() * ex.theta_one), "<",
                              1e-30, 0.0, {}, "max |Theta(1) Z - Z Theta(1)|"));
  }
  {
    double worst = 0.0;
    long wk = 0;
    for (int k = 0; k + kCycle < kPeriod; ++k) {
      const double e = dbl(rel_error(ex.sigma[k + kCycle], ex.sigma[k]));
      if (e > worst) worst = e, wk = k;
    }
    out.push_back(make_report("bfgs.sigma_periodic", 0, kPeriod - 1, worst, "<", 1e-10, 0.0, {wk},
                              "relative |sigma_{k+36} - sigma_k| from the product formula"));
  }

  // One more cycle of Gamma_k computed directly must agree with Theta(1) times the first.
  {
    Square9<Real> gk = to_square(ex.gamma0);
    for (int k = 0; k < kCycle; ++k) gk = times_phi(gk, ex.rho[k]);
    double wg = 0.0, ws = 0.0;
    for (int k = 0; k < kCycle; ++k) {
      const RMat gm = to_matrix(gk);
      RVec zk(kN);
      for (int i = 0; i < kN; ++i) zk(i) = schema::integer_power(ex.z(i), kCycle + k);
      const RVec g = ex.gradient_scale * (gm.col(0).array() / zk.array()).matrix();
      const RVec s = -ex.sigma[kCycle + k] * (zk.array() * gm.transpose().partialPivLu().solve(RVec::Unit(kN, 0)).array()).matrix();
      const RVec tg = ex.theta_one * orbit.g_bar(k);
      const RVec ts = ex.theta_one * normalized_step(orbit, k);
      wg = std::max(wg, dbl((g - tg).norm() / tg.norm()));
      ws = std::max(ws, dbl((s - ts).norm() / ts.norm()));
      gk = times_phi(gk, ex.rho[k]);
    }
    out.push_back(make_report("bfgs.g_period", kCycle, 2 * kCycle - 1, wg, "<", 1e-8, 0.0, {},
                              "relative |gb_{36+k} - Theta(1) gb_k|, gb_{36+k} from Gamma_{36+k}"));
    out.push_back(make_report("bfgs.s_period", kCycle, 2 * kCycle - 1, ws, "<", 1e-8, 0.0, {},
                              "relative |sb_{36+k} - Theta(1) sb_k|, sb_{36+k} from Gamma_{36+k}"));
  }
  {
    // Forward recurrence xb_{k+1} = D^-1 (xb_k + sb_k) over one period returns to xb_0.
    const RVec dinv = orbit.frame().d_diag(-1);
    RVec x = orbit.x_bar(0);
    for (long k = 0; k < kPeriod; ++k) x = (dinv.array() * (x + normalized_step(orbit, k)).array()).matrix();
    out.push_back(make_report("bfgs.x_period", 0, kPeriod, dbl((x - orbit.x_bar(0)).norm()), "<", 1e-8, 0.0, {},
                              "|xb_576 - xb_0| by forward recurrence"));
    RVec closure = RVec::Zero(kBlockA);
    for (long k = 0; k < kPeriod; ++k) closure += normalized_step(orbit, k).head(kBlockA);
    out.push_back(make_report("bfgs.closure", 0, kPeriod - 1, dbl(closure.norm()), "<", 1e-30, 0.0, {},
                              "|sum_k sb_k| on the non-contracting block"));
  }

  // Orbit identities behind the BFGS induction.
  {
    double descent = -kInf, ortho = 0.0, rho_c = 0.0, grec = 0.0;
    long kd = 0, ko = 0, jo = 0, kr = 0, kg = 0;
    for (long k = 0; k < 2 * kPeriod; ++k) {
      const RVec s = normalized_step(orbit, k);
      const RVec g = orbit.g_bar(k);
      const Real sg = s.dot(g);
      const double sgd = dbl(sg / (s.norm() * g.norm()));
      if (sgd > descent) descent = sgd, kd = k;
      RVec zj = RVec::Ones(kN);
      for (int j = 1; j <= 8; ++j) {
        zj = (zj.array() * ex.z.array()).matrix();
        const RVec gj = orbit.g_bar(k + j);
        const double e = dbl(abs(s.dot((zj.array() * gj.array()).matrix())) / (s.norm() * gj.norm()));
        if (e > ortho) ortho = e, ko = k, jo = j;
      }
      const Real& r = ex.rho[k % kCycle];
      const Real sg9 = normalized_step(orbit, k + 9).dot(orbit.g_bar(k + 9));
      const double ec = dbl(rel_error(r * r * sg, ex.u * sg9));
      if (ec > rho_c) rho_c = ec, kr = k;
      RVec z9 = RVec::Ones(kN);
      for (int j = 0; j < 9; ++j) z9 = (z9.array() * ex.z.array()).matrix();
      const RVec lhs = (z9.array() * orbit.g_bar(k + 9).array()).matrix();
      const RVec rhs = r * (RVec((ex.z.array() * orbit.g_bar(k + 1).array()).matrix()) - g);
      const double eg = dbl((lhs - rhs).norm() / rhs.norm());
      if (eg > grec) grec = eg, kg = k;
    }
    out.push_back(make_report("eq.descent", 0, 2 * kPeriod - 1, descent, "<", 0.0, 0.0, {kd},
                              "max sb_k^t gb_k / (|sb_k| |gb_k|)"));
    out.push_back(make_report("eq.sgOrtho", 0, 2 * kPeriod - 1, ortho, "<", 1e-10, 0.0, {ko, jo},
                              "max |sb_k^t Z^j gb_{k+j}| / (|sb_k| |gb_{k+j}|), j = 1..8"));
    out.push_back(make_report("eq.rhoConstraint", 0, 2 * kPeriod - 1, rho_c, "<", 1e-10, 0.0, {kr},
                              "relative |rho_k^2 sb_k^t gb_k - u sb_{k+9}^t gb_{k+9}|"));
    out.push_back(make_report("eq.gRecursion", 0, 2 * kPeriod - 1, grec, "<", 1e-10, 0.0, {kg},
                              "relative |Z^9 gb_{k+9} - rho_k (Z gb_{k+1} - gb_k)|"));
  }
  {
    // B_k: positive definite, secant form, and one textbook update step.
    const Real l4inv = 1 / schema::integer_power(ex.lambda, kExponent);
    const RVec d1 = orbit.frame().d_diag(1);
    double min_eig = kInf, secant = 0.0, update = 0.0, sym = 0.0;
    long ke = 0, ks = 0, ku = 0;
    RMat bk = build_Bk(ex, 0);
    for (long k = 0; k < 2 * kPeriod; ++k) {
      const RMat next = build_Bk(ex, k + 1);
      const RVec s = normalized_step(orbit, k);
      const RVec g = orbit.g_bar(k);
      sym = std::max(sym, max_abs(bk - bk.transpose()) / max_abs(bk));
      const double e = Eigen::SelfAdjointEigenSolver<Matrix>(bk.cast<double>()).eigenvalues()(0);
      if (e < min_eig) min_eig = e, ke = k;
      const double es = dbl((bk * s + g).norm() / g.norm());
      if (es > secant) secant = es, ks = k;
      const RVec y = (ex.z.array() * orbit.g_bar(k + 1).array()).matrix() - g;
      const Real sg = s.dot(g);
      const RMat inner = bk + (g * g.transpose() - y * y.transpose()) / sg;
      const RMat updated = l4inv * (d1.asDiagonal() * inner * d1.asDiagonal());
      const double eu = max_abs(updated - next) / max_abs(next);
      if (eu > update) update = eu, ku = k;
      bk = next;
    }
    out.push_back(make_report("bfgs.B_symmetric", 0, 2 * kPeriod - 1, sym, "<", 1e-30, 0.0, {},
                              "relative asymmetry of the normalized B_k"));
    out.push_back(make_report("bfgs.B_positive_definite", 0, 2 * kPeriod - 1, min_eig, ">", 0.0, 0.0, {ke},
                              "smallest eigenvalue of the normalized B_k"));
    out.push_back(make_report("bfgs.B_secant", 0, 2 * kPeriod - 1, secant, "<", 1e-10, 0.0, {ks},
                              "relative |B_k sb_k + gb_k| (unit steps)"));
    out.push_back(make_report("eq.bfgs_next", 0, 2 * kPeriod - 1, update, "<", 1e-8, 0.0, {ku},
                              "BFGS update of B_k against the closed form of B_{k+1}, relative max entry"));
  }

  // Geometry from the generic orbit checks, in double.
  const auto& s = ex.schema;
  append(schema::check_structure(s));
  append(schema::check_line_separation(s, tol));
  out.push_back(schema::check_hessian_sparsity(s, tol));
  append(schema::check_convexity(s, tol));
  const auto ls = schema::check_linesearch_conditions(s, tol);
  append(ls.reports);
  {
    Real lo(1e300), hi(0);
    for (int k = 0; k < kCycle; ++k) lo = std::min(lo, ex.sigma[k]), hi = std::max(hi, ex.sigma[k]);
    const double expected = dbl(lo / (2 * hi));
    out.push_back(make_report("bfgs.goldstein_c", 0, kPeriod - 1, ls.goldstein_c_max, "==", expected, 1e-10, {},
                              "largest Goldstein constant against sigma_min / (2 sigma_max)"));
  }
  append(schema::divergence_witness(s, 1).reports);
  append(schema::check_whitney_stability(s).reports);
  return out;
}

replay::ReplayTrace run_bfgs_replay(const BfgsExample& ex, long steps) {
  if (steps < 0) throw std::invalid_argument("run_bfgs_replay: negative step count");
  replay::OrbitOracle<Real> oracle(ex.orbit, "bfgs_orbit", kCycle);
  replay::DriveOptions<Real> opt;
  opt.max_steps = steps;
  opt.initial_metric = build_Bk(ex, 0);
  opt.metric_sample_period = kCycle;
  replay::Scheduled<Real> unit{[](long) { return Real(1); }};
  return replay::drive<Real>(replay::Method::Bfgs, oracle, oracle.point(0, 0), unit, opt);
}

replay::ReplayTrace run_bfgs_replay_double(const BfgsExample& ex, long steps) {
  if (steps < 0) throw std::invalid_argument("run_bfgs_replay_double: negative step count");
  replay::OrbitOracle<double> oracle(ex.schema, "bfgs_orbit_double", kCycle);
  replay::DriveOptions<double> opt;
  opt.max_steps = steps;
  opt.initial_metric = build_Bk(ex, 0).cast<double>();
  opt.record_entries = false;
  replay::Scheduled<double> unit{[](long) { return 1.0; }};
  return replay::drive<double>(replay::Method::Bfgs, oracle, oracle.point(0, 0), unit, opt);
}

BfgsReplay verify_bfgs_replay(const BfgsExample& ex, int periods) {
  if (periods < 1) throw std::invalid_argument("verify_bfgs_replay: periods must be at least 1");
  const long steps = static_cast<long>(periods) * kPeriod;
  BfgsReplay out;
  out.trace = run_bfgs_replay(ex, steps);
  out.double_trace = run_bfgs_replay_double(ex, steps);
  const auto& t = out.trace;
  auto& r = out.reports;
  r.push_back(make_report("bfgs.replay_completed", 0, steps, static_cast<double>(t.steps), "==",
                          static_cast<double>(steps), 0.0, {}, t.failure));
  r.push_back(make_report("bfgs.replay_step_residual", 0, steps - 1, t.max_step_residual, "<", 1e-6, 0.0, {},
                          "max |x_{k+1} - closed form| / |s_k|"));
  r.push_back(make_report("eq.mmtsk", 0, steps - 1, t.max_mmt_residual, "<", 1e-8, 0.0, {},
                          "max |B_k s_k + alpha_k g_k| / (alpha_k |g_k|)"));
  r.push_back(make_report("bfgs.replay_updates", 0, steps - 1, static_cast<double>(t.bfgs_skipped_updates), "==",
                          0.0, 0.0, {}, "updates skipped for s^t y <= 0"));
  {
    double floor = kInf;
    for (long k = 0; k < kPeriod; ++k) floor = std::min(floor, dbl(ex.orbit.g_bar(k).tail(kBlockC).norm()));
    r.push_back(make_report("bfgs.replay_gradient_floor", 0, steps, t.min_grad_norm, ">=", floor * (1 - 1e-10), 0.0,
                            {}, "min_k |g_k| against the lambda-free exponent-4 block of gb"));
  }
  if (t.metric.size() >= 2) {
    const auto cond = [](const replay::MetricSample& m) { return m.max_eigenvalue / m.min_eigenvalue; };
    auto rep = make_report("bfgs.metric_condition_growth", t.metric.front().k, t.metric.back().k,
                           cond(t.metric.back()), ">", cond(t.metric.front()), 0.0, {},
                           "condition number of B_k in original coordinates, last sample against first");
    rep.mandatory = false;
    r.push_back(rep);
  }
  {
    auto rep = make_report("bfgs.double_replay_steps", 0, steps, static_cast<double>(out.double_trace.steps), "==",
                           static_cast<double>(steps), 0.0, {},
                           out.double_trace.failure.empty() ? "double precision replay" : out.double_trace.failure);
    rep.mandatory = false;
    r.push_back(rep);
  }
  return out;
}

}  // namespace divergence::bfgs
