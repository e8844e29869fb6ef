#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "divergence/bfgs_example.hpp"
#include "divergence/real_interval.hpp"

using namespace divergence;
using namespace divergence::bfgs;
using schema::Matrix;

namespace {

const SolveResult& solved() {
  static const SolveResult r = solve_rho({});
  return r;
}

const BfgsExample& example() {
  static const BfgsExample ex = build_bfgs(solved().solutions.front());
  return ex;
}

Matrix to_eigen(const Square9<double>& m) {
  Matrix r(kN, kN);
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j) r(i, j) = m(i, j);
  return r;
}

bool passes(const schema::ReportBundle& b, const std::string& id) {
  for (const auto& r : b)
    if (r.check_id == id) return r.passed();
  FAIL("missing report " << id);
  return false;
}

}  // namespace

TEST_CASE("phi factors") {
  const Matrix p1 = to_eigen(phi_matrix(1.0));
  CHECK(p1.col(0) == Eigen::VectorXd::Unit(kN, 1));
  for (int i = 0; i + 1 < kN; ++i) CHECK(p1.col(i) == Eigen::VectorXd::Unit(kN, i + 1));
  CHECK(to_eigen(phi_matrix(2.0)).determinant() == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(to_eigen(phi_matrix(0.0)).determinant() == 0.0);

  // Sparse right multiplication agrees with the dense product.
  Square9<double> x;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (auto& e : x.a) e = dist(rng);
  CHECK((to_eigen(times_phi(x, 0.3)) - to_eigen(x * phi_matrix(0.3))).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("psi product and determinant") {
  std::array<double, kCycle> zero{};
  CHECK(to_eigen(psi_product(zero)).fullPivLu().rank() < kN);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.8, 1.2);
  std::array<double, kCycle> rho;
  double prod = 1;
  for (auto& r : rho) r = (dist(rng) > 1.0 ? 1 : -1) * dist(rng), prod *= r;
  CHECK(to_eigen(psi_product(rho)).determinant() == doctest::Approx(prod).epsilon(1e-10));
}

TEST_CASE("characteristic polynomial") {
  // Faddeev-LeVerrier against the eigenvalues of a random matrix.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  Square9<double> a;
  for (auto& e : a.a) e = dist(rng);
  const auto c = charpoly(a);
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(to_eigen(a)).eigenvalues();
  for (int i = 0; i < kN; ++i) {
    std::complex<double> p = 1.0;
    for (int k = 1; k <= kN; ++k) p = p * ev(i) + c[k];
    CHECK(std::abs(p) < 1e-10);
  }

  const auto k = constants<double>();
  const double u = std::sqrt(k.u2);
  const auto t = target_charpoly(k);
  CHECK(t[kN] == doctest::Approx(std::pow(u, 18)).epsilon(1e-14));
  const auto spectrum = target_spectrum(u);
  REQUIRE(spectrum.size() == 9);
  std::complex<double> prod = 1.0;
  for (const auto& z : spectrum) {
    prod *= z;
    bool has_conjugate = false;
    for (const auto& w : spectrum) has_conjugate = has_conjugate || std::abs(w - std::conj(z)) < 1e-15;
    CHECK(has_conjugate);
  }
  CHECK(std::abs(prod + std::pow(u, 18)) < 1e-15);
  for (const auto& z : spectrum) {
    std::complex<double> p = 1.0;
    for (int i = 1; i <= kN; ++i) p = p * z + t[i];
    CHECK(std::abs(p) < 1e-14);
  }
}

TEST_CASE("rho expansion keeps the four-fold products") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> free(kFree);
  for (auto& f : free) f = dist(rng);
  const double u2 = constants<double>().u2;
  const auto rho = expand_rho(free, u2);
  for (int k = 10; k < 18; ++k) CHECK(rho[k] == free[9]);
  for (int k = 19; k < 27; ++k) CHECK(rho[k] == free[10]);
  for (int k = 27; k < 36; ++k) CHECK((rho[k] > 0) == (k <= 30));
  for (int k = 0; k < 9; ++k) {
    double p = 1;
    for (int i = 0; i < 4; ++i) p *= rho[9 * i + k] * rho[9 * i + k];
    CHECK(p == doctest::Approx(u2 * u2).epsilon(1e-14));
  }
  CHECK_THROWS_AS(expand_rho(std::vector<double>(10, 1.0), u2), std::invalid_argument);
}

TEST_CASE("lambda and theta") {
  const Real lambda = bfgs_lambda();
  const Real s = sqrt(Real(2) + sqrt(Real(2)));
  CHECK(static_cast<double>(abs(schema::integer_power(lambda, 72) * (1 + s) - 1)) < 1e-100);
  const RMat t = theta_one();
  RMat sum = RMat::Zero(kN, kN), p = RMat::Identity(kN, kN);
  for (int m = 0; m < kRepeats; ++m) sum += p, p = p * t;
  CHECK(static_cast<double>(sum.cwiseAbs().maxCoeff()) < 1e-100);
  CHECK(static_cast<double>((p - RMat::Identity(kN, kN)).cwiseAbs().maxCoeff()) < 1e-100);
}

TEST_CASE("extended-precision intervals enclose exact results") {
  using interval::RealInterval;
  const RealInterval third = RealInterval(1) / RealInterval(3);
  CHECK((third * RealInterval(3)).contains(Real(1)));
  const RealInterval r2 = sqrt(RealInterval(2));
  CHECK((r2 * r2).contains(Real(2)));
  CHECK(r2.hi() - r2.lo() < Real("1e-115"));
  const auto d = third.to_interval();
  CHECK(d.lo() <= 1.0 / 3.0);
  CHECK(d.hi() >= 1.0 / 3.0);
  CHECK(d.lo() < d.hi());
  CHECK_THROWS(RealInterval(1) / RealInterval(Real(-1), Real(1)));
}

TEST_CASE("solve and certify") {
  const auto& r = solved();
  CHECK(r.starts == 232);
  REQUIRE_FALSE(r.solutions.empty());
  for (std::size_t i = 1; i < r.candidates.size(); ++i) CHECK(r.candidates[i - 1].spread <= r.candidates[i].spread);
  for (const auto& s : r.solutions) {
    CHECK(s.residual_double < 1e-12);
    CHECK(s.residual_real < 1e-90);
    CHECK(s.identities_hold);
    CHECK(s.certificate.certified);
    CHECK(s.certificate.solution_radius < 1e-6);
    CHECK(s.certificate.a_bound < 1.0);
  }

  // A root found from a perturbed start lies inside the certified ball.
  const auto& best = r.solutions.front();
  std::vector<double> start;
  for (const auto& v : best.free) start.push_back(static_cast<double>(v) + 1e-7);
  const auto again = refine_and_certify(start, false, 1e-8);
  CHECK(again.residual_double < 1e-12);

  SolveOptions none;
  none.seeds = 0;
  none.sign_patterns = 0;
  CHECK_THROWS_AS(solve_rho(none), std::invalid_argument);
  SolveOptions hopeless;
  hopeless.seeds = 2;
  hopeless.sign_patterns = 0;
  hopeless.max_iterations = 1;
  CHECK_THROWS_AS(solve_rho(hopeless), std::runtime_error);
}

TEST_CASE("same seed, same solution") {
  SolveOptions o;
  o.seeds = 12;
  o.sign_patterns = 4;
  o.max_refined = 1;
  o.certify = false;
  const auto a = solve_rho(o);
  o.threads = 1;
  const auto b = solve_rho(o);
  REQUIRE(a.solutions.size() == 1);
  REQUIRE(b.solutions.size() == 1);
  for (int i = 0; i < kFree; ++i) CHECK(a.solutions[0].free[i] == b.solutions[0].free[i]);
}

TEST_CASE("orbit conditions") {
  const auto& ex = example();
  const auto reports = verify_bfgs_conditions(ex);
  for (const auto& r : reports)
    if (r.mandatory) CHECK_MESSAGE(r.passed(), r.check_id << ": " << r.lhs << " " << r.relation << " " << r.rhs);
  CHECK(passes(reports, "eq.reduced"));
  CHECK(passes(reports, "eq.bfgs_next"));

  for (long k = 0; k < kPeriod; k += 25) CHECK(ex.orbit.f_bar(k) == Real(1));
  CHECK(ex.orbit.h_bar(3)(4, 4) == Real(1));
  CHECK(ex.orbit.h_bar(3)(5, 5) == Real(0));

  // Normalized B_0 is positive definite and maps sb_0 to -gb_0.
  const RMat b0 = build_Bk(ex, 0);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(b0.cast<double>()).eigenvalues()(0) > 0);
  const RVec r0 = b0 * normalized_step(ex.orbit, 0) + ex.orbit.g_bar(0);
  CHECK(static_cast<double>(r0.norm()) < 1e-90);
}

TEST_CASE("replay") {
  const auto rp = verify_bfgs_replay(example(), 2);
  for (const auto& r : rp.reports)
    if (r.mandatory) CHECK_MESSAGE(r.passed(), r.check_id << ": " << r.lhs << " " << r.note);
  CHECK(rp.trace.steps == 1152);
  CHECK(rp.trace.metric.size() == 32);
  // f decreases toward its positive limit; in double the later decrements round away.
  for (std::size_t i = 1; i < rp.trace.entries.size(); ++i) REQUIRE(rp.trace.entries[i].f <= rp.trace.entries[i - 1].f);
  CHECK(rp.trace.entries.back().f > 0.0);
  // The metric degenerates: its smallest eigenvalue goes to zero, its largest to infinity.
  CHECK(rp.trace.metric.back().min_eigenvalue < 1e-20 * rp.trace.metric.front().min_eigenvalue);
  CHECK(rp.trace.metric.back().max_eigenvalue > 1e20 * rp.trace.metric.front().max_eigenvalue);
  CHECK(rp.double_trace.steps <= rp.trace.steps);
  CHECK_THROWS_AS(verify_bfgs_replay(example(), 0), std::invalid_argument);
}

TEST_CASE("tampered rho fails the spectral checks") {
  RhoSolution bad = solved().solutions.front();
  bad.free[3] += Real("1e-3");
  const auto assessed = assess_solution(bad.free, bad.system, true, 1e-8);
  CHECK_FALSE(assessed.certificate.certified);
  CHECK(assessed.residual_double > 1e-6);
  const auto ex = build_bfgs(assessed);
  const auto reports = verify_bfgs_conditions(ex);
  CHECK_FALSE(passes(reports, "bfgs.spectrum"));
  CHECK_FALSE(passes(reports, "eq.reduced"));
  CHECK_FALSE(passes(reports, "bfgs.charpoly_residual"));
}
