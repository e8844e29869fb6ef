#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "divergence/exact_trig.hpp"
#include "divergence/theorem1.hpp"

using namespace divergence::replay;
using divergence::Jet;
using divergence::schema::CheckStatus;
using Vector = Vec<double>;
using Matrix = Mat<double>;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  int i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

// f = x^t A x / 2 - b^t x
class Quadratic : public Objective<double> {
 public:
  Quadratic(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}
  std::string name() const override { return "quadratic"; }
  int dimension() const override { return a_.rows(); }
  double value(const Vector& x, long) const override { return 0.5 * x.dot(a_ * x) - b_.dot(x); }
  Vector gradient(const Vector& x, long) const override { return a_ * x - b_; }
  std::optional<Matrix> hessian(const Vector&, long) const override { return a_; }

 private:
  Matrix a_;
  Vector b_;
};

// Double well in x0: the Hessian is indefinite near x0 = 0.
class DoubleWell : public Objective<double> {
 public:
  std::string name() const override { return "double_well"; }
  int dimension() const override { return 2; }
  double value(const Vector& x, long) const override {
    return std::pow(x(0), 4) / 4 - x(0) * x(0) / 2 + x(1) * x(1) / 2;
  }
  Vector gradient(const Vector& x, long) const override { return vec({std::pow(x(0), 3) - x(0), x(1)}); }
  std::optional<Matrix> hessian(const Vector& x, long) const override {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 3 * x(0) * x(0) - 1;
    h(1, 1) = 1;
    return h;
  }
};

divergence::schema::OrbitSchema small_orbit(double lambda) {
  using namespace divergence::schema;
  const auto r = divergence::rotation_pi24<double>(12);
  Matrix q = Matrix::Zero(5, 5);
  q.block(0, 0, 2, 2) << r[0], r[1], r[2], r[3];
  q.block(2, 2, 2, 2) << r[0], r[1], r[2], r[3];
  q(4, 4) = 1;
  OrbitFrame frame({2, 2, 1}, 3, 4, lambda, q);
  Vector s = vec({1, 0, 1, 0, 1});
  const auto x = steps_to_iterates(std::vector<Vector>(4, s), frame);
  Vector hd = vec({1, 1, 1, 1, 0});
  return OrbitSchema(frame, x, std::vector<double>(4, 1.0), std::vector<Vector>(4, -0.5 * s),
                     std::vector<Matrix>(4, Matrix(hd.asDiagonal())), 2.0);
}

}  // namespace

TEST_CASE("steepest descent with exact search solves the unit quadratic in one step") {
  Quadratic q(Matrix::Identity(3, 3), Vector::Zero(3));
  DriveOptions<double> opt;
  opt.max_steps = 5;
  opt.gradient_tol = 1e-12;
  const auto t = drive<double>(Method::SteepestDescent, q, vec({1, -2, 3}), ExactSearch{}, opt);
  CHECK(t.failure.empty());
  CHECK(t.converged);
  CHECK(t.steps == 1);
  CHECK(t.entries.back().grad_norm < 1e-14);
}

TEST_CASE("BFGS with exact search terminates on a 2D quadratic in two steps") {
  Matrix a(2, 2);
  a << 4, 1, 1, 2;
  Quadratic q(a, vec({1, -1}));
  DriveOptions<double> opt;
  opt.max_steps = 2;
  const auto t = drive<double>(Method::Bfgs, q, vec({3, 5}), ExactSearch{}, opt);
  REQUIRE(t.failure.empty());
  REQUIRE(t.entries.size() == 3);
  CHECK(t.entries[2].grad_norm < 1e-10);
  CHECK(t.max_mmt_residual < 1e-10);
}

TEST_CASE("Newton falls back to steepest descent on an indefinite Hessian") {
  DoubleWell w;
  DriveOptions<double> opt;
  opt.max_steps = 200;
  opt.gradient_tol = 1e-10;
  const auto t = drive<double>(Method::Newton, w, vec({0.1, 1.0}), Backtracking{}, opt);
  CHECK(t.failure.empty());
  CHECK(t.converged);
  CHECK(t.newton_fallbacks >= 1);
  CHECK(std::abs(std::abs(t.entries.back().x[0]) - 1.0) < 1e-8);
}

TEST_CASE("Gauss-Newton needs a least-squares objective") {
  Quadratic q(Matrix::Identity(2, 2), Vector::Zero(2));
  const auto t = drive<double>(Method::GaussNewton, q, vec({1, 1}), Backtracking{}, {});
  CHECK_FALSE(t.failure.empty());
}

TEST_CASE("suite gradients agree with finite differences") {
  for (const auto& p : benign_suite()) {
    const auto& f = *p.objective;
    Vector x = p.start + 0.1 * Vector::Ones(p.start.size());
    const Vector g = f.gradient(x, 0);
    for (int i = 0; i < x.size(); ++i) {
      Vector xp = x, xm = x;
      xp(i) += 1e-6;
      xm(i) -= 1e-6;
      const double fd = (f.value(xp, 0) - f.value(xm, 0)) / 2e-6;
      INFO(p.name, " component ", i);
      CHECK(std::abs(fd - g(i)) <= 1e-5 * std::max(1.0, std::abs(g(i))));
    }
  }
}

TEST_CASE("benign suite: every method converges with per-step identities") {
  const auto suite = benign_suite();
  REQUIRE(suite.size() == 10);
  const auto res = theorem1_check(suite, all_methods());
  CHECK(res.runs.size() == 40);
  for (const auto& run : res.runs) {
    INFO(run.problem, " ", method_name(run.method), " ", run.trace.failure);
    CHECK(run.trace.converged);
    CHECK(run.trace.steps <= 10000);
    CHECK(run.hypotheses_hold);
  }
  for (const auto& r : res.reports) {
    INFO(r.check_id, " ", r.note, " lhs=", r.lhs);
    CHECK(r.passed());
  }
}

TEST_CASE("violated hypotheses are reported as expected failures") {
  const auto res = theorem1_hypothesis_demos();
  REQUIRE(res.runs.size() == 2);
  CHECK(res.runs[0].violated == "metric_bounded");
  CHECK(res.runs[1].violated == "alpha_floor");
  for (const auto& run : res.runs) {
    CHECK_FALSE(run.trace.converged);
    // Steps shrink like 1/(k+2)^2, so the iterates stall at half the start.
    CHECK(run.trace.final_grad_norm == doctest::Approx(2.5).epsilon(1e-3));
  }
  int expected = 0;
  for (const auto& r : res.reports)
    if (r.check_id == "thm1.gradient_to_zero") {
      CHECK(r.status == CheckStatus::ExpectedFail);
      ++expected;
    }
  CHECK(expected == 2);
  CHECK(divergence::schema::all_passed(res.reports));
}

TEST_CASE("empty suite is rejected") {
  CHECK_THROWS_AS(theorem1_check({}, all_methods()), std::invalid_argument);
  CHECK_THROWS_AS(theorem1_check(benign_suite(), {}), std::invalid_argument);
}

TEST_CASE("probe: exact step satisfies second Wolfe for any beta < 1") {
  Matrix a(2, 2);
  a << 3, 1, 1, 2;
  Quadratic q(a, vec({0, 0}));
  const Vector x = vec({1, 1});
  const Vector d = -q.gradient(x, 0);
  const double alpha = d.dot(d) / d.dot(a * d);
  for (double beta : {0.1, 0.5, 0.9, 0.999}) {
    const auto r = wolfe_goldstein_probe<double>(q, x, d, alpha, 1e-4, 0.25, beta);
    CHECK(r.second_wolfe_margin > 0);
    CHECK(r.reports.size() == 4);
  }
  // The exact step halves the quadratic decrease: Goldstein holds for c up to 1/2.
  CHECK(divergence::schema::all_passed(wolfe_goldstein_probe<double>(q, x, d, alpha, 0.5, 0.5, 0.5).reports));
  CHECK_THROWS_AS(wolfe_goldstein_probe<double>(q, x, Vector(-d), alpha, 1e-4, 0.25, 0.5), std::invalid_argument);
}

TEST_CASE("orbit oracle evaluates on the orbit and refuses other points") {
  const double lambda = 0.7;
  const auto orbit = small_orbit(lambda);
  OrbitOracle<double> plain(orbit, "small");
  for (long k : {0L, 3L, 9L}) {
    const auto pt = divergence::schema::materialize(orbit, k);
    const Vector x = plain.point(k, k);
    CHECK((x - pt.x).norm() < 1e-14);
    CHECK(plain.value(x, k) == doctest::Approx(pt.f).epsilon(1e-14));
    CHECK((plain.gradient(x, k) - pt.g).norm() < 1e-14);
    CHECK((*plain.hessian(x, k) - pt.h).norm() < 1e-13);
    CHECK((*plain.expected_next(k) - divergence::schema::materialize(orbit, k + 1).x).norm() < 1e-14);
  }
  // A neighbouring index is found from a stale hint.
  CHECK(plain.value(plain.point(4, 4), 3) == doctest::Approx(divergence::schema::materialize(orbit, 4).f));
  CHECK_THROWS_AS(plain.value(plain.point(2, 2) + 1e-3 * Vector::Ones(5), 2), OffOrbitError);
  CHECK_FALSE(plain.frame_change_after(3));

  // Rescaled frames: in the frame starting at K, x = D^K y and F = lam^(-K dn) f.
  OrbitOracle<double> framed(orbit, "small", 4);
  REQUIRE(framed.frame_change_after(3));
  CHECK_FALSE(framed.frame_change_after(4));
  const long k = 6, K = 4;
  const auto pt = divergence::schema::materialize(orbit, k);
  const Vector dk = orbit.frame().d_diag(K);
  const double c = std::pow(lambda, -3.0 * K);
  const Vector y = framed.point(k, k);
  CHECK((y.cwiseProduct(dk) - pt.x).norm() < 1e-14);
  CHECK(framed.value(y, k) == doctest::Approx(c * pt.f).epsilon(1e-14));
  CHECK((framed.gradient(y, k) - c * pt.g.cwiseProduct(dk)).norm() < 1e-12);
}

TEST_CASE("trace CSV has the documented columns") {
  Quadratic q(Matrix::Identity(2, 2), Vector::Zero(2));
  DriveOptions<double> opt;
  opt.max_steps = 1;
  const auto t = drive<double>(Method::SteepestDescent, q, vec({1, 0.5}), Backtracking{}, opt);
  std::ostringstream os;
  write_trace_csv(os, t, 2);
  CHECK(os.str() == "k,x0,x1,f,grad_norm,alpha,step_residual\n"
                    "0,1,0.5,0.625,1.118033988749895,nan,nan\n"
                    "1,0,0,0,0,1,nan\n");
  ReplayTrace empty;
  std::ostringstream os2;
  write_trace_csv(os2, empty, 1);
  CHECK(os2.str() == "k,x0,f,grad_norm,alpha,step_residual\n");
}

TEST_CASE("method names round-trip") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS(parse_method("trust_region"));
}
