#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "divergence/exact_trig.hpp"
#include "divergence/schema_checks.hpp"

using namespace divergence::schema;

namespace {

Matrix rotation(int k_pi24) {
  const auto r = divergence::rotation_pi24<double>(k_pi24);
  Matrix m(2, 2);
  m << r[0], r[1], r[2], r[3];
  return m;
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
  int n = 0;
  for (const auto& b : blocks) n += b.rows();
  Matrix m = Matrix::Zero(n, n);
  int o = 0;
  for (const auto& b : blocks) {
    m.block(o, o, b.rows(), b.cols()) = b;
    o += b.rows();
  }
  return m;
}

Matrix ones(int n) { return Matrix::Identity(n, n); }

// Square in the plane (a = 2, quarter turns), a rotating exponent-1 block
// and a one-dimensional exponent-3 block, with constant normalized step.
OrbitSchema square_schema(double lambda = 0.7) {
  const Matrix q = block_diag({rotation(12), rotation(12), Matrix::Constant(1, 1, 1.0)});
  OrbitFrame frame({2, 2, 1}, 3, 4, lambda, q);
  Vector s(5);
  s << 1.0, 0.0, 1.0, 0.0, 1.0;
  const auto x = steps_to_iterates(std::vector<Vector>(4, s), frame);
  std::vector<double> f(4, 1.0);
  std::vector<Vector> g(4, -0.5 * s);
  Vector hd(5);
  hd << 1, 1, 1, 1, 0;
  std::vector<Matrix> h(4, Matrix(hd.asDiagonal()));
  return OrbitSchema(frame, x, f, g, h, 2.0);
}

}  // namespace

TEST_CASE("frame validation") {
  CHECK_THROWS(OrbitFrame({1, 0, 0}, 3, 1, 1.5, ones(1)));
  CHECK_THROWS(OrbitFrame({1, 0, 0}, 3, 1, 0.0, ones(1)));
  CHECK_THROWS(OrbitFrame({2, 0, 0}, 3, 3, 0.5, rotation(12)));  // quarter turn has period 4, not 3
  Matrix coupled = ones(2);
  coupled(0, 1) = 0.5;
  CHECK_THROWS(OrbitFrame({1, 1, 0}, 3, 1, 0.5, coupled));
  CHECK_NOTHROW(OrbitFrame({2, 0, 0}, 3, 4, 0.5, rotation(12)));
}

TEST_CASE("materialize at k = 0 and k = p") {
  const OrbitSchema s = square_schema();
  const auto p0 = materialize(s, 0);
  CHECK((p0.x - s.x_bar(0)).norm() == 0.0);
  CHECK(p0.f == doctest::Approx(s.f_bar(0) + s.f_shift()));
  CHECK((p0.g - s.g_bar(0)).norm() == 0.0);
  CHECK((p0.h - s.h_bar(0)).norm() == 0.0);
  const auto pp = materialize(s, 4);
  const Vector expect = s.frame().d_diag(4).asDiagonal() * s.x_bar(0);
  CHECK((pp.x - expect).norm() < 1e-14);
  CHECK_THROWS_AS(materialize(s, 100000), HorizonError);
}

TEST_CASE("periodicity scales blocks by powers of lambda") {
  const OrbitSchema s = square_schema(0.6);
  const double l = 0.6;
  for (long k = 0; k < 8; ++k) {
    const auto a = materialize(s, k);
    const auto b = materialize(s, k + 4);
    CHECK((b.x.head(2) - a.x.head(2)).norm() < 1e-12);
    CHECK((b.x.segment(2, 2) - std::pow(l, 4) * a.x.segment(2, 2)).norm() < 1e-12);
    CHECK(std::abs(b.x(4) - std::pow(l, 12) * a.x(4)) < 1e-12);
  }
}

TEST_CASE("normalized steps") {
  // Only the non-contracting block: D = I, so constant iterates never move.
  OrbitFrame frame({3, 0, 0}, 3, 1, 0.5, ones(3));
  const Vector x = Vector::Constant(3, 2.5);
  OrbitSchema s(frame, {x}, {1.0}, {Vector::Zero(3)}, {Matrix::Zero(3, 3)});
  CHECK(normalized_step(s, 0).norm() == 0.0);

  const OrbitSchema sq = square_schema();
  for (long k = 0; k < 4; ++k) {
    Vector expect(5);
    expect << 1, 0, 1, 0, 1;
    CHECK((normalized_step(sq, k) - expect).norm() < 1e-14);
  }
}

TEST_CASE("materialized consistency over three periods") {
  const OrbitSchema s = square_schema();
  for (long k = 0; k < 12; ++k) {
    const Vector ds = materialize(s, k + 1).x - materialize(s, k).x;
    CHECK((ds - materialized_step(s, k)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("steps to iterates") {
  OrbitFrame frame({2, 1, 1}, 3, 6, 0.8, block_diag({rotation(8), ones(1), ones(1)}));
  SUBCASE("zero steps give zero iterates") {
    const auto x = steps_to_iterates(std::vector<Vector>(6, Vector::Zero(4)), frame);
    for (const auto& v : x) CHECK(v.norm() == 0.0);
  }
  SUBCASE("closure violation is reported with its residual") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<Vector> steps(6, Vector(4));
    for (auto& s : steps)
      for (int i = 0; i < 4; ++i) s(i) = nd(rng);
    try {
      steps_to_iterates(steps, frame);
      FAIL("expected closure error");
    } catch (const ClosureError& e) {
      CHECK(e.residual() > 1e-3);
    }
  }
  SUBCASE("round trip through normalized steps") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    std::vector<Vector> x(6, Vector(4));
    for (auto& v : x)
      for (int i = 0; i < 4; ++i) v(i) = nd(rng);
    OrbitSchema s(frame, x, std::vector<double>(6, 1.0), std::vector<Vector>(6, Vector::Zero(4)),
                  std::vector<Matrix>(6, Matrix::Zero(4, 4)));
    std::vector<Vector> steps;
    for (long k = 0; k < 6; ++k) steps.push_back(normalized_step(s, k));
    const auto back = steps_to_iterates(steps, frame);
    // Equal up to a translation of the true non-contracting coordinates.
    const Vector shift = x[0].head(2) - back[0].head(2);
    for (long k = 0; k < 6; ++k) {
      const Matrix qa = frame.q_power(k).topLeftCorner(2, 2);
      CHECK((qa * (x[k].head(2) - back[k].head(2)) - shift).norm() < 1e-10);
      CHECK((x[k].tail(2) - back[k].tail(2)).norm() < 1e-10);
    }
  }
}

TEST_CASE("limit lines") {
  const OrbitSchema s = square_schema();
  const LimitLine l0 = limit_line(s, 0);
  Vector dir(5);
  dir << 1, 0, 0, 0, 0;
  CHECK((l0.direction - dir).norm() < 1e-14);
  CHECK(l0.point.tail(3).norm() == 0.0);

  OrbitFrame frame({2, 0, 1}, 3, 1, 0.5, ones(3));
  Vector x(3);
  x << 1, 2, 0;
  OrbitSchema still(frame, {x}, {1.0}, {Vector::Zero(3)}, {Matrix::Zero(3, 3)});
  CHECK_THROWS_AS(limit_line(still, 0), std::domain_error);
}

TEST_CASE("line separation") {
  SUBCASE("square orbit: opposite sides are parallel and disjoint") {
    const auto rep = check_line_separation(square_schema());
    for (const auto& r : rep) CHECK_MESSAGE(r.passed(), r.check_id);
    CHECK(separation_residual(square_schema(), 0, 2) == doctest::Approx(1.0));
    CHECK(separation_residual(square_schema(), 0, 1) < 1e-14);
  }
  SUBCASE("duplicated iterates fail the distinct-direction test") {
    OrbitFrame frame({2, 1, 0}, 3, 4, 0.5, block_diag({rotation(12), ones(1)}));
    OrbitSchema s(frame, std::vector<Vector>(4, Vector::Zero(3)), std::vector<double>(4, 1.0),
                  std::vector<Vector>(4, Vector::Zero(3)), std::vector<Matrix>(4, Matrix::Zero(3, 3)));
    const auto rep = check_line_separation(s);
    CHECK_FALSE(rep[0].passed());
  }
}

TEST_CASE("hessian sparsity") {
  CHECK(check_hessian_sparsity(square_schema()).passed());

  OrbitFrame frame({1, 1, 1}, 3, 1, 0.5, ones(3));
  OrbitSchema zero(frame, {Vector::Zero(3)}, {1.0}, {Vector::Zero(3)}, {Matrix::Zero(3, 3)});
  CHECK(check_hessian_sparsity(zero).passed());

  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Matrix h(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) h(i, j) = nd(rng);
  h = (h + h.transpose()).eval();
  OrbitSchema dense(frame, {Vector::Zero(3)}, {1.0}, {Vector::Zero(3)}, {h});
  CHECK_FALSE(check_hessian_sparsity(dense).passed());
}

TEST_CASE("convexity and line-search reductions") {
  const OrbitSchema good = square_schema();
  for (const auto& r : check_convexity(good)) CHECK_MESSAGE(r.passed(), r.check_id);

  // Same data with the gradient reversed: every step is an ascent step.
  const auto& f = good.frame();
  std::vector<Vector> x, g;
  std::vector<double> fb;
  std::vector<Matrix> h;
  for (long k = 0; k < 4; ++k) {
    x.push_back(good.x_bar(k));
    g.push_back(-good.g_bar(k));
    fb.push_back(good.f_bar(k));
    h.push_back(good.h_bar(k));
  }
  OrbitSchema ascent(f, x, fb, g, h);
  CHECK_FALSE(check_convexity(ascent)[0].passed());

  const auto ls = check_linesearch_conditions(good);
  CHECK(ls.sigma0 > 0.0);
  CHECK(ls.reports[1].passed());

  // Raising fb_{k+1} until lam^dn fb_{k+1} > fb_k breaks first Wolfe.
  std::vector<double> raised(4, 1.0);
  raised[1] = 10.0;
  std::vector<Vector> g_orig;
  for (long k = 0; k < 4; ++k) g_orig.push_back(good.g_bar(k));
  OrbitSchema bad_wolfe(f, x, raised, g_orig, h);
  const auto ls_bad = check_linesearch_conditions(bad_wolfe);
  CHECK(ls_bad.sigma0 < 0.0);
  CHECK_FALSE(ls_bad.reports[1].passed());
}

TEST_CASE("line-search pass implies verbatim first Wolfe on the materialized orbit") {
  const OrbitSchema s = square_schema();
  const auto ls = check_linesearch_conditions(s);
  REQUIRE(ls.sigma0 > 0.0);
  const double sigma = ls.sigma0 / 2;
  for (long k = 0; k < 12; ++k) {
    const auto a = materialize(s, k);
    const auto b = materialize(s, k + 1);
    CHECK(b.f <= a.f + sigma * a.g.dot(b.x - a.x));
  }
}

TEST_CASE("whitney ratios") {
  SUBCASE("linear function on a rotating orbit is Taylor-exact") {
    // Exponent-dn block only; f(x) = v^t x + 3 sampled on x_k = lam^(2k) Q^k xb.
    OrbitFrame frame({0, 0, 2}, 2, 4, 0.9, rotation(12));
    Vector v(2), xb(2);
    v << 0.3, -1.1;
    xb << 1.0, 0.5;
    std::vector<Vector> x(4, xb), g;
    std::vector<double> fb;
    for (long k = 0; k < 4; ++k) {
      const Vector gk = frame.q_power(k).transpose() * v;
      g.push_back(gk);
      fb.push_back(gk.dot(xb));
    }
    OrbitSchema s(frame, x, fb, g, std::vector<Matrix>(4, Matrix::Zero(2, 2)), 3.0);
    const auto w = whitney_ratios(s, 0, 10);
    CHECK(w.m_h < 1e-12);
    CHECK(w.m_g < 1e-12);
    CHECK(w.m_f < 1e-9);
    CHECK(w.pair_count == 11 * 10);
  }
  SUBCASE("coincident points are excluded") {
    OrbitFrame frame({2, 0, 0}, 3, 2, 0.5, ones(2));
    Vector x(2);
    x << 1, 1;
    OrbitSchema s(frame, {x, x}, {1.0, 1.0}, {Vector::Zero(2), Vector::Zero(2)},
                  {Matrix::Zero(2, 2), Matrix::Zero(2, 2)});
    CHECK(whitney_ratios(s, 0, 1).pair_count == 0);
  }
  SUBCASE("square orbit ratios are finite") {
    const auto w = whitney_ratios(square_schema(), 0, 11);
    CHECK(std::isfinite(w.m_h));
    CHECK(std::isfinite(w.m_g));
    CHECK(std::isfinite(w.m_f));
  }
}

TEST_CASE("divergence witness") {
  const auto w = divergence_witness(square_schema(), 3);
  for (const auto& r : w.reports) CHECK_MESSAGE(r.passed(), r.check_id);
  CHECK(w.gradient_lower_bound == doctest::Approx(0.5));
  CHECK(w.vertices.size() == 4);

  // Every block contracts and the exponent-dn gradient block vanishes.
  OrbitFrame frame({0, 1, 1}, 3, 1, 0.5, ones(2));
  Vector s(2), g(2);
  s << 1.0, 1.0;
  g << -1.0, 0.0;
  const auto x = steps_to_iterates({s}, frame);
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 1.0;
  OrbitSchema convergent(frame, x, {1.0}, {g}, {h});
  const auto wc = divergence_witness(convergent, 3);
  CHECK_FALSE(all_passed(wc.reports));
  CHECK_FALSE(wc.reports[0].passed());
}
