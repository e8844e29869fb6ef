// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "divergence/bfgs_example.hpp"
#include "divergence/commands.hpp"
#include "divergence/gn_example.hpp"
#include "divergence/theorem1.hpp"
#include "poly_systems.hpp"

using namespace divergence;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Criterion {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [" << what << "]";
    }
  }
};

// Finds a report by id; a missing id counts as failing with lhs = inf.
const schema::ConditionReport& find(const schema::ReportBundle& b, const std::string& id) {
  static const schema::ConditionReport missing = schema::make_report("missing", 0, 0, kInf, "<", 0.0, 0.0);
  for (const auto& r : b)
    if (r.check_id == id) return r;
  return missing;
}

double to_d(const Real& v) { return static_cast<double>(v); }

const gn::GnExample& gn_example() {
  static const gn::GnExample ex = gn::build_gn({});
  return ex;
}

struct BfgsState {
  bfgs::SolveResult solve;
  std::optional<bfgs::BfgsExample> example;
  std::string error;
};

BfgsState& bfgs_state() {
  static BfgsState st = [] {
    BfgsState s;
    try {
      s.solve = bfgs::solve_rho({});
      for (const auto& sol : s.solve.solutions)
        if (sol.certificate.certified) {
          s.example.emplace(bfgs::build_bfgs(sol));
          break;
        }
      if (!s.example) s.error = "no certified solution";
    } catch (const std::exception& e) {
      s.error = e.what();
    }
    return s;
  }();
  return st;
}

void criterion1(Criterion& c) {
  const auto& ex = gn_example();
  const auto& s = ex.schema;
  const double l3 = std::pow(ex.lambda, 3.0);
  double exact = 0.0, wolfe = -kInf, gold = -kInf;
  for (long k = 0; k < gn::kPeriod; ++k) {
    const auto p1 = schema::materialize(s, k + 1);
    exact = std::max(exact, std::abs(schema::materialized_step(s, k).dot(p1.g)));
    // Both line-search constants are attained with equality, so compare in
    // normalized coordinates where no constant offset cancels.
    const double sg = schema::normalized_step(s, k).dot(s.g_bar(k));
    const double df = l3 * s.f_bar(k + 1) - s.f_bar(k);
    const double slack = 1e-12 * std::abs(sg);
    wolfe = std::max(wolfe, df - (1.0 - l3) * sg - slack);
    gold = std::max({gold, (1.0 - l3) * sg - df - slack, df - l3 * sg - slack});
  }
  const auto p0 = schema::materialize(s, 0);
  const double s0g0 = schema::materialized_step(s, 0).dot(p0.g);
  c.require(exact < 1e-13, "exact line search");
  c.require(std::abs(s0g0 + 3.5) <= 1e-12, "s0^t g0");
  c.require(wolfe <= 0.0, "first Wolfe at 1 - lam^3");
  c.require(gold <= 0.0, "Goldstein at lam^3");

  const long steps = 5L * gn::kPeriod;
  const auto t = gn::run_gn_replay(ex, steps);
  c.require(t.steps == steps && t.failure.empty(), "replay completed");
  c.require(t.max_step_residual < 1e-10, "replay step residual");
  bool decreasing = true;
  // Entry k records the step that reached x_k.
  for (std::size_t i = 2; i < t.entries.size(); ++i) decreasing = decreasing && t.entries[i].alpha < t.entries[i - 1].alpha;
  c.require(decreasing, "alpha decreasing");
  c.require(t.min_grad_norm >= 0.5 - 1e-12, "gradient floor");
  c.detail << "|s^t g+|=" << exact << " s0^t g0=" << s0g0 << " replay=" << t.max_step_residual
           << " min|g|=" << t.min_grad_norm << " alpha_last=" << t.entries.back().alpha;
}

void criterion2(Criterion& c) {
  const auto& s = gn_example().schema;
  schema::Matrix sum = schema::Matrix::Zero(4, 4);
  for (long j = 0; j < gn::kPeriod; ++j) sum += s.frame().q_power(j).topLeftCorner(4, 4);
  const double qsum = sum.cwiseAbs().maxCoeff();
  double meet = 0.0, apart = kInf;
  for (long k = 0; k < gn::kPeriod; ++k)
    for (long m = 1; m < gn::kPeriod; ++m) {
      const double r = schema::separation_residual(s, k, m);
      if (m == 1 || m == gn::kPeriod - 1)
        meet = std::max(meet, r);
      else
        apart = std::min(apart, r);
    }
  c.require(qsum < 1e-12, "sum of Q_a powers");
  c.require(meet < 1e-10, "adjacent lines meet");
  c.require(apart > 1e-6, "other lines separated");
  c.detail << "|sum Q_a^j|=" << qsum << " adjacent=" << meet << " others>=" << apart;
}

void criterion3(Criterion& c) {
  auto& st = bfgs_state();
  if (!st.example) {
    c.require(false, st.error);
    return;
  }
  const auto& ex = *st.example;
  const auto& sol = ex.solution;
  c.require(sol.residual_double < 1e-12, "charpoly residual");
  c.require(sol.certificate.certified, "certified");
  c.require(sol.certificate.solution_radius < 1e-6, "solution radius");
  Real prod(1);
  for (const auto& r : ex.rho) prod *= r;
  const Real target = -pow(ex.u, 18);
  const double prod_rel = to_d(abs(prod - target) / abs(target));
  double square_rel = 0.0;
  const Real u4 = pow(ex.u, 4);
  for (int k = 0; k < 9; ++k) {
    Real q(1);
    for (int i = 0; i < 4; ++i) q *= ex.rho[9 * i + k] * ex.rho[9 * i + k];
    square_rel = std::max(square_rel, to_d(abs(q - u4) / u4));
  }
  c.require(prod_rel < 1e-10, "product of rho");
  c.require(square_rel < 1e-10, "squared products");
  long certified = 0;
  for (const auto& s : st.solve.solutions) certified += s.certificate.certified;
  c.detail << "residual=" << sol.residual_double << " radius=" << sol.certificate.solution_radius
           << " a=" << sol.certificate.a_bound << " prod_rel=" << prod_rel << " sq_rel=" << square_rel
           << " certified " << certified << "/" << st.solve.solutions.size() << " of " << st.solve.starts
           << " starts";
}

void criterion4(Criterion& c) {
  auto& st = bfgs_state();
  if (!st.example) {
    c.require(false, st.error);
    return;
  }
  const auto& ex = *st.example;
  const bfgs::RMat lhs = ex.gamma0 * ex.psi - ex.theta_lambda * ex.gamma0;
  const double eig = to_d(lhs.cwiseAbs().maxCoeff());
  bfgs::RMat power = bfgs::RMat::Identity(bfgs::kN, bfgs::kN);
  bfgs::RMat sum = bfgs::RMat::Zero(bfgs::kN, bfgs::kN);
  for (int m = 0; m < 16; ++m) {
    sum += power;
    power = power * ex.theta_one;
  }
  const double period = to_d((power - bfgs::RMat::Identity(bfgs::kN, bfgs::kN)).cwiseAbs().maxCoeff());
  const double psum = to_d(sum.cwiseAbs().maxCoeff());
  const auto checks = bfgs::verify_bfgs_conditions(ex);
  const auto& xp = find(checks, "bfgs.x_period");
  c.require(eig < 1e-8, "Gamma_0 Psi = Theta(lam) Gamma_0");
  c.require(period < 1e-10, "Theta(1)^16 = I");
  c.require(psum < 1e-10, "sum of Theta(1) powers");
  c.require(xp.passed() && xp.lhs < 1e-8, "iterate periodicity");
  c.detail << "eig=" << eig << " theta16=" << period << " theta_sum=" << psum << " x_period=" << xp.lhs;
}

void criterion5(Criterion& c) {
  auto& st = bfgs_state();
  if (!st.example) {
    c.require(false, st.error);
    return;
  }
  const auto& ex = *st.example;
  const auto checks = bfgs::verify_bfgs_conditions(ex);
  const auto& descent = find(checks, "eq.descent");
  c.require(descent.passed() && descent.lhs < 0.0, "descent");
  for (const char* id : {"eq.sgOrtho", "eq.rhoConstraint", "eq.gRecursion", "eq.bfgs_next"}) {
    const auto& r = find(checks, id);
    c.require(r.passed() && r.lhs < 1e-8, id);
    c.detail << id << "=" << r.lhs << " ";
  }
  const auto& pd = find(checks, "bfgs.B_positive_definite");
  c.require(pd.passed() && pd.lhs > 0.0, "B positive definite");
  for (const auto* id : {"eq.descent", "eq.sgOrtho", "eq.bfgs_next"})
    c.require(find(checks, id).k_hi - find(checks, id).k_lo + 1 >= 2 * bfgs::kPeriod, std::string(id) + " range");

  const auto t = bfgs::run_bfgs_replay(ex, 2 * bfgs::kPeriod);
  c.require(t.steps == 2 * bfgs::kPeriod && t.failure.empty(), "replay completed: " + t.failure);
  c.require(t.max_step_residual < 1e-6, "replay step residual");
  c.require(t.min_grad_norm > 0.0, "gradient floor");
  c.detail << "min_eig(B)=" << pd.lhs << " replay_steps=" << t.steps << " step_residual=" << t.max_step_residual
           << " min|g|=" << t.min_grad_norm;
}

void criterion6(Criterion& c) {
  replay::SuiteOptions opt;
  opt.alpha_floor = 1e-3;
  opt.max_iterations = 10000;
  const auto suite = replay::benign_suite();
  const auto methods = replay::all_methods();
  const auto r = replay::theorem1_check(suite, methods, opt);
  c.require(suite.size() == 10, "ten problems");
  c.require(r.runs.size() == suite.size() * methods.size(), "every method on every problem");
  long worst_steps = 0;
  double worst_grad = 0.0, worst_mmt = 0.0;
  long wolfe = 0;
  for (const auto& run : r.runs) {
    worst_steps = std::max(worst_steps, run.trace.steps);
    worst_grad = std::max(worst_grad, run.trace.final_grad_norm);
    worst_mmt = std::max(worst_mmt, run.trace.max_mmt_residual);
    wolfe += run.trace.wolfe_violations;
    c.require(run.trace.converged && run.trace.final_grad_norm < 1e-6, run.problem + "/" + run.trace.method);
  }
  c.require(worst_steps <= 10000, "iteration budget");
  c.require(worst_mmt < 1e-8, "M M^t s = -alpha g per step");
  c.require(wolfe == 0, "first Wolfe per step");
  c.require(schema::all_passed(r.reports), "suite reports");
  c.detail << r.runs.size() << " runs, max steps=" << worst_steps << " max final |g|=" << worst_grad
           << " max mmt=" << worst_mmt;
}

void criterion7(Criterion& c) {
  std::mt19937_64 rng(7);
  int certified = 0, sound = 0, false_certified = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 9;
    const auto sys = testing_support::random_system(rng, n, false);
    std::vector<double> center = sys.root;
    std::uniform_real_distribution<double> noise(-1e-6, 1e-6);
    for (auto& v : center) v += noise(rng);
    const Eigen::MatrixXd A = testing_support::jacobian_at(sys, center).inverse();
    const auto cert = interval::certify_system(sys, center, 1e-3, A);
    if (!cert.certified) continue;
    ++certified;
    // The planted root and a Newton solve from the center must both lie in the claimed ball.
    std::vector<double> x = center;
    const bool newton = testing_support::newton_root(sys, x, 60, 1e-13);
    double planted = 0.0, found = 0.0;
    for (int i = 0; i < n; ++i) {
      planted = std::max(planted, std::abs(sys.root[i] - center[i]));
      found = std::max(found, std::abs(x[i] - center[i]));
    }
    const double bound = cert.solution_radius * (1 + 1e-9) + 1e-15;
    if (newton && planted <= bound && found <= bound) ++sound;
    worst_ratio = std::max(worst_ratio, planted / cert.solution_radius);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 9;
    const auto sys = testing_support::random_system(rng, n, true);
    Eigen::MatrixXd J = testing_support::jacobian_at(sys, sys.root);
    J += 1e-3 * Eigen::MatrixXd::Identity(n, n);
    for (double radius : {1e-6, 1e-3, 0.5})
      false_certified += interval::certify_system(sys, sys.root, radius, J.inverse()).certified;
  }
  c.require(certified > 0, "some system certified");
  c.require(sound == certified, "root inside the certified ball");
  c.require(false_certified == 0, "no rootless system certified");
  c.detail << "certified " << certified << "/20, sound " << sound << ", max dist/radius=" << worst_ratio
           << ", rootless certified " << false_certified << "/60";
}

void criterion8(Criterion& c) {
  auto one = [&](const std::string& name, const schema::OrbitSchema& s) {
    const auto w = schema::check_whitney_stability(s, 12, 36, 48, 2.0);
    c.require(schema::all_passed(w.reports), name);
    auto growth = [](double outer, double inner) { return inner > 0 ? outer / inner : 1.0; };
    c.detail << name << " M_h " << w.outer.m_h << " (x" << growth(w.outer.m_h, w.inner.m_h) << ") M_g " << w.outer.m_g
             << " (x" << growth(w.outer.m_g, w.inner.m_g) << ") M_f " << w.outer.m_f << " (x"
             << growth(w.outer.m_f, w.inner.m_f) << "); ";
  };
  one("gn", gn_example().schema);
  auto& st = bfgs_state();
  if (st.example)
    one("bfgs", st.example->schema);
  else
    c.require(false, st.error);
}

void criterion9(Criterion& c) {
  const auto dir = std::filesystem::temp_directory_path() / "divergence_acceptance";
  std::filesystem::create_directories(dir);
  auto run_twice = [&](const std::string& name, const std::function<int(const std::string&)>& run) {
    const auto a = (dir / (name + "_a.json")).string();
    const auto b = (dir / (name + "_b.json")).string();
    const int ea = run(a), eb = run(b);
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string ra((std::istreambuf_iterator<char>(fa)), {}), rb((std::istreambuf_iterator<char>(fb)), {});
    c.require(ea == 0 && eb == 0, name + " exit codes");
    c.require(!ra.empty() && ra == rb, name + " bytes");
    c.detail << name << " " << ra.size() << " bytes identical=" << (ra == rb) << "; ";
  };
  std::ostringstream log;
  run_twice("gn", [&](const std::string& out) {
    cli::VerifyGnOptions o;
    o.out = out;
    return cli::cmd_verify_gn(o, log);
  });
  run_twice("bfgs", [&](const std::string& out) {
    cli::VerifyBfgsOptions o;
    o.out = out;
    return cli::cmd_verify_bfgs(o, log);
  });
  run_twice("sanity", [&](const std::string& out) {
    cli::SanityOptions o;
    o.out = out;
    return cli::cmd_sanity_theorem1(o, log);
  });
}

}  // namespace

int main() {
  const std::map<int, std::pair<std::string, std::function<void(Criterion&)>>> criteria = {
      {1, {"Gauss-Newton construction and replay", criterion1}},
      {2, {"Gauss-Newton geometry", criterion2}},
      {3, {"BFGS solve and certification", criterion3}},
      {4, {"BFGS structure", criterion4}},
      {5, {"BFGS compatibility and replay", criterion5}},
      {6, {"convergence on the benign suite", criterion6}},
      {7, {"existence test against known roots", criterion7}},
      {8, {"Whitney ratio stability", criterion8}},
      {9, {"deterministic reports", criterion9}},
  };
  int failed = 0;
  for (const auto& [id, entry] : criteria) {
    Criterion c;
    try {
      entry.second(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    failed += !c.ok;
    std::printf("criterion %d %s: %s | %s\n", id, c.ok ? "PASS" : "FAIL", entry.first.c_str(), c.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
