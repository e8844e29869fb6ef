#include "divergence/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "divergence/bfgs_example.hpp"
#include "divergence/theorem1.hpp"

namespace divergence::cli {

using report::Json;
using report::VerificationReport;
using schema::make_report;

namespace {

void append(schema::ReportBundle& to, const schema::ReportBundle& from) { to.insert(to.end(), from.begin(), from.end()); }

int finish(const VerificationReport& r, const std::string& out, std::ostream& log) {
  for (const auto& c : r.checks)
    if (c.mandatory && !c.passed())
      log << "FAIL " << c.check_id << ": " << c.lhs << ' ' << c.relation << ' ' << c.rhs << "  " << c.note << '\n';
  if (!out.empty()) report::write_file(out, report::dump(report::to_json(r)));
  log << r.command << ": " << r.checks.size() << " checks, " << (r.passed() ? "pass" : "fail") << '\n';
  return r.passed() ? kPass : kCheckFailure;
}

std::vector<std::vector<std::string>> gamma_strings(const bfgs::RMat& g) {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < g.rows(); ++i) {
    rows.emplace_back();
    for (int j = 0; j < g.cols(); ++j) rows.back().push_back(to_string_exact(g(i, j)));
  }
  return rows;
}

void write_text(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream os;
  body(os);
  report::write_file(path, os.str());
}

// Solved candidates in preference order, or the loaded artifact alone.
struct BfgsSolutions {
  std::vector<bfgs::RhoSolution> solutions;
  Json summary = Json::object();
};

BfgsSolutions obtain_solutions(const std::string& load, bool certify, std::uint64_t seed) {
  BfgsSolutions out;
  if (!load.empty()) {
    const auto loaded = report::solution_from_json(report::read_json(load));
    auto s = bfgs::assess_solution(loaded.free, loaded.system, certify, bfgs::SolveOptions{}.certify_radius);
    s.start_index = loaded.start_index;
    out.solutions.push_back(std::move(s));
    out.summary = {{"source", "loaded"}, {"path", load}};
    return out;
  }
  bfgs::SolveOptions opt;
  opt.seed = seed;
  opt.certify = certify;
  auto solved = bfgs::solve_rho(opt);
  long certified = 0;
  for (const auto& s : solved.solutions) certified += s.certificate.certified ? 1 : 0;
  out.summary = {{"source", "solved"},
                 {"starts", solved.starts},
                 {"converged", solved.candidates.size()},
                 {"refined", solved.solutions.size()},
                 {"certified", certified}};
  out.solutions = std::move(solved.solutions);
  return out;
}

}  // namespace

report::VerificationReport verify_gn_report(const VerifyGnOptions& o) {
  o.config.validate();
  if (!(o.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const auto ex = gn::build_gn(o.config);
  schema::Tolerances tol;
  tol.equality = o.tol;
  tol.zero_residual = std::min(tol.zero_residual, o.tol);
  VerificationReport r;
  r.command = "verify gn";
  r.config = {{"kappa", o.config.kappa}, {"periods", o.config.periods}, {"tol", o.tol}};
  r.checks = gn::verify_gn_conditions(ex, tol);
  const auto rp = gn::verify_gn_replay(ex, o.config.periods);
  append(r.checks, rp.reports);
  r.summary = {{"lambda", ex.lambda}, {"replay", report::to_json(rp.trace)}};
  return r;
}

int cmd_verify_gn(const VerifyGnOptions& o, std::ostream& log) {
  VerificationReport r;
  try {
    r = verify_gn_report(o);
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return finish(r, o.out, log);
}

int cmd_verify_bfgs(const VerifyBfgsOptions& o, std::ostream& log) {
  if (o.periods < 1) {
    log << "error: periods must be at least 1\n";
    return kUsageError;
  }
  BfgsSolutions found;
  try {
    found = obtain_solutions(o.load_solution, o.certify, o.seed);
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::runtime_error& e) {
    log << "error: " << e.what() << '\n';
    return o.load_solution.empty() ? kSolverFailure : kUsageError;
  }
  const bool loaded = !o.load_solution.empty();
  if (!loaded && o.certify) {
    bool any = false;
    for (const auto& s : found.solutions) any = any || s.certificate.certified;
    if (!any) {
      log << "error: no solution could be certified\n";
      return kSolverFailure;
    }
  }

  // First candidate whose orbit passes every mandatory check; the first one
  // otherwise, so its failures are reported.
  std::size_t chosen = 0;
  std::optional<bfgs::BfgsExample> example;
  schema::ReportBundle checks;
  for (std::size_t i = 0; i < found.solutions.size(); ++i) {
    if (!loaded && o.certify && !found.solutions[i].certificate.certified) continue;
    try {
      auto ex = bfgs::build_bfgs(found.solutions[i]);
      auto c = bfgs::verify_bfgs_conditions(ex);
      const bool ok = std::all_of(c.begin(), c.end(), [](const auto& r) { return !r.mandatory || r.passed(); });
      if (!example || ok) {
        chosen = i;
        checks = std::move(c);
        example.emplace(std::move(ex));
      }
      if (ok) break;
    } catch (const std::runtime_error& e) {
      log << "candidate " << i << " rejected: " << e.what() << '\n';
    }
  }
  if (!example) {
    log << "error: no candidate produced a usable orbit\n";
    return kSolverFailure;
  }

  VerificationReport r;
  r.command = "verify bfgs";
  r.config = {{"certify", o.certify}, {"seed", o.seed}, {"periods", o.periods},
              {"load_solution", o.load_solution.empty() ? Json(nullptr) : Json(o.load_solution)}};
  r.checks = std::move(checks);
  const auto rp = bfgs::verify_bfgs_replay(*example, o.periods);
  append(r.checks, rp.reports);
  for (std::size_t i = 0; i < found.solutions.size(); ++i) {
    const auto& s = found.solutions[i];
    Json c = report::to_json(s.certificate);
    c["selected"] = i == chosen;
    c["spread"] = s.spread;
    c["start_index"] = s.start_index;
    c["residual_double"] = s.residual_double;
    c["fixed_slots"] = s.system.fixed_slots;
    c["identities_hold"] = s.identities_hold;
    r.certificates.push_back(c);
  }
  const auto& ex = *example;
  r.summary = {{"solutions", found.summary},
               {"lambda", static_cast<double>(ex.lambda)},
               {"u", static_cast<double>(ex.u)},
               {"gradient_scale", static_cast<double>(ex.gradient_scale)},
               {"replay", report::to_json(rp.trace)},
               {"replay_double", report::to_json(rp.double_trace)}};
  try {
    if (!o.solution_out.empty())
      report::write_file(o.solution_out,
                         report::dump(report::solution_to_json(ex.solution, o.seed, gamma_strings(ex.gamma0))));
    return finish(r, o.out, log);
  } catch (const std::runtime_error& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

int cmd_replay(const ReplayOptions& o, std::ostream& log) {
  if (o.steps < 0) {
    log << "error: steps must be non-negative\n";
    return kUsageError;
  }
  replay::ReplayTrace trace;
  int dimension = 0;
  std::vector<schema::Vector> vertices;
  int a = 0;
  try {
    if (o.which == "gn") {
      const auto ex = gn::build_gn({});
      dimension = gn::kDimension;
      if (o.steps > 0) trace = gn::run_gn_replay(ex, o.steps);
      vertices = schema::divergence_witness(ex.schema, 1).vertices;
      a = ex.schema.frame().blocks().a;
    } else if (o.which == "bfgs") {
      auto found = obtain_solutions(o.load_solution, false, o.seed);
      const auto ex = bfgs::build_bfgs(found.solutions.front());
      dimension = bfgs::kN;
      if (o.steps > 0) trace = bfgs::run_bfgs_replay(ex, o.steps);
      vertices = schema::divergence_witness(ex.schema, 1).vertices;
      a = bfgs::kBlockA;
    } else {
      log << "error: replay needs 'gn' or 'bfgs'\n";
      return kUsageError;
    }
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::runtime_error& e) {
    log << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  try {
    if (!o.csv.empty()) write_text(o.csv, [&](std::ostream& os) { replay::write_trace_csv(os, trace, dimension); });
    if (!o.vertices.empty())
      write_text(o.vertices, [&](std::ostream& os) { report::write_vertices_csv(os, vertices, a); });
  } catch (const std::runtime_error& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  }
  const bool ok = trace.steps == o.steps && trace.failure.empty() && trace.max_step_residual < 1e-6;
  log << "replay " << o.which << ": " << trace.steps << " steps, max step residual " << trace.max_step_residual
      << (trace.failure.empty() ? "" : ", " + trace.failure) << '\n';
  return ok ? kPass : kCheckFailure;
}

int cmd_sanity_theorem1(const SanityOptions& o, std::ostream& log) {
  replay::SuiteOptions opt;
  opt.alpha_floor = o.alpha_floor;
  opt.max_iterations = o.max_iterations;
  VerificationReport r;
  r.command = "sanity theorem1";
  r.config = {{"alpha_floor", o.alpha_floor},
              {"max_iterations", o.max_iterations},
              {"problems", o.problems},
              {"demos", o.demos}};
  try {
    if (!(o.alpha_floor > 0.0) || o.max_iterations < 1)
      throw std::invalid_argument("alpha floor must be positive and max iterations at least 1");
    auto suite = replay::benign_suite();
    if (o.problems >= 0 && static_cast<std::size_t>(o.problems) < suite.size()) suite.resize(o.problems);
    const auto result = replay::theorem1_check(suite, replay::all_methods(), opt);
    r.checks = result.reports;
    Json runs = Json::array();
    for (const auto& run : result.runs)
      runs.push_back({{"problem", run.problem},
                      {"method", replay::method_name(run.method)},
                      {"steps", run.trace.steps},
                      {"final_grad_norm", run.trace.final_grad_norm},
                      {"converged", run.trace.converged}});
    r.summary["runs"] = runs;
    if (o.demos) append(r.checks, replay::theorem1_hypothesis_demos(opt).reports);
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return finish(r, o.out, log);
}

int cmd_moore_demo(const std::string& out, std::ostream& log) {
  using interval::Interval;
  using interval::IntervalMatrix;
  using interval::IntervalVector;
  auto scalar = [](auto f, auto df, double center, double radius, double a) {
    interval::BoxFunction fb = [f](const IntervalVector& x) { return IntervalVector{f(x[0])}; };
    interval::BoxJacobian jb = [df](const IntervalVector& x) {
      IntervalMatrix m(1, 1);
      m(0, 0) = df(x[0]);
      return m;
    };
    const double c[1] = {center};
    return interval::moore_certify(fb, jb, c, radius, Eigen::MatrixXd::Constant(1, 1, a));
  };
  const auto linear = scalar([](const Interval& x) { return x; }, [](const Interval&) { return Interval(1.0); }, 0.0,
                             1.0, 1.0);
  const auto sqrt2 = scalar([](const Interval& x) { return x * x - Interval(2.0); },
                            [](const Interval& x) { return Interval(2.0) * x; }, 1.5, 0.2, 1.0 / 3.0);
  const auto rootless = scalar([](const Interval& x) { return x * x + Interval(1.0); },
                               [](const Interval& x) { return Interval(2.0) * x; }, 0.0, 1.0, 1.0);

  VerificationReport r;
  r.command = "moore demo";
  r.checks.push_back(make_report("moore.linear_certified", 0, 0, linear.certified ? 1.0 : 0.0, "==", 1.0, 0.0, {},
                                 "f(x) = x, center 0, radius 1"));
  r.checks.push_back(make_report("moore.linear_radius", 0, 0, linear.solution_radius, "==", 0.0, 0.0, {},
                                 "exact root at the center"));
  r.checks.push_back(make_report("moore.sqrt2_certified", 0, 0, sqrt2.certified ? 1.0 : 0.0, "==", 1.0, 0.0, {},
                                 "f(x) = x^2 - 2, center 1.5, radius 0.2, A = 1/3"));
  r.checks.push_back(make_report("moore.sqrt2_enclosed", 0, 0, std::abs(std::sqrt(2.0) - 1.5), "<=",
                                 sqrt2.solution_radius, 0.0, {}, "|sqrt 2 - 1.5| against the solution radius"));
  r.checks.push_back(make_report("moore.rootless_rejected", 0, 0, rootless.certified ? 1.0 : 0.0, "==", 0.0, 0.0,
                                 {}, rootless.failure));
  for (const auto* c : {&linear, &sqrt2, &rootless}) r.certificates.push_back(report::to_json(*c));
  try {
    return finish(r, out, log);
  } catch (const std::runtime_error& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace divergence::cli
