// divergence: verify the Gauss-Newton and BFGS counterexamples, replay their
// orbits, and run the convergence sanity suite.

#include <iostream>

#include <CLI11.hpp>

#include "divergence/commands.hpp"

namespace cli = divergence::cli;

int main(int argc, char** argv) {
  CLI::App app{"Verification of line-search divergence examples"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Build an example and check every condition");
  verify->require_subcommand(1);

  cli::VerifyGnOptions gn;
  auto* verify_gn = verify->add_subcommand("gn", "Gauss-Newton example");
  verify_gn->add_option("--kappa", gn.config.kappa, "Residual offset, at least 1")->capture_default_str();
  verify_gn->add_option("--periods", gn.config.periods, "Periods checked and replayed")->capture_default_str();
  verify_gn->add_option("--tol", gn.tol, "Equality tolerance of the geometric checks")->capture_default_str();
  verify_gn->add_option("--out", gn.out, "Report JSON path");

  cli::VerifyBfgsOptions bf;
  auto* verify_bfgs = verify->add_subcommand("bfgs", "BFGS example");
  verify_bfgs->add_flag("--certify,!--no-certify", bf.certify, "Interval certification of the solution")
      ->capture_default_str();
  verify_bfgs->add_option("--seed", bf.seed, "Multistart seed")->capture_default_str();
  verify_bfgs->add_option("--load-solution", bf.load_solution, "Use a saved solution instead of solving")
      ->check(CLI::ExistingFile);
  verify_bfgs->add_option("--out", bf.out, "Report JSON path");
  verify_bfgs->add_option("--solution-out", bf.solution_out, "Solution JSON path");
  verify_bfgs->add_option("--periods", bf.periods, "Replay length in periods")->capture_default_str();

  cli::ReplayOptions rp;
  auto* replay = app.add_subcommand("replay", "Drive the optimizer on an example orbit");
  replay->add_option("which", rp.which, "gn or bfgs")->required()->check(CLI::IsMember({"gn", "bfgs"}));
  replay->add_option("--steps", rp.steps, "Number of steps")->capture_default_str();
  replay->add_option("--csv", rp.csv, "Trace CSV path");
  replay->add_option("--vertices", rp.vertices, "Polygon vertex CSV path");
  replay->add_option("--seed", rp.seed, "Multistart seed for bfgs")->capture_default_str();
  replay->add_option("--load-solution", rp.load_solution, "Saved bfgs solution")->check(CLI::ExistingFile);

  cli::SanityOptions sn;
  auto* sanity = app.add_subcommand("sanity", "Convergence sanity checks");
  sanity->require_subcommand(1);
  auto* theorem1 = sanity->add_subcommand("theorem1", "Benign suite under the convergence hypotheses");
  theorem1->add_option("--alpha-floor", sn.alpha_floor, "Smallest accepted step size")->capture_default_str();
  theorem1->add_option("--max-iterations", sn.max_iterations, "Iteration budget per run")->capture_default_str();
  theorem1->add_option("--problems", sn.problems, "Run only the first n problems");
  theorem1->add_flag("--demos,!--no-demos", sn.demos, "Include runs that violate a hypothesis")
      ->capture_default_str();
  theorem1->add_option("--out", sn.out, "Report JSON path");

  std::string moore_out;
  auto* moore = app.add_subcommand("moore", "Interval existence test");
  moore->require_subcommand(1);
  auto* moore_demo = moore->add_subcommand("demo", "Scalar examples with known answers");
  moore_demo->add_option("--out", moore_out, "Report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsageError;
  }

  if (*verify_gn) return cli::cmd_verify_gn(gn, std::cerr);
  if (*verify_bfgs) return cli::cmd_verify_bfgs(bf, std::cerr);
  if (*replay) return cli::cmd_replay(rp, std::cerr);
  if (*theorem1) return cli::cmd_sanity_theorem1(sn, std::cerr);
  if (*moore_demo) return cli::cmd_moore_demo(moore_out, std::cerr);
  return cli::kUsageError;
}
