#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "rankcalm/cli.hpp"
#include "rankcalm/io.hpp"
#include "rankcalm/report.hpp"

namespace {

using rankcalm::cli::Command;
using rankcalm::cli::RunConfig;

void add_set_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--set", cfg.set_tag,
                  "set family tag (correlation, psdcone, rowstochastic, doublystochastic, "
                  "quaddiag, blocktrace, rankset, psdrankset, normball, frobeniussphere)");
  cmd->add_option("--set-file", cfg.set_file, "key=value set description file");
  cmd->add_option("--n", cfg.n, "dimension n");
  cmd->add_option("--m", cfg.m, "dimension m (rectangular families)");
  cmd->add_option("--k", cfg.k, "block count (blocktrace)");
  cmd->add_option("--p", cfg.p_block, "block size (blocktrace)");
  cmd->add_option("--radius", cfg.radius, "ball/sphere radius");
  cmd->add_option("--norm", cfg.norm, "ball norm: spectral|frobenius|nuclear");
  cmd->add_flag("--sym", cfg.sym, "symmetric matrix space");
  cmd->add_flag("--psd", cfg.psd, "intersect with the PSD cone");
  cmd->add_option("--r", cfg.r, "rank bound r");
}

void add_common(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--seed", cfg.seed, "random seed (recorded in the report)");
  cmd->add_option("--out", cfg.out_prefix, "output prefix for report files");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(rankcalm::report::kToolName) + " " +
               rankcalm::report::kToolVersion +
               " - calmness certification and exact penalties for rank constraint systems"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* certify = app.add_subcommand("certify", "check the cone-intersection criterion at a point");
  add_set_flags(certify, cfg);
  certify->add_option("--point", cfg.point_file, "matrix file with the reference point")
      ->required();
  certify->add_option("--criterion", cfg.criterion, "1 or 2 (default: auto by family)");
  certify->add_option("--method", cfg.method, "nullspace|lp (default: auto)");
  certify->add_option("--expect", cfg.expect, "assert outcome: trivial|witness");
  add_common(certify, cfg);

  auto* ebound = app.add_subcommand("ebound", "local error-bound modulus around a point");
  add_set_flags(ebound, cfg);
  ebound->add_option("--point", cfg.point_file, "center point file")->required();
  ebound->add_option("--delta", cfg.delta, "sampling radius");
  ebound->add_option("--samples", cfg.samples, "sample count");
  add_common(ebound, cfg);

  auto* modulus = app.add_subcommand("modulus", "global error-bound modulus over the set");
  add_set_flags(modulus, cfg);
  modulus->add_option("--samples", cfg.samples, "sample count");
  add_common(modulus, cfg);

  auto* solve = app.add_subcommand("solve", "penalized DC solve of a problem file");
  solve->add_option("--problem", cfg.problem_file, "problem config file")->required();
  solve->add_option("--penalty", cfg.penalty_kind, "dc|schatten|truncdiff");
  solve->add_option("--rho", cfg.rho, "penalty parameter");
  solve->add_option("--schatten-p", cfg.schatten_p, "Schatten exponent in (0,1)");
  solve->add_option("--x0", cfg.x0_file, "start point file (default: projected zero)");
  solve->add_option("--starts", cfg.starts, "multi-start count");
  solve->add_option("--max-iters", cfg.max_iters, "outer iteration cap");
  add_common(solve, cfg);

  auto* continuation = app.add_subcommand("continuation", "warm-started rho schedule");
  continuation->add_option("--problem", cfg.problem_file, "problem config file")->required();
  continuation->add_option("--penalty", cfg.penalty_kind, "dc|schatten|truncdiff");
  continuation->add_option("--schedule", cfg.schedule, "increasing rho values")->delimiter(',');
  continuation->add_option("--x0", cfg.x0_file, "start point file");
  continuation->add_option("--starts", cfg.starts, "multi-start count per stage");
  continuation->add_option("--max-iters", cfg.max_iters, "outer iteration cap");
  add_common(continuation, cfg);

  auto* surrogate = app.add_subcommand("surrogate", "equivalent DC surrogate sweep");
  surrogate->add_option("--problem", cfg.problem_file, "problem config file")->required();
  surrogate->add_option("--family", cfg.family, "linear|quad-shift");
  surrogate->add_option("--family-file", cfg.family_file,
                        "key=value family description (tag, t_star, breakpoints)");
  surrogate->add_option("--nu", cfg.nu, "rank-regularization weight");
  surrogate->add_option("--schedule", cfg.schedule, "rho schedule")->delimiter(',');
  surrogate->add_option("--starts", cfg.starts, "multi-start count");
  add_common(surrogate, cfg);

  auto* pam = app.add_subcommand("pam", "feasibility by proximal alternating minimization");
  add_set_flags(pam, cfg);
  pam->add_option("--x0", cfg.x0_file, "start point file")->required();
  pam->add_option("--c", cfg.pam_c, "proximal weight (0 = plain alternating projections)");
  pam->add_option("--tol", cfg.tol, "termination tolerance on the pair distance");
  pam->add_option("--max-iters", cfg.max_iters, "iteration cap");
  add_common(pam, cfg);

  auto* sandwich = app.add_subcommand("sandwich-suite", "randomized residual-inequality suite");
  sandwich->add_option("--samples", cfg.samples, "matrix count");
  add_common(sandwich, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // flag errors are usage errors
  }

  try {
    if (certify->parsed()) cfg.command = Command::Certify;
    if (ebound->parsed()) cfg.command = Command::Ebound;
    if (modulus->parsed()) cfg.command = Command::Modulus;
    if (solve->parsed()) cfg.command = Command::Solve;
    if (continuation->parsed()) cfg.command = Command::Continuation;
    if (surrogate->parsed()) cfg.command = Command::Surrogate;
    if (pam->parsed()) cfg.command = Command::Pam;
    if (sandwich->parsed()) cfg.command = Command::SandwichSuite;
    return rankcalm::cli::run(cfg);
  } catch (const rankcalm::io::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
