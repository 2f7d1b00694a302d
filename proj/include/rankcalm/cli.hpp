#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankcalm/penalty.hpp"
#include "rankcalm/sets.hpp"
#include "rankcalm/surrogate.hpp"

namespace rankcalm::cli {

enum class Command {
  Certify,
  Ebound,
  Modulus,
  Solve,
  Continuation,
  Surrogate,
  Pam,
  SandwichSuite,
};

Command parse_command(const std::string& name);  // throws std::invalid_argument

/// Fully resolved run description. Built by the binary from flags, or
/// directly by tests.
struct RunConfig {
  Command command = Command::SandwichSuite;

  // Constraint set: a shorthand tag plus dimensions, or a key=value file.
  std::string set_tag;
  std::string set_file;
  Eigen::Index n = 0, m = 0;
  Eigen::Index k = 0, p_block = 0;  // blocktrace
  double radius = 1.0;
  std::string norm = "frobenius";
  bool sym = false;
  bool psd = false;
  Eigen::Index r = 1;

  std::string problem_file;
  std::string point_file;
  std::string x0_file;

  // Sentinels: empty / nonpositive values defer to the problem file.
  std::string penalty_kind;  // dc | schatten | truncdiff
  double schatten_p = 0.0;
  double rho = 0.0;
  std::vector<double> schedule;
  double nu = -1.0;  // <0: take the problem file's value

  double delta = 0.1;
  int samples = 1000;
  int starts = 1;
  double pam_c = 0.5;
  double tol = 1e-10;
  int max_iters = 0;  // 0: module default

  std::string family = "linear";  // surrogate family tag
  std::string family_file;        // key=value family description
  int criterion = 0;              // 0: auto
  std::string method;             // "", "nullspace", "lp"
  std::string expect;             // "", "trivial", "witness"

  std::uint64_t seed = 0;
  std::string out_prefix = "report";
};

/// Executes the command and writes <out_prefix>.json plus command-specific
/// CSV/matrix artifacts. Returns 0 on success, 1 on domain failure (an
/// assertion such as --expect not met, or a failed suite), throws
/// std::invalid_argument / io::ParseError on usage errors.
int run(const RunConfig& cfg);

/// Graph Laplacian from a MatrixMarket coordinate file.
Eigen::MatrixXd ingest_graph(const std::string& path);

/// Constraint set from flags or a key=value block file.
sets::ConstraintSet load_set(const RunConfig& cfg);
sets::ConstraintSet load_set_file(const std::string& path);

struct LoadedProblem {
  penalty::ProblemSpec spec;
  penalty::PenaltyConfig config;
  std::vector<std::string> echo;
};
LoadedProblem load_problem(const std::string& path);

/// Surrogate family from a key=value file: tag, t_star, breakpoints
/// ("t:phi" pairs) for the piecewise kind.
surrogate::SurrogateFamily load_family_file(const std::string& path);

struct SandwichStats {
  long checks = 0;
  long violations = 0;
  double max_lower_gap = 0.0;  // max of (theta/2 - eta)+
  double max_upper_gap = 0.0;  // max of (eta - theta)+
};
SandwichStats run_sandwich_suite(int samples, std::uint64_t seed);

}  // namespace rankcalm::cli
