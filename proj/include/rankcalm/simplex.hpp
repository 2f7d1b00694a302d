#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rankcalm::lp {

/// One linear row: a^T x <= b ('<') or a^T x = b ('=').
struct Constraint {
  Eigen::VectorXd a;
  char rel;
  double b;
};

/// maximize c^T x  s.t. rows, x >= 0. Upper bounds go in as explicit rows.
struct Problem {
  Eigen::Index num_vars = 0;
  Eigen::VectorXd c;
  std::vector<Constraint> rows;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::IterationLimit;
  double objective = 0.0;
  Eigen::VectorXd x;
  int iterations = 0;
};

/// Two-phase dense tableau simplex with Bland's rule (anti-cycling).
Solution solve(const Problem& p, int max_iters = 50000, double tol = 1e-9);

}  // namespace rankcalm::lp
