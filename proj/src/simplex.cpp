#include "rankcalm/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rankcalm::lp {

namespace {

struct Tableau {
  Eigen::MatrixXd T;        // m x (cols+1), last column is the rhs
  Eigen::RowVectorXd cost;  // reduced-cost row, size cols+1 (last = -objective)
  std::vector<int> basis;   // basic column per row
  double tol;

  int rows() const { return static_cast<int>(T.rows()); }
  int cols() const { return static_cast<int>(T.cols()) - 1; }

  void pivot(int r, int s) {
    T.row(r) /= T(r, s);
    for (int i = 0; i < rows(); ++i)
      if (i != r && std::abs(T(i, s)) > 0.0) T.row(i) -= T(i, s) * T.row(r);
    if (std::abs(cost(s)) > 0.0) cost -= cost(s) * T.row(r);
    basis[r] = s;
  }

  // Bland: entering = lowest-index improving column, leaving = min ratio with
  // lowest basic index as the tie-break. allowed(j) masks candidate columns.
  template <class Allowed>
  Status iterate(int max_iters, int& used, const Allowed& allowed) {
    while (used < max_iters) {
      int s = -1;
      for (int j = 0; j < cols(); ++j)
        if (allowed(j) && cost(j) > tol) {
          s = j;
          break;
        }
      if (s < 0) return Status::Optimal;
      int r = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        if (T(i, s) <= tol) continue;
        const double ratio = T(i, cols()) / T(i, s);
        if (ratio < best - tol || (ratio < best + tol && (r < 0 || basis[i] < basis[r]))) {
          best = ratio;
          r = i;
        }
      }
      if (r < 0) return Status::Unbounded;
      pivot(r, s);
      ++used;
    }
    return Status::IterationLimit;
  }
};

}  // namespace

Solution solve(const Problem& p, int max_iters, double tol) {
  const int n = static_cast<int>(p.num_vars);
  const int m = static_cast<int>(p.rows.size());
  if (p.c.size() != n) throw std::invalid_argument("lp: objective size mismatch");

  // Row layout: flip signs so every rhs is >= 0, then '<' rows get a slack,
  // everything else gets an artificial (a flipped '<' behaves like '>=' and
  // needs surplus + artificial).
  Eigen::MatrixXd A(m, n);
  Eigen::VectorXd b(m);
  std::vector<char> kind(m);  // 's' slack only, 'a' artificial (+optional surplus)
  std::vector<bool> surplus(m, false);
  for (int i = 0; i < m; ++i) {
    const auto& row = p.rows[i];
    if (row.a.size() != n) throw std::invalid_argument("lp: row size mismatch");
    if (row.rel != '<' && row.rel != '=') throw std::invalid_argument("lp: bad relation");
    double sign = row.b < 0.0 ? -1.0 : 1.0;
    A.row(i) = sign * row.a.transpose();
    b(i) = sign * row.b;
    if (row.rel == '=') {
      kind[i] = 'a';
    } else if (sign > 0.0) {
      kind[i] = 's';
    } else {  // flipped <= becomes >=
      kind[i] = 'a';
      surplus[i] = true;
    }
  }

  int n_slack = 0, n_art = 0;
  for (int i = 0; i < m; ++i) {
    if (kind[i] == 's') ++n_slack;
    if (surplus[i]) ++n_slack;
    if (kind[i] == 'a') ++n_art;
  }
  const int total = n + n_slack + n_art;

  Tableau tb;
  tb.tol = tol;
  tb.T = Eigen::MatrixXd::Zero(m, total + 1);
  tb.basis.assign(m, -1);
  int slack_at = n, art_at = n + n_slack;
  std::vector<int> art_cols;
  for (int i = 0; i < m; ++i) {
    tb.T.block(i, 0, 1, n) = A.row(i);
    tb.T(i, total) = b(i);
    if (kind[i] == 's') {
      tb.T(i, slack_at) = 1.0;
      tb.basis[i] = slack_at++;
    } else {
      if (surplus[i]) tb.T(i, slack_at) = -1.0, ++slack_at;
      tb.T(i, art_at) = 1.0;
      tb.basis[i] = art_at;
      art_cols.push_back(art_at++);
    }
  }

  Solution sol;
  int used = 0;

  // Phase 1: maximize -(sum of artificials).
  if (n_art > 0) {
    tb.cost = Eigen::RowVectorXd::Zero(total + 1);
    for (int c : art_cols) tb.cost(c) = -1.0;
    for (int i = 0; i < m; ++i)
      if (tb.T(i, tb.basis[i]) != 0.0 && tb.cost(tb.basis[i]) != 0.0)
        tb.cost -= tb.cost(tb.basis[i]) * tb.T.row(i);
    const Status st = tb.iterate(max_iters, used, [](int) { return true; });
    if (st != Status::Optimal) {
      sol.status = st == Status::Unbounded ? Status::Infeasible : st;
      sol.iterations = used;
      return sol;
    }
    // The cost row tracks the negated running objective; a positive residual
    // there means the artificials could not be driven to zero.
    if (tb.cost(total) > 1e-7) {
      sol.status = Status::Infeasible;
      sol.iterations = used;
      return sol;
    }
    // Pivot remaining (degenerate) artificials out where possible.
    for (int i = 0; i < m; ++i) {
      if (tb.basis[i] < n + n_slack) continue;
      int s = -1;
      for (int j = 0; j < n + n_slack; ++j)
        if (std::abs(tb.T(i, j)) > tol) {
          s = j;
          break;
        }
      if (s >= 0) {
        tb.pivot(i, s);
      }
    }
  }

  // Phase 2: original objective; artificial columns may not re-enter.
  tb.cost = Eigen::RowVectorXd::Zero(total + 1);
  tb.cost.head(n) = p.c.transpose();
  for (int i = 0; i < m; ++i)
    if (tb.cost(tb.basis[i]) != 0.0) tb.cost -= tb.cost(tb.basis[i]) * tb.T.row(i);
  const int art_start = n + n_slack;
  const Status st = tb.iterate(max_iters, used, [art_start](int j) { return j < art_start; });

  sol.status = st;
  sol.iterations = used;
  sol.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (tb.basis[i] < n) sol.x(tb.basis[i]) = tb.T(i, total);
  sol.objective = p.c.dot(sol.x);
  return sol;
}

}  // namespace rankcalm::lp
