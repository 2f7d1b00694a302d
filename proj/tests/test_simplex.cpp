#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rankcalm/rng.hpp"
#include "rankcalm/simplex.hpp"

using namespace rankcalm::lp;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("simplex: textbook maximization") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0: optimum 36 at (2,6).
  Problem p;
  p.num_vars = 2;
  p.c = vec2(3, 5);
  p.rows.push_back({vec2(1, 0), '<', 4});
  p.rows.push_back({vec2(0, 2), '<', 12});
  p.rows.push_back({vec2(3, 2), '<', 18});
  auto sol = solve(p);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective == doctest::Approx(36.0));
  CHECK(sol.x(0) == doctest::Approx(2.0));
  CHECK(sol.x(1) == doctest::Approx(6.0));
}

TEST_CASE("simplex: equalities via phase 1") {
  // max x + y s.t. x + y = 1, x - y <= 0.2: optimum 1.
  Problem p;
  p.num_vars = 2;
  p.c = vec2(1, 1);
  p.rows.push_back({vec2(1, 1), '=', 1});
  p.rows.push_back({vec2(1, -1), '<', 0.2});
  auto sol = solve(p);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
  CHECK(sol.x(0) + sol.x(1) == doctest::Approx(1.0));
}

TEST_CASE("simplex: infeasible system detected") {
  Problem p;
  p.num_vars = 1;
  p.c = Eigen::VectorXd::Ones(1);
  p.rows.push_back({Eigen::VectorXd::Ones(1), '=', 1});
  p.rows.push_back({Eigen::VectorXd::Ones(1), '<', 0.5});
  CHECK(solve(p).status == Status::Infeasible);
}

TEST_CASE("simplex: unbounded detected") {
  Problem p;
  p.num_vars = 2;
  p.c = vec2(1, 0);
  p.rows.push_back({vec2(0, 1), '<', 1});
  CHECK(solve(p).status == Status::Unbounded);
}

TEST_CASE("simplex: negative rhs rows (flipped to >=)") {
  // max -x s.t. -x <= -2  (i.e. x >= 2): optimum -2.
  Problem p;
  p.num_vars = 1;
  p.c = -Eigen::VectorXd::Ones(1);
  p.rows.push_back({-Eigen::VectorXd::Ones(1), '<', -2});
  auto sol = solve(p);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.x(0) == doctest::Approx(2.0));
}

TEST_CASE("simplex: degenerate ties do not cycle (Bland)") {
  // A classically degenerate instance; Bland's rule must terminate.
  Problem p;
  p.num_vars = 4;
  p.c.resize(4);
  p.c << 0.75, -150, 0.02, -6;
  Eigen::VectorXd r1(4), r2(4), r3(4);
  r1 << 0.25, -60, -0.04, 9;
  r2 << 0.5, -90, -0.02, 3;
  r3 << 0, 0, 1, 0;
  p.rows.push_back({r1, '<', 0});
  p.rows.push_back({r2, '<', 0});
  p.rows.push_back({r3, '<', 1});
  auto sol = solve(p);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("simplex: random feasibility cross-check against projections") {
  // Random standard-form LPs with known feasible points: the reported optimum
  // must be >= the objective at the known interior feasible point.
  rankcalm::Rng rng(99);
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + t % 4, m = 2 + t % 3;
    Problem p;
    p.num_vars = n;
    p.c = rng.gaussian_matrix(n, 1);
    Eigen::VectorXd x0 = rng.gaussian_matrix(n, 1).cwiseAbs();
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd a = rng.gaussian_matrix(n, 1);
      p.rows.push_back({a, '<', a.dot(x0) + std::abs(rng.gaussian())});
    }
    for (int v = 0; v < n; ++v) {  // keep it bounded
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(v) = 1.0;
      p.rows.push_back({e, '<', x0(v) + 2.0});
    }
    auto sol = solve(p);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.objective >= p.c.dot(x0) - 1e-7);
    for (const auto& row : p.rows) CHECK(row.a.dot(sol.x) <= row.b + 1e-7);
    CHECK(sol.x.minCoeff() >= -1e-9);
  }
}
