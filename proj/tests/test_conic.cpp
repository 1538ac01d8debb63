#include <cmath>
#include <random>

#include "doctest.h"
#include "hcng/conic.hpp"

using namespace hcng::conic;

TEST_CASE("one-variable LP") {
  Program p;
  const int x = p.add_variable("x");
  p.add_cost(x, 1.0);
  p.add_greater_equal(LinExpr::var(x), 3.0, "floor");
  const Solution s = solve(p);
  REQUIRE(s.optimal());
  CHECK(s.value(x) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("cone vertex") {
  Program p;
  const int t = p.add_variable("t");
  const int x = p.add_variable("x");
  const int y = p.add_variable("y");
  p.add_cost(t, 1.0);
  p.add_soc(LinExpr::var(t), {LinExpr::var(x) - 1.0, LinExpr::var(y) - 1.0}, "c");
  const Solution s = solve(p);
  REQUIRE(s.optimal());
  CHECK(std::abs(s.value(t)) < 1e-6);
  CHECK(s.value(x) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(s.value(y) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("log-sum maximisation") {
  Program p;
  const int x = p.add_variable("x", 0.0, 10.0);
  p.add_log_term(-1.0, LinExpr(10.0) - LinExpr::var(x), "a");
  p.add_log_term(-1.0, LinExpr::var(x), "b");
  p.add_greater_equal(LinExpr::var(x), 1e-6);
  p.add_less_equal(LinExpr::var(x), 10.0 - 1e-6);
  const Solution s = solve(p);
  REQUIRE(s.optimal());
  CHECK(s.value(x) == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("infeasible and unbounded statuses are reported") {
  {
    Program p;
    const int x = p.add_variable("x");
    p.add_cost(x, 1.0);
    p.add_greater_equal(LinExpr::var(x), 3.0);
    p.add_less_equal(LinExpr::var(x), 1.0);
    CHECK(solve(p).status == Status::Infeasible);
  }
  {
    Program p;
    const int x = p.add_variable("x", 0.0);
    p.add_cost(x, -1.0);
    CHECK(solve(p).status == Status::Unbounded);
  }
  {
    Program p;
    const int t = p.add_variable("t");
    const int x = p.add_variable("x");
    p.add_cost(t, 1.0);
    p.add_soc(LinExpr::var(t), {LinExpr::var(x)});
    p.add_less_equal(LinExpr::var(t), 1.0);
    p.add_greater_equal(LinExpr::var(x), 2.0);
    CHECK(solve(p).status == Status::Infeasible);
  }
}

TEST_CASE("equality-constrained QP") {
  // (x-2)^2 + (y+1)^2 with x + y = 0: optimum at x = 1.5, value 0.5.
  Program p;
  const int x = p.add_variable("x");
  const int y = p.add_variable("y");
  p.add_quadratic_cost(x, x, 1.0);
  p.add_quadratic_cost(y, y, 1.0);
  p.add_cost(x, -4.0);
  p.add_cost(y, 2.0);
  p.add_cost(LinExpr(5.0));
  const RowRef sum = p.add_equality(LinExpr::var(x) + LinExpr::var(y), 0.0, "sum");
  const Solution s = solve(p);
  REQUIRE(s.optimal());
  CHECK(s.value(x) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(s.value(y) == doctest::Approx(-1.5).epsilon(1e-6));
  CHECK(s.objective == doctest::Approx(0.5).epsilon(1e-6));
  // With x + y = r the optimum is (r - 1)^2 / 2: slope -1 at r = 0.
  CHECK(s.sensitivity(p, sum) == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("bound sensitivity of a one-variable LP") {
  Program p;
  const int x = p.add_variable("x");
  p.add_cost(x, 2.0);
  const RowRef floor = p.add_greater_equal(LinExpr::var(x), 3.0);
  const Solution s = solve(p);
  REQUIRE(s.optimal());
  CHECK(s.sensitivity(p, floor) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("repeated solves agree") {
  Program p;
  const int t = p.add_variable("t");
  const int x = p.add_variable("x", -5.0, 5.0);
  const int y = p.add_variable("y", -5.0, 5.0);
  p.add_cost(t, 1.0);
  p.add_cost(x, 0.3);
  p.add_soc(LinExpr::var(t), {LinExpr::var(x) - 1.0, LinExpr::var(y) + 2.0});
  p.add_greater_equal(LinExpr::var(x) + LinExpr::var(y), 0.5);
  const Solution a = solve(p);
  const Solution b = solve(p);
  REQUIRE(a.optimal());
  CHECK(std::abs(a.objective - b.objective) <= 1e-9);
  CHECK(a.x == b.x);
}

TEST_CASE("optimum is no worse than any constructed feasible point") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Program p;
    const int n = 6;
    std::vector<int> v;
    std::vector<double> x0;
    for (int i = 0; i < n; ++i) {
      v.push_back(p.add_variable("x" + std::to_string(i), -10.0, 10.0));
      x0.push_back(4.0 * coef(rng));
      p.add_cost(v.back(), coef(rng));
    }
    for (int r = 0; r < 5; ++r) {
      LinExpr row;
      double at = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = coef(rng);
        row.add(v[i], a);
        at += a * x0[i];
      }
      p.add_less_equal(row, at + pos(rng));
    }
    // One cone through the point as well.
    const int t = p.add_variable("t");
    p.add_soc(LinExpr::var(t), {LinExpr::var(v[0]), LinExpr::var(v[1])});
    p.add_cost(t, 0.5);
    x0.push_back(std::hypot(x0[0], x0[1]) + pos(rng));

    const Solution s = solve(p);
    REQUIRE(s.optimal());
    CHECK(s.objective <= p.objective(x0) + 1e-7 * std::max(1.0, std::abs(s.objective)));
  }
}

TEST_CASE("cone residuals") {
  SUBCASE("tight cone") {
    Program p;
    const int t = p.add_variable("t");
    const int x = p.add_variable("x");
    p.add_cost(t, 1.0);
    p.fix(x, 3.0);
    p.add_soc(LinExpr::var(t), {LinExpr::var(x)}, "tight");
    const Solution s = solve(p);
    REQUIRE(s.optimal());
    const auto r = cone_residuals(p, s);
    REQUIRE(r.size() == 1);
    CHECK(r[0].name == "tight");
    CHECK(std::abs(r[0].slack) <= 1e-6);
    CHECK_FALSE(r[0].loose);
  }
  SUBCASE("deliberately slack cone") {
    Program p;
    const int t = p.add_variable("t");
    const int x = p.add_variable("x");
    p.fix(t, 5.0);
    p.fix(x, 0.0);
    p.add_soc(LinExpr::var(t), {LinExpr::var(x)}, "slack");
    const Solution s = solve(p);
    REQUIRE(s.optimal());
    const auto r = cone_residuals(p, s);
    REQUIRE(r.size() == 1);
    CHECK(r[0].slack == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(r[0].relative_slack == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r[0].loose);
  }
}
