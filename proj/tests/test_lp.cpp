#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "quitting/lp.hpp"

using namespace quitting;

TEST_CASE("solve_lp finds the optimum of a small program") {
  // min -x1 - 2*x2  s.t.  x1 + x2 + s = 1
  Mat<double> a = {{1, 1, 1}};
  Vec<double> b = {1};
  Vec<double> c = {-1, -2, 0};
  auto res = solve_lp(a, b, c);
  REQUIRE(res.status == LpResult<double>::kOptimal);
  REQUIRE(res.objective == Catch::Approx(-2.0));
  REQUIRE(res.x[1] == Catch::Approx(1.0));
}

TEST_CASE("solve_lp is exact over rationals") {
  Mat<rational> a = {{rational(3), rational(1)}};
  Vec<rational> b = {rational(1)};
  Vec<rational> c = {rational(-1), rational(0)};
  auto res = solve_lp(a, b, c);
  REQUIRE(res.status == LpResult<rational>::kOptimal);
  REQUIRE(res.x[0] == rat(1, 3));
  REQUIRE(res.objective == rat(-1, 3));
}

TEST_CASE("solve_lp detects infeasibility") {
  // x1 + x2 = -1 has no nonnegative solution.
  Mat<double> a = {{1, 1}};
  Vec<double> b = {-1};
  Vec<double> c = {1, 1};
  auto res = solve_lp(a, b, c);
  REQUIRE(res.status == LpResult<double>::kInfeasible);
}

TEST_CASE("solve_lp detects unbounded rays") {
  // min -x1  s.t.  x1 - x2 = 0 rides the diagonal ray.
  Mat<double> a = {{1, -1}};
  Vec<double> b = {0};
  Vec<double> c = {-1, 0};
  auto res = solve_lp(a, b, c);
  REQUIRE(res.status == LpResult<double>::kUnbounded);
}

TEST_CASE("solve_lp tolerates redundant rows") {
  Mat<rational> a = {{rational(1), rational(1)}, {rational(1), rational(1)}};
  Vec<rational> b = {rational(1), rational(1)};
  Vec<rational> c = {rational(0), rational(1)};
  auto res = solve_lp(a, b, c);
  REQUIRE(res.status == LpResult<rational>::kOptimal);
  REQUIRE(res.objective == rational(0));
  REQUIRE(res.x[0] == rational(1));
}

TEST_CASE("solve_lp with no constraints") {
  Mat<double> a;
  Vec<double> b;
  auto bounded = solve_lp(a, b, Vec<double>{1, 2});
  REQUIRE(bounded.status == LpResult<double>::kOptimal);
  REQUIRE(bounded.objective == Catch::Approx(0.0));
  auto ray = solve_lp(a, b, Vec<double>{-1, 2});
  REQUIRE(ray.status == LpResult<double>::kUnbounded);
}

TEST_CASE("lp_feasible_point satisfies the system it returns for") {
  Mat<rational> a = {{rational(1), rational(1), rational(0)},
                     {rational(0), rational(1), rational(2)}};
  Vec<rational> b = {rational(1), rat(1, 2)};
  auto p = lp_feasible_point(a, b);
  REQUIRE(p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    rational s(0);
    for (std::size_t j = 0; j < a[i].size(); ++j) s += a[i][j] * (*p)[j];
    REQUIRE(s == b[i]);
  }
  for (const auto& v : *p) REQUIRE(v >= rational(0));

  Mat<rational> bad = {{rational(1), rational(1)}};
  REQUIRE(!lp_feasible_point(bad, Vec<rational>{rational(-2)}));
}
