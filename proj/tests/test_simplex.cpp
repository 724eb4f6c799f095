#include "doctest.h"
#include "sfe/simplex.hpp"

using namespace sfe;

static lp::Problem two_vars() {
  lp::Problem p;
  p.num_vars = 2;
  p.lower = {0.0, 0.0};
  p.upper = {10.0, 10.0};
  p.objective = {1.0, 1.0};
  return p;
}

TEST_CASE("simple capacity constraint binds") {
  lp::Problem p = two_vars();
  p.rows.push_back({{1.0, 1.0}, lp::Rel::le, 1.0});
  lp::Result r = lp::solve(p);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.x[0] + r.x[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("equality row plus preference picks a vertex") {
  lp::Problem p = two_vars();
  p.objective = {2.0, 1.0};
  p.rows.push_back({{1.0, 1.0}, lp::Rel::eq, 3.0});
  lp::Result r = lp::solve(p);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.x[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.value == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("contradictory rows are infeasible") {
  lp::Problem p = two_vars();
  p.rows.push_back({{1.0, 0.0}, lp::Rel::ge, 5.0});
  p.rows.push_back({{1.0, 0.0}, lp::Rel::le, 4.0});
  CHECK(lp::solve(p).status == lp::Status::infeasible);
}

TEST_CASE("bound-infeasible row is caught") {
  lp::Problem p = two_vars();
  p.rows.push_back({{1.0, 1.0}, lp::Rel::ge, 25.0});  // above both uppers
  CHECK(lp::solve(p).status == lp::Status::infeasible);
}

TEST_CASE("redundant rows do not disturb the optimum") {
  lp::Problem p = two_vars();
  p.rows.push_back({{1.0, 1.0}, lp::Rel::le, 4.0});
  p.rows.push_back({{1.0, 1.0}, lp::Rel::le, 4.0});
  p.rows.push_back({{2.0, 2.0}, lp::Rel::le, 8.0});
  lp::Result r = lp::solve(p);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.value == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("negative objective prefers the lower bounds") {
  lp::Problem p = two_vars();
  p.lower = {1.0, 2.0};
  p.objective = {-1.0, -1.0};
  lp::Result r = lp::solve(p);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.x[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("maximin slack form used by the feasibility check") {
  // maximize t with x + t <= 1, x - t >= 0, x in [0, 1]: best x = 0.5
  lp::Problem p;
  p.num_vars = 2;  // x, t
  p.lower = {0.0, 0.0};
  p.upper = {1.0, 1.0};
  p.objective = {0.0, 1.0};
  p.rows.push_back({{1.0, 1.0}, lp::Rel::le, 1.0});
  p.rows.push_back({{1.0, -1.0}, lp::Rel::ge, 0.0});
  lp::Result r = lp::solve(p);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
}
