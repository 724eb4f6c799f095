#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "sfe/dispatch.hpp"
#include "sfe/errors.hpp"
#include "sfe/netmodel.hpp"
#include "sfe/poa.hpp"
#include "sfe/tightness.hpp"
#include "sfe/topology.hpp"
#include "testutil.hpp"

using namespace sfe;

namespace {

TightnessParams star_params() {
  TightnessParams p;
  p.n = 4;
  p.demand = 4.0;
  p.t = 3.0;
  p.delta_cap = 2.4;
  p.slope = 0.1;
  return p;
}

}  // namespace

TEST_CASE("parameter validation") {
  TightnessParams p = star_params();
  CHECK_NOTHROW(validate_params(p));

  TightnessParams q = p;
  q.n = 3;
  CHECK_THROWS_AS(validate_params(q), validation_error);
  q = p;
  q.demand = 0.0;
  CHECK_THROWS_AS(validate_params(q), validation_error);
  q = p;
  q.t = 1.0;  // equal to the per-node load
  CHECK_THROWS_AS(validate_params(q), validation_error);
  q = p;
  q.t = q.d_hat1();
  CHECK_THROWS_AS(validate_params(q), validation_error);
  q = p;
  q.delta_cap = 3.0;  // pushes the cheap share up to the full demand
  CHECK_THROWS_AS(validate_params(q), validation_error);
  q = p;
  q.slope = 0.0;
  CHECK_THROWS_AS(validate_params(q), validation_error);
  q = p;
  q.slope = 1.0;
  CHECK_THROWS_AS(validate_params(q), validation_error);
}

TEST_CASE("derived quantities of the star parameters") {
  TightnessParams p = star_params();
  CHECK(p.d_hat1() == doctest::Approx(3.4).epsilon(1e-15));
  CHECK(p.alpha() == doctest::Approx(1.32).epsilon(1e-12));
  CHECK(analytic_bound(p) == 1.425);
  CHECK(analytical_poa(p) == doctest::Approx(1.62 / 1.492).epsilon(1e-12));
}

TEST_CASE("radial limits follow the subtree sizes") {
  Network net = testutil::load_net_fixture("path5.json");
  SpanningTree st = spanning_tree(net);
  CHECK(tree_center(net, st) == 3);
  RootedTree rt = root_tree(net, st, net.bus_index(3));
  std::vector<double> f = radial_flow_limits(net, rt, 2.4);
  std::vector<double> want = {0.6, 1.2, 1.2, 0.6};  // line order 12,23,34,45
  REQUIRE(f.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(f[i] == doctest::Approx(want[i]).epsilon(1e-15));

  Network star = testutil::load_net_fixture("star4.json");
  SpanningTree sst = spanning_tree(star);
  RootedTree srt = root_tree(star, sst, star.bus_index(tree_center(star, sst)));
  // 2.4/3 lands one ulp under 0.8, so compare up to rounding
  for (double v : radial_flow_limits(star, srt, 2.4))
    CHECK(v == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("cycle adjustment zeroes the loop sum") {
  double d = 2.4;
  std::vector<double> flows = {2.0 * d / 7.0, d / 7.0, 0.0};
  std::vector<double> b = {1.0, 1.0, 1.0};
  double omega = cycle_adjustment(flows, b);
  CHECK(omega == doctest::Approx(-d / 7.0).epsilon(1e-15));
  CHECK(flows[0] == doctest::Approx(d / 7.0).epsilon(1e-15));
  CHECK(flows[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(flows[2] == doctest::Approx(-d / 7.0).epsilon(1e-15));

  std::vector<double> g = {1.0, 1.0, 1.0};
  std::vector<double> bb = {2.0, 1.0, 1.0};
  cycle_adjustment(g, bb);
  double loop = 0.0;
  for (std::size_t i = 0; i < 3; ++i) loop += g[i] / bb[i];
  CHECK(std::abs(loop) <= 1e-15);

  std::vector<double> short_b = {1.0};
  CHECK_THROWS_AS(cycle_adjustment(g, short_b), std::invalid_argument);
}

TEST_CASE("admittance balancing keeps the flows and fixes the loop") {
  std::vector<double> flows = {1.2, 0.3, -0.5, 0.0};
  std::vector<double> b = admittance_balancing(flows);
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 1.0);
  CHECK(b[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(b[3] == 1.0);
  double loop = 0.0;
  for (std::size_t i = 0; i < flows.size(); ++i) loop += flows[i] / b[i];
  CHECK(std::abs(loop) <= 1e-12);

  std::vector<double> one_signed = {1.0, 2.0, 0.0};
  CHECK_THROWS_AS(admittance_balancing(one_signed), validation_error);
  std::vector<double> negative = {-1.0, -2.0};
  CHECK_THROWS_AS(admittance_balancing(negative), validation_error);
}

TEST_CASE("star instance matches the frozen market") {
  Network net = testutil::load_net_fixture("star4.json");
  TightnessInstance inst = build_instance(net, star_params());

  const Market& m = inst.market;
  REQUIRE(m.num_generators() == 4);
  CHECK(m.generators()[0].cost.kinks() == std::vector<double>{3.0});
  CHECK(m.generators()[0].cost.slopes() ==
        std::vector<double>{0.1, 1.0});
  for (std::size_t i = 1; i < 4; ++i)
    CHECK(m.generators()[i].cost.a() == doctest::Approx(1.32).epsilon(1e-12));
  for (const Generator& g : m.generators()) {
    CHECK(g.smin == 0.0);
    CHECK(g.smax == 4.0);
  }
  for (double d : m.loads()) CHECK(d == 1.0);
  for (const Line& l : m.network().lines()) {
    CHECK(l.f == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(l.b == 1.0);
  }
  CHECK(inst.original_bus == std::vector<BusId>{1, 2, 3, 4});
  CHECK(inst.bound == 1.425);
  CHECK(inst.poa_analytic == doctest::Approx(1.62 / 1.492).epsilon(1e-12));
  CHECK(validate_market(m).ok());

  DispatchResult ed = economic_dispatch(m);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(ed.supply[i] ==
          doctest::Approx(inst.supply_optimal[i]).epsilon(1e-7));
  // the cheap dispatch saturates every line
  for (std::size_t r = 0; r < ed.row_flows.size(); ++r)
    CHECK(std::abs(ed.row_flows[r]) == doctest::Approx(0.8).epsilon(1e-8));
  DispatchResult eq = equilibrium_dispatch(m);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(eq.supply[i] ==
          doctest::Approx(inst.supply_equilibrium[i]).epsilon(1e-7));
}

TEST_CASE("instance construction handles cycles") {
  Network net = testutil::load_net_fixture("triangle_pendant.json");
  TightnessInstance inst = build_instance(net, star_params());
  const Market& m = inst.market;
  CHECK(validate_market(m).ok());

  // two branches of the triangle meet at the center: the chord stays pinned
  const Network& nn = m.network();
  bool found_pinned = false;
  for (const Line& l : nn.lines())
    if (l.f == 0.0) found_pinned = true;
  CHECK(found_pinned);

  DispatchResult ed = economic_dispatch(m);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(ed.supply[i] ==
          doctest::Approx(inst.supply_optimal[i]).epsilon(1e-6));
  PoaReport rep = price_of_anarchy(m);
  CHECK(rep.poa == doctest::Approx(inst.poa_analytic).epsilon(1e-6));
  CHECK(rep.poa <= inst.bound + 1e-9);
}

TEST_CASE("instance construction handles mixed topologies") {
  Network net = testutil::load_net_fixture("mixed10.json");
  TightnessParams p;
  p.demand = 10.0;
  p.t = 5.0;
  p.delta_cap = 6.0;
  p.slope = 0.2;
  TightnessInstance inst = build_instance(net, p);
  CHECK(validate_market(inst.market).ok());
  // the leaves share one linear price, so the cheapest dispatch is a face:
  // only the center's share (and hence the cost) is pinned down
  DispatchResult ed = economic_dispatch(inst.market);
  CHECK(ed.supply[0] == doctest::Approx(inst.supply_optimal[0]).epsilon(1e-6));
  CHECK(ed.kkt.max_residual() <= 1e-7);
  double total = 0.0;
  for (double s : ed.supply) total += s;
  CHECK(total == doctest::Approx(p.demand).epsilon(1e-9));
  PoaReport rep = price_of_anarchy(inst.market);
  CHECK(rep.poa == doctest::Approx(inst.poa_analytic).epsilon(1e-6));
  CHECK(rep.poa <= inst.bound + 1e-9);
}

TEST_CASE("the sweep certifies the requested gap") {
  Network net = testutil::load_net_fixture("star4.json");

  SweepResult one = tightness_gap(net, 1.0);
  REQUIRE(one.rows.size() == 1);
  const SweepRow& r0 = one.rows[0];
  CHECK(r0.step == 0);
  CHECK(r0.t == doctest::Approx(2.75).epsilon(1e-15));
  CHECK(r0.d_hat1 == doctest::Approx(3.75).epsilon(1e-15));
  CHECK(r0.slope == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(r0.bound == doctest::Approx(1.46875).epsilon(1e-15));
  CHECK(r0.gap == doctest::Approx(r0.bound - r0.poa_analytic));
  CHECK(one.gap == r0.gap);
  CHECK(one.gap < 1.0);

  SweepResult fine = tightness_gap(net, 0.05);
  CHECK(fine.gap < 0.05);
  CHECK(fine.rows.size() >= 2);
  double prev_t = 0.0;
  for (const SweepRow& row : fine.rows) {
    CHECK(row.t > prev_t);
    prev_t = row.t;
    CHECK(row.poa_numeric == doctest::Approx(row.poa_analytic).epsilon(1e-5));
    CHECK(row.poa_analytic <= row.bound);
    CHECK(row.gap == doctest::Approx(row.bound - row.poa_analytic));
  }
  CHECK(fine.rows.back().gap == fine.gap);
}

TEST_CASE("the sweep rejects bad inputs") {
  Network net = testutil::load_net_fixture("star4.json");
  CHECK_THROWS_AS(tightness_gap(net, 0.0), std::invalid_argument);

  // two triangles glued along an edge: that edge lies on two cycles
  std::vector<Line> lines = {{1, 2}, {2, 3}, {1, 3}, {1, 4}, {3, 4}};
  Network glued({1, 2, 3, 4}, lines);
  CHECK_THROWS_AS(tightness_gap(glued, 0.5), unsupported_error);
  CHECK_THROWS_AS(build_instance(glued, star_params()), unsupported_error);
}
