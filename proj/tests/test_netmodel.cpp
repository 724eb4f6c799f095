#include <map>
#include <vector>

#include "doctest.h"
#include "sfe/errors.hpp"
#include "sfe/jsonio.hpp"
#include "sfe/matpower.hpp"
#include "sfe/netmodel.hpp"
#include "testutil.hpp"

using namespace sfe;

static Network triangle(double f = kUnlimited) {
  std::vector<Line> lines = {{1, 2, 1.0, f}, {1, 3, 1.0, f}, {2, 3, 1.0, f}};
  return Network({1, 2, 3}, lines);
}

TEST_CASE("network construction validates structure") {
  CHECK_THROWS_AS(Network({1, 2}, {{1, 3, 1.0, kUnlimited}}), validation_error);
  CHECK_THROWS_AS(Network({1, 2}, {{1, 1, 1.0, kUnlimited}}), validation_error);
  CHECK_THROWS_AS(
      Network({1, 2}, {{1, 2, 1.0, kUnlimited}, {2, 1, 1.0, kUnlimited}}),
      validation_error);
  CHECK_THROWS_AS(Network({1, 2}, {{1, 2, -1.0, kUnlimited}}), validation_error);
  // disconnected
  CHECK_THROWS_AS(Network({1, 2, 3, 4},
                          {{1, 2, 1.0, kUnlimited}, {3, 4, 1.0, kUnlimited}}),
                  validation_error);
}

TEST_CASE("bus indexing is sorted and incidence matches") {
  Network net({3, 1, 2}, {{1, 2, 1.0, kUnlimited}, {2, 3, 1.0, kUnlimited}});
  CHECK(net.buses() == std::vector<BusId>{1, 2, 3});
  CHECK(net.bus_index(1) == 0);
  CHECK(net.bus_index(3) == 2);
  CHECK_THROWS_AS(net.bus_index(9), validation_error);
  CHECK(net.incident()[net.bus_index(2)].size() == 2);
}

TEST_CASE("market enforces structural rules") {
  Network net = triangle();
  std::map<BusId, double> loads = {{1, 1.0}, {2, 1.0}, {3, 1.0}};
  Generator g1{1, 0.0, 3.0, CostFunction::linear(1.0)};
  Generator g2{2, 0.0, 3.0, CostFunction::linear(1.5)};
  Generator g3{3, 0.0, 3.0, CostFunction::linear(2.0)};

  CHECK_THROWS_AS(Market(net, {{9, 1.0}}, {g1, g2, g3}), validation_error);
  Generator bad_bus{7, 0.0, 1.0, CostFunction::linear(1.0)};
  CHECK_THROWS_AS(Market(net, loads, {g1, g2, bad_bus}), validation_error);
  Generator dup{1, 0.0, 1.0, CostFunction::linear(1.0)};
  CHECK_THROWS_AS(Market(net, loads, {g1, dup, g2}), validation_error);
  Generator inverted{3, 2.0, 1.0, CostFunction::linear(1.0)};
  CHECK_THROWS_AS(Market(net, loads, {g1, g2, inverted}), validation_error);

  Market m(net, loads, {g3, g1, g2});  // any order in
  CHECK(m.generators()[0].bus == 1);   // canonical order out
  CHECK(m.generators()[2].bus == 3);
  CHECK(m.generator_index(2) == 1);
  CHECK(m.generator_index(5) == -1);
  CHECK(m.total_demand() == doctest::Approx(3.0));
}

TEST_CASE("flow sentinel dominates finite limits") {
  Market m = testutil::load_fixture("market_t3.json");
  CHECK(m.flow_sentinel() > 10.0);
  for (const Line& l : m.network().lines())
    if (l.limited()) CHECK(m.flow_sentinel() > l.f);
}

TEST_CASE("validation accepts the triangle market") {
  ValidationReport rep = validate_market(testutil::load_fixture("market_t3.json"));
  CHECK(rep.ok());
  for (const auto& c : rep.checks) CHECK(c.pass);
  CHECK(rep.feasibility_slack > 0.0);
}

TEST_CASE("validation flags a two-generator market") {
  Market m = testutil::load_fixture("market_2gen.json");
  ValidationReport rep = validate_market(m);
  CHECK_FALSE(rep.ok());
  bool found = false;
  for (const auto& c : rep.checks)
    if (c.name == "more-than-two-generators") {
      found = true;
      CHECK_FALSE(c.pass);
    }
  CHECK(found);
}

TEST_CASE("validation flags demand that cannot be strictly served") {
  // bus 2 must import ~2 units over lines that carry 0.01 each
  Network net = triangle(0.01);
  std::map<BusId, double> loads = {{1, 0.25}, {2, 2.5}, {3, 0.25}};
  std::vector<Generator> gens = {
      {1, 0.0, 3.0, CostFunction::linear(1.0)},
      {2, 0.0, 0.5, CostFunction::linear(1.5)},
      {3, 0.0, 3.0, CostFunction::linear(2.0)}};
  ValidationReport rep = validate_market(Market(net, loads, gens));
  CHECK_FALSE(rep.ok());
  bool found = false;
  for (const auto& c : rep.checks)
    if (c.name == "strict-feasibility") {
      found = true;
      CHECK_FALSE(c.pass);
    }
  CHECK(found);
}

TEST_CASE("pinned lines require no slack") {
  // forcing every line to zero flow leaves the self-sufficient dispatch
  Network net = triangle(0.0);
  std::map<BusId, double> loads = {{1, 1.0}, {2, 1.0}, {3, 1.0}};
  std::vector<Generator> gens = {
      {1, 0.0, 3.0, CostFunction::linear(1.0)},
      {2, 0.0, 3.0, CostFunction::linear(1.5)},
      {3, 0.0, 3.0, CostFunction::linear(2.0)}};
  CHECK(validate_market(Market(net, loads, gens)).ok());
}

TEST_CASE("dispensable capacity check") {
  Network net = triangle();
  std::map<BusId, double> loads = {{1, 1.0}, {2, 1.0}, {3, 1.0}};
  // without generator 1 the others cover only 2 < 3
  std::vector<Generator> gens = {
      {1, 0.0, 5.0, CostFunction::linear(1.0)},
      {2, 0.0, 1.0, CostFunction::linear(1.5)},
      {3, 0.0, 1.0, CostFunction::linear(2.0)}};
  ValidationReport rep = validate_market(Market(net, loads, gens));
  CHECK_FALSE(rep.ok());
  bool found = false;
  for (const auto& c : rep.checks)
    if (c.name == "dispensable-capacity" && !c.pass) found = true;
  CHECK(found);
}

TEST_CASE("json round trip is idempotent") {
  std::string text = read_text_file(testutil::data_path("market_t3.json"));
  Market m = load_market_json(text);
  std::string once = market_to_json(m);
  std::string twice = market_to_json(load_market_json(once));
  CHECK(once == twice);
}

TEST_CASE("json loader reports malformed documents") {
  CHECK_THROWS_AS(load_market_json("{"), parse_error);
  CHECK_THROWS_AS(load_market_json("{}"), parse_error);
  CHECK_THROWS_AS(load_market_json(R"({"buses":[1,2],"lines":"no"})"),
                  parse_error);
}

TEST_CASE("graph-only documents ignore market data") {
  Network net = testutil::load_net_fixture("star4.json");
  CHECK(net.num_buses() == 4);
  CHECK(net.num_lines() == 3);
  for (const Line& l : net.lines()) {
    CHECK(l.b == 1.0);
    CHECK_FALSE(l.limited());
  }
}

TEST_CASE("case file converts to per-unit quantities") {
  Market m = load_matpower_file(testutil::data_path("case5.m"));
  CHECK(m.network().num_buses() == 5);
  REQUIRE(m.network().num_lines() == 5);
  const Line& l12 = m.network().lines()[0];
  CHECK(l12.b == doctest::Approx(10.0));       // 1 / x with x = 0.1
  CHECK(l12.f == doctest::Approx(1.5));        // 150 MW over 100 MVA
  CHECK_FALSE(m.network().lines()[2].limited());  // rateA = 0
  CHECK(m.load(2) == doctest::Approx(1.2));
  CHECK(m.total_demand() == doctest::Approx(3.0));

  REQUIRE(m.num_generators() == 3);
  const Generator& g1 = m.generators()[0];
  CHECK(g1.bus == 1);
  CHECK(g1.smax == doctest::Approx(3.0));
  CHECK(g1.cost.kind() == CostKind::quadratic);
  CHECK(g1.cost.a() == doctest::Approx(1000.0));  // 0.1 * base^2
  CHECK(g1.cost.b() == doctest::Approx(500.0));   // 5 * base
  const Generator& g5 = m.generators()[2];
  CHECK(g5.cost.kind() == CostKind::linear);
  CHECK(g5.cost.a() == doctest::Approx(1200.0));
}

TEST_CASE("case file cost rules are enforced") {
  std::string base = read_text_file(testutil::data_path("case5.m"));
  const std::string row = "2\t0\t0\t3\t0.1\t5\t0";
  REQUIRE(base.find(row) != std::string::npos);

  // nonzero constant term
  std::string bad = base;
  bad.replace(bad.find(row), row.size(), "2\t0\t0\t3\t0.1\t5\t9");
  CHECK_THROWS_AS(parse_matpower(bad), parse_error);

  // piecewise model code
  bad = base;
  bad.replace(bad.find(row), row.size(), "1\t0\t0\t3\t0.1\t5\t0");
  CHECK_THROWS_AS(parse_matpower(bad), parse_error);

  // missing gencost block entirely
  std::string headless = base.substr(0, base.find("%% generator cost data"));
  CHECK_THROWS_AS(parse_matpower(headless), parse_error);
  MatpowerOptions opts;
  opts.default_quadratic = {0.0, 7.0};
  Market m = parse_matpower(headless, opts);
  CHECK(m.generators()[0].cost.kind() == CostKind::linear);
  CHECK(m.generators()[0].cost.a() == doctest::Approx(7.0));
}

TEST_CASE("case file parse errors carry line numbers") {
  std::string base = read_text_file(testutil::data_path("case5.m"));
  std::string bad = base;
  bad.replace(bad.find("0.1\t0"), 3, "x.1");  // first branch reactance
  try {
    parse_matpower(bad);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("random markets satisfy the standing assumptions") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10; ++i) {
    Market m = testutil::random_market(rng, 4 + (int)(rng() % 17));
    CHECK(validate_market(m).ok());
  }
}
