// Acceptance gate: every release-blocking property on one line each, with
// the tolerances pinned here and nowhere else.  Exit status is the number of
// failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sfe/costs.hpp"
#include "sfe/dispatch.hpp"
#include "sfe/errors.hpp"
#include "sfe/jsonio.hpp"
#include "sfe/netmodel.hpp"
#include "sfe/oracle.hpp"
#include "sfe/poa.hpp"
#include "sfe/powerflow.hpp"
#include "sfe/sweep.hpp"
#include "sfe/tightness.hpp"
#include "sfe/topology.hpp"
#include "testutil.hpp"

using namespace sfe;

namespace {

struct failure {
  std::string why;
};

void need(bool ok, const std::string& why) {
  if (!ok) throw failure{why};
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
      .count();
}

// every dispatch produced while the suites run, re-checked at the end
struct SolvedDispatch {
  Market market;
  DispatchResult result;
  bool reshaped = false;
};
std::vector<SolvedDispatch> solved;

void stash(const Market& m, const DispatchResult& r, bool reshaped) {
  solved.push_back({m, r, reshaped});
}

Market valid_random_market(std::mt19937_64& rng, int n) {
  for (int tries = 0; tries < 50; ++tries) {
    Market m = testutil::random_market(rng, n);
    if (validate_market(m).ok()) return m;
  }
  throw failure{"could not draw a valid random market"};
}

Market hub_market(std::size_t ng) {
  std::vector<BusId> buses;
  std::vector<Line> lines;
  for (std::size_t i = 1; i <= ng; ++i) buses.push_back(static_cast<BusId>(i));
  for (std::size_t i = 2; i <= ng; ++i)
    lines.push_back({1, static_cast<BusId>(i)});
  std::map<BusId, double> loads = {{1, 1.0}};
  std::vector<Generator> gens;
  for (std::size_t i = 1; i <= ng; ++i)
    gens.push_back({static_cast<BusId>(i), 0.0, 1.0,
                    CostFunction::linear(1.0 + 0.1 * static_cast<double>(i))});
  return Market(Network(buses, lines), loads, gens);
}

std::string ac1_bound_ordering() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const int markets = 200;
  for (int i = 0; i < markets; ++i) {
    Market m = valid_random_market(rng, 4 + (i % 17));
    PoaReport rep = price_of_anarchy(m);
    std::string tag = "market " + std::to_string(i);
    need(rep.poa >= 1.0 - 1e-9, tag + ": poa " + num(rep.poa) + " < 1");
    need(rep.poa <= rep.bound + 1e-9,
         tag + ": poa " + num(rep.poa) + " above bound " + num(rep.bound));
    need(rep.bound <= rep.bound_independent + 1e-9,
         tag + ": bound " + num(rep.bound) + " above capacity-free bound " +
             num(rep.bound_independent));
    stash(m, rep.optimal, false);
    stash(m, rep.equilibrium, true);
  }
  double dt = seconds(start);
  need(dt < 60.0, "took " + num(dt) + " s, budget 60 s");
  return std::to_string(markets) + " markets, " + num(dt) + " s";
}

std::string ac2_grid_equivalence() {
  std::mt19937_64 rng(202);
  const int markets = 20;
  for (int i = 0; i < markets; ++i) {
    Market m = [&] {
      for (int tries = 0; tries < 400; ++tries) {
        Market cand = testutil::random_market(rng, 4);
        if (cand.num_generators() == 3 && validate_market(cand).ok())
          return cand;
      }
      throw failure{"could not draw a three-generator market"};
    }();
    std::string tag = "market " + std::to_string(i);
    double step = m.total_demand() / 2000.0;

    DispatchResult eq = equilibrium_dispatch(m);
    stash(m, eq, true);
    std::vector<GenObjective> obj = modified_objectives(m);
    BruteForceResult bf = brute_force_dispatch(m, obj, step);

    double lipschitz = 0.0;
    for (std::size_t g = 0; g < obj.size(); ++g)
      lipschitz += obj[g].marginal_left(m.generators()[g].smax);
    double tol = 2.0 * lipschitz * step + 1e-9;
    need(bf.objective >= eq.objective - 1e-7,
         tag + ": grid beats the solver by " +
             num(eq.objective - bf.objective));
    need(bf.objective - eq.objective <= tol,
         tag + ": grid gap " + num(bf.objective - eq.objective) +
             " exceeds " + num(tol));

    ShiftFactors sf = build_shift_factors(m.network());
    std::vector<double> w = recover_bids(m, sf, eq);
    BestResponseReport br = best_response_check(m, sf, w, 1e-6);
    need(br.pass, tag + ": best response improves by " +
                      num(br.max_improvement));
  }
  return std::to_string(markets) + " markets";
}

std::string ac3_triangle_numbers() {
  Market m = testutil::load_fixture("market_t3.json");
  PoaReport rep = price_of_anarchy(m);
  stash(m, rep.optimal, false);
  stash(m, rep.equilibrium, true);
  need(std::abs(rep.poa - 1.1) <= 1e-6,
       "poa " + num(rep.poa) + " != 1.1 +- 1e-6");
  need(rep.bound == 2.0, "bound " + num(rep.bound) + " != 2.0 exactly");

  Market m05 = testutil::load_fixture("market_t3_f05.json");
  need(std::abs(poa_upper_bound(m05) - 5.0 / 3.0) <= 1e-12,
       "tight bound " + num(poa_upper_bound(m05)) + " != 5/3 +- 1e-12");
  auto terms = max_supply_terms(m05);
  need(std::abs(terms[0].value - 2.0) <= 1e-12,
       "max feasible supply " + num(terms[0].value) + " != 2");
  PoaReport rep05 = price_of_anarchy(m05);
  stash(m05, rep05.optimal, false);
  stash(m05, rep05.equilibrium, true);
  std::vector<double> wit = max_supply_witness(m05, 0);
  need(std::abs(wit[0] - 2.0) <= 1e-8,
       "witness dispatch ships " + num(wit[0]));
  return "bound 2.0, tight bound 5/3 witnessed";
}

std::string ac4_star_instance() {
  TightnessParams p;
  p.n = 4;
  p.demand = 4.0;
  p.t = 3.0;
  p.delta_cap = 2.4;
  p.slope = 0.1;
  TightnessInstance inst =
      build_instance(testutil::load_net_fixture("star4.json"), p);
  const Market& m = inst.market;

  DispatchResult ed = economic_dispatch(m);
  DispatchResult eq = equilibrium_dispatch(m);
  stash(m, ed, false);
  stash(m, eq, true);
  std::vector<double> want_opt = {3.4, 0.2, 0.2, 0.2};
  std::vector<double> want_eq = {3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  for (std::size_t i = 0; i < 4; ++i) {
    need(std::abs(ed.supply[i] - want_opt[i]) <= 1e-8,
         "cheap dispatch coordinate " + std::to_string(i) + " = " +
             num(ed.supply[i]));
    need(std::abs(eq.supply[i] - want_eq[i]) <= 1e-8,
         "equilibrium coordinate " + std::to_string(i) + " = " +
             num(eq.supply[i]));
  }

  PoaReport rep = price_of_anarchy(m);
  double analytic = analytical_poa(p);
  need(std::abs(analytic - 1.08579) <= 5e-6,
       "analytic ratio " + num(analytic) + " drifted from 1.08579");
  need(std::abs(rep.poa - analytic) <= 1e-6,
       "numeric poa " + num(rep.poa) + " vs analytic " + num(analytic));
  need(rep.bound == 1.425, "bound " + num(rep.bound) + " != 1.425 exactly");
  need(analytic_bound(p) == 1.425,
       "closed-form bound " + num(analytic_bound(p)) + " != 1.425 exactly");
  return "poa " + num(rep.poa) + ", bound 1.425";
}

std::string ac5_tightness_sweep() {
  auto start = std::chrono::steady_clock::now();
  const char* nets[] = {"star4.json", "path5.json", "triangle_pendant.json",
                        "mixed10.json"};
  int rows_total = 0;
  for (const char* name : nets) {
    Network net = testutil::load_net_fixture(name);
    SweepResult sr = tightness_gap(net, 0.01);
    need(sr.gap < 0.01, std::string(name) + ": certified gap " + num(sr.gap));
    double demand = static_cast<double>(net.num_buses());
    for (const SweepRow& row : sr.rows) {
      ++rows_total;
      std::string tag = std::string(name) + " step " + std::to_string(row.step);
      need(std::abs(row.poa_numeric - row.poa_analytic) <= 1e-5,
           tag + ": numeric " + num(row.poa_numeric) + " vs analytic " +
               num(row.poa_analytic));
      // rebuild the instance so the solves land in the kkt stash
      TightnessParams p;
      p.n = net.num_buses();
      p.demand = demand;
      p.t = row.t;
      p.delta_cap = row.d_hat1 - demand / static_cast<double>(net.num_buses());
      p.slope = row.slope;
      TightnessInstance inst = build_instance(net, p);
      DispatchResult ed = economic_dispatch(inst.market);
      DispatchResult eq = equilibrium_dispatch(inst.market);
      stash(inst.market, ed, false);
      stash(inst.market, eq, true);
      double poa = true_cost(inst.market, eq.supply) /
                   true_cost(inst.market, ed.supply);
      need(std::abs(poa - row.poa_analytic) <= 1e-5,
           tag + ": re-solved poa " + num(poa) + " vs analytic " +
               num(row.poa_analytic));
    }
  }
  double dt = seconds(start);
  need(dt < 120.0, "took " + num(dt) + " s, budget 120 s");
  return "4 networks, " + std::to_string(rows_total) + " rows, " + num(dt) +
         " s";
}

std::string ac6_flow_cross_oracle() {
  std::mt19937_64 rng(606);
  for (int i = 0; i < 100; ++i) {
    Network net = testutil::random_weakly_cyclic(rng, 4 + (i % 14));
    std::vector<double> inj = testutil::random_injection(rng, net.num_buses());
    std::string tag = "network " + std::to_string(i);

    ShiftFactors sf = build_shift_factors(net);
    std::vector<double> fa = line_flows(net, sf, inj);
    std::vector<double> fb = tree_cycle_flows(net, inj);
    double scale = 1.0;
    for (double v : fa) scale = std::max(scale, std::abs(v));
    for (std::size_t l = 0; l < fa.size(); ++l)
      need(std::abs(fa[l] - fb[l]) <= 1e-9 * scale,
           tag + ": oracle mismatch " + num(fa[l] - fb[l]) + " on line " +
               std::to_string(l));

    BusId other = net.buses()[net.num_buses() / 2];
    ShiftFactors sf2 = build_shift_factors(net, other);
    std::vector<double> fc = line_flows(net, sf2, inj);
    for (std::size_t l = 0; l < fa.size(); ++l)
      need(std::abs(fa[l] - fc[l]) <= 1e-9 * scale,
           tag + ": slack dependence " + num(fa[l] - fc[l]));

    CycleDecomposition dec = cycle_decomposition(net);
    for (const Cycle& cyc : dec.cycles) {
      double loop = 0.0;
      for (std::size_t e = 0; e < cyc.lines.size(); ++e) {
        const Line& ln = net.lines()[cyc.lines[e]];
        double sign = net.bus_index(ln.from) == cyc.nodes[e] ? 1.0 : -1.0;
        loop += sign * fa[cyc.lines[e]] / ln.b;
      }
      need(std::abs(loop) <= 1e-9 * scale,
           tag + ": loop residual " + num(loop));
    }
  }
  return "100 networks";
}

std::string ac7_capacity_free_reduction() {
  for (std::size_t ng = 3; ng <= 10; ++ng) {
    Market m = hub_market(ng);
    double k = static_cast<double>(ng) - 2.0;
    double want = 1.0 + 1.0 / k;
    need(poa_upper_bound(m) == want,
         "n_g " + std::to_string(ng) + ": bound " + num(poa_upper_bound(m)) +
             " != " + num(want));
    need(network_independent_bound(m) == want,
         "n_g " + std::to_string(ng) + ": capacity-free bound off");
  }
  return "n_g 3..10, exact";
}

std::string ac8_analytic_identities() {
  // cost sandwich: c <= reshaped c <= (1 + s/K) c at 1000 points per cost
  struct Probe {
    CostFunction cost;
    double k;
    double smax;
  };
  std::vector<Probe> probes;
  {
    Market t3 = testutil::load_fixture("market_t3.json");
    for (const Generator& g : t3.generators())
      probes.push_back({g.cost, 3.0, g.smax});
    Market star = testutil::load_fixture("market_star4.json");
    for (const Generator& g : star.generators())
      probes.push_back({g.cost, 8.0, g.smax});
    probes.push_back({CostFunction::quadratic(0.7, 1.3), 5.0, 4.0});
    probes.push_back(
        {CostFunction::piecewise_linear({1.0, 2.0}, {0.5, 1.0, 2.0}), 4.0,
         4.0});
  }
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const Probe& pr = probes[pi];
    ModifiedCost mc(pr.cost, pr.k);
    for (int i = 0; i < 1000; ++i) {
      double s = pr.smax * static_cast<double>(i) / 999.0;
      double c = pr.cost.value(s);
      double v = mc.value(s);
      double hi = (1.0 + s / pr.k) * c;
      need(c <= v + 1e-12 * (1.0 + std::abs(v)),
           "cost " + std::to_string(pi) + ": lower sandwich broken at s = " +
               num(s));
      need(v <= hi + 1e-12 * (1.0 + std::abs(hi)),
           "cost " + std::to_string(pi) + ": upper sandwich broken at s = " +
               num(s));
    }
  }

  // payoff derivative against central differences at smooth points
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.5, 6.0);
  const char* names[] = {"market_t3.json", "market_star4.json"};
  int checked = 0;
  for (const char* name : names) {
    Market m = testutil::load_fixture(name);
    std::size_t ng = m.num_generators();
    for (int it = 0; it < 10; ++it) {
      std::vector<double> w(ng);
      for (double& v : w) v = u(rng);
      std::vector<double> s = supply_from_bids(w, m.total_demand(), ng);
      for (std::size_t n = 0; n < ng; ++n) {
        bool near_kink = false;
        for (double kk : m.generators()[n].cost.kinks())
          if (std::abs(s[n] - kk) < 1e-3) near_kink = true;
        if (near_kink) continue;
        PayoffDerivative d = payoff_derivative(m, w, n);
        double h = 1e-6 * (1.0 + std::abs(w[n]));
        std::vector<double> wp = w, wm = w;
        wp[n] += h;
        wm[n] -= h;
        double fd = (profit(m, wp, n) - profit(m, wm, n)) / (2.0 * h);
        need(std::abs(d.right - fd) <= 1e-5 * (1.0 + std::abs(fd)),
             std::string(name) + ": derivative " + num(d.right) +
                 " vs difference " + num(fd));
        ++checked;
      }
    }
  }

  // every dispatch the suites produced satisfies its optimality system
  for (std::size_t i = 0; i < solved.size(); ++i) {
    const SolvedDispatch& sd = solved[i];
    ShiftFactors sf = build_shift_factors(sd.market.network());
    DispatchPolytope poly = dispatch_polytope(sd.market, sf);
    std::vector<GenObjective> obj = sd.reshaped
                                        ? modified_objectives(sd.market)
                                        : true_objectives(sd.market);
    KktInfo info =
        kkt_residual(poly, obj, sd.result.supply, sd.result.price,
                     sd.result.lambda_lo, sd.result.lambda_hi);
    need(info.max_residual() <= 1e-8,
         "dispatch " + std::to_string(i) + ": kkt residual " +
             num(info.max_residual()));
  }
  return std::to_string(probes.size() * 1000) + " sandwich points, " +
         std::to_string(checked) + " derivatives, " +
         std::to_string(solved.size()) + " kkt certificates";
}

std::string ac9_congestion_pattern() {
  Market m = testutil::make_case50();
  CongestionSweepConfig cfg;
  cfg.targets = {0.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0,
                 90.0};
  std::vector<CongestionRow> rows = congestion_sweep(m, cfg);

  std::vector<const CongestionRow*> reached;
  for (const CongestionRow& r : rows)
    if (r.reachable) reached.push_back(&r);
  need(reached.size() >= 5, "only " + std::to_string(reached.size()) +
                                " targets reachable");
  int congested_rows_seen = 0;
  for (const CongestionRow* r : reached)
    if (r->achieved >= 5.0) ++congested_rows_seen;
  need(congested_rows_seen >= 3,
       "only " + std::to_string(congested_rows_seen) +
           " reachable rows at or above 5% congestion");

  std::sort(reached.begin(), reached.end(),
            [](const CongestionRow* a, const CongestionRow* b) {
              return a->achieved < b->achieved;
            });
  for (std::size_t i = 1; i < reached.size(); ++i) {
    if (reached[i]->achieved > reached[i - 1]->achieved + 1e-12)
      need(reached[i]->bound <= reached[i - 1]->bound + 1e-9,
           "bound rises from " + num(reached[i - 1]->bound) + " to " +
               num(reached[i]->bound) + " as congestion grows");
  }
  for (const CongestionRow* r : reached)
    if (r->achieved >= 5.0)
      need(r->bound < r->bound_independent - 1e-9,
           "bound " + num(r->bound) + " not strictly below " +
               num(r->bound_independent) + " at " + num(r->achieved) + "%");
  return std::to_string(reached.size()) + " reachable targets";
}

struct Criterion {
  const char* name;
  std::function<std::string()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"AC1 bound ordering on 200 random weakly-cyclic markets",
       ac1_bound_ordering},
      {"AC2 grid-search equivalence on 20 three-generator markets",
       ac2_grid_equivalence},
      {"AC3 triangle desk numbers", ac3_triangle_numbers},
      {"AC4 tight star instance", ac4_star_instance},
      {"AC5 tightness sweep certifies gap < 0.01", ac5_tightness_sweep},
      {"AC6 power-flow cross-oracle on 100 random networks",
       ac6_flow_cross_oracle},
      {"AC7 capacity-free bound reduction, 3..10 generators",
       ac7_capacity_free_reduction},
      {"AC8 cost sandwich, payoff derivative, kkt certificates",
       ac8_analytic_identities},
      {"AC9 congestion sweep pattern on the 50-bus case",
       ac9_congestion_pattern},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    bool pass = false;
    std::string note;
    try {
      note = c.run();
      pass = true;
    } catch (const failure& f) {
      note = f.why;
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    if (!pass) ++failed;
    std::printf("%-58s %s%s%s\n", c.name, pass ? "pass" : "FAIL",
                note.empty() ? "" : "  — ", note.c_str());
    std::fflush(stdout);
  }
  return failed;
}
