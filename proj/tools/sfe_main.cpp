// Command-line front end: analyze a market, evaluate the topology-aware
// efficiency bound, run the tightness sweep, run the congestion sweep,
// verify a case end to end, and convert case files to the JSON schema.
//
// Exit codes: 0 success, 2 input/validation problem, 3 numeric failure.
// Errors additionally emit a one-line JSON payload on stderr.
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfe/dispatch.hpp"
#include "sfe/errors.hpp"
#include "sfe/jsonio.hpp"
#include "sfe/matpower.hpp"
#include "sfe/netmodel.hpp"
#include "sfe/oracle.hpp"
#include "sfe/poa.hpp"
#include "sfe/powerflow.hpp"
#include "sfe/sweep.hpp"
#include "sfe/tightness.hpp"
#include "sfe/topology.hpp"

namespace {

using nlohmann::json;

// Shortest round-tripping decimal form; keeps the CSV columns stable and
// machine-parseable.
std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  sfe::write_text_file(path, text);
}

struct InputOptions {
  std::string path;
  std::string format = "auto";
  std::vector<double> default_quadratic;  // empty or {a, b}
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--input", in.path, "market file to read")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--format", in.format,
                  "input format; auto picks matpower for .m files")
      ->check(CLI::IsMember({"auto", "matpower", "json"}));
  cmd->add_option("--default-quadratic", in.default_quadratic,
                  "cost a,b applied when a case file has no cost block")
      ->delimiter(',')
      ->expected(2);
}

sfe::Market load_market(const InputOptions& in) {
  std::string format = in.format;
  if (format == "auto") {
    auto dot = in.path.rfind('.');
    format = (dot != std::string::npos && in.path.substr(dot) == ".m")
                 ? "matpower"
                 : "json";
  }
  if (format == "matpower") {
    sfe::MatpowerOptions o;
    if (!in.default_quadratic.empty())
      o.default_quadratic =
          std::make_pair(in.default_quadratic[0], in.default_quadratic[1]);
    return sfe::load_matpower_file(in.path, o);
  }
  return sfe::load_market_file(in.path);
}

void require_valid(const sfe::Market& m) {
  sfe::ValidationReport rep = sfe::validate_market(m);
  if (rep.ok()) return;
  std::string msg = "market fails validation:";
  for (const auto& c : rep.checks)
    if (!c.pass) msg += " [" + c.name + "] " + c.detail;
  throw sfe::validation_error(msg);
}

double checked_tolerance(double tol) {
  if (!(tol > 0.0) || tol > 1e-2)
    throw sfe::validation_error("tolerance must lie in (0, 1e-2]");
  return tol;
}

struct CongestedLine {
  sfe::BusId from = 0, to = 0;
  double limit = 0.0, flow = 0.0;
};

std::vector<CongestedLine> congested_report(const sfe::Market& m,
                                            const sfe::DispatchPolytope& poly,
                                            const std::vector<double>& flows,
                                            double threshold) {
  std::vector<CongestedLine> out;
  for (std::size_t r : sfe::congested_rows(poly, flows, threshold)) {
    const sfe::Line& l = m.network().lines()[poly.line_index[r]];
    out.push_back({l.from, l.to, poly.limit[r], flows[r]});
  }
  return out;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeConfig {
  InputOptions in;
  sfe::BusId slack = 0;
  bool has_slack = false;
  double tolerance = 1e-11;
  double threshold = 1e-6;
  std::string output;
  std::string output_format = "json";
};

int run_analyze(const AnalyzeConfig& cfg) {
  sfe::Market m = load_market(cfg.in);
  require_valid(m);
  sfe::SolveOptions opts;
  opts.tol = checked_tolerance(cfg.tolerance);

  std::optional<sfe::BusId> slack;
  if (cfg.has_slack) slack = cfg.slack;
  sfe::ShiftFactors sf = sfe::build_shift_factors(m.network(), slack);
  sfe::DispatchPolytope poly = sfe::dispatch_polytope(m, sf);

  sfe::PoaReport rep = sfe::price_of_anarchy(m, opts);
  std::vector<CongestedLine> congested = congested_report(
      m, poly, rep.equilibrium.row_flows, cfg.threshold);

  if (cfg.output_format == "csv") {
    std::ostringstream os;
    os << "poa,bound,bound_independent,argmax_bus,cost_optimal,"
          "cost_equilibrium,price_optimal,price_equilibrium,congested_lines\n";
    os << fmt(rep.poa) << ',' << fmt(rep.bound) << ','
       << fmt(rep.bound_independent) << ',' << rep.bound_argmax_bus << ','
       << fmt(rep.cost_optimal) << ',' << fmt(rep.cost_equilibrium) << ','
       << fmt(rep.optimal.price) << ',' << fmt(rep.equilibrium.price) << ',';
    for (std::size_t i = 0; i < congested.size(); ++i)
      os << (i ? ";" : "") << congested[i].from << '-' << congested[i].to;
    os << '\n';
    emit(cfg.output, os.str());
    return 0;
  }

  json doc;
  doc["poa"] = rep.poa;
  doc["bound"] = rep.bound;
  doc["bound_independent"] = rep.bound_independent;
  doc["bound_argmax_bus"] = rep.bound_argmax_bus;
  doc["cost_optimal"] = rep.cost_optimal;
  doc["cost_equilibrium"] = rep.cost_equilibrium;
  json gens = json::array();
  for (std::size_t n = 0; n < m.num_generators(); ++n) {
    const sfe::MaxSupplyTerm& t = rep.terms[n];
    json g;
    g["bus"] = m.generators()[n].bus;
    g["supply_optimal"] = rep.optimal.supply[n];
    g["supply_equilibrium"] = rep.equilibrium.supply[n];
    g["cap"] = t.cap;
    g["residual"] = t.residual;
    g["imports"] = t.imports;
    g["max_supply"] = t.value;
    gens.push_back(g);
  }
  doc["generators"] = gens;
  json lines = json::array();
  for (const CongestedLine& c : congested) {
    json l;
    l["from"] = c.from;
    l["to"] = c.to;
    l["limit"] = c.limit;
    l["flow"] = c.flow;
    lines.push_back(l);
  }
  doc["congested_lines"] = lines;
  json solver;
  solver["optimal"] = {{"price", rep.optimal.price},
                       {"iterations", rep.optimal.iterations},
                       {"kkt_residual", rep.optimal.kkt.max_residual()}};
  solver["equilibrium"] = {{"price", rep.equilibrium.price},
                           {"iterations", rep.equilibrium.iterations},
                           {"kkt_residual", rep.equilibrium.kkt.max_residual()}};
  doc["solver"] = solver;
  emit(cfg.output, doc.dump(2) + "\n");
  return 0;
}

// ------------------------------------------------------------------ bound

struct BoundConfig {
  InputOptions in;
  std::string output;
  std::string output_format = "json";
  std::string topology_csv;
};

int run_bound(const BoundConfig& cfg) {
  sfe::Market m = load_market(cfg.in);
  require_valid(m);
  double bound = sfe::poa_upper_bound(m);
  double indep = sfe::network_independent_bound(m);
  std::vector<sfe::MaxSupplyTerm> terms = sfe::max_supply_terms(m);
  sfe::BusId argmax = terms.empty() ? 0 : terms.front().bus;
  double best = terms.empty() ? 0.0 : terms.front().value;
  for (const auto& t : terms)
    if (t.value > best) {
      best = t.value;
      argmax = t.bus;
    }

  if (!cfg.topology_csv.empty()) {
    const sfe::Network& net = m.network();
    sfe::CycleDecomposition dec = sfe::cycle_decomposition(net);
    double sentinel = m.flow_sentinel();
    std::ostringstream os;
    os << "node,neighbor,f,f_hat,partition_part,cycle\n";
    for (sfe::BusId node : net.buses()) {
      sfe::NeighborPartition part = sfe::neighbor_partition(net, node, dec);
      std::vector<sfe::EffectiveLimit> lims =
          sfe::effective_flow_limits(net, part, sentinel);
      for (const sfe::EffectiveLimit& el : lims) {
        int part_idx = -1;
        for (std::size_t i = 0; i < part.parts.size(); ++i)
          for (sfe::BusId mbr : part.parts[i].members)
            if (mbr == el.neighbor) part_idx = (int)i;
        int cyc = dec.line_cycle[el.line];
        os << node << ',' << el.neighbor << ',' << fmt(el.f) << ','
           << fmt(el.f_hat) << ',' << part_idx << ',';
        if (cyc >= 0) os << cyc;
        os << '\n';
      }
    }
    sfe::write_text_file(cfg.topology_csv, os.str());
  }

  if (cfg.output_format == "csv") {
    std::ostringstream os;
    os << "bound,bound_independent,argmax_bus\n";
    os << fmt(bound) << ',' << fmt(indep) << ',' << argmax << '\n';
    emit(cfg.output, os.str());
    return 0;
  }
  json doc;
  doc["bound"] = bound;
  doc["bound_independent"] = indep;
  doc["argmax_bus"] = argmax;
  json jt = json::array();
  for (const auto& t : terms)
    jt.push_back({{"bus", t.bus},
                  {"cap", t.cap},
                  {"residual", t.residual},
                  {"imports", t.imports},
                  {"max_supply", t.value}});
  doc["terms"] = jt;
  emit(cfg.output, doc.dump(2) + "\n");
  return 0;
}

// -------------------------------------------------------------- tightness

struct TightnessConfig {
  std::string network;
  double epsilon = 0.0;
  std::string output;
};

int run_tightness(const TightnessConfig& cfg) {
  if (!(cfg.epsilon > 0.0))
    throw sfe::validation_error("epsilon must be positive");
  sfe::Network net = sfe::load_network_file(cfg.network);
  sfe::SweepResult res = sfe::tightness_gap(net, cfg.epsilon);
  std::ostringstream os;
  os << "step,t,d_hat1,delta,alpha,poa_analytic,poa_numeric,bound,gap\n";
  for (const sfe::SweepRow& r : res.rows)
    os << r.step << ',' << fmt(r.t) << ',' << fmt(r.d_hat1) << ','
       << fmt(r.slope) << ',' << fmt(r.alpha) << ',' << fmt(r.poa_analytic)
       << ',' << fmt(r.poa_numeric) << ',' << fmt(r.bound) << ','
       << fmt(r.gap) << '\n';
  emit(cfg.output, os.str());
  return 0;
}

// ------------------------------------------------------- congestion sweep

struct CongestionConfig {
  InputOptions in;
  std::vector<double> targets = {0, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90};
  double threshold = 1e-6;
  double scale_tol = 1e-3;
  double tolerance = 1e-11;
  std::string output;
};

int run_congestion(const CongestionConfig& cfg) {
  sfe::Market m = load_market(cfg.in);
  require_valid(m);
  sfe::CongestionSweepConfig sc;
  sc.targets = cfg.targets;
  sc.threshold = cfg.threshold;
  sc.scale_tol = cfg.scale_tol;
  sc.solve.tol = checked_tolerance(cfg.tolerance);
  std::vector<sfe::CongestionRow> rows = sfe::congestion_sweep(m, sc);
  std::ostringstream os;
  os << "target_pct,achieved_pct,scale,poa,bound,bound_independent,status\n";
  for (const sfe::CongestionRow& r : rows)
    os << fmt(r.target) << ',' << fmt(r.achieved) << ',' << fmt(r.scale)
       << ',' << fmt(r.poa) << ',' << fmt(r.bound) << ','
       << fmt(r.bound_independent) << ','
       << (r.reachable ? "ok" : "unreachable") << '\n';
  emit(cfg.output, os.str());
  return 0;
}

// ----------------------------------------------------------------- verify

struct VerifyConfig {
  InputOptions in;
  std::vector<double> bids;
  double tolerance = 1e-6;
};

int run_verify(const VerifyConfig& cfg) {
  sfe::Market m = load_market(cfg.in);
  require_valid(m);
  struct Row {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Row> table;

  sfe::ValidationReport vr = sfe::validate_market(m);
  for (const auto& c : vr.checks) table.push_back({c.name, c.pass, c.detail});

  if (vr.ok()) {
    double tol = checked_tolerance(cfg.tolerance);
    sfe::SolveOptions opts;
    sfe::ShiftFactors sf = sfe::build_shift_factors(m.network());
    sfe::DispatchResult opt = sfe::economic_dispatch(m, opts);
    sfe::DispatchResult eq = sfe::equilibrium_dispatch(m, opts);
    table.push_back({"optimal-dispatch-kkt", opt.kkt.ok(1e-8),
                     "max residual " + fmt(opt.kkt.max_residual())});
    table.push_back({"equilibrium-dispatch-kkt", eq.kkt.ok(1e-8),
                     "max residual " + fmt(eq.kkt.max_residual())});

    double poa = sfe::true_cost(m, eq.supply) / sfe::true_cost(m, opt.supply);
    double bound = sfe::poa_upper_bound(m);
    double indep = sfe::network_independent_bound(m);
    bool ordered = 1.0 <= poa + 1e-9 && poa <= bound + 1e-9 &&
                   bound <= indep + 1e-9;
    table.push_back({"bound-ordering", ordered,
                     "poa " + fmt(poa) + ", bound " + fmt(bound) +
                         ", independent " + fmt(indep)});

    std::vector<double> w =
        cfg.bids.empty() ? sfe::recover_bids(m, sf, eq) : cfg.bids;
    if (w.size() != m.num_generators())
      throw sfe::validation_error("expected one bid per generator");
    try {
      sfe::BestResponseReport br = sfe::best_response_check(m, sf, w, tol);
      table.push_back({"best-response", br.pass,
                       "max improvement " + fmt(br.max_improvement)});
    } catch (const sfe::validation_error& e) {
      table.push_back({"best-response", false, e.what()});
    }

    // Reconstruct the bid-space multipliers from the dispatch certificate
    // (the mapping is a positive rescaling) and check the mapped system.
    double demand = m.total_demand();
    std::size_t ng = m.num_generators();
    double k = double(ng - 2) * demand;
    double wsum = 0.0;
    for (double v : w) wsum += v;
    std::vector<double> s = sfe::supply_from_bids(w, demand, ng);
    std::vector<sfe::GenObjective> obj = sfe::modified_objectives(m);
    sfe::DispatchPolytope poly = sfe::dispatch_polytope(m, sf);
    sfe::SfeMultipliers sm;
    double lscale = double(ng - 2) / (double(ng - 1) * wsum);
    for (std::size_t r = 0; r < poly.num_rows(); ++r) {
      sm.lambda_lo.push_back(eq.lambda_lo[r] * lscale);
      sm.lambda_hi.push_back(eq.lambda_hi[r] * lscale);
    }
    for (std::size_t n = 0; n < ng; ++n) {
      double nodal = eq.price;
      for (std::size_t r = 0; r < poly.num_rows(); ++r)
        nodal -= poly.rows(r, n) * (eq.lambda_hi[r] - eq.lambda_lo[r]);
      double mlo = std::max(0.0, obj[n].marginal_right(s[n]) - nodal);
      double mhi = std::max(0.0, nodal - obj[n].marginal_left(s[n]));
      double lo = m.generators()[n].smin, hi = m.generators()[n].smax;
      sm.mu_lo.push_back(mlo / ((1.0 + lo / k) * wsum));
      sm.mu_hi.push_back(mhi / ((1.0 + hi / k) * wsum));
    }
    sfe::MultiplierMapReport mp = sfe::multiplier_map_check(m, sf, w, sm);
    table.push_back({"multiplier-map", mp.max_residual() <= tol,
                     "max residual " + fmt(mp.max_residual())});
  }

  std::size_t width = 0;
  for (const Row& r : table) width = std::max(width, r.name.size());
  bool all = true;
  for (const Row& r : table) {
    all = all && r.pass;
    std::cout << r.name << std::string(width - r.name.size() + 2, ' ')
              << (r.pass ? "pass" : "FAIL");
    if (!r.detail.empty()) std::cout << "  " << r.detail;
    std::cout << '\n';
  }
  return all ? 0 : 2;
}

// ---------------------------------------------------------------- convert

struct ConvertConfig {
  InputOptions in;
  std::string output;
};

int run_convert(const ConvertConfig& cfg) {
  InputOptions in = cfg.in;
  if (in.format == "auto") in.format = "matpower";
  sfe::Market m = load_market(in);
  emit(cfg.output, sfe::market_to_json(m) + "\n");
  return 0;
}

int fail(const std::string& kind, const std::string& message, int code) {
  json err;
  err["error"] = kind;
  err["message"] = message;
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transmission-constrained market efficiency analysis"};
  app.require_subcommand(1);

  AnalyzeConfig an;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "solve both dispatches and report the efficiency numbers");
  add_input_options(analyze, an.in);
  analyze->add_option("--slack", an.slack, "slack bus for reported flows")
      ->each([&](const std::string&) { an.has_slack = true; });
  analyze->add_option("--tolerance", an.tolerance, "solver tolerance");
  analyze->add_option("--threshold", an.threshold,
                      "relative slack below which a line counts as congested");
  analyze->add_option("--output", an.output, "output path (default stdout)");
  analyze->add_option("--output-format", an.output_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  BoundConfig bd;
  CLI::App* bound = app.add_subcommand(
      "bound", "evaluate the efficiency bound without solving dispatches");
  add_input_options(bound, bd.in);
  bound->add_option("--output", bd.output, "output path (default stdout)");
  bound->add_option("--output-format", bd.output_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  bound->add_option("--topology", bd.topology_csv,
                    "also write the per-neighbor effective limits CSV here");

  TightnessConfig tg;
  CLI::App* tight = app.add_subcommand(
      "tightness", "drive the worst-case family until bound - poa < epsilon");
  tight->add_option("--network", tg.network, "graph-only JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  tight->add_option("--epsilon", tg.epsilon, "gap to certify")->required();
  tight->add_option("--output", tg.output, "CSV path (default stdout)");

  CongestionConfig cs;
  CLI::App* cong = app.add_subcommand(
      "congestion-sweep",
      "scale flow limits to hit congestion targets and tabulate the bounds");
  add_input_options(cong, cs.in);
  cong->add_option("--targets", cs.targets,
                   "congestion percentages (comma separated)")
      ->delimiter(',');
  cong->add_option("--threshold", cs.threshold,
                   "relative slack below which a line counts as congested");
  cong->add_option("--scale-tol", cs.scale_tol,
                   "relative tolerance of the scale search");
  cong->add_option("--tolerance", cs.tolerance, "solver tolerance");
  cong->add_option("--output", cs.output, "CSV path (default stdout)");

  VerifyConfig vf;
  CLI::App* verify = app.add_subcommand(
      "verify", "run the model checks and print a pass/fail table");
  add_input_options(verify, vf.in);
  verify->add_option("--bids", vf.bids,
                     "bid profile to check (default: recovered equilibrium)")
      ->delimiter(',');
  verify->add_option("--tolerance", vf.tolerance,
                     "tolerance for the equilibrium checks");

  ConvertConfig cv;
  CLI::App* convert = app.add_subcommand(
      "convert", "convert a case file to the canonical JSON schema");
  add_input_options(convert, cv.in);
  convert->add_option("--output", cv.output, "output path (default stdout)");

  try {
    app.parse(argc, argv);
    if (analyze->parsed()) return run_analyze(an);
    if (bound->parsed()) return run_bound(bd);
    if (tight->parsed()) return run_tightness(tg);
    if (cong->parsed()) return run_congestion(cs);
    if (verify->parsed()) return run_verify(vf);
    if (convert->parsed()) return run_convert(cv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  } catch (const sfe::parse_error& e) {
    return fail("parse", e.what(), 2);
  } catch (const sfe::validation_error& e) {
    return fail("validation", e.what(), 2);
  } catch (const sfe::unsupported_error& e) {
    return fail("unsupported", e.what(), 2);
  } catch (const sfe::solver_error& e) {
    return fail("solver", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 3);
  }
}
