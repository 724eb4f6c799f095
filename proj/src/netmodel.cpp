#include "sfe/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sfe/errors.hpp"
#include "sfe/powerflow.hpp"
#include "sfe/simplex.hpp"

namespace sfe {

namespace {

std::string bus_pair(BusId a, BusId b) {
  std::ostringstream os;
  os << "(" << a << "," << b << ")";
  return os.str();
}

}  // namespace

Network::Network(std::vector<BusId> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
  if (buses_.empty()) throw validation_error("network has no buses");
  std::sort(buses_.begin(), buses_.end());
  if (std::adjacent_find(buses_.begin(), buses_.end()) != buses_.end())
    throw validation_error("duplicate bus ids");

  incident_.assign(buses_.size(), {});
  std::set<std::pair<BusId, BusId>> seen;
  for (std::size_t e = 0; e < lines_.size(); ++e) {
    const Line& l = lines_[e];
    if (!has_bus(l.from) || !has_bus(l.to))
      throw validation_error("line " + bus_pair(l.from, l.to) +
                             " references an unknown bus");
    if (l.from == l.to)
      throw validation_error("self-loop at bus " + std::to_string(l.from));
    auto key = std::minmax(l.from, l.to);
    if (!seen.insert(key).second)
      throw validation_error("parallel lines between " +
                             bus_pair(key.first, key.second));
    if (!(l.b > 0.0) || !std::isfinite(l.b))
      throw validation_error("line " + bus_pair(l.from, l.to) +
                             " needs a positive admittance");
    if (std::isnan(l.f) || l.f < 0.0)
      throw validation_error("line " + bus_pair(l.from, l.to) +
                             " has an invalid flow limit");
    incident_[bus_index(l.from)].push_back(e);
    incident_[bus_index(l.to)].push_back(e);
  }

  // connectivity
  std::vector<char> reached(buses_.size(), 0);
  std::vector<std::size_t> stack{0};
  reached[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t e : incident_[u]) {
      std::size_t v = bus_index(lines_[e].from) == u ? bus_index(lines_[e].to)
                                                     : bus_index(lines_[e].from);
      if (!reached[v]) {
        reached[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  if (count != buses_.size())
    throw validation_error("network is not connected");
}

bool Network::has_bus(BusId id) const {
  return std::binary_search(buses_.begin(), buses_.end(), id);
}

std::size_t Network::bus_index(BusId id) const {
  auto it = std::lower_bound(buses_.begin(), buses_.end(), id);
  if (it == buses_.end() || *it != id)
    throw validation_error("unknown bus " + std::to_string(id));
  return static_cast<std::size_t>(it - buses_.begin());
}

Market::Market(Network net, const std::map<BusId, double>& loads,
               std::vector<Generator> gens)
    : net_(std::move(net)), gens_(std::move(gens)) {
  loads_.assign(net_.num_buses(), 0.0);
  for (const auto& [bus, mw] : loads) {
    if (!(mw >= 0.0) || !std::isfinite(mw))
      throw validation_error("load at bus " + std::to_string(bus) +
                             " must be finite and nonnegative");
    loads_[net_.bus_index(bus)] = mw;
  }
  std::sort(gens_.begin(), gens_.end(),
            [](const Generator& x, const Generator& y) { return x.bus < y.bus; });
  BusId prev = std::numeric_limits<BusId>::min();
  for (const Generator& g : gens_) {
    net_.bus_index(g.bus);  // throws if unknown
    if (g.bus == prev)
      throw validation_error("two generators at bus " + std::to_string(g.bus));
    prev = g.bus;
    if (!(g.smin >= 0.0) || !(g.smax > g.smin) || !std::isfinite(g.smax))
      throw validation_error("generator at bus " + std::to_string(g.bus) +
                             " needs 0 <= smin < smax < inf");
  }
}

int Market::generator_index(BusId bus) const {
  auto it = std::lower_bound(
      gens_.begin(), gens_.end(), bus,
      [](const Generator& g, BusId b) { return g.bus < b; });
  if (it == gens_.end() || it->bus != bus) return -1;
  return static_cast<int>(it - gens_.begin());
}

double Market::total_demand() const {
  double d = 0.0;
  for (double v : loads_) d += v;
  return d;
}

double Market::flow_sentinel() const {
  double cap = 0.0;
  for (const Generator& g : gens_) cap += g.smax;
  return 1.0 + cap + total_demand();
}

double total_demand(const Market& m) { return m.total_demand(); }

bool ValidationReport::ok() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

ValidationReport validate_market(const Market& m, double tol) {
  ValidationReport rep;
  const auto& gens = m.generators();
  const double demand = m.total_demand();

  // cost shapes are enforced at construction; record the check anyway
  rep.checks.push_back({"convex-costs", true,
                        "all cost functions convex, increasing, zero at zero"});

  {
    bool pass = gens.size() > 2;
    std::ostringstream os;
    if (pass)
      os << gens.size() << " generators";
    else
      os << "market has " << gens.size()
         << " generators; requires more than two generators";
    rep.checks.push_back({"more-than-two-generators", pass, os.str()});
  }

  {
    double cap = 0.0;
    for (const auto& g : gens) cap += g.smax;
    bool pass = true;
    std::ostringstream os;
    for (const auto& g : gens) {
      if (!(cap - g.smax > demand)) {
        pass = false;
        os << "withholding generator at bus " << g.bus << " leaves capacity "
           << (cap - g.smax) << " <= demand " << demand;
        break;
      }
    }
    if (pass) os << "demand coverable with any one generator withheld";
    rep.checks.push_back({"dispensable-capacity", pass, os.str()});
  }

  {
    bool pass = demand > 0.0;
    rep.checks.push_back({"positive-demand", pass,
                          pass ? "total demand positive"
                               : "total demand is zero; dispatch is undefined"});
  }

  // Strict feasibility: maximize the minimum slack sigma over box and flow
  // constraints subject to exact balance.  Lines with f = 0 are equalities
  // and take no slack; unlimited lines impose nothing.
  {
    bool pass = false;
    std::ostringstream os;
    double slack = -std::numeric_limits<double>::infinity();
    if (gens.empty()) {
      os << "no generators";
    } else {
      auto sf = build_shift_factors(m.network());
      auto ag = generator_shift_matrix(m, sf);
      auto shift = load_flow_term(m, sf);
      const std::size_t ng = gens.size();

      lp::Problem p;
      p.num_vars = ng + 1;  // s_1..s_ng, sigma
      const double big = m.flow_sentinel();
      p.lower.assign(ng + 1, 0.0);
      p.upper.assign(ng + 1, 0.0);
      for (std::size_t n = 0; n < ng; ++n) {
        p.lower[n] = gens[n].smin;
        p.upper[n] = gens[n].smax;
      }
      p.lower[ng] = -big;
      p.upper[ng] = big;
      p.objective.assign(ng + 1, 0.0);
      p.objective[ng] = 1.0;

      lp::Row balance;
      balance.a.assign(ng + 1, 0.0);
      for (std::size_t n = 0; n < ng; ++n) balance.a[n] = 1.0;
      balance.rel = lp::Rel::eq;
      balance.rhs = demand;
      p.rows.push_back(balance);

      for (std::size_t n = 0; n < ng; ++n) {
        lp::Row lo, hi;
        lo.a.assign(ng + 1, 0.0);
        lo.a[n] = 1.0;
        lo.a[ng] = -1.0;
        lo.rel = lp::Rel::ge;
        lo.rhs = gens[n].smin;
        hi.a.assign(ng + 1, 0.0);
        hi.a[n] = 1.0;
        hi.a[ng] = 1.0;
        hi.rel = lp::Rel::le;
        hi.rhs = gens[n].smax;
        p.rows.push_back(lo);
        p.rows.push_back(hi);
      }

      const auto& lines = m.network().lines();
      for (std::size_t l = 0; l < lines.size(); ++l) {
        if (!lines[l].limited()) continue;
        if (lines[l].f == 0.0) {
          lp::Row eq;
          eq.a.assign(ng + 1, 0.0);
          for (std::size_t n = 0; n < ng; ++n) eq.a[n] = ag(l, n);
          eq.rel = lp::Rel::eq;
          eq.rhs = -shift[l];
          p.rows.push_back(eq);
          continue;
        }
        lp::Row up, dn;
        up.a.assign(ng + 1, 0.0);
        dn.a.assign(ng + 1, 0.0);
        for (std::size_t n = 0; n < ng; ++n) {
          up.a[n] = ag(l, n);
          dn.a[n] = -ag(l, n);
        }
        up.a[ng] = 1.0;
        up.rel = lp::Rel::le;
        up.rhs = lines[l].f - shift[l];
        dn.a[ng] = 1.0;
        dn.rel = lp::Rel::le;
        dn.rhs = lines[l].f + shift[l];
        p.rows.push_back(up);
        p.rows.push_back(dn);
      }

      auto r = lp::solve(p);
      if (r.status == lp::Status::optimal) {
        slack = r.value;
        pass = slack > tol;
        os << "max-min constraint slack " << slack;
        if (!pass) os << " (needs > " << tol << ")";
      } else {
        os << "no balanced dispatch satisfies the constraints";
      }
    }
    rep.feasibility_slack = slack;
    rep.checks.push_back({"strict-feasibility", pass, os.str()});
  }

  return rep;
}

}  // namespace sfe
