#include "sfe/jsonio.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sfe/errors.hpp"

using nlohmann::json;

namespace sfe {

namespace {

json parse_or_throw(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw parse_error("invalid JSON document");
  if (!j.is_object()) throw parse_error("top level must be a JSON object");
  return j;
}

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw parse_error(std::string("missing or non-numeric field \"") + key + "\"");
  return j.at(key).get<double>();
}

std::vector<Line> lines_from(const json& j) {
  if (!j.contains("lines") || !j.at("lines").is_array())
    throw parse_error("missing \"lines\" array");
  std::vector<Line> lines;
  for (const auto& lj : j.at("lines")) {
    Line l;
    l.from = static_cast<BusId>(number_field(lj, "from"));
    l.to = static_cast<BusId>(number_field(lj, "to"));
    l.b = lj.contains("b") ? number_field(lj, "b") : 1.0;
    if (lj.contains("f") && !lj.at("f").is_null())
      l.f = number_field(lj, "f");
    lines.push_back(l);
  }
  return lines;
}

std::vector<BusId> buses_from(const json& j) {
  if (!j.contains("buses") || !j.at("buses").is_array())
    throw parse_error("missing \"buses\" array");
  std::vector<BusId> buses;
  for (const auto& bj : j.at("buses")) {
    if (!bj.is_number_integer()) throw parse_error("bus ids must be integers");
    buses.push_back(bj.get<BusId>());
  }
  return buses;
}

CostFunction cost_from(const json& cj) {
  if (!cj.is_object() || !cj.contains("kind") || !cj.at("kind").is_string())
    throw parse_error("generator cost needs a \"kind\"");
  const std::string kind = cj.at("kind").get<std::string>();
  if (kind == "linear") return CostFunction::linear(number_field(cj, "a"));
  if (kind == "quadratic")
    return CostFunction::quadratic(number_field(cj, "a"), number_field(cj, "b"));
  if (kind == "piecewise_linear") {
    if (!cj.contains("kinks") || !cj.contains("slopes"))
      throw parse_error("piecewise_linear cost needs \"kinks\" and \"slopes\"");
    std::vector<double> kinks = cj.at("kinks").get<std::vector<double>>();
    std::vector<double> slopes = cj.at("slopes").get<std::vector<double>>();
    return CostFunction::piecewise_linear(std::move(kinks), std::move(slopes));
  }
  throw parse_error("unknown cost kind \"" + kind + "\"");
}

json cost_to(const CostFunction& c) {
  json out;
  switch (c.kind()) {
    case CostKind::linear:
      out["kind"] = "linear";
      out["a"] = c.a();
      break;
    case CostKind::quadratic:
      out["kind"] = "quadratic";
      out["a"] = c.a();
      out["b"] = c.b();
      break;
    case CostKind::piecewise_linear:
      out["kind"] = "piecewise_linear";
      out["kinks"] = c.kinks();
      out["slopes"] = c.slopes();
      break;
  }
  return out;
}

BusId bus_key(const std::string& key) {
  try {
    std::size_t used = 0;
    int v = std::stoi(key, &used);
    if (used != key.size()) throw parse_error("");
    return v;
  } catch (...) {
    throw parse_error("object keys must be bus ids, got \"" + key + "\"");
  }
}

}  // namespace

Market load_market_json(const std::string& text) {
  json j = parse_or_throw(text);
  Network net(buses_from(j), lines_from(j));

  std::map<BusId, double> loads;
  if (j.contains("loads")) {
    if (!j.at("loads").is_object()) throw parse_error("\"loads\" must be an object");
    for (const auto& [key, val] : j.at("loads").items()) {
      if (!val.is_number()) throw parse_error("load values must be numbers");
      loads[bus_key(key)] = val.get<double>();
    }
  }

  if (!j.contains("generators") || !j.at("generators").is_object())
    throw parse_error("missing \"generators\" object");
  std::vector<Generator> gens;
  for (const auto& [key, gj] : j.at("generators").items()) {
    Generator g;
    g.bus = bus_key(key);
    g.smin = number_field(gj, "smin");
    g.smax = number_field(gj, "smax");
    if (!gj.contains("cost")) throw parse_error("generator missing \"cost\"");
    g.cost = cost_from(gj.at("cost"));
    gens.push_back(std::move(g));
  }

  // structural checks only; market-level assumptions are validate_market's job
  return Market(std::move(net), loads, std::move(gens));
}

std::string market_to_json(const Market& m) {
  json j;
  j["buses"] = m.network().buses();
  json lines = json::array();
  for (const Line& l : m.network().lines()) {
    json lj;
    lj["from"] = l.from;
    lj["to"] = l.to;
    lj["b"] = l.b;
    if (l.limited())
      lj["f"] = l.f;
    else
      lj["f"] = nullptr;
    lines.push_back(lj);
  }
  j["lines"] = lines;
  json loads = json::object();
  for (std::size_t i = 0; i < m.loads().size(); ++i)
    if (m.loads()[i] != 0.0)
      loads[std::to_string(m.network().buses()[i])] = m.loads()[i];
  j["loads"] = loads;
  json gens = json::object();
  for (const Generator& g : m.generators()) {
    json gj;
    gj["smin"] = g.smin;
    gj["smax"] = g.smax;
    gj["cost"] = cost_to(g.cost);
    gens[std::to_string(g.bus)] = gj;
  }
  j["generators"] = gens;
  return j.dump(2) + "\n";
}

Network load_network_json(const std::string& text) {
  json j = parse_or_throw(text);
  return Network(buses_from(j), lines_from(j));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("cannot write file: " + path);
  out << text;
}

Market load_market_file(const std::string& path) {
  return load_market_json(read_text_file(path));
}

Network load_network_file(const std::string& path) {
  return load_network_json(read_text_file(path));
}

}  // namespace sfe
