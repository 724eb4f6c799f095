#include "sfe/matpower.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "sfe/errors.hpp"
#include "sfe/jsonio.hpp"

namespace sfe {

namespace {

struct NumRow {
  int lineno = 0;
  std::vector<double> v;
};

struct CaseText {
  std::vector<std::pair<int, std::string>> lines;  // lineno, comment-stripped
};

CaseText preprocess(const std::string& text) {
  CaseText ct;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    auto pos = line.find('%');
    if (pos != std::string::npos) line.erase(pos);
    ct.lines.emplace_back(no, line);
  }
  return ct;
}

[[noreturn]] void fail(int lineno, const std::string& msg) {
  throw parse_error("case file line " + std::to_string(lineno) + ": " + msg);
}

// Finds "mpc.<name>" and returns the matrix rows between '[' and ']'.
std::vector<NumRow> matrix_block(const CaseText& ct, const std::string& name,
                                 bool required) {
  const std::string key = "mpc." + name;
  std::size_t li = 0;
  std::size_t col = std::string::npos;
  for (; li < ct.lines.size(); ++li) {
    col = ct.lines[li].second.find(key);
    if (col != std::string::npos) {
      // avoid matching e.g. mpc.gencost while looking for mpc.gen
      std::size_t after = col + key.size();
      const std::string& s = ct.lines[li].second;
      if (after < s.size() &&
          (std::isalnum(static_cast<unsigned char>(s[after])) || s[after] == '_'))
        continue;
      break;
    }
  }
  if (li == ct.lines.size()) {
    if (required) throw parse_error("case file: missing block " + key);
    return {};
  }

  std::vector<NumRow> rows;
  NumRow cur;
  bool in_matrix = false;
  bool done = false;
  std::string token;
  auto flush_token = [&](int lineno) {
    if (token.empty()) return;
    try {
      std::size_t used = 0;
      double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument("");
      cur.v.push_back(v);
      if (cur.lineno == 0) cur.lineno = lineno;
    } catch (...) {
      fail(lineno, "bad number \"" + token + "\" in " + key);
    }
    token.clear();
  };
  auto flush_row = [&]() {
    if (!cur.v.empty()) rows.push_back(cur);
    cur = NumRow{};
  };

  for (; li < ct.lines.size() && !done; ++li) {
    const auto& [lineno, raw] = ct.lines[li];
    std::string_view s = raw;
    if (col != std::string::npos) {
      s.remove_prefix(std::min(col + key.size(), s.size()));
      col = std::string::npos;  // only on the first line
    }
    for (char ch : s) {
      if (!in_matrix) {
        if (ch == '[') in_matrix = true;
        else if (!std::isspace(static_cast<unsigned char>(ch)) && ch != '=')
          fail(lineno, "expected '=' and '[' after " + key);
        continue;
      }
      if (ch == ']') {
        flush_token(lineno);
        flush_row();
        done = true;
        break;
      }
      if (ch == ';') {
        flush_token(lineno);
        flush_row();
      } else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
        flush_token(lineno);
      } else {
        token += ch;
      }
    }
    if (!done) {
      flush_token(lineno);
      flush_row();  // newline also terminates a row
    }
  }
  if (!done) throw parse_error("case file: unterminated block " + key);
  return rows;
}

double scalar_field(const CaseText& ct, const std::string& name) {
  const std::string key = "mpc." + name;
  for (const auto& [lineno, line] : ct.lines) {
    auto pos = line.find(key);
    if (pos == std::string::npos) continue;
    auto eq = line.find('=', pos);
    if (eq == std::string::npos) fail(lineno, "expected '=' after " + key);
    std::string rest = line.substr(eq + 1);
    std::string token;
    for (char ch : rest) {
      if (ch == ';') break;
      if (!std::isspace(static_cast<unsigned char>(ch))) token += ch;
    }
    try {
      return std::stod(token);
    } catch (...) {
      fail(lineno, "bad number for " + key);
    }
  }
  throw parse_error("case file: missing scalar " + key);
}

}  // namespace

Market parse_matpower(const std::string& text, const MatpowerOptions& opts) {
  CaseText ct = preprocess(text);

  const double base = scalar_field(ct, "baseMVA");
  if (!(base > 0.0) || !std::isfinite(base))
    throw parse_error("case file: baseMVA must be positive");

  auto bus_rows = matrix_block(ct, "bus", true);
  auto branch_rows = matrix_block(ct, "branch", true);
  auto gen_rows = matrix_block(ct, "gen", true);
  auto gencost_rows = matrix_block(ct, "gencost", false);

  std::vector<BusId> buses;
  std::map<BusId, double> loads;
  for (const auto& r : bus_rows) {
    if (r.v.size() < 3) fail(r.lineno, "bus row needs at least 3 columns");
    BusId id = static_cast<BusId>(r.v[0]);
    buses.push_back(id);
    double pd = r.v[2] / base;
    if (pd != 0.0) loads[id] = pd;
  }

  std::vector<Line> lines;
  for (const auto& r : branch_rows) {
    if (r.v.size() < 6) fail(r.lineno, "branch row needs at least 6 columns");
    Line l;
    l.from = static_cast<BusId>(r.v[0]);
    l.to = static_cast<BusId>(r.v[1]);
    double x = r.v[3];
    if (!(x > 0.0)) fail(r.lineno, "branch reactance must be positive");
    l.b = 1.0 / x;
    double rate = r.v[5];
    if (rate < 0.0) fail(r.lineno, "branch rateA must be nonnegative");
    l.f = rate == 0.0 ? kUnlimited : rate / base;
    lines.push_back(l);
  }

  if (gencost_rows.empty() && !opts.default_quadratic)
    throw parse_error(
        "case file: no gencost block; supply default cost coefficients to "
        "proceed");
  if (!gencost_rows.empty() && gencost_rows.size() != gen_rows.size())
    throw parse_error("case file: gencost rows do not match gen rows");

  std::vector<Generator> gens;
  for (std::size_t i = 0; i < gen_rows.size(); ++i) {
    const auto& r = gen_rows[i];
    if (r.v.size() < 10) fail(r.lineno, "gen row needs at least 10 columns");
    Generator g;
    g.bus = static_cast<BusId>(r.v[0]);
    g.smax = r.v[8] / base;
    g.smin = r.v[9] / base;
    if (!gencost_rows.empty()) {
      const auto& c = gencost_rows[i];
      if (c.v.size() < 4) fail(c.lineno, "gencost row needs at least 4 columns");
      if (c.v[0] != 2.0)
        fail(c.lineno, "only polynomial cost model (2) is supported");
      int ncoef = static_cast<int>(c.v[3]);
      if (ncoef < 1 || ncoef > 3)
        fail(c.lineno, "polynomial degree must be at most 2");
      if (c.v.size() < 4 + static_cast<std::size_t>(ncoef))
        fail(c.lineno, "gencost row shorter than its coefficient count");
      double c2 = 0.0, c1 = 0.0, c0 = 0.0;
      // coefficients are listed highest degree first
      std::vector<double> coef(c.v.begin() + 4, c.v.begin() + 4 + ncoef);
      c0 = coef[ncoef - 1];
      if (ncoef >= 2) c1 = coef[ncoef - 2];
      if (ncoef >= 3) c2 = coef[ncoef - 3];
      if (c0 != 0.0)
        fail(c.lineno, "constant cost term must be zero (cost(0) = 0)");
      if (c2 < 0.0) fail(c.lineno, "quadratic cost coefficient must be >= 0");
      if (c2 == 0.0 && !(c1 > 0.0))
        fail(c.lineno, "cost must be strictly increasing");
      double a = c2 * base * base;
      double b = c1 * base;
      g.cost = a == 0.0 ? CostFunction::linear(b) : CostFunction::quadratic(a, b);
    } else {
      auto [a, b] = *opts.default_quadratic;
      g.cost = a == 0.0 ? CostFunction::linear(b) : CostFunction::quadratic(a, b);
    }
    gens.push_back(std::move(g));
  }

  try {
    return Market(Network(std::move(buses), std::move(lines)), loads,
                  std::move(gens));
  } catch (const validation_error& e) {
    throw parse_error(std::string("case file: ") + e.what());
  }
}

Market load_matpower_file(const std::string& path, const MatpowerOptions& opts) {
  return parse_matpower(read_text_file(path), opts);
}

}  // namespace sfe
