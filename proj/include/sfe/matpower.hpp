#pragma once
#include <optional>
#include <string>
#include <utility>

#include "sfe/netmodel.hpp"

namespace sfe {

struct MatpowerOptions {
  // Applied (as a*s^2 + b*s on per-unit supply) to every generator when the
  // case has no gencost block.  Without it, a missing block is an error.
  std::optional<std::pair<double, double>> default_quadratic;
};

// Reads the MATPOWER case format (the M-file flavor: mpc.baseMVA scalar and
// mpc.bus / mpc.branch / mpc.gen / mpc.gencost matrices).  Quantities are
// converted to per-unit by baseMVA; branch reactance turns into a line
// weight b = 1/x; rateA = 0 means unlimited.  Only polynomial costs of
// degree <= 2 with zero constant term are representable.
Market parse_matpower(const std::string& text,
                      const MatpowerOptions& opts = {});
Market load_matpower_file(const std::string& path,
                          const MatpowerOptions& opts = {});

}  // namespace sfe
