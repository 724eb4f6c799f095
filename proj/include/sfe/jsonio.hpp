#pragma once
#include <string>

#include "sfe/netmodel.hpp"

namespace sfe {

// Market document schema:
// {
//   "buses": [1, 2, 3],
//   "lines": [{"from": 1, "to": 2, "b": 1.0, "f": 10.0}, ...],
//   "loads": {"1": 1.0, ...},
//   "generators": {"1": {"smin": 0.0, "smax": 3.0,
//                        "cost": {"kind": "linear", "a": 1.0}}, ...}
// }
// "f": null (or absent) means unlimited.  Cost kinds: "linear" {a},
// "quadratic" {a, b} for a*s^2 + b*s, "piecewise_linear" {kinks, slopes}.
Market load_market_json(const std::string& text);
Market load_market_file(const std::string& path);

// Canonical serialization: sorted keys, loads only where nonzero, unlimited
// limits as null.  Serializing a freshly loaded document is idempotent.
std::string market_to_json(const Market& m);

// Graph-only documents ("loads"/"generators" optional and ignored) for
// operations that synthesize their own market data.
Network load_network_json(const std::string& text);
Network load_network_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace sfe
