#pragma once
#include <vector>

namespace sfe {

enum class CostKind { linear, quadratic, piecewise_linear };

// Convex, strictly increasing generation cost with c(0) = 0, defined on
// s >= 0.  Three shapes: a*s, a*s^2 + b*s, and convex piecewise-linear with
// positive nondecreasing slopes.  One-sided derivatives differ only at
// piecewise-linear kinks.
class CostFunction {
 public:
  static CostFunction linear(double a);
  static CostFunction quadratic(double a, double b);
  // slopes.size() == kinks.size() + 1; kinks strictly increasing and > 0
  static CostFunction piecewise_linear(std::vector<double> kinks,
                                       std::vector<double> slopes);

  CostKind kind() const { return kind_; }
  double value(double s) const;
  double deriv_left(double s) const;
  double deriv_right(double s) const;
  double integral(double s) const;  // ∫_0^s value(x) dx

  // parameter access (serialization, closed forms)
  double a() const { return a_; }
  double b() const { return b_; }
  const std::vector<double>& kinks() const { return kinks_; }
  const std::vector<double>& slopes() const { return slopes_; }

 private:
  CostFunction() = default;
  CostKind kind_ = CostKind::linear;
  double a_ = 0.0, b_ = 0.0;
  std::vector<double> kinks_, slopes_;
};

// Cost reshaped so that self-interested bidding against it reproduces the
// competitive outcome: hc(s) = (1 + s/K) c(s) - (1/K) ∫_0^s c, with
// K = (n_g - 2) * D.  Marginal is c'(s) (1 + s/K); kinks stay where the base
// cost has them.
class ModifiedCost {
 public:
  ModifiedCost(CostFunction base, double scale_k);

  double value(double s) const;
  double deriv_left(double s) const;
  double deriv_right(double s) const;
  const CostFunction& base() const { return base_; }
  double scale_k() const { return k_; }

 private:
  CostFunction base_;
  double k_;
};

}  // namespace sfe
