#include "sfe/costs.hpp"

#include <cmath>

#include "sfe/errors.hpp"

namespace sfe {

CostFunction CostFunction::linear(double a) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw validation_error("linear cost requires a positive slope");
  CostFunction c;
  c.kind_ = CostKind::linear;
  c.a_ = a;
  return c;
}

CostFunction CostFunction::quadratic(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0) || !(a + b > 0.0) || !std::isfinite(a) ||
      !std::isfinite(b))
    throw validation_error(
        "quadratic cost requires a >= 0, b >= 0 and not both zero");
  CostFunction c;
  c.kind_ = CostKind::quadratic;
  c.a_ = a;
  c.b_ = b;
  return c;
}

CostFunction CostFunction::piecewise_linear(std::vector<double> kinks,
                                            std::vector<double> slopes) {
  if (slopes.size() != kinks.size() + 1)
    throw validation_error("piecewise cost needs one more slope than kinks");
  double prev_kink = 0.0;
  for (std::size_t i = 0; i < kinks.size(); ++i) {
    if (!(kinks[i] > prev_kink) || !std::isfinite(kinks[i]))
      throw validation_error("piecewise cost kinks must be positive and increasing");
    prev_kink = kinks[i];
  }
  double prev = 0.0;
  for (double m : slopes) {
    if (!(m > 0.0) || !std::isfinite(m))
      throw validation_error("piecewise cost slopes must be positive");
    if (m < prev)
      throw validation_error("piecewise cost slopes must be nondecreasing");
    prev = m;
  }
  CostFunction c;
  c.kind_ = CostKind::piecewise_linear;
  c.kinks_ = std::move(kinks);
  c.slopes_ = std::move(slopes);
  return c;
}

double CostFunction::value(double s) const {
  switch (kind_) {
    case CostKind::linear:
      return a_ * s;
    case CostKind::quadratic:
      return a_ * s * s + b_ * s;
    case CostKind::piecewise_linear: {
      double v = 0.0, x = 0.0;
      for (std::size_t i = 0; i < kinks_.size(); ++i) {
        if (s <= kinks_[i]) return v + slopes_[i] * (s - x);
        v += slopes_[i] * (kinks_[i] - x);
        x = kinks_[i];
      }
      return v + slopes_.back() * (s - x);
    }
  }
  return 0.0;
}

double CostFunction::deriv_left(double s) const {
  switch (kind_) {
    case CostKind::linear:
      return a_;
    case CostKind::quadratic:
      return 2.0 * a_ * s + b_;
    case CostKind::piecewise_linear:
      for (std::size_t i = 0; i < kinks_.size(); ++i)
        if (s <= kinks_[i]) return slopes_[i];
      return slopes_.back();
  }
  return 0.0;
}

double CostFunction::deriv_right(double s) const {
  switch (kind_) {
    case CostKind::linear:
      return a_;
    case CostKind::quadratic:
      return 2.0 * a_ * s + b_;
    case CostKind::piecewise_linear:
      for (std::size_t i = 0; i < kinks_.size(); ++i)
        if (s < kinks_[i]) return slopes_[i];
      return slopes_.back();
  }
  return 0.0;
}

double CostFunction::integral(double s) const {
  switch (kind_) {
    case CostKind::linear:
      return 0.5 * a_ * s * s;
    case CostKind::quadratic:
      return a_ * s * s * s / 3.0 + 0.5 * b_ * s * s;
    case CostKind::piecewise_linear: {
      double acc = 0.0, v = 0.0, x = 0.0;
      for (std::size_t i = 0; i < kinks_.size(); ++i) {
        if (s <= kinks_[i]) {
          double dx = s - x;
          return acc + v * dx + 0.5 * slopes_[i] * dx * dx;
        }
        double dx = kinks_[i] - x;
        acc += v * dx + 0.5 * slopes_[i] * dx * dx;
        v += slopes_[i] * dx;
        x = kinks_[i];
      }
      double dx = s - x;
      return acc + v * dx + 0.5 * slopes_.back() * dx * dx;
    }
  }
  return 0.0;
}

ModifiedCost::ModifiedCost(CostFunction base, double scale_k)
    : base_(std::move(base)), k_(scale_k) {
  if (!(k_ > 0.0) || !std::isfinite(k_))
    throw validation_error("modified cost requires a positive scale");
}

double ModifiedCost::value(double s) const {
  return (1.0 + s / k_) * base_.value(s) - base_.integral(s) / k_;
}

double ModifiedCost::deriv_left(double s) const {
  return base_.deriv_left(s) * (1.0 + s / k_);
}

double ModifiedCost::deriv_right(double s) const {
  return base_.deriv_right(s) * (1.0 + s / k_);
}

}  // namespace sfe
