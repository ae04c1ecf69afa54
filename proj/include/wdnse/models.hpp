#ifndef WDNSE_MODELS_HPP
#define WDNSE_MODELS_HPP

#include <cmath>
#include <span>
#include <string>

#include "wdnse/error.hpp"
#include "wdnse/units.hpp"

namespace wdnse {

enum class HeadlossFormula
{
  HazenWilliams,
  DarcyWeisbach,
  ChezyManning,
};

/// Pipe friction law: h_i - h_j = resistance * q * |q|^(exponent - 1), q in GPM.
struct HeadLossModel
{
  double resistance = 1.0;
  double exponent = 2.0;

  bool operator==(const HeadLossModel&) const = default;
};

/// Pump head curve: h_i - h_j = -s^2 (h0 - r (q/s)^nu).
struct PumpCurve
{
  double shutoff_head = 1.0;
  double coefficient = 1.0;
  double exponent = 2.0;
  double speed = 1.0;

  bool operator==(const PumpCurve&) const = default;
};

struct CurvePoint
{
  double flow = 0.0;
  double head = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

inline const char* to_string(HeadlossFormula f)
{
  switch (f) {
    case HeadlossFormula::HazenWilliams: return "H-W";
    case HeadlossFormula::DarcyWeisbach: return "D-W";
    case HeadlossFormula::ChezyManning: return "C-M";
  }
  return "?";
}

/**
 * Resistance and flow exponent of a pipe in GPM/ft units.
 *
 * The coefficients follow the EPANET manual tables, which are stated for flow
 * in ft^3/s and diameter in ft; the result is rescaled to GPM. Darcy-Weisbach
 * uses the fully rough friction factor for the given roughness (millifeet),
 * so its resistance is flow independent.
 */
inline HeadLossModel headloss_model(HeadlossFormula formula, double length_ft, double diameter_in,
                                    double roughness)
{
  if (!(length_ft > 0.0) || !(diameter_in > 0.0) || !(roughness > 0.0)) {
    throw DomainError("pipe length, diameter and roughness must be positive");
  }
  const double d = diameter_in / units::kInchesPerFoot;
  switch (formula) {
    case HeadlossFormula::HazenWilliams: {
      constexpr double exponent = 1.852;
      const double r_cfs = 4.727 * length_ft / std::pow(roughness, exponent) / std::pow(d, 4.871);
      return {r_cfs / std::pow(units::kGpmPerCfs, exponent), exponent};
    }
    case HeadlossFormula::DarcyWeisbach: {
      const double eps_ft = roughness / 1000.0;
      const double lg = std::log10(eps_ft / (3.7 * d));
      const double f = 0.25 / (lg * lg);
      const double area = units::kPi * d * d / 4.0;
      const double r_cfs = f * length_ft / (2.0 * units::kGravity * d * area * area);
      return {r_cfs / (units::kGpmPerCfs * units::kGpmPerCfs), 2.0};
    }
    case HeadlossFormula::ChezyManning: {
      const double k = 4.0 * roughness / (1.49 * units::kPi * d * d);
      const double r_cfs = k * k * std::pow(d / 4.0, -1.333) * length_ft;
      return {r_cfs / (units::kGpmPerCfs * units::kGpmPerCfs), 2.0};
    }
  }
  throw DomainError("unknown headloss formula");
}

namespace detail {

// Power function through (0, h0), (q1, h1), (q2, h2); mirrors EPANET's powercurve().
inline PumpCurve power_curve(double h0, double h1, double h2, double q1, double q2)
{
  if (!(h0 > 0.0) || !(h0 > h1) || !(h1 > h2) || !(q1 > 0.0) || !(q2 > q1)) {
    throw DomainError("pump curve points do not describe a decreasing head curve");
  }
  const double h4 = h0 - h1;
  const double h5 = h0 - h2;
  const double c = std::log(h5 / h4) / std::log(q2 / q1);
  if (!(c > 0.0) || c > 20.0) {
    throw DomainError("pump curve exponent out of range");
  }
  return {h0, h4 / std::pow(q1, c), c, 1.0};
}

}  // namespace detail

/**
 * Expand an EPANET head curve into (h0, r, nu).
 *
 * One point (q, h) uses the EPANET convention h0 = 1.33334 h, q_max = 2 q.
 * Three points are accepted when the first one is the shutoff head at q = 0.
 */
inline PumpCurve pump_curve_from_points(std::span<const CurvePoint> pts)
{
  if (pts.size() == 1) {
    const double q1 = pts[0].flow;
    const double h1 = pts[0].head;
    return detail::power_curve(1.33334 * h1, h1, 0.0, q1, 2.0 * q1);
  }
  if (pts.size() == 3 && pts[0].flow == 0.0) {
    return detail::power_curve(pts[0].head, pts[1].head, pts[2].head, pts[1].flow, pts[2].flow);
  }
  throw UnsupportedFeature("only single-point or three-point pump curves are supported");
}

}  // namespace wdnse

#endif  // WDNSE_MODELS_HPP
