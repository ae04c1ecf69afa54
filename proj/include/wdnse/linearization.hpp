#ifndef WDNSE_LINEARIZATION_HPP
#define WDNSE_LINEARIZATION_HPP

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <utility>
#include <vector>

#include "wdnse/error.hpp"
#include "wdnse/hydraulics.hpp"
#include "wdnse/models.hpp"
#include "wdnse/network.hpp"
#include "wdnse/state.hpp"

// Linear link relations obtained from the exponential change of variables
// x -> b^x. In the transformed variables a pipe reads
//   b^(h_i) * b^(-h_j) * b^(-q) * b^(-C) = 1,
// whose logarithm is the linear row h_i - h_j = q + C. The constant C is
// refreshed from the previous iterate, so the row interpolates the friction
// law at that flow without being its tangent.

namespace wdnse {

struct GpConfig
{
  double base = 1.001;

  double delta() const { return base - 1.0; }
  void validate() const
  {
    if (!(base > 1.0) || !std::isfinite(base)) throw ContractError("GP base must be > 1");
  }
};

/// Smallest flow a pump relation is linearized at.
inline constexpr double kPumpFlowFloor = 1.0e-3;

struct LinearCoefficients
{
  std::vector<double> pipe;            // h_i - h_j = q + pipe[l]
  std::vector<double> pump_intercept;  // h_i - h_j = intercept + slope * q
  std::vector<double> pump_slope;

  bool operator==(const LinearCoefficients&) const = default;
};

inline double pipe_coefficient(double q_prev, const HeadLossModel& m)
{
  return q_prev * (m.resistance * std::pow(std::abs(q_prev), m.exponent - 1.0) - 1.0);
}

struct PumpCoefficients
{
  double intercept;
  double slope;
};

inline PumpCoefficients pump_coefficients(double q_prev, const PumpCurve& c)
{
  if (!(q_prev > 0.0)) throw DomainError("pump linearization needs a positive flow");
  const double s = c.speed;
  return {-s * s * c.shutoff_head,
          c.coefficient * std::pow(q_prev, c.exponent - 1.0) * std::pow(s, 2.0 - c.exponent)};
}

/// Coefficients of every link at `step` of the previous iterate.
inline LinearCoefficients update_coefficients(const Network& net, const StateVector& prev,
                                              const GpConfig& cfg, std::size_t step = 0)
{
  cfg.validate();
  prev.require(net);
  LinearCoefficients out;
  out.pipe.reserve(net.pipe_count());
  for (std::size_t l = 0; l < net.pipe_count(); ++l) {
    const double q = prev.flow(step, l);
    if (!std::isfinite(q)) throw DomainError("non-finite pipe flow in previous iterate");
    out.pipe.push_back(pipe_coefficient(q, net.pipes()[l].model()));
  }
  for (std::size_t m = 0; m < net.pump_count(); ++m) {
    const double q = prev.flow(step, net.pump_offset() + m);
    if (!std::isfinite(q)) throw DomainError("non-finite pump flow in previous iterate");
    const auto c = pump_coefficients(std::max(q, kPumpFlowFloor), net.pumps()[m].curve);
    out.pump_intercept.push_back(c.intercept);
    out.pump_slope.push_back(c.slope);
  }
  return out;
}

namespace detail {

// Natural log of the monomial prod((b^x_k)^a_k) * b^c.
inline double log_monomial(std::initializer_list<std::pair<double, double>> terms, double c,
                           double base)
{
  const double lb = std::log(base);
  double acc = c * lb;
  for (auto [exponent, x] : terms) acc += exponent * (x * lb);
  return acc;
}

}  // namespace detail

/// True when the monomial pipe constraint equals 1 at (q, h_i, h_j).
inline bool gp_linear_equivalence(double q, double h_i, double h_j, const HeadLossModel& m,
                                  const GpConfig& cfg, double tol = 1e-9)
{
  cfg.validate();
  const double c = pipe_coefficient(q, m);
  const double v = detail::log_monomial({{1.0, h_i}, {-1.0, h_j}, {-1.0, q}}, -c, cfg.base);
  return std::abs(v) <= tol;
}

/// Pump counterpart: b^(h_i) * b^(-h_j) * (b^q)^(-C2) * b^(-C1) = 1.
inline bool gp_linear_equivalence(double q, double h_i, double h_j, const PumpCurve& curve,
                                  const GpConfig& cfg, double tol = 1e-9)
{
  cfg.validate();
  const auto c = pump_coefficients(q, curve);
  const double v =
      detail::log_monomial({{1.0, h_i}, {-1.0, h_j}, {-c.slope, q}}, -c.intercept, cfg.base);
  return std::abs(v) <= tol;
}

}  // namespace wdnse

#endif  // WDNSE_LINEARIZATION_HPP
