#ifndef WDNSE_HYDRAULICS_HPP
#define WDNSE_HYDRAULICS_HPP

#include <cmath>
#include <span>
#include <vector>

#include "wdnse/error.hpp"
#include "wdnse/models.hpp"
#include "wdnse/network.hpp"
#include "wdnse/state.hpp"
#include "wdnse/units.hpp"

namespace wdnse {

/// Friction head loss h_i - h_j of a pipe carrying q GPM.
inline double pipe_headloss(double q, const HeadLossModel& m)
{
  return m.resistance * q * std::pow(std::abs(q), m.exponent - 1.0);
}

/// Head difference h_i - h_j across a running pump (negative means a gain).
inline double pump_headgain(double q, const PumpCurve& c)
{
  if (q < 0.0) throw DomainError("pump flow must be nonnegative");
  const double s = c.speed;
  return -s * s * (c.shutoff_head - c.coefficient * std::pow(q / s, c.exponent));
}

/// Tank head after `dt` seconds of constant net inflow (GPM).
inline double tank_step(double head, double net_inflow, double area, double dt)
{
  return head + dt / area * (net_inflow * units::kCfsPerGpm);
}

/// Per-junction inflow minus outflow minus demand at one step.
inline std::vector<double> junction_imbalance(const Network& net, const StateVector& state,
                                              std::span<const double> demands,
                                              std::size_t step = 0)
{
  state.require(net);
  if (demands.size() != net.junction_count()) {
    throw ContractError("demand vector length does not match the junction count");
  }
  if (step >= state.steps()) throw ContractError("step outside the state horizon");
  std::vector<double> out(net.junction_count(), 0.0);
  for (std::size_t l = 0; l < net.link_count(); ++l) {
    const double q = state.flow(step, l);
    const auto from = net.link_from(l);
    const auto to = net.link_to(l);
    if (from < out.size()) out[from] -= q;
    if (to < out.size()) out[to] += q;
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= demands[j];
  return out;
}

inline std::vector<double> base_demands(const Network& net)
{
  std::vector<double> d;
  d.reserve(net.junction_count());
  for (const auto& j : net.junctions()) d.push_back(j.demand);
  return d;
}

inline std::vector<double> junction_imbalance(const Network& net, const StateVector& state,
                                              std::size_t step = 0)
{
  const auto d = base_demands(net);
  return junction_imbalance(net, state, d, step);
}

/// Exact link relation h_i - h_j implied by the flow on link `l`.
inline double link_head_difference(const Network& net, std::size_t l, double q)
{
  if (net.link_kind(l) == LinkKind::Pipe) return pipe_headloss(q, net.pipes()[l].model());
  return pump_headgain(q, net.pumps()[l - net.pump_offset()].curve);
}

}  // namespace wdnse

#endif  // WDNSE_HYDRAULICS_HPP
