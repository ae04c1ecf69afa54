#ifndef WDNSE_NETWORK_HPP
#define WDNSE_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wdnse/error.hpp"
#include "wdnse/models.hpp"
#include "wdnse/units.hpp"

namespace wdnse {

enum class NodeKind
{
  Junction,
  Reservoir,
  Tank,
};

enum class LinkKind
{
  Pipe,
  Pump,
};

struct Bounds
{
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return lower <= v && v <= upper; }
  bool operator==(const Bounds&) const = default;
};

// Defaults applied when the input gives no operating limits.
inline constexpr double kDefaultHeadSpan = 500.0;  // ft above elevation
inline constexpr double kDefaultFlowLimit = 1.0e4;  // GPM

struct Junction
{
  std::string id;
  double elevation = 0.0;
  double demand = 0.0;
  Bounds head{};

  static Junction make(std::string id, double elevation, double demand)
  {
    return {std::move(id), elevation, demand, {elevation, elevation + kDefaultHeadSpan}};
  }
  bool operator==(const Junction&) const = default;
};

struct Reservoir
{
  std::string id;
  double head = 0.0;

  bool operator==(const Reservoir&) const = default;
};

struct Tank
{
  std::string id;
  double elevation = 0.0;
  double diameter = 1.0;  // ft
  double initial_head = 0.0;
  Bounds head{};

  /// Tank from EPANET-style levels measured above `elevation`.
  static Tank make(std::string id, double elevation, double init_level, double min_level,
                   double max_level, double diameter_ft)
  {
    return {std::move(id), elevation, diameter_ft, elevation + init_level,
            {elevation + min_level, elevation + max_level}};
  }
  double area() const { return units::kPi * diameter * diameter / 4.0; }
  bool operator==(const Tank&) const = default;
};

struct Pipe
{
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;    // ft
  double diameter = 0.0;  // in
  double roughness = 0.0;
  HeadlossFormula formula = HeadlossFormula::HazenWilliams;
  double resistance = 1.0;
  double exponent = 2.0;
  Bounds flow{-kDefaultFlowLimit, kDefaultFlowLimit};

  /// Pipe whose resistance follows from its geometry and the headloss formula.
  static Pipe make(std::string id, std::string from, std::string to, double length_ft,
                   double diameter_in, double roughness, HeadlossFormula formula)
  {
    const auto m = headloss_model(formula, length_ft, diameter_in, roughness);
    Pipe p;
    p.id = std::move(id);
    p.from = std::move(from);
    p.to = std::move(to);
    p.length = length_ft;
    p.diameter = diameter_in;
    p.roughness = roughness;
    p.formula = formula;
    p.resistance = m.resistance;
    p.exponent = m.exponent;
    return p;
  }

  /// Pipe with a directly specified friction law (no geometry).
  static Pipe with_resistance(std::string id, std::string from, std::string to, double resistance,
                              double exponent)
  {
    Pipe p;
    p.id = std::move(id);
    p.from = std::move(from);
    p.to = std::move(to);
    p.resistance = resistance;
    p.exponent = exponent;
    return p;
  }

  HeadLossModel model() const { return {resistance, exponent}; }
  bool operator==(const Pipe&) const = default;
};

struct Pump
{
  std::string id;
  std::string from;  // suction
  std::string to;    // delivery
  std::string curve_id;
  PumpCurve curve{};
  Bounds flow{0.0, kDefaultFlowLimit};

  static Pump make(std::string id, std::string from, std::string to, PumpCurve curve,
                   std::string curve_id = {})
  {
    return {std::move(id), std::move(from), std::move(to), std::move(curve_id), curve,
            {0.0, kDefaultFlowLimit}};
  }
  bool operator==(const Pump&) const = default;
};

struct Curve
{
  std::string id;
  std::vector<CurvePoint> points;

  bool operator==(const Curve&) const = default;
};

/**
 * Immutable directed graph of a water distribution network.
 *
 * Nodes are densely indexed junctions first, then reservoirs, then tanks;
 * links are indexed pipes first, then pumps. A link is oriented from its
 * first to its second node and positive flow follows that orientation.
 */
class Network
{
public:
  Network(std::vector<Junction> junctions, std::vector<Reservoir> reservoirs,
          std::vector<Tank> tanks, std::vector<Pipe> pipes, std::vector<Pump> pumps,
          std::vector<Curve> curves = {},
          HeadlossFormula formula = HeadlossFormula::HazenWilliams)
      : junctions_(std::move(junctions)),
        reservoirs_(std::move(reservoirs)),
        tanks_(std::move(tanks)),
        pipes_(std::move(pipes)),
        pumps_(std::move(pumps)),
        curves_(std::move(curves)),
        formula_(formula)
  {
    index_and_validate();
  }

  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<Reservoir>& reservoirs() const { return reservoirs_; }
  const std::vector<Tank>& tanks() const { return tanks_; }
  const std::vector<Pipe>& pipes() const { return pipes_; }
  const std::vector<Pump>& pumps() const { return pumps_; }
  const std::vector<Curve>& curves() const { return curves_; }
  HeadlossFormula headloss_formula() const { return formula_; }

  std::size_t junction_count() const { return junctions_.size(); }
  std::size_t reservoir_count() const { return reservoirs_.size(); }
  std::size_t tank_count() const { return tanks_.size(); }
  std::size_t pipe_count() const { return pipes_.size(); }
  std::size_t pump_count() const { return pumps_.size(); }
  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t link_count() const { return link_ids_.size(); }

  std::size_t reservoir_offset() const { return junctions_.size(); }
  std::size_t tank_offset() const { return junctions_.size() + reservoirs_.size(); }
  std::size_t pump_offset() const { return pipes_.size(); }

  std::optional<std::size_t> find_node(std::string_view id) const
  {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t node_index(std::string_view id) const
  {
    auto idx = find_node(id);
    if (!idx) throw ValidationError("unknown node '" + std::string(id) + "'");
    return *idx;
  }

  std::optional<std::size_t> find_link(std::string_view id) const
  {
    auto it = link_index_.find(id);
    if (it == link_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t link_index(std::string_view id) const
  {
    auto idx = find_link(id);
    if (!idx) throw ValidationError("unknown link '" + std::string(id) + "'");
    return *idx;
  }

  const std::string& node_id(std::size_t n) const { return node_ids_.at(n); }
  const std::string& link_id(std::size_t l) const { return link_ids_.at(l); }

  NodeKind node_kind(std::size_t n) const
  {
    if (n < reservoir_offset()) return NodeKind::Junction;
    if (n < tank_offset()) return NodeKind::Reservoir;
    return NodeKind::Tank;
  }

  LinkKind link_kind(std::size_t l) const
  {
    return l < pump_offset() ? LinkKind::Pipe : LinkKind::Pump;
  }

  std::size_t link_from(std::size_t l) const { return endpoints_.at(l).first; }
  std::size_t link_to(std::size_t l) const { return endpoints_.at(l).second; }

  /// Links touching node `n`, in ascending link index.
  const std::vector<std::size_t>& incident_links(std::size_t n) const { return adjacency_.at(n); }

  /// Lower/upper head limits of node `n`; reservoirs are pinned to their head.
  Bounds head_bounds(std::size_t n) const
  {
    switch (node_kind(n)) {
      case NodeKind::Junction: return junctions_[n].head;
      case NodeKind::Reservoir: {
        const double h = reservoirs_[n - reservoir_offset()].head;
        return {h, h};
      }
      case NodeKind::Tank: return tanks_[n - tank_offset()].head;
    }
    return {};
  }

  Bounds flow_bounds(std::size_t l) const
  {
    return link_kind(l) == LinkKind::Pipe ? pipes_[l].flow : pumps_[l - pump_offset()].flow;
  }

  /// Elevation of a junction or tank, head of a reservoir.
  double node_elevation(std::size_t n) const
  {
    switch (node_kind(n)) {
      case NodeKind::Junction: return junctions_[n].elevation;
      case NodeKind::Reservoir: return reservoirs_[n - reservoir_offset()].head;
      case NodeKind::Tank: return tanks_[n - tank_offset()].elevation;
    }
    return 0.0;
  }

  bool operator==(const Network& o) const
  {
    return junctions_ == o.junctions_ && reservoirs_ == o.reservoirs_ && tanks_ == o.tanks_ &&
           pipes_ == o.pipes_ && pumps_ == o.pumps_ && curves_ == o.curves_ &&
           formula_ == o.formula_;
  }

private:
  void add_node(const std::string& id)
  {
    if (id.empty()) throw ValidationError("empty node id");
    if (!node_index_.emplace(id, node_ids_.size()).second) {
      throw ValidationError("duplicate node id '" + id + "'");
    }
    node_ids_.push_back(id);
  }

  void add_link(const std::string& id, const std::string& from, const std::string& to)
  {
    if (id.empty()) throw ValidationError("empty link id");
    if (!link_index_.emplace(id, link_ids_.size()).second) {
      throw ValidationError("duplicate link id '" + id + "'");
    }
    auto a = find_node(from);
    auto b = find_node(to);
    if (!a) throw ValidationError("link '" + id + "' references unknown node '" + from + "'");
    if (!b) throw ValidationError("link '" + id + "' references unknown node '" + to + "'");
    if (*a == *b) throw ValidationError("link '" + id + "' is a self loop");
    link_ids_.push_back(id);
    endpoints_.emplace_back(*a, *b);
  }

  void index_and_validate()
  {
    for (const auto& j : junctions_) {
      add_node(j.id);
      if (!std::isfinite(j.demand) || !std::isfinite(j.elevation)) {
        throw ValidationError("junction '" + j.id + "' has a non-finite value");
      }
      if (!(j.head.lower <= j.head.upper)) {
        throw ValidationError("junction '" + j.id + "' has empty head bounds");
      }
    }
    for (const auto& r : reservoirs_) {
      add_node(r.id);
      if (!std::isfinite(r.head)) throw ValidationError("reservoir '" + r.id + "' head not finite");
    }
    for (const auto& t : tanks_) {
      add_node(t.id);
      if (!(t.area() > 0.0)) throw ValidationError("tank '" + t.id + "' needs a positive area");
      if (!(t.head.lower <= t.initial_head && t.initial_head <= t.head.upper)) {
        throw ValidationError("tank '" + t.id + "' initial head outside its limits");
      }
    }
    for (const auto& p : pipes_) {
      add_link(p.id, p.from, p.to);
      if (!(p.resistance > 0.0) || !std::isfinite(p.resistance)) {
        throw ValidationError("pipe '" + p.id + "' needs a positive resistance");
      }
      if (!(p.exponent >= 1.8 && p.exponent <= 2.0)) {
        throw ValidationError("pipe '" + p.id + "' flow exponent outside [1.8, 2]");
      }
      if (!(p.flow.lower <= p.flow.upper)) {
        throw ValidationError("pipe '" + p.id + "' has empty flow bounds");
      }
    }
    for (const auto& m : pumps_) {
      add_link(m.id, m.from, m.to);
      const auto& c = m.curve;
      if (!(c.shutoff_head > 0.0) || !(c.coefficient > 0.0) || !(c.exponent > 1.0)) {
        throw ValidationError("pump '" + m.id + "' has an invalid head curve");
      }
      if (c.speed != 1.0) throw UnsupportedFeature("pump '" + m.id + "': only unit speed");
      if (!(m.flow.lower >= 0.0) || !(m.flow.lower <= m.flow.upper)) {
        throw ValidationError("pump '" + m.id + "' flow bounds must be nonnegative");
      }
    }
    if (node_ids_.empty()) throw ValidationError("network has no nodes");

    adjacency_.assign(node_ids_.size(), {});
    for (std::size_t l = 0; l < endpoints_.size(); ++l) {
      adjacency_[endpoints_[l].first].push_back(l);
      adjacency_[endpoints_[l].second].push_back(l);
    }

    std::vector<bool> seen(node_ids_.size(), false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
      const auto n = frontier.front();
      frontier.pop();
      for (auto l : adjacency_[n]) {
        const auto m = endpoints_[l].first == n ? endpoints_[l].second : endpoints_[l].first;
        if (!seen[m]) {
          seen[m] = true;
          ++reached;
          frontier.push(m);
        }
      }
    }
    if (reached != node_ids_.size()) {
      for (std::size_t n = 0; n < seen.size(); ++n) {
        if (!seen[n]) throw ValidationError("network is disconnected at node '" + node_ids_[n] + "'");
      }
    }
  }

  std::vector<Junction> junctions_;
  std::vector<Reservoir> reservoirs_;
  std::vector<Tank> tanks_;
  std::vector<Pipe> pipes_;
  std::vector<Pump> pumps_;
  std::vector<Curve> curves_;
  HeadlossFormula formula_;

  std::vector<std::string> node_ids_;
  std::vector<std::string> link_ids_;
  std::map<std::string, std::size_t, std::less<>> node_index_;
  std::map<std::string, std::size_t, std::less<>> link_index_;
  std::vector<std::pair<std::size_t, std::size_t>> endpoints_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

}  // namespace wdnse

#endif  // WDNSE_NETWORK_HPP
