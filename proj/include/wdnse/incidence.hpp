#ifndef WDNSE_INCIDENCE_HPP
#define WDNSE_INCIDENCE_HPP

#include <algorithm>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wdnse/error.hpp"
#include "wdnse/network.hpp"
#include "wdnse/units.hpp"

namespace wdnse {

struct SensorPair
{
  std::string from;
  std::string to;
};

struct IncidenceOperators
{
  Eigen::MatrixXd mass;         // junctions x links, +1 inflow, -1 outflow
  Eigen::MatrixXd tank;         // tanks x links, head change per GPM over one step
  Eigen::MatrixXd measurement;  // sensors x links, signed path from `from` to `to`
};

/**
 * Signed link path from node `from` to node `to`.
 *
 * Breadth-first search over the undirected graph; neighbours are visited in
 * ascending link-id order, so among shortest paths the one reached through
 * lexicographically smaller link ids wins. Entry +1 means the link is walked
 * along its orientation, so summing h_a - h_b over the path gives
 * h_from - h_to.
 */
inline std::vector<std::pair<std::size_t, int>> find_path(const Network& net, std::size_t from,
                                                          std::size_t to)
{
  std::vector<std::optional<std::size_t>> via(net.node_count());
  std::vector<bool> seen(net.node_count(), false);
  std::queue<std::size_t> frontier;
  seen[from] = true;
  frontier.push(from);
  while (!frontier.empty() && !seen[to]) {
    const auto n = frontier.front();
    frontier.pop();
    auto links = net.incident_links(n);
    std::sort(links.begin(), links.end(),
              [&](std::size_t a, std::size_t b) { return net.link_id(a) < net.link_id(b); });
    for (auto l : links) {
      const auto m = net.link_from(l) == n ? net.link_to(l) : net.link_from(l);
      if (seen[m]) continue;
      seen[m] = true;
      via[m] = l;
      frontier.push(m);
    }
  }
  if (!seen[to]) {
    throw ValidationError("no path between '" + net.node_id(from) + "' and '" + net.node_id(to) +
                          "'");
  }
  std::vector<std::pair<std::size_t, int>> path;
  for (auto n = to; n != from;) {
    const auto l = *via[n];
    // Walking from the parent towards n follows the link when n is its head.
    const bool forward = net.link_to(l) == n;
    path.emplace_back(l, forward ? 1 : -1);
    n = forward ? net.link_from(l) : net.link_to(l);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline IncidenceOperators build_incidence(const Network& net, const std::vector<SensorPair>& sensors,
                                          double dt = 3600.0)
{
  const auto links = static_cast<Eigen::Index>(net.link_count());
  IncidenceOperators out;
  out.mass = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.junction_count()), links);
  out.tank = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.tank_count()), links);
  out.measurement = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sensors.size()), links);

  for (Eigen::Index l = 0; l < links; ++l) {
    const auto from = net.link_from(static_cast<std::size_t>(l));
    const auto to = net.link_to(static_cast<std::size_t>(l));
    if (net.node_kind(from) == NodeKind::Junction) out.mass(static_cast<Eigen::Index>(from), l) = -1.0;
    if (net.node_kind(to) == NodeKind::Junction) out.mass(static_cast<Eigen::Index>(to), l) = 1.0;
    for (auto [node, sign] : {std::pair{from, -1.0}, std::pair{to, 1.0}}) {
      if (net.node_kind(node) != NodeKind::Tank) continue;
      const auto t = node - net.tank_offset();
      const double scale = dt / net.tanks()[t].area() * units::kCfsPerGpm;
      out.tank(static_cast<Eigen::Index>(t), l) = sign * scale;
    }
  }

  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const auto a = net.node_index(sensors[s].from);
    const auto b = net.node_index(sensors[s].to);
    if (a == b) throw ValidationError("sensor pair '" + sensors[s].from + "' has equal endpoints");
    for (auto [l, sign] : find_path(net, a, b)) {
      out.measurement(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(l)) = sign;
    }
  }
  return out;
}

}  // namespace wdnse

#endif  // WDNSE_INCIDENCE_HPP
