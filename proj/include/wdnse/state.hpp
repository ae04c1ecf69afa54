#ifndef WDNSE_STATE_HPP
#define WDNSE_STATE_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "wdnse/error.hpp"
#include "wdnse/network.hpp"

namespace wdnse {

/**
 * Heads and flows of every node and link for steps 0..T-1.
 *
 * Heads follow the network's node order (junctions, reservoirs, tanks) and
 * flows its link order (pipes, pumps). The flattened layout stacks
 * [heads, flows] step by step.
 */
class StateVector
{
public:
  StateVector() = default;

  StateVector(std::size_t nodes, std::size_t links, std::size_t steps = 1)
      : nodes_(nodes), links_(links), steps_(steps), heads_(nodes * steps, 0.0),
        flows_(links * steps, 0.0)
  {
    if (steps == 0) throw ContractError("a state needs at least one time step");
  }

  static StateVector zeros(const Network& net, std::size_t steps = 1)
  {
    return StateVector(net.node_count(), net.link_count(), steps);
  }

  std::size_t node_count() const { return nodes_; }
  std::size_t link_count() const { return links_; }
  std::size_t steps() const { return steps_; }
  std::size_t step_size() const { return nodes_ + links_; }
  std::size_t size() const { return step_size() * steps_; }

  double& head(std::size_t step, std::size_t node) { return heads_.at(step * nodes_ + node); }
  double head(std::size_t step, std::size_t node) const { return heads_.at(step * nodes_ + node); }
  double& flow(std::size_t step, std::size_t link) { return flows_.at(step * links_ + link); }
  double flow(std::size_t step, std::size_t link) const { return flows_.at(step * links_ + link); }

  bool matches(const Network& net) const
  {
    return nodes_ == net.node_count() && links_ == net.link_count() && steps_ >= 1;
  }

  void require(const Network& net) const
  {
    if (!matches(net)) throw ContractError("state dimensions do not match the network");
  }

  Eigen::VectorXd flatten() const
  {
    Eigen::VectorXd x(size());
    for (std::size_t k = 0; k < steps_; ++k) {
      const auto base = k * step_size();
      for (std::size_t n = 0; n < nodes_; ++n) x[base + n] = head(k, n);
      for (std::size_t l = 0; l < links_; ++l) x[base + nodes_ + l] = flow(k, l);
    }
    return x;
  }

  static StateVector unflatten(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t nodes,
                               std::size_t links, std::size_t steps)
  {
    StateVector s(nodes, links, steps);
    if (static_cast<std::size_t>(x.size()) < s.size()) {
      throw ContractError("flat vector is shorter than the state layout");
    }
    for (std::size_t k = 0; k < steps; ++k) {
      const auto base = k * s.step_size();
      for (std::size_t n = 0; n < nodes; ++n) s.head(k, n) = x[base + n];
      for (std::size_t l = 0; l < links; ++l) s.flow(k, l) = x[base + nodes + l];
    }
    return s;
  }

  bool all_finite() const
  {
    for (double v : heads_) if (!std::isfinite(v)) return false;
    for (double v : flows_) if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const StateVector&) const = default;

private:
  std::size_t nodes_ = 0;
  std::size_t links_ = 0;
  std::size_t steps_ = 1;
  std::vector<double> heads_;
  std::vector<double> flows_;
};

/// Euclidean distance between two states of the same shape.
inline double distance(const StateVector& a, const StateVector& b)
{
  if (a.size() != b.size()) throw ContractError("states have different shapes");
  return (a.flatten() - b.flatten()).norm();
}

}  // namespace wdnse

#endif  // WDNSE_STATE_HPP
