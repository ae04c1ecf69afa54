#ifndef WDNSE_ESTIMATOR_HPP
#define WDNSE_ESTIMATOR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wdnse/convex_solver.hpp"
#include "wdnse/error.hpp"
#include "wdnse/hydraulics.hpp"
#include "wdnse/incidence.hpp"
#include "wdnse/linearization.hpp"
#include "wdnse/measurements.hpp"
#include "wdnse/network.hpp"
#include "wdnse/state.hpp"

namespace wdnse {

struct EstimatorConfig
{
  GpConfig gp{};
  double threshold = 1e-4;
  int max_iterations = 100;
  int acceleration_period = 4;
  double acceleration_gain = 3.0;
  ObjectiveKind objective = ObjectiveKind::WeightedLeastSquares;
  std::size_t horizon = 1;
  double time_step = 3600.0;  // s
  double growth_limit = 10.0; // extrapolations that inflate the error beyond this factor are dropped
  bool relax_head_bounds = true;
  SolverOptions solver{};

  void validate() const
  {
    gp.validate();
    if (!(threshold > 0.0)) throw ContractError("threshold must be positive");
    if (max_iterations < 1) throw ContractError("max_iterations must be at least 1");
    if (acceleration_period < 2) throw ContractError("acceleration period must be at least 2");
    if (!(acceleration_gain >= 0.0)) throw ContractError("acceleration gain must be nonnegative");
    if (horizon < 1) throw ContractError("horizon must be at least 1");
    if (!(time_step > 0.0)) throw ContractError("time step must be positive");
  }
};

/// Junction demands per step; empty means the network's base demands at every step.
using DemandSchedule = std::vector<std::vector<double>>;

struct IterationRecord
{
  int n = 0;
  StateVector state;
  double error = 0.0;
  double objective = 0.0;
  bool accelerated = false;
  bool relaxed = false;  // head bounds were dropped to keep the subproblem feasible
  SolveStatus subproblem = SolveStatus::Optimal;
};

using IterationTrace = std::vector<IterationRecord>;

enum class EstimateStatus
{
  Converged,
  IterationLimit,
};

inline const char* to_string(EstimateStatus s)
{
  return s == EstimateStatus::Converged ? "converged" : "iteration-limit";
}

struct EstimateResult
{
  StateVector state;
  IterationTrace trace;
  EstimateStatus status = EstimateStatus::IterationLimit;
  int accelerations_discarded = 0;
};

namespace detail {

inline DemandSchedule resolve_demands(const Network& net, const DemandSchedule& demands,
                                      std::size_t steps)
{
  if (demands.empty()) return DemandSchedule(steps, base_demands(net));
  if (demands.size() != steps) throw ContractError("demand schedule length differs from horizon");
  for (const auto& d : demands) {
    if (d.size() != net.junction_count()) throw ContractError("demand row has the wrong length");
  }
  return demands;
}

}  // namespace detail

/**
 * Convex subproblem for fixed link coefficients.
 *
 * Variables are [heads, flows] per step. Equalities: junction mass balance,
 * one linearized row per link tying it to its end heads, reservoir heads,
 * fixed heads at step 0, and tank dynamics between consecutive steps.
 * Pump flows are capped where the linearized pump stops adding head.
 */
inline ConvexProgram assemble(const Network& net, const IncidenceOperators& inc,
                              const MeasurementSet& meas,
                              const std::vector<LinearCoefficients>& coeffs,
                              const EstimatorConfig& cfg, const DemandSchedule& demands = {},
                              bool relax_heads = false)
{
  const auto steps = cfg.horizon;
  if (coeffs.size() != steps) throw ContractError("one coefficient set per step is required");
  for (const auto& c : coeffs) {
    if (c.pipe.size() != net.pipe_count() || c.pump_slope.size() != net.pump_count() ||
        c.pump_intercept.size() != net.pump_count()) {
      throw ContractError("coefficient lengths do not match the network");
    }
  }
  meas.validate(net, steps);
  const auto dem = detail::resolve_demands(net, demands, steps);

  using Eigen::Index;
  const auto nodes = static_cast<Index>(net.node_count());
  const auto links = static_cast<Index>(net.link_count());
  const auto block = nodes + links;
  const auto nvar = block * static_cast<Index>(steps);
  const auto junctions = static_cast<Index>(net.junction_count());
  const auto tanks = static_cast<Index>(net.tank_count());

  std::vector<std::pair<Index, double>> fixed;
  for (const auto& [id, h] : meas.fixed) fixed.emplace_back(static_cast<Index>(net.node_index(id)), h);

  const Index per_step = junctions + links + static_cast<Index>(net.reservoir_count());
  const Index rows = per_step * static_cast<Index>(steps) + static_cast<Index>(fixed.size()) +
                     tanks * static_cast<Index>(steps - 1);

  ConvexProgram p = ConvexProgram::unconstrained(nvar, cfg.objective);
  p.eq_matrix = Eigen::MatrixXd::Zero(rows, nvar);
  p.eq_rhs = Eigen::VectorXd::Zero(rows);

  auto head = [&](std::size_t k, Index n) { return static_cast<Index>(k) * block + n; };
  auto flow = [&](std::size_t k, Index l) { return static_cast<Index>(k) * block + nodes + l; };

  Index r = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    for (Index j = 0; j < junctions; ++j, ++r) {
      for (Index l = 0; l < links; ++l) p.eq_matrix(r, flow(k, l)) = inc.mass(j, l);
      p.eq_rhs[r] = dem[k][static_cast<std::size_t>(j)];
    }
    for (Index l = 0; l < links; ++l, ++r) {
      const auto lu = static_cast<std::size_t>(l);
      p.eq_matrix(r, head(k, static_cast<Index>(net.link_from(lu)))) += 1.0;
      p.eq_matrix(r, head(k, static_cast<Index>(net.link_to(lu)))) -= 1.0;
      if (net.link_kind(lu) == LinkKind::Pipe) {
        p.eq_matrix(r, flow(k, l)) = -1.0;
        p.eq_rhs[r] = coeffs[k].pipe[lu];
      } else {
        const auto m = lu - net.pump_offset();
        p.eq_matrix(r, flow(k, l)) = -coeffs[k].pump_slope[m];
        p.eq_rhs[r] = coeffs[k].pump_intercept[m];
      }
    }
    for (std::size_t i = 0; i < net.reservoir_count(); ++i, ++r) {
      p.eq_matrix(r, head(k, static_cast<Index>(net.reservoir_offset() + i))) = 1.0;
      p.eq_rhs[r] = net.reservoirs()[i].head;
    }
  }
  for (const auto& [n, h] : fixed) {
    p.eq_matrix(r, head(0, n)) = 1.0;
    p.eq_rhs[r++] = h;
  }
  for (std::size_t k = 1; k < steps; ++k) {
    for (Index t = 0; t < tanks; ++t, ++r) {
      const Index n = static_cast<Index>(net.tank_offset()) + t;
      p.eq_matrix(r, head(k, n)) = 1.0;
      p.eq_matrix(r, head(k - 1, n)) = -1.0;
      for (Index l = 0; l < links; ++l) p.eq_matrix(r, flow(k - 1, l)) = -inc.tank(t, l);
    }
  }

  for (std::size_t k = 0; k < steps; ++k) {
    for (Index n = 0; n < nodes; ++n) {
      const auto nu = static_cast<std::size_t>(n);
      if (relax_heads && net.node_kind(nu) != NodeKind::Reservoir) continue;
      const auto b = net.head_bounds(nu);
      p.lower[head(k, n)] = b.lower;
      p.upper[head(k, n)] = b.upper;
    }
    for (Index l = 0; l < links; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      auto b = net.flow_bounds(lu);
      if (net.link_kind(lu) == LinkKind::Pump) {
        const auto m = lu - net.pump_offset();
        b.upper = std::min(b.upper, -coeffs[k].pump_intercept[m] / coeffs[k].pump_slope[m]);
      }
      p.lower[flow(k, l)] = b.lower;
      p.upper[flow(k, l)] = std::max(b.lower, b.upper);
    }
  }

  const auto nm = static_cast<Index>(meas.entries.size());
  p.residual_matrix = Eigen::MatrixXd::Zero(nm, nvar);
  p.residual_offset.resize(nm);
  p.weights.resize(nm);
  for (Index i = 0; i < nm; ++i) {
    const auto& m = meas.entries[static_cast<std::size_t>(i)];
    p.residual_matrix(i, head(m.step, static_cast<Index>(net.node_index(m.from)))) += 1.0;
    p.residual_matrix(i, head(m.step, static_cast<Index>(net.node_index(m.to)))) -= 1.0;
    p.residual_offset[i] = m.value;
    p.weights[i] = m.weight;
  }
  return p;
}

/// Measurement residuals (h_from - h_to) - value of a state.
inline Eigen::VectorXd residual(const Network& net, const MeasurementSet& meas, const StateVector& state)
{
  state.require(net);
  Eigen::VectorXd eps(static_cast<Eigen::Index>(meas.entries.size()));
  for (std::size_t i = 0; i < meas.entries.size(); ++i) {
    const auto& m = meas.entries[i];
    eps[static_cast<Eigen::Index>(i)] =
        state.head(m.step, net.node_index(m.from)) - state.head(m.step, net.node_index(m.to)) - m.value;
  }
  return eps;
}

/// Weighted objective of the measurement residuals at `state`.
inline double weighted_objective(const Network& net, const MeasurementSet& meas,
                                 const StateVector& state,
                                 ObjectiveKind kind = ObjectiveKind::WeightedLeastSquares)
{
  const auto eps = residual(net, meas, state);
  double acc = 0.0;
  for (std::size_t i = 0; i < meas.entries.size(); ++i) {
    const double e = eps[static_cast<Eigen::Index>(i)];
    acc += meas.entries[i].weight * (kind == ObjectiveKind::WeightedLeastSquares ? e * e : std::abs(e));
  }
  return acc;
}

/// Default starting point: 100 GPM on every link, tank and reservoir heads from the network.
inline StateVector initial_state(const Network& net, std::size_t steps = 1, double flow = 100.0)
{
  auto s = StateVector::zeros(net, steps);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t n = 0; n < net.node_count(); ++n) {
      switch (net.node_kind(n)) {
        case NodeKind::Junction: s.head(k, n) = net.junctions()[n].elevation; break;
        case NodeKind::Reservoir: s.head(k, n) = net.reservoirs()[n - net.reservoir_offset()].head; break;
        case NodeKind::Tank: s.head(k, n) = net.tanks()[n - net.tank_offset()].initial_head; break;
      }
    }
    for (std::size_t l = 0; l < net.link_count(); ++l) s.flow(k, l) = flow;
  }
  return s;
}

/**
 * Successive linear approximation.
 *
 * Each iteration refreshes the link coefficients from the previous iterate
 * and solves the convex subproblem. Every `acceleration_period` iterations
 * the iterate is extrapolated away from the one two iterations back. The
 * loop stops when consecutive iterates are closer than `threshold`.
 */
inline EstimateResult run(const Network& net, const MeasurementSet& meas, const EstimatorConfig& cfg,
                          const StateVector& initial, const DemandSchedule& demands = {})
{
  cfg.validate();
  initial.require(net);
  if (initial.steps() != cfg.horizon) throw ContractError("initial state horizon differs from config");
  meas.validate(net, cfg.horizon);
  if (!initial.all_finite()) throw ContractError("initial state must be finite");

  const auto inc = build_incidence(net, meas.sensors(), cfg.time_step);
  const auto nodes = net.node_count();
  const auto links = net.link_count();
  const auto steps = cfg.horizon;

  auto solve_at = [&](const StateVector& x, bool& relaxed) {
    std::vector<LinearCoefficients> coeffs;
    for (std::size_t k = 0; k < steps; ++k) coeffs.push_back(update_coefficients(net, x, cfg.gp, k));
    relaxed = false;
    auto res = solve(assemble(net, inc, meas, coeffs, cfg, demands, false), cfg.solver);
    if (res.status == SolveStatus::Infeasible && cfg.relax_head_bounds) {
      relaxed = true;
      res = solve(assemble(net, inc, meas, coeffs, cfg, demands, true), cfg.solver);
    }
    return res;
  };

  EstimateResult out;
  StateVector x = initial;
  Eigen::VectorXd saved = initial.flatten();
  std::vector<Eigen::VectorXd> history{saved};
  std::optional<Eigen::VectorXd> before_accel;
  double last_error = std::numeric_limits<double>::infinity();

  for (int n = 1; n <= cfg.max_iterations; ++n) {
    bool relaxed = false;
    auto res = solve_at(x, relaxed);
    if (res.status == SolveStatus::Infeasible && before_accel) {
      // The extrapolated point produced an infeasible subproblem: fall back.
      x = StateVector::unflatten(*before_accel, nodes, links, steps);
      history.back() = *before_accel;
      saved = *before_accel;
      out.trace.back().accelerated = false;
      out.trace.back().state = x;
      ++out.accelerations_discarded;
      before_accel.reset();
      res = solve_at(x, relaxed);
    }
    if (res.status == SolveStatus::Infeasible) {
      throw EstimationError("subproblem is infeasible", n);
    }
    before_accel.reset();

    Eigen::VectorXd xi = res.solution;
    bool accelerated = false;
    const double plain_error = (xi - saved).norm();
    if (n % cfg.acceleration_period == 0 && cfg.acceleration_gain > 0.0 && history.size() >= 2) {
      const Eigen::VectorXd& back2 = history[history.size() - 2];
      Eigen::VectorXd cand = xi + cfg.acceleration_gain * (xi - back2);
      const double cand_error = (cand - saved).norm();
      const bool finite = cand.allFinite() && std::isfinite(cand_error);
      const bool tame = !std::isfinite(last_error) || cand_error <= cfg.growth_limit * last_error;
      if (finite && tame) {
        before_accel = xi;
        xi = std::move(cand);
        accelerated = true;
      } else {
        ++out.accelerations_discarded;
      }
    }
    const double error = accelerated ? (xi - saved).norm() : plain_error;
    saved = xi;
    history.push_back(xi);
    x = StateVector::unflatten(xi, nodes, links, steps);
    last_error = error;

    out.trace.push_back({n, x, error, res.objective, accelerated, relaxed, res.status});
    if (error < cfg.threshold) {
      out.status = EstimateStatus::Converged;
      break;
    }
  }

  // An extrapolated iterate is not a subproblem solution; report the one it came from.
  out.state = before_accel ? StateVector::unflatten(*before_accel, nodes, links, steps) : x;
  return out;
}

inline EstimateResult run(const Network& net, const MeasurementSet& meas, const EstimatorConfig& cfg)
{
  return run(net, meas, cfg, initial_state(net, cfg.horizon));
}

}  // namespace wdnse

#endif  // WDNSE_ESTIMATOR_HPP
