#ifndef WDNSE_ORACLE_HPP
#define WDNSE_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wdnse/error.hpp"
#include "wdnse/estimator.hpp"
#include "wdnse/hydraulics.hpp"
#include "wdnse/measurements.hpp"
#include "wdnse/network.hpp"
#include "wdnse/state.hpp"

// Reference solvers working on the exact nonlinear link relations. They share
// the network model and the hydraulic formulas with the estimator but none of
// its linearization or convex machinery.

namespace wdnse {

inline constexpr std::uint64_t kDefaultOracleSeed = 0x5eed2023ULL;

struct OracleResult
{
  StateVector state;
  double max_equation_residual = std::numeric_limits<double>::infinity();
  int starts_tried = 0;
  double best_objective = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  int iterations = 0;
};

namespace detail {

// Floor inside flow-derivative powers so Newton steps stay finite at q = 0.
inline constexpr double kDerivativeFloor = 1e-6;

// Link relation h_i - h_j = phi(q); pumps are continued as odd functions for q < 0.
inline double link_phi(const Network& net, std::size_t l, double q)
{
  if (net.link_kind(l) == LinkKind::Pipe) return pipe_headloss(q, net.pipes()[l].model());
  const auto& c = net.pumps()[l - net.pump_offset()].curve;
  return -(c.shutoff_head - c.coefficient * q * std::pow(std::abs(q), c.exponent - 1.0));
}

inline double link_dphi(const Network& net, std::size_t l, double q)
{
  if (net.link_kind(l) == LinkKind::Pipe) {
    const auto& p = net.pipes()[l];
    return p.resistance * p.exponent * std::pow(std::abs(q) + kDerivativeFloor, p.exponent - 1.0);
  }
  const auto& c = net.pumps()[l - net.pump_offset()].curve;
  return c.coefficient * c.exponent * std::pow(std::abs(q) + kDerivativeFloor, c.exponent - 1.0);
}

inline double max_residual(const Network& net, const StateVector& s, const std::vector<double>& demands)
{
  double r = 0.0;
  for (double v : junction_imbalance(net, s, demands)) r = std::max(r, std::abs(v));
  for (std::size_t l = 0; l < net.link_count(); ++l) {
    const double dh = s.head(0, net.link_from(l)) - s.head(0, net.link_to(l));
    r = std::max(r, std::abs(dh - link_phi(net, l, s.flow(0, l))));
  }
  return r;
}

}  // namespace detail

/**
 * Steady-state hydraulics with known tank and reservoir heads.
 *
 * Newton iteration on junction mass balance and every link relation, with
 * step halving on the residual norm. Tanks and reservoirs missing from
 * `fixed_heads` keep their network head.
 */
inline OracleResult solve_hydraulics(const Network& net, const std::map<std::string, double>& fixed_heads = {},
                                     std::vector<double> demands = {})
{
  if (demands.empty()) demands = base_demands(net);
  if (demands.size() != net.junction_count()) throw ContractError("demand vector has the wrong length");

  const auto nj = net.junction_count();
  const auto nl = net.link_count();
  const auto nn = net.node_count();

  std::vector<double> known(nn, 0.0);
  for (std::size_t n = nj; n < nn; ++n) {
    known[n] = net.node_kind(n) == NodeKind::Reservoir ? net.reservoirs()[n - net.reservoir_offset()].head
                                                       : net.tanks()[n - net.tank_offset()].initial_head;
  }
  for (const auto& [id, h] : fixed_heads) {
    const auto n = net.node_index(id);
    if (net.node_kind(n) == NodeKind::Junction) {
      throw ContractError("fixed heads apply to tanks and reservoirs only");
    }
    known[n] = h;
  }

  double mean_known = 0.0;
  for (std::size_t n = nj; n < nn; ++n) mean_known += known[n];
  mean_known = nn > nj ? mean_known / static_cast<double>(nn - nj) : 0.0;

  const auto dim = static_cast<Eigen::Index>(nj + nl);
  Eigen::VectorXd y(dim);
  for (std::size_t j = 0; j < nj; ++j) y[static_cast<Eigen::Index>(j)] = mean_known;
  for (std::size_t l = 0; l < nl; ++l) y[static_cast<Eigen::Index>(nj + l)] = 100.0;

  auto head_of = [&](const Eigen::VectorXd& v, std::size_t n) {
    return n < nj ? v[static_cast<Eigen::Index>(n)] : known[n];
  };
  auto equations = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(dim);
    for (std::size_t j = 0; j < nj; ++j) f[static_cast<Eigen::Index>(j)] = -demands[j];
    for (std::size_t l = 0; l < nl; ++l) {
      const double q = v[static_cast<Eigen::Index>(nj + l)];
      const auto a = net.link_from(l);
      const auto b = net.link_to(l);
      if (a < nj) f[static_cast<Eigen::Index>(a)] -= q;
      if (b < nj) f[static_cast<Eigen::Index>(b)] += q;
      f[static_cast<Eigen::Index>(nj + l)] = head_of(v, a) - head_of(v, b) - detail::link_phi(net, l, q);
    }
    return f;
  };

  OracleResult out;
  out.starts_tried = 1;
  Eigen::VectorXd f = equations(y);
  double fnorm = f.norm();
  constexpr int kMaxIter = 200;
  constexpr int kMaxHalvings = 10;
  int it = 0;
  double moved = std::numeric_limits<double>::infinity();
  for (; it < kMaxIter && (f.cwiseAbs().maxCoeff() > 1e-10 || moved > 1e-10); ++it) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t l = 0; l < nl; ++l) {
      const auto col = static_cast<Eigen::Index>(nj + l);
      const auto a = net.link_from(l);
      const auto b = net.link_to(l);
      if (a < nj) jac(static_cast<Eigen::Index>(a), col) -= 1.0;
      if (b < nj) jac(static_cast<Eigen::Index>(b), col) += 1.0;
      if (a < nj) jac(col, static_cast<Eigen::Index>(a)) += 1.0;
      if (b < nj) jac(col, static_cast<Eigen::Index>(b)) -= 1.0;
      jac(col, col) = -detail::link_dphi(net, l, y[col]);
    }
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-f);
    double t = 1.0;
    int halvings = 0;
    Eigen::VectorXd trial = y + t * step;
    Eigen::VectorXd ft = equations(trial);
    while (!(ft.norm() < fnorm) && halvings < kMaxHalvings) {
      t *= 0.5;
      ++halvings;
      trial = y + t * step;
      ft = equations(trial);
    }
    if (!ft.allFinite()) break;
    moved = t * step.cwiseAbs().maxCoeff();
    y = trial;
    f = ft;
    fnorm = f.norm();
  }
  out.iterations = it;

  auto s = StateVector::zeros(net);
  for (std::size_t n = 0; n < nn; ++n) s.head(0, n) = head_of(y, n);
  for (std::size_t l = 0; l < nl; ++l) s.flow(0, l) = y[static_cast<Eigen::Index>(nj + l)];
  out.state = s;
  out.max_equation_residual = detail::max_residual(net, s, demands);
  if (!(out.max_equation_residual <= 1e-6)) {
    throw NoConvergence("hydraulic solve did not converge (residual " +
                        std::to_string(out.max_equation_residual) + ")");
  }
  for (std::size_t m = 0; m < net.pump_count(); ++m) {
    if (s.flow(0, net.pump_offset() + m) < -1e-9) {
      throw NoConvergence("hydraulic solution reverses pump '" + net.pumps()[m].id + "'");
    }
  }
  out.best_objective = 0.0;
  return out;
}

struct GlobalSearchOptions
{
  int starts = 32;
  std::uint64_t seed = kDefaultOracleSeed;
  double flow_min = -1000.0;  // GPM, sampling box for loop flows
  double flow_max = 1000.0;
  int max_iterations = 200;
};

namespace detail {

// Flows as q = base + basis * loop_flows, exactly satisfying junction mass
// balance. Non-junction nodes are merged into one ground node; the spanning
// tree grows from the ground in breadth-first order, taking links in
// ascending id order.
struct LoopParametrization
{
  Eigen::VectorXd base;
  Eigen::MatrixXd basis;
  std::vector<std::size_t> chords;
};

inline LoopParametrization loop_parametrization(const Network& net, const std::vector<double>& demands)
{
  const auto nj = net.junction_count();
  const auto nl = net.link_count();
  auto contracted = [&](std::size_t n) { return n < nj ? n : nj; };

  std::vector<std::size_t> order(nl);
  for (std::size_t l = 0; l < nl; ++l) order[l] = l;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return net.link_id(a) < net.link_id(b); });

  std::vector<std::vector<std::size_t>> adj(nj + 1);
  for (auto l : order) {
    adj[contracted(net.link_from(l))].push_back(l);
    adj[contracted(net.link_to(l))].push_back(l);
  }
  std::vector<bool> seen(nj + 1, false), in_tree(nl, false);
  std::queue<std::size_t> frontier;
  frontier.push(nj);
  seen[nj] = true;
  while (!frontier.empty()) {
    const auto v = frontier.front();
    frontier.pop();
    for (auto l : adj[v]) {
      const auto a = contracted(net.link_from(l));
      const auto b = contracted(net.link_to(l));
      const auto w = a == v ? b : a;
      if (seen[w]) continue;
      seen[w] = true;
      in_tree[l] = true;
      frontier.push(w);
    }
  }

  std::vector<std::size_t> tree;
  LoopParametrization out;
  for (std::size_t l = 0; l < nl; ++l) (in_tree[l] ? tree : out.chords).push_back(l);
  if (tree.size() != nj) throw ValidationError("junctions are not connected to a fixed-head node");

  const auto J = static_cast<Eigen::Index>(nj);
  const auto C = static_cast<Eigen::Index>(out.chords.size());
  Eigen::MatrixXd et = Eigen::MatrixXd::Zero(J, J);
  Eigen::MatrixXd ec = Eigen::MatrixXd::Zero(J, C);
  auto fill = [&](Eigen::MatrixXd& m, Eigen::Index col, std::size_t l) {
    if (net.link_from(l) < nj) m(static_cast<Eigen::Index>(net.link_from(l)), col) = -1.0;
    if (net.link_to(l) < nj) m(static_cast<Eigen::Index>(net.link_to(l)), col) = 1.0;
  };
  for (Eigen::Index i = 0; i < J; ++i) fill(et, i, tree[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = 0; i < C; ++i) fill(ec, i, out.chords[static_cast<std::size_t>(i)]);

  Eigen::VectorXd d(J);
  for (Eigen::Index j = 0; j < J; ++j) d[j] = demands[static_cast<std::size_t>(j)];
  const auto lu = et.partialPivLu();
  const Eigen::VectorXd tree_base = J ? Eigen::VectorXd(lu.solve(d)) : Eigen::VectorXd(0);
  const Eigen::MatrixXd tree_basis = J ? Eigen::MatrixXd(-lu.solve(ec)) : Eigen::MatrixXd(0, C);

  out.base = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nl));
  out.basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nl), C);
  for (Eigen::Index i = 0; i < J; ++i) {
    const auto row = static_cast<Eigen::Index>(tree[static_cast<std::size_t>(i)]);
    out.base[row] = tree_base[i];
    out.basis.row(row) = tree_basis.row(i);
  }
  for (Eigen::Index i = 0; i < C; ++i) out.basis(static_cast<Eigen::Index>(out.chords[static_cast<std::size_t>(i)]), i) = 1.0;
  return out;
}

}  // namespace detail

/**
 * Multi-start weighted least squares on the exact model.
 *
 * Unknowns are loop flows plus all heads not pinned by reservoirs or fixed
 * observations; every link relation is a hard equality. Each start runs a
 * Gauss-Newton SQP with an l1 merit line search. The best converged start
 * wins, ties going to the lower start index.
 */
inline OracleResult solve_se_global(const Network& net, const MeasurementSet& meas,
                                    const GlobalSearchOptions& opt = {})
{
  if (opt.starts < 1) throw ContractError("at least one start is required");
  if (!(opt.flow_min <= opt.flow_max)) throw ContractError("empty flow sampling range");
  meas.validate(net, 1);
  const auto demands = base_demands(net);
  const auto param = detail::loop_parametrization(net, demands);

  const auto nn = net.node_count();
  const auto nl = static_cast<Eigen::Index>(net.link_count());
  const auto nc = static_cast<Eigen::Index>(param.chords.size());

  // Head unknowns: junctions, tanks, minus anything fixed.
  std::vector<double> known(nn, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < net.reservoir_count(); ++i) known[net.reservoir_offset() + i] = net.reservoirs()[i].head;
  for (const auto& [id, h] : meas.fixed) known[net.node_index(id)] = h;
  std::vector<Eigen::Index> slot(nn, -1);
  Eigen::Index nh = 0;
  for (std::size_t n = 0; n < nn; ++n) {
    if (std::isnan(known[n])) slot[n] = nh++;
  }
  const Eigen::Index dim = nc + nh;

  auto flows = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return param.base + param.basis * y.head(nc); };
  auto head = [&](const Eigen::VectorXd& y, std::size_t n) {
    return slot[n] >= 0 ? y[nc + slot[n]] : known[n];
  };

  // Objective residuals are linear in y: r = M y - v.
  const auto nm = static_cast<Eigen::Index>(meas.entries.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nm, dim);
  Eigen::VectorXd v(nm), w(nm);
  for (Eigen::Index i = 0; i < nm; ++i) {
    const auto& e = meas.entries[static_cast<std::size_t>(i)];
    const auto a = net.node_index(e.from);
    const auto b = net.node_index(e.to);
    double offset = e.value;
    if (slot[a] >= 0) M(i, nc + slot[a]) += 1.0; else offset -= known[a];
    if (slot[b] >= 0) M(i, nc + slot[b]) -= 1.0; else offset += known[b];
    v[i] = offset;
    w[i] = e.weight;
  }
  const Eigen::MatrixXd hess = 2.0 * M.transpose() * w.asDiagonal() * M;
  auto objective = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd r = M * y - v;
    return (w.array() * r.array().square()).sum();
  };
  auto constraints = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd q = flows(y);
    Eigen::VectorXd g(nl);
    for (Eigen::Index l = 0; l < nl; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      g[l] = head(y, net.link_from(lu)) - head(y, net.link_to(lu)) - detail::link_phi(net, lu, q[l]);
    }
    return g;
  };
  auto constraint_jacobian = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd q = flows(y);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nl, dim);
    for (Eigen::Index l = 0; l < nl; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      if (nc) G.row(l).head(nc) = -detail::link_dphi(net, lu, q[l]) * param.basis.row(l);
      const auto a = net.link_from(lu);
      const auto b = net.link_to(lu);
      if (slot[a] >= 0) G(l, nc + slot[a]) += 1.0;
      if (slot[b] >= 0) G(l, nc + slot[b]) -= 1.0;
    }
    return G;
  };

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> pipe_dist(opt.flow_min, opt.flow_max);
  std::uniform_real_distribution<double> pump_dist(std::max(0.0, opt.flow_min), std::max(0.0, opt.flow_max));

  OracleResult best;
  best.seed = opt.seed;
  for (int s = 0; s < opt.starts; ++s) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < nc; ++i) {
      const bool pump = net.link_kind(param.chords[static_cast<std::size_t>(i)]) == LinkKind::Pump;
      y[i] = pump ? pump_dist(rng) : pipe_dist(rng);
    }
    // Heads from a least-squares fit of the link relations at the sampled flows.
    if (nh) {
      const Eigen::MatrixXd G = constraint_jacobian(y).rightCols(nh);
      const Eigen::VectorXd g = constraints(y);
      y.tail(nh) -= G.completeOrthogonalDecomposition().solve(g);
    }
    ++best.starts_tried;

    double rho = 1.0;
    bool ok = false;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
      const Eigen::VectorXd g = constraints(y);
      const Eigen::MatrixXd G = constraint_jacobian(y);
      const Eigen::VectorXd grad = hess * y - 2.0 * M.transpose() * (w.asDiagonal() * v);
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + nl, dim + nl);
      kkt.topLeftCorner(dim, dim) = hess;
      kkt.topRightCorner(dim, nl) = G.transpose();
      kkt.bottomLeftCorner(nl, dim) = G;
      Eigen::VectorXd rhs(dim + nl);
      rhs << -grad, -g;
      const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      const Eigen::VectorXd d = sol.head(dim);
      const Eigen::VectorXd lambda = sol.tail(nl);
      if (!d.allFinite()) break;

      const double gnorm1 = g.cwiseAbs().sum();
      if (d.cwiseAbs().maxCoeff() <= 1e-11 * (1.0 + y.cwiseAbs().maxCoeff()) &&
          g.cwiseAbs().maxCoeff() <= 1e-10) {
        ok = true;
        break;
      }
      rho = std::max(rho, 1.1 * lambda.cwiseAbs().maxCoeff());
      const double merit = objective(y) + rho * gnorm1;
      const double slope = grad.dot(d) - rho * gnorm1;
      double t = 1.0;
      Eigen::VectorXd trial = y + d;
      for (int h = 0; h < 40; ++h) {
        const double mt = objective(trial) + rho * constraints(trial).cwiseAbs().sum();
        if (std::isfinite(mt) && mt <= merit + 1e-4 * t * std::min(slope, 0.0)) break;
        t *= 0.5;
        trial = y + t * d;
      }
      y = trial;
    }
    if (!ok) {
      const Eigen::VectorXd g = constraints(y);
      ok = g.allFinite() && g.cwiseAbs().maxCoeff() <= 1e-8;
    }
    if (!ok) continue;

    const Eigen::VectorXd q = flows(y);
    bool pumps_forward = true;
    for (std::size_t m = 0; m < net.pump_count(); ++m) {
      if (q[static_cast<Eigen::Index>(net.pump_offset() + m)] < -1e-9) pumps_forward = false;
    }
    if (!pumps_forward) continue;

    const double f = objective(y);
    if (f < best.best_objective) {
      auto st = StateVector::zeros(net);
      for (std::size_t n = 0; n < nn; ++n) st.head(0, n) = head(y, n);
      for (Eigen::Index l = 0; l < nl; ++l) st.flow(0, static_cast<std::size_t>(l)) = q[l];
      best.state = st;
      best.best_objective = f;
      best.iterations = it;
      best.max_equation_residual = detail::max_residual(net, st, demands);
    }
  }
  if (!std::isfinite(best.best_objective)) {
    throw NoConvergence("no start of the global search converged");
  }
  return best;
}

}  // namespace wdnse

#endif  // WDNSE_ORACLE_HPP
