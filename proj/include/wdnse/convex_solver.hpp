#ifndef WDNSE_CONVEX_SOLVER_HPP
#define WDNSE_CONVEX_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "wdnse/error.hpp"

namespace wdnse {

enum class ObjectiveKind
{
  WeightedLeastSquares,  // sum w * eps^2
  WeightedAbsolute,      // sum w * |eps|
};

enum class SolveStatus
{
  Optimal,
  Infeasible,
  IterationLimit,
};

inline const char* to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::IterationLimit: return "iteration-limit";
  }
  return "?";
}

/**
 * min  sum_m w_m * rho(eps_m),  eps = residual_matrix * x - residual_offset
 * s.t. eq_matrix * x = eq_rhs,  lower <= x <= upper
 *
 * with rho(e) = e^2 or |e|.
 */
struct ConvexProgram
{
  ObjectiveKind kind = ObjectiveKind::WeightedLeastSquares;
  Eigen::MatrixXd residual_matrix;
  Eigen::VectorXd residual_offset;
  Eigen::VectorXd weights;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index variable_count() const { return lower.size(); }

  /// Empty program over n variables with infinite bounds.
  static ConvexProgram unconstrained(Eigen::Index n, ObjectiveKind kind = ObjectiveKind::WeightedLeastSquares)
  {
    ConvexProgram p;
    p.kind = kind;
    p.residual_matrix.resize(0, n);
    p.residual_offset.resize(0);
    p.weights.resize(0);
    p.eq_matrix.resize(0, n);
    p.eq_rhs.resize(0);
    p.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    p.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    return p;
  }

  void validate() const
  {
    const auto n = variable_count();
    if (upper.size() != n || residual_matrix.cols() != n || eq_matrix.cols() != n) {
      throw ContractError("program column counts disagree");
    }
    if (residual_offset.size() != residual_matrix.rows() || weights.size() != residual_matrix.rows()) {
      throw ContractError("residual offset or weights have the wrong length");
    }
    if (eq_rhs.size() != eq_matrix.rows()) throw ContractError("equality rhs has the wrong length");
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
        throw ContractError("weights must be positive and finite");
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(lower[i] <= upper[i])) throw ContractError("lower bound exceeds upper bound");
    }
    if (!residual_matrix.allFinite() || !residual_offset.allFinite() || !eq_matrix.allFinite() ||
        !eq_rhs.allFinite()) {
      throw ContractError("program data must be finite");
    }
  }

  double objective(const Eigen::VectorXd& x) const
  {
    const Eigen::VectorXd eps = residual_matrix * x - residual_offset;
    if (kind == ObjectiveKind::WeightedLeastSquares) {
      return (weights.array() * eps.array().square()).sum();
    }
    return (weights.array() * eps.array().abs()).sum();
  }
};

struct SolveResult
{
  Eigen::VectorXd solution;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::Infeasible;
  int iterations = 0;
};

struct SolverOptions
{
  double tolerance = 1e-8;       // KKT residual required for an optimal status
  double rank_tolerance = 1e-10; // pivot threshold for redundant equalities
  int max_iterations = 0;        // 0 picks a size-dependent cap
  int bland_after = 0;           // 0 picks a size-dependent switch point
};

namespace detail {

// min 0.5 x'Hx + c'x  s.t.  Ax = b, l <= x <= u
struct QuadraticProgram
{
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
};

enum class BoundState : unsigned char
{
  Free,
  Lower,
  Upper,
};

inline QuadraticProgram lift(const ConvexProgram& p)
{
  const auto n = p.variable_count();
  const auto m = p.residual_matrix.rows();
  QuadraticProgram q;
  if (p.kind == ObjectiveKind::WeightedLeastSquares) {
    const Eigen::MatrixXd wa = p.weights.asDiagonal() * p.residual_matrix;
    q.H = 2.0 * p.residual_matrix.transpose() * wa;
    q.c = -2.0 * wa.transpose() * p.residual_offset;
    q.A = p.eq_matrix;
    q.b = p.eq_rhs;
    q.l = p.lower;
    q.u = p.upper;
    return q;
  }
  // Epigraph form: eps = pos - neg with pos, neg >= 0, cost w'(pos + neg).
  const auto inf = std::numeric_limits<double>::infinity();
  const auto nn = n + 2 * m;
  q.H = Eigen::MatrixXd::Zero(nn, nn);
  q.c = Eigen::VectorXd::Zero(nn);
  q.c.segment(n, m) = p.weights;
  q.c.segment(n + m, m) = p.weights;
  q.A = Eigen::MatrixXd::Zero(p.eq_matrix.rows() + m, nn);
  q.A.topLeftCorner(p.eq_matrix.rows(), n) = p.eq_matrix;
  q.A.block(p.eq_matrix.rows(), 0, m, n) = p.residual_matrix;
  q.A.block(p.eq_matrix.rows(), n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  q.A.block(p.eq_matrix.rows(), n + m, m, m) = Eigen::MatrixXd::Identity(m, m);
  q.b.resize(p.eq_rhs.size() + m);
  q.b << p.eq_rhs, p.residual_offset;
  q.l.resize(nn);
  q.u.resize(nn);
  q.l << p.lower, Eigen::VectorXd::Zero(2 * m);
  q.u << p.upper, Eigen::VectorXd::Constant(2 * m, inf);
  return q;
}

inline Eigen::VectorXd lift_point(const ConvexProgram& p, const Eigen::VectorXd& x)
{
  if (p.kind == ObjectiveKind::WeightedLeastSquares) return x;
  const auto n = p.variable_count();
  const auto m = p.residual_matrix.rows();
  const Eigen::VectorXd eps = p.residual_matrix * x - p.residual_offset;
  Eigen::VectorXd z(n + 2 * m);
  z << x, eps.cwiseMax(0.0), (-eps).cwiseMax(0.0);
  return z;
}

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline double kkt_residual(const QuadraticProgram& q, const Eigen::VectorXd& x)
{
  const auto n = x.size();
  double res = 0.0;
  if (q.A.rows()) res = std::max(res, max_abs(q.A * x - q.b));
  std::vector<Eigen::Index> active;
  std::vector<int> side;  // +1 lower, -1 upper, 0 fixed
  for (Eigen::Index i = 0; i < n; ++i) {
    res = std::max({res, q.l[i] - x[i], x[i] - q.u[i]});
    const double tl = 1e-9 * (1.0 + std::abs(q.l[i]));
    const double tu = 1e-9 * (1.0 + std::abs(q.u[i]));
    const bool at_l = std::isfinite(q.l[i]) && std::abs(x[i] - q.l[i]) <= tl;
    const bool at_u = std::isfinite(q.u[i]) && std::abs(x[i] - q.u[i]) <= tu;
    if (at_l && at_u) {
      active.push_back(i);
      side.push_back(0);
    } else if (at_l) {
      active.push_back(i);
      side.push_back(1);
    } else if (at_u) {
      active.push_back(i);
      side.push_back(-1);
    }
  }
  const Eigen::VectorXd g = q.H * x + q.c;
  const auto m = q.A.rows();
  const auto k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, m + k);
  if (m) basis.leftCols(m) = q.A.transpose();
  for (Eigen::Index j = 0; j < k; ++j) basis(active[j], m + j) = 1.0;
  Eigen::VectorXd mult = Eigen::VectorXd::Zero(m + k);
  if (m + k > 0) mult = basis.completeOrthogonalDecomposition().solve(g);
  res = std::max(res, max_abs(g - basis * mult));
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mu = mult[m + j];
    if (side[j] == 1) res = std::max(res, -mu);
    if (side[j] == -1) res = std::max(res, mu);
  }
  return res;
}

struct CoreResult
{
  Eigen::VectorXd x;
  bool converged = false;
  int iterations = 0;
};

/**
 * Primal active-set method over simple bounds for a feasible starting point.
 *
 * Each iteration minimizes the quadratic on the face fixed by the working
 * set (null space of the free columns of A), follows descent rays on flat
 * directions, and adds the first blocking bound. At a face minimizer the
 * bound with the most negative multiplier is released.
 */
inline CoreResult active_set(const QuadraticProgram& q, Eigen::VectorXd x, std::vector<BoundState> ws,
                             const SolverOptions& opt)
{
  const auto n = x.size();
  const auto m = q.A.rows();
  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50 * static_cast<int>(n + m) + 200;
  const int bland_after = opt.bland_after > 0 ? opt.bland_after : max_iter / 2;
  const double inf = std::numeric_limits<double>::infinity();

  CoreResult out;
  bool face_min = false;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ws[static_cast<std::size_t>(i)] == BoundState::Free) free.push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    const double xscale = 1.0 + max_abs(x);

    Eigen::VectorXd g = q.H * x + q.c;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    bool ray = false;

    if (nf > 0) {
      Eigen::MatrixXd af(m, nf);
      Eigen::MatrixXd hff(nf, nf);
      Eigen::VectorXd gf(nf);
      for (Eigen::Index j = 0; j < nf; ++j) {
        if (m) af.col(j) = q.A.col(free[j]);
        gf[j] = g[free[j]];
        for (Eigen::Index k = 0; k < nf; ++k) hff(j, k) = q.H(free[j], free[k]);
      }

      Eigen::VectorXd p = Eigen::VectorXd::Zero(nf);
      Eigen::MatrixXd z;
      if (m) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(af, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() ? sv[0] : 0.0;
        Eigen::Index rank = 0;
        while (rank < sv.size() && sv[rank] > opt.rank_tolerance * std::max(1.0, smax)) ++rank;
        const Eigen::VectorXd r = q.b - q.A * x;
        if (rank > 0) {
          const Eigen::VectorXd ur = svd.matrixU().leftCols(rank).transpose() * r;
          p = svd.matrixV().leftCols(rank) * (ur.array() / sv.head(rank).array()).matrix();
        }
        z = svd.matrixV().rightCols(nf - rank);
      } else {
        z = Eigen::MatrixXd::Identity(nf, nf);
      }

      Eigen::VectorXd df = p;
      if (z.cols() > 0) {
        const Eigen::VectorXd gp = gf + hff * p;
        const Eigen::MatrixXd hz = z.transpose() * hff * z;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hz);
        const auto& lam = eig.eigenvalues();
        const Eigen::MatrixXd basis = z * eig.eigenvectors();
        const Eigen::VectorXd gz = basis.transpose() * gp;
        const double lmax = lam.cwiseAbs().maxCoeff();
        const double ctol = 1e-10 * std::max(1.0, lmax);
        const double gtol = 1e-12 * std::max(1.0, max_abs(g));
        Eigen::VectorXd step_newton = Eigen::VectorXd::Zero(lam.size());
        Eigen::VectorXd step_ray = Eigen::VectorXd::Zero(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
          if (lam[i] > ctol) {
            step_newton[i] = -gz[i] / lam[i];
          } else if (std::abs(gz[i]) > gtol) {
            step_ray[i] = -gz[i];
            ray = true;
          }
        }
        if (ray) {
          // Correct feasibility drift first; rays are followed from a feasible point.
          if (max_abs(p) > 1e-12 * xscale) df = p;
          else df = basis * step_ray;
          ray = max_abs(p) <= 1e-12 * xscale;
        } else {
          df = p + basis * step_newton;
        }
      }
      for (Eigen::Index j = 0; j < nf; ++j) d[free[j]] = df[j];
    }

    const bool tiny = max_abs(d) <= 1e-13 * xscale;
    if (!ray && (tiny || (face_min && max_abs(d) <= 1e-9 * xscale))) {
      // Face minimizer: polish, then check bound multipliers.
      const Eigen::VectorXd polished = x + d;
      if (((polished - q.l).array() >= 0.0).all() && ((q.u - polished).array() >= 0.0).all()) {
        x = polished;
        g = q.H * x + q.c;
      }
      face_min = false;
      std::vector<Eigen::Index> bound;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (ws[static_cast<std::size_t>(i)] != BoundState::Free) bound.push_back(i);
      }
      const auto k = static_cast<Eigen::Index>(bound.size());
      if (k == 0) {
        out.converged = true;
        break;
      }
      Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, m + k);
      if (m) basis.leftCols(m) = q.A.transpose();
      for (Eigen::Index j = 0; j < k; ++j) basis(bound[j], m + j) = 1.0;
      const Eigen::VectorXd mult = basis.completeOrthogonalDecomposition().solve(g);
      const double dtol = 1e-10 * std::max(1.0, max_abs(g));
      Eigen::Index release = -1;
      double worst = dtol;
      for (Eigen::Index j = 0; j < k; ++j) {
        const auto i = bound[j];
        if (q.l[i] == q.u[i]) continue;
        const double mu = mult[m + j];
        const double viol = ws[static_cast<std::size_t>(i)] == BoundState::Lower ? -mu : mu;
        if (viol <= dtol) continue;
        if (it >= bland_after) {
          release = i;
          break;
        }
        if (viol > worst) {
          worst = viol;
          release = i;
        }
      }
      if (release < 0) {
        out.converged = true;
        break;
      }
      ws[static_cast<std::size_t>(release)] = BoundState::Free;
      continue;
    }

    // Ratio test; ties go to the smallest index.
    double alpha = ray ? inf : 1.0;
    Eigen::Index block = -1;
    BoundState block_side = BoundState::Free;
    const double dtiny = 1e-15 * xscale;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ws[static_cast<std::size_t>(i)] != BoundState::Free) continue;
      double t = inf;
      BoundState s = BoundState::Free;
      if (d[i] < -dtiny && std::isfinite(q.l[i])) {
        t = std::max(0.0, (q.l[i] - x[i]) / d[i]);
        s = BoundState::Lower;
      } else if (d[i] > dtiny && std::isfinite(q.u[i])) {
        t = std::max(0.0, (q.u[i] - x[i]) / d[i]);
        s = BoundState::Upper;
      }
      if (t < alpha) {
        alpha = t;
        block = i;
        block_side = s;
      }
    }
    if (!std::isfinite(alpha)) throw ContractError("convex program is unbounded below");
    x += alpha * d;
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::clamp(x[i], q.l[i], q.u[i]);
    if (block >= 0) {
      ws[static_cast<std::size_t>(block)] = block_side;
      x[block] = block_side == BoundState::Lower ? q.l[block] : q.u[block];
    }
    face_min = !ray && block < 0;
  }
  out.x = std::move(x);
  return out;
}

inline std::vector<BoundState> initial_working_set(const QuadraticProgram& q, const Eigen::VectorXd& x)
{
  std::vector<BoundState> ws(static_cast<std::size_t>(x.size()), BoundState::Free);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] == q.l[i]) ws[static_cast<std::size_t>(i)] = BoundState::Lower;
    else if (x[i] == q.u[i]) ws[static_cast<std::size_t>(i)] = BoundState::Upper;
  }
  return ws;
}

inline Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& l, const Eigen::VectorXd& u)
{
  return x.cwiseMax(l).cwiseMin(u);
}

}  // namespace detail

/// Max-norm KKT residual of `x`: feasibility, stationarity and multiplier signs.
inline double verify_kkt(const ConvexProgram& p, const Eigen::VectorXd& x)
{
  if (x.size() != p.variable_count()) throw ContractError("point has the wrong dimension");
  return detail::kkt_residual(detail::lift(p), detail::lift_point(p, x));
}

inline SolveResult solve(const ConvexProgram& p, const SolverOptions& opt = {})
{
  using namespace detail;
  p.validate();
  const auto q = lift(p);
  const auto n = q.l.size();

  // Drop dependent equality rows.
  Eigen::MatrixXd a_red(0, n);
  Eigen::VectorXd b_red(0);
  if (q.A.rows()) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(q.A.transpose());
    qr.setThreshold(opt.rank_tolerance);
    const auto rank = qr.rank();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < rank; ++i) keep.push_back(qr.colsPermutation().indices()[i]);
    std::sort(keep.begin(), keep.end());
    a_red.resize(rank, n);
    b_red.resize(rank);
    for (Eigen::Index i = 0; i < rank; ++i) {
      a_red.row(i) = q.A.row(keep[static_cast<std::size_t>(i)]);
      b_red[i] = q.b[keep[static_cast<std::size_t>(i)]];
    }
  }

  SolveResult res;

  // Phase 1: bounded least squares on the equalities.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  if (a_red.rows()) x0 = a_red.completeOrthogonalDecomposition().solve(b_red);
  x0 = clamp(x0, q.l, q.u);
  const double bscale = 1.0 + max_abs(q.b);
  if (a_red.rows()) {
    QuadraticProgram feas;
    feas.H = 2.0 * a_red.transpose() * a_red;
    feas.c = -2.0 * a_red.transpose() * b_red;
    feas.A.resize(0, n);
    feas.b.resize(0);
    feas.l = q.l;
    feas.u = q.u;
    if (max_abs(a_red * x0 - b_red) > 1e-12 * bscale) {
      auto r1 = active_set(feas, x0, initial_working_set(feas, x0), opt);
      res.iterations += r1.iterations;
      x0 = r1.x;
    }
  }
  const double infeas = q.A.rows() ? max_abs(q.A * x0 - q.b) : 0.0;
  if (infeas > 1e-7 * bscale) {
    res.solution = x0.head(p.variable_count());
    res.status = SolveStatus::Infeasible;
    res.kkt_residual = infeas;
    res.objective = p.objective(res.solution);
    return res;
  }

  // Phase 2.
  QuadraticProgram red = q;
  red.A = a_red;
  red.b = b_red;
  auto r2 = active_set(red, x0, initial_working_set(red, x0), opt);
  res.iterations += r2.iterations;
  res.solution = r2.x.head(p.variable_count());
  res.objective = p.objective(res.solution);
  res.kkt_residual = verify_kkt(p, res.solution);
  res.status = r2.converged && res.kkt_residual <= opt.tolerance ? SolveStatus::Optimal
                                                                  : SolveStatus::IterationLimit;
  return res;
}

}  // namespace wdnse

#endif  // WDNSE_CONVEX_SOLVER_HPP
