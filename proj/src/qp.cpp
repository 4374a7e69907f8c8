#include "elop/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace elop {

namespace {

constexpr double kSymTol = 1e-12;       // relative symmetry tolerance on q
constexpr double kRidgeScale = 1e-10;   // ridge for PSD-singular q, times trace/d
constexpr double kSingularTol = 1e-12;  // eigenvalue ratio that triggers the ridge

struct Workspace {
  Eigen::MatrixXd q;  // ridged copy used by the iteration
  Eigen::VectorXd c;
  std::vector<bool> nonneg;     // per-coordinate bound flag
  std::vector<bool> in_sum;     // per-coordinate sum-constraint membership
  bool has_sum = false;
  double sum_target = 0.0;
  double ridge = 0.0;
};

void validate(const QpProblem& p) {
  const Eigen::Index d = p.q.rows();
  if (d < 1 || p.q.cols() != d) {
    throw DimensionMismatch("q must be square and nonempty");
  }
  if (p.c.size() != d) {
    throw DimensionMismatch("c length does not match q");
  }
  if (!p.q.allFinite() || !p.c.allFinite()) {
    throw DimensionMismatch("q and c must be finite");
  }
  const double scale = std::max(1.0, p.q.cwiseAbs().maxCoeff());
  if ((p.q - p.q.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale) {
    throw DimensionMismatch("q is not symmetric");
  }
  for (int i : p.nonneg_indices) {
    if (i < 0 || i >= d) throw DimensionMismatch("nonneg index out of range");
  }
  if (p.sum_constraint) {
    for (int i : p.sum_constraint->indices) {
      if (i < 0 || i >= d) throw DimensionMismatch("sum-constraint index out of range");
    }
  }
}

Workspace make_workspace(const QpProblem& p) {
  const Eigen::Index d = p.q.rows();
  Workspace w;
  w.q = 0.5 * (p.q + p.q.transpose());
  w.c = p.c;
  w.nonneg.assign(static_cast<std::size_t>(d), false);
  for (int i : p.nonneg_indices) w.nonneg[static_cast<std::size_t>(i)] = true;
  w.in_sum.assign(static_cast<std::size_t>(d), false);
  if (p.sum_constraint && !p.sum_constraint->indices.empty()) {
    w.has_sum = true;
    w.sum_target = p.sum_constraint->target;
    for (int i : p.sum_constraint->indices) w.in_sum[static_cast<std::size_t>(i)] = true;
  } else if (p.sum_constraint && p.sum_constraint->indices.empty()) {
    if (p.sum_constraint->target != 0.0) {
      throw InfeasibleConstraint("sum constraint over no coordinates with nonzero target");
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w.q, Eigen::EigenvaluesOnly);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (eig.eigenvalues().minCoeff() <= kSingularTol * std::max(lambda_max, 0.0)) {
    w.ridge = kRidgeScale * std::max(w.q.trace(), 1.0) / static_cast<double>(d);
    w.q.diagonal().array() += w.ridge;
  }
  return w;
}

Eigen::VectorXd feasible_start(const Workspace& w) {
  const Eigen::Index d = w.q.rows();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  if (!w.has_sum) return beta;

  // Prefer an unconstrained sum coordinate; otherwise spread the target over
  // the bounded ones, which requires it to be nonnegative.
  for (Eigen::Index i = 0; i < d; ++i) {
    if (w.in_sum[static_cast<std::size_t>(i)] && !w.nonneg[static_cast<std::size_t>(i)]) {
      beta[i] = w.sum_target;
      return beta;
    }
  }
  if (w.sum_target < 0.0) {
    throw InfeasibleConstraint("sum target is negative but every sum coordinate is bounded below by zero");
  }
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (w.in_sum[static_cast<std::size_t>(i)]) ++count;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (w.in_sum[static_cast<std::size_t>(i)]) beta[i] = w.sum_target / static_cast<double>(count);
  }
  return beta;
}

// Minimizer of the quadratic restricted to {x_W = 0, sum constraint}.
Eigen::VectorXd solve_subproblem(const Workspace& w, const std::vector<bool>& working) {
  const Eigen::Index d = w.q.rows();
  std::vector<Eigen::Index> free_idx;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!working[static_cast<std::size_t>(i)]) free_idx.push_back(i);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  if (free_idx.empty()) return x;

  Eigen::Index pivot = -1;
  if (w.has_sum) {
    for (Eigen::Index i : free_idx) {
      if (w.in_sum[static_cast<std::size_t>(i)]) {
        pivot = i;
        break;
      }
    }
  }

  if (pivot < 0) {
    // No sum constraint active on the free block: plain reduced system.
    const Eigen::Index m = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd qff(m, m);
    Eigen::VectorXd cf(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      cf[a] = w.c[free_idx[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < m; ++b) {
        qff(a, b) = w.q(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(qff);
    if (llt.info() != Eigen::Success) {
      throw Error("quadratic term is not positive definite on the working subspace");
    }
    const Eigen::VectorXd xf = llt.solve(-cf);
    for (Eigen::Index a = 0; a < m; ++a) x[free_idx[static_cast<std::size_t>(a)]] = xf[a];
    return x;
  }

  // Null-space elimination of the sum constraint through the pivot
  // coordinate: x_pivot = target - sum of the other free sum coordinates.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  x0[pivot] = w.sum_target;
  const Eigen::Index m = static_cast<Eigen::Index>(free_idx.size()) - 1;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(d, m);
  Eigen::Index col = 0;
  for (Eigen::Index i : free_idx) {
    if (i == pivot) continue;
    z(i, col) = 1.0;
    if (w.in_sum[static_cast<std::size_t>(i)]) z(pivot, col) = -1.0;
    ++col;
  }
  if (m == 0) return x0;  // single free sum coordinate: fully determined

  const Eigen::MatrixXd h = z.transpose() * w.q * z;
  const Eigen::VectorXd g0 = z.transpose() * (w.q * x0 + w.c);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) {
    throw Error("quadratic term is not positive definite on the working subspace");
  }
  const Eigen::VectorXd u = llt.solve(-g0);
  return x0 + z * u;
}

}  // namespace

QpSolution solve(const QpProblem& p, double tol, int max_iter) {
  validate(p);
  if (tol <= 0.0) {
    throw DimensionMismatch("tolerance must be positive");
  }
  const Eigen::Index d = p.q.rows();
  if (max_iter <= 0) {
    max_iter = std::max(30, 10 * static_cast<int>(d) * static_cast<int>(d));
  }

  Workspace w = make_workspace(p);
  Eigen::VectorXd beta = feasible_start(w);

  // Working set: bounded coordinates currently pinned at zero.
  std::vector<bool> working(static_cast<std::size_t>(d), false);
  for (Eigen::Index i = 0; i < d; ++i) {
    working[static_cast<std::size_t>(i)] = w.nonneg[static_cast<std::size_t>(i)] && beta[i] == 0.0;
  }

  int iterations = 0;
  bool converged = false;
  // Not every pass changes the working set (a clean full step does not), so
  // the pass guard is wider than the iteration cap.
  int passes = 0;
  while (iterations < max_iter && passes++ < 4 * max_iter + 16) {
    const Eigen::VectorXd target = solve_subproblem(w, working);
    const Eigen::VectorXd step = target - beta;
    const double step_scale = 1.0 + beta.cwiseAbs().maxCoeff();

    if (step.cwiseAbs().maxCoeff() <= tol * step_scale) {
      // Stationary on the working set; check the bound multipliers.
      const Eigen::VectorXd grad = w.q * beta + w.c;
      double nu = 0.0;
      if (w.has_sum) {
        bool found_free = false;
        for (Eigen::Index i = 0; i < d; ++i) {
          if (w.in_sum[static_cast<std::size_t>(i)] && !working[static_cast<std::size_t>(i)]) {
            nu = grad[i];
            found_free = true;
            break;
          }
        }
        if (!found_free) {
          // Whole sum set pinned: pick the multiplier that favors optimality.
          double lo = std::numeric_limits<double>::infinity();
          for (Eigen::Index i = 0; i < d; ++i) {
            if (w.in_sum[static_cast<std::size_t>(i)]) lo = std::min(lo, grad[i]);
          }
          nu = lo;
        }
      }
      Eigen::Index worst = -1;
      double worst_lambda = -tol;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (!working[static_cast<std::size_t>(i)]) continue;
        const double lambda =
            grad[i] - (w.has_sum && w.in_sum[static_cast<std::size_t>(i)] ? nu : 0.0);
        if (lambda < worst_lambda) {
          worst_lambda = lambda;
          worst = i;
        }
      }
      if (worst < 0) {
        converged = true;
        break;
      }
      working[static_cast<std::size_t>(worst)] = false;
      ++iterations;
      continue;
    }

    // Ratio test against the bounds that are not in the working set.
    double alpha = 1.0;
    Eigen::Index blocker = -1;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!w.nonneg[static_cast<std::size_t>(i)] || working[static_cast<std::size_t>(i)]) continue;
      if (step[i] < -std::numeric_limits<double>::min()) {
        const double limit = -beta[i] / step[i];
        if (limit < alpha) {
          alpha = limit;
          blocker = i;
        }
      }
    }
    beta += alpha * step;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (w.nonneg[static_cast<std::size_t>(i)] && beta[i] < 0.0) beta[i] = 0.0;
    }
    if (blocker >= 0) {
      beta[blocker] = 0.0;
      working[static_cast<std::size_t>(blocker)] = true;
      ++iterations;
    }
  }

  QpSolution sol;
  sol.beta = beta;
  sol.objective = 0.5 * beta.dot(p.q * beta) + p.c.dot(beta);
  sol.kkt_residual = check_kkt(p, beta);
  sol.iterations = iterations;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (working[static_cast<std::size_t>(i)]) sol.active_set.push_back(static_cast<int>(i));
  }
  sol.ridge_added = w.ridge;
  sol.converged = converged;
  return sol;
}

namespace {

// Natural residual of coordinate i given its effective gradient. Free
// coordinates must be stationary; bounded ones use the projection residual,
// which also charges infeasibility.
double coordinate_residual(bool bounded, double beta_i, double g_i) {
  if (!bounded) return std::abs(g_i);
  return std::abs(beta_i - std::max(0.0, beta_i - g_i));
}

}  // namespace

double check_kkt(const QpProblem& p, const Eigen::VectorXd& beta) {
  validate(p);
  if (beta.size() != p.q.rows()) {
    throw DimensionMismatch("beta length does not match the problem");
  }
  const Eigen::Index d = p.q.rows();
  std::vector<bool> nonneg(static_cast<std::size_t>(d), false);
  for (int i : p.nonneg_indices) nonneg[static_cast<std::size_t>(i)] = true;
  std::vector<bool> in_sum(static_cast<std::size_t>(d), false);
  bool has_sum = false;
  double sum_target = 0.0;
  if (p.sum_constraint && !p.sum_constraint->indices.empty()) {
    has_sum = true;
    sum_target = p.sum_constraint->target;
    for (int i : p.sum_constraint->indices) in_sum[static_cast<std::size_t>(i)] = true;
  }

  const Eigen::VectorXd grad = 0.5 * (p.q + p.q.transpose()) * beta + p.c;

  double base = 0.0;  // terms independent of the equality multiplier
  for (Eigen::Index i = 0; i < d; ++i) {
    if (in_sum[static_cast<std::size_t>(i)]) continue;
    base = std::max(base, coordinate_residual(nonneg[static_cast<std::size_t>(i)], beta[i], grad[i]));
  }

  if (!has_sum) return base;

  double sum_value = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (in_sum[static_cast<std::size_t>(i)]) sum_value += beta[i];
  }
  base = std::max(base, std::abs(sum_value - sum_target));

  // The equality multiplier is free; minimize the max-norm over it. The
  // per-coordinate terms are piecewise linear in nu with slopes in
  // {-1, 0, +1}, so the minimum is attained at a breakpoint or a pairwise
  // intersection; evaluate them all.
  auto sum_terms = [&](double nu) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!in_sum[static_cast<std::size_t>(i)]) continue;
      worst = std::max(worst, coordinate_residual(nonneg[static_cast<std::size_t>(i)], beta[i],
                                                  grad[i] - nu));
    }
    return worst;
  };

  // Piece offsets are the gradients; plateau heights are the (bounded)
  // coordinate values.
  std::vector<double> offsets;
  std::vector<double> heights;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!in_sum[static_cast<std::size_t>(i)]) continue;
    offsets.push_back(grad[i]);
    if (nonneg[static_cast<std::size_t>(i)]) heights.push_back(beta[i]);
  }
  std::vector<double> candidates = offsets;
  for (std::size_t a = 0; a < offsets.size(); ++a) {
    for (std::size_t b = a + 1; b < offsets.size(); ++b) {
      candidates.push_back(0.5 * (offsets[a] + offsets[b]));
    }
    for (double h : heights) {
      candidates.push_back(offsets[a] + h);
      candidates.push_back(offsets[a] - h);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (double nu : candidates) best = std::min(best, sum_terms(nu));
  if (candidates.empty()) best = 0.0;
  return std::max(base, best);
}

}  // namespace elop
