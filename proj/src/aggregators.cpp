#include "elop/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "elop/qp.hpp"

namespace elop {

namespace {

constexpr double kWeightFloor = -1e-12;
constexpr double kSimplexSumTol = 1e-9;
constexpr double kAlphaZeroTol = 1e-12;   // below this the weights are unidentifiable
constexpr double kAlphaOneTol = 1e-8;     // within this of 1, mu0 is unidentifiable
constexpr double kBetaClipTol = 1e-9;     // worst negative slope accepted from the solver

std::string qp_debug_json(const QpProblem& p, const QpSolution& s) {
  nlohmann::json doc;
  auto matrix = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.q.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < p.q.cols(); ++j) row.push_back(p.q(i, j));
    matrix.push_back(std::move(row));
  }
  doc["q"] = std::move(matrix);
  doc["c"] = std::vector<double>(p.c.data(), p.c.data() + p.c.size());
  doc["beta"] = std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size());
  doc["kkt_residual"] = s.kkt_residual;
  doc["iterations"] = s.iterations;
  doc["ridge_added"] = s.ridge_added;
  return doc.dump();
}

}  // namespace

WeightVector::WeightVector(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) {
    throw DimensionMismatch("weight vector must be nonempty");
  }
  if (weights_.minCoeff() < kWeightFloor) {
    throw NegativeBeta("weight " + std::to_string(weights_.minCoeff()) + " below zero");
  }
  if (std::abs(weights_.sum() - 1.0) > kSimplexSumTol) {
    throw DimensionMismatch("weights must sum to one, got " + std::to_string(weights_.sum()));
  }
}

Eigen::VectorXd equal_average(const ForecastPanel& p) {
  return p.forecasts().colwise().mean().transpose();
}

Eigen::VectorXd median_aggregate(const ForecastPanel& p) {
  const Eigen::Index n = p.n_forecasters();
  const Eigen::Index k = p.n_problems();
  Eigen::VectorXd out(k);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index col = 0; col < k; ++col) {
    for (Eigen::Index j = 0; j < n; ++j) column[static_cast<std::size_t>(j)] = p.forecasts()(j, col);
    const std::size_t mid = column.size() / 2;
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    double m = column[mid];
    if (n % 2 == 0) {
      std::nth_element(column.begin(), column.begin() + (mid - 1), column.begin() + mid);
      m = 0.5 * (m + column[mid - 1]);
    }
    out[col] = m;
  }
  return out;
}

Eigen::VectorXd apply_weights(const WeightVector& w, const ForecastPanel& p) {
  if (w.size() != p.n_forecasters()) {
    throw DimensionMismatch("weight length does not match the panel");
  }
  return p.forecasts().transpose() * w.weights();
}

WeightVector fit_weighted_average(const ForecastPanel& train) {
  if (train.n_problems() < 2) {
    throw TooFewPoints("fitting needs at least two problems");
  }
  const Eigen::MatrixXd& x = train.forecasts();
  const Eigen::Index n = train.n_forecasters();

  QpProblem p;
  p.q = 2.0 * (x * x.transpose());
  p.c = -2.0 * (x * train.outcomes());
  p.nonneg_indices.resize(static_cast<std::size_t>(n));
  SumConstraint sum;
  sum.target = 1.0;
  sum.indices.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    p.nonneg_indices[static_cast<std::size_t>(j)] = static_cast<int>(j);
    sum.indices[static_cast<std::size_t>(j)] = static_cast<int>(j);
  }
  p.sum_constraint = sum;

  const QpSolution sol = solve(p);
  if (!sol.converged) {
    throw QpFailure("weighted-average fit did not converge", qp_debug_json(p, sol));
  }
  return WeightVector(sol.beta.cwiseMax(0.0));
}

ExtremizedAggregator fit_extremized(const ForecastPanel& train) {
  if (train.n_problems() < 2) {
    throw TooFewPoints("fitting needs at least two problems");
  }
  const Eigen::MatrixXd& x = train.forecasts();
  const Eigen::Index n = train.n_forecasters();
  const Eigen::Index k = train.n_problems();

  bool any_varies = false;
  for (Eigen::Index j = 0; j < n && !any_varies; ++j) {
    any_varies = x.row(j).maxCoeff() > x.row(j).minCoeff();
  }
  if (!any_varies) {
    throw DegenerateDesign("every forecaster is constant across problems");
  }

  // Design rows: intercept, then the forecasters.
  Eigen::MatrixXd z(n + 1, k);
  z.row(0).setOnes();
  z.bottomRows(n) = x;

  QpProblem p;
  p.q = z * z.transpose();
  p.c = -(z * train.outcomes());
  for (Eigen::Index j = 1; j <= n; ++j) p.nonneg_indices.push_back(static_cast<int>(j));

  const QpSolution sol = solve(p);
  if (!sol.converged) {
    throw QpFailure("extremization fit did not converge", qp_debug_json(p, sol));
  }

  Eigen::VectorXd beta = sol.beta;
  beta.tail(n) = beta.tail(n).cwiseMax(0.0);
  const RecoveredParameters rec = recover_parameters(beta);

  ExtremizedAggregator agg;
  agg.weights = rec.weights;
  agg.alpha = rec.alpha;
  agg.mu0 = rec.mu0;
  agg.beta_raw = beta;
  agg.mu0_defined = rec.mu0_defined;
  agg.weights_defined = rec.weights_defined;
  agg.training_loss = (z.transpose() * beta - train.outcomes()).squaredNorm() / static_cast<double>(k);
  return agg;
}

RecoveredParameters recover_parameters(const Eigen::VectorXd& beta) {
  if (beta.size() < 2) {
    throw DimensionMismatch("beta needs an intercept and at least one slope");
  }
  const Eigen::Index n = beta.size() - 1;
  Eigen::VectorXd tail = beta.tail(n);
  if (tail.minCoeff() < -kBetaClipTol) {
    throw NegativeBeta("slope coefficient " + std::to_string(tail.minCoeff()) + " below zero");
  }
  tail = tail.cwiseMax(0.0);

  RecoveredParameters rec;
  rec.alpha = tail.sum();
  if (rec.alpha > kAlphaZeroTol) {
    rec.weights = tail / rec.alpha;
  } else {
    rec.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    rec.weights_defined = false;
  }
  if (std::abs(1.0 - rec.alpha) > kAlphaOneTol) {
    rec.mu0 = -beta[0] / (1.0 - rec.alpha);
  } else {
    rec.mu0 = 0.0;
    rec.mu0_defined = false;
  }
  return rec;
}

Eigen::VectorXd apply_extremized(const ExtremizedAggregator& a, const ForecastPanel& p) {
  if (a.weights.size() != p.n_forecasters()) {
    throw DimensionMismatch("aggregator weights do not match the panel");
  }
  const Eigen::VectorXd base = p.forecasts().transpose() * a.weights;
  if (a.alpha == 1.0) {
    return base;  // exact: the transform is the identity on the weighted average
  }
  const double mu0 = a.mu0_defined ? a.mu0 : 0.0;
  return (a.alpha * (base.array() - mu0) + mu0).matrix();
}

std::vector<bool> is_extremization_of(const Eigen::VectorXd& candidate,
                                      const Eigen::VectorXd& base, double mu0) {
  if (candidate.size() != base.size()) {
    throw DimensionMismatch("candidate and base lengths differ");
  }
  std::vector<bool> out(static_cast<std::size_t>(candidate.size()));
  for (Eigen::Index k = 0; k < candidate.size(); ++k) {
    out[static_cast<std::size_t>(k)] = (candidate[k] <= base[k] && base[k] <= mu0) ||
                                       (mu0 <= base[k] && base[k] <= candidate[k]);
  }
  return out;
}

std::string aggregator_to_json(const ExtremizedAggregator& a) {
  nlohmann::json doc;
  doc["alpha"] = a.alpha;
  doc["weights"] = std::vector<double>(a.weights.data(), a.weights.data() + a.weights.size());
  doc["mu0"] = a.mu0;
  doc["mu0_defined"] = a.mu0_defined;
  return doc.dump();
}

}  // namespace elop
