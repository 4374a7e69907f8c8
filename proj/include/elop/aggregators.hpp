#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "elop/errors.hpp"
#include "elop/panel.hpp"

namespace elop {

// Simplex weights: w_j >= 0, sum w_j = 1 (validated to solver tolerances).
class WeightVector {
 public:
  explicit WeightVector(Eigen::VectorXd weights);
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }

 private:
  Eigen::VectorXd weights_;
};

// Fitted linear extremization of a weighted average:
//   X*_k = alpha * (w'X_k - mu0) + mu0.
// beta_raw is the underlying solution of the quadratic program, with
// beta_raw[0] the intercept and beta_raw[1..N] the nonnegative slopes.
// mu0_defined is false when alpha = 1 makes mu0 unidentifiable (mu0 is then
// reported as 0, which evaluates identically). weights_defined is false when
// alpha = 0 makes the weights unidentifiable (uniform weights are reported).
struct ExtremizedAggregator {
  Eigen::VectorXd weights;
  double alpha = 0.0;
  double mu0 = 0.0;
  Eigen::VectorXd beta_raw;
  bool mu0_defined = true;
  bool weights_defined = true;
  double training_loss = 0.0;
};

struct RecoveredParameters {
  double alpha = 0.0;
  Eigen::VectorXd weights;
  double mu0 = 0.0;
  bool mu0_defined = true;
  bool weights_defined = true;
};

// Column means of the forecast matrix.
Eigen::VectorXd equal_average(const ForecastPanel& p);

// Per-column sample median; even counts use the midpoint of the two central
// order statistics.
Eigen::VectorXd median_aggregate(const ForecastPanel& p);

// w'X_k per column.
Eigen::VectorXd apply_weights(const WeightVector& w, const ForecastPanel& p);

// Simplex-constrained least squares min_w sum_k (w'X_k - Y_k)^2, solved as a
// quadratic program.
WeightVector fit_weighted_average(const ForecastPanel& train);

// Fits alpha, w, mu0 by quadratic programming on the design (1, X') with the
// slope coordinates constrained nonnegative, then recovers the original
// parameterization.
ExtremizedAggregator fit_extremized(const ForecastPanel& train);

// alpha = sum_{j>=1} beta_j, w_j = beta_j / alpha, mu0 = -beta_0/(1 - alpha),
// with the degenerate alpha = 0 and alpha = 1 cases flagged instead of
// divided through.
RecoveredParameters recover_parameters(const Eigen::VectorXd& beta);

// Evaluates alpha * (w'X_k - mu0) + mu0 per column. alpha = 1 short-circuits
// to the plain weighted average so the equality is exact.
Eigen::VectorXd apply_extremized(const ExtremizedAggregator& a, const ForecastPanel& p);

// True at k iff candidate_k <= base_k <= mu0 or mu0 <= base_k <= candidate_k.
std::vector<bool> is_extremization_of(const Eigen::VectorXd& candidate,
                                      const Eigen::VectorXd& base, double mu0);

// {"alpha": ..., "weights": [...], "mu0": ..., "mu0_defined": ...}
std::string aggregator_to_json(const ExtremizedAggregator& a);

}  // namespace elop
