#pragma once

#include <Eigen/Dense>
#include <iosfwd>

#include "elop/errors.hpp"

namespace elop {

// K outcomes with an N x K matrix of forecasts, entry (j, k) being forecaster
// j's prediction for problem k. Immutable after construction.
class ForecastPanel {
 public:
  ForecastPanel(Eigen::VectorXd outcomes, Eigen::MatrixXd forecasts);

  const Eigen::VectorXd& outcomes() const { return outcomes_; }
  const Eigen::MatrixXd& forecasts() const { return forecasts_; }
  Eigen::Index n_forecasters() const { return forecasts_.rows(); }
  Eigen::Index n_problems() const { return forecasts_.cols(); }

 private:
  Eigen::VectorXd outcomes_;
  Eigen::MatrixXd forecasts_;
};

// CSV with header "y,x1,...,xN", one row per problem.
void write_panel_csv(const ForecastPanel& panel, std::ostream& out);
ForecastPanel read_panel_csv(std::istream& in);

}  // namespace elop
