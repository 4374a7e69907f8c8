#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "elop/errors.hpp"

namespace elop {

// Concrete compressive-strength records: 8 predictors plus the outcome.
// Predictors are stored in the v-indexing used throughout:
//   v1 Cement, v2 Coarse Aggregate, v3 Fly Ash, v4 Water,
//   v5 Superplasticizer, v6 Fine Aggregate, v7 Blast Furnace Slag, v8 Age.
class Dataset {
 public:
  static constexpr int kNumPredictors = 8;
  static const std::array<std::string, kNumPredictors + 1>& column_names();

  Dataset(Eigen::MatrixXd predictors, Eigen::VectorXd outcomes);

  Eigen::Index n_rows() const { return outcomes_.size(); }
  const Eigen::MatrixXd& predictors() const { return predictors_; }  // K x 8
  const Eigen::VectorXd& outcomes() const { return outcomes_; }

 private:
  Eigen::MatrixXd predictors_;
  Eigen::VectorXd outcomes_;
};

// Reads a CSV with a header row naming the 9 columns (any order; matched by
// name, leniently enough to accept the decorated UCI headers). Outcomes must
// be strictly positive.
Dataset load_dataset_csv(std::istream& in);
Dataset load_dataset_csv_file(const std::string& path);

struct FitDiagnostics {
  double rss = 0.0;
  double condition_estimate = 0.0;
};

// OLS fit on a predictor subset, intercept first in `coefficients`.
struct LinearModel {
  std::vector<int> predictor_indices;  // 0-based columns of Dataset::predictors()
  Eigen::VectorXd coefficients;
  FitDiagnostics fit_diagnostics;
};

// The case study's model zoo, as 0-based predictor column sets.
const std::vector<int>& model_m1();  // v1 v2 v3 v4
const std::vector<int>& model_m2();  // v5 v6 v7 v8
const std::vector<int>& model_m3();  // v3 v4 v5 v6
const std::vector<int>& model_mf();  // all eight

// Least squares by column-pivoted QR. row_mask selects the training rows.
LinearModel fit_ols(const Dataset& d, const std::vector<int>& predictor_indices,
                    const std::vector<bool>& row_mask);

// Intercept plus dot product per masked row.
Eigen::VectorXd predict(const LinearModel& m, const Dataset& d, const std::vector<bool>& row_mask);

}  // namespace elop
