#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "elop/errors.hpp"
#include "elop/panel.hpp"

namespace elop {

// Information structure of the Gaussian partial-information model: the
// outcome has unit variance and mean zero, forecaster j uses a delta_j slice
// of the total information, and rho(i, j) is the information shared by
// forecasters i and j. The implied joint covariance of (Y, X_1, ..., X_N) is
//
//   [ 1       delta' ]
//   [ delta   Sigma  ]
//
// with Sigma = rho and diag(Sigma) = delta. Validated positive semidefinite
// at construction. Immutable afterwards.
class InformationStructure {
 public:
  InformationStructure(Eigen::VectorXd delta, Eigen::MatrixXd rho);

  Eigen::Index n_forecasters() const { return delta_.size(); }
  const Eigen::VectorXd& delta() const { return delta_; }
  const Eigen::MatrixXd& rho() const { return rho_; }

  // The full (N+1) x (N+1) joint covariance above.
  Eigen::MatrixXd full_covariance() const;

 private:
  Eigen::VectorXd delta_;
  Eigen::MatrixXd rho_;
};

InformationStructure build_structure(const Eigen::VectorXd& delta, double rho_offdiag);
InformationStructure build_structure(const Eigen::VectorXd& delta, const Eigen::MatrixXd& rho);

// Parses {"delta": [...], "rho": scalar-or-matrix}.
InformationStructure structure_from_json(const std::string& text);
std::string structure_to_json(const InformationStructure& s);

// Draws k iid (N+1)-vectors (Y, X_1, ..., X_N) from the model. Pure function
// of (structure, k, seed).
ForecastPanel sample_panel(const InformationStructure& s, Eigen::Index k, std::uint64_t seed);

// Coefficient vector c = Sigma^{-1} diag(Sigma), so the revealed aggregator
// is c'X_k. Requires Sigma invertible.
Eigen::VectorXd revealed_coefficients(const InformationStructure& s);

// Var of the revealed aggregator: diag(Sigma)' Sigma^{-1} diag(Sigma).
double revealed_variance(const InformationStructure& s);

// c'X_k for every column of the panel.
Eigen::VectorXd revealed_aggregate(const InformationStructure& s, const ForecastPanel& p);

}  // namespace elop
