#include "elop/pif.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "elop/rng.hpp"

namespace elop {

namespace {

constexpr double kPsdTol = 1e-10;         // eigenvalue check, relative to lambda_max
constexpr double kSingularTol = 1e-12;    // invertibility check for Sigma
constexpr double kJitterScale = 1e-12;    // relative to max diagonal
constexpr int kJitterRetries = 3;

// LDL^T factorization of a PSD matrix, returned as M = L sqrt(D) so that
// M M' = A. Pivots within `pivot_tol` of zero are clamped to zero with the
// rest of their column, which handles boundary structures (delta = 1)
// exactly instead of through jitter. Returns false on a genuinely negative
// pivot.
bool psd_factor(const Eigen::MatrixXd& a, Eigen::MatrixXd& m) {
  const Eigen::Index n = a.rows();
  const double pivot_tol = kPsdTol * std::max(1.0, a.diagonal().maxCoeff());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double pivot = a(k, k);
    for (Eigen::Index j = 0; j < k; ++j) pivot -= l(k, j) * l(k, j) * d[j];
    if (pivot < -pivot_tol) return false;
    if (pivot <= pivot_tol) {
      d[k] = 0.0;
      l(k, k) = 1.0;
      continue;  // column below stays zero: the Schur complement row is null
    }
    d[k] = pivot;
    l(k, k) = 1.0;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      double v = a(i, k);
      for (Eigen::Index j = 0; j < k; ++j) v -= l(i, j) * l(k, j) * d[j];
      l(i, k) = v / pivot;
    }
  }
  m = l * d.cwiseSqrt().asDiagonal();
  return true;
}

}  // namespace

InformationStructure::InformationStructure(Eigen::VectorXd delta, Eigen::MatrixXd rho)
    : delta_(std::move(delta)), rho_(std::move(rho)) {
  const Eigen::Index n = delta_.size();
  if (n < 1) {
    throw DimensionMismatch("structure needs at least one forecaster");
  }
  if (rho_.rows() != n || rho_.cols() != n) {
    throw DimensionMismatch("rho must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(delta_[j]) || delta_[j] < 0.0 || delta_[j] > 1.0) {
      throw DeltaOutOfRange("delta[" + std::to_string(j) + "] = " + std::to_string(delta_[j]) +
                            " outside [0, 1]");
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rho_(i, i) != delta_[i]) {
      throw DimensionMismatch("rho diagonal must equal delta");
    }
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (rho_(i, j) != rho_(j, i)) {
        throw DimensionMismatch("rho must be symmetric");
      }
    }
  }
  const Eigen::MatrixXd cov = full_covariance();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (lambda_min < -kPsdTol * lambda_max) {
    throw NotPositiveSemidefinite(
        "joint covariance is not positive semidefinite (most negative eigenvalue " +
            std::to_string(lambda_min) + ")",
        lambda_min);
  }
}

Eigen::MatrixXd InformationStructure::full_covariance() const {
  const Eigen::Index n = delta_.size();
  Eigen::MatrixXd cov(n + 1, n + 1);
  cov(0, 0) = 1.0;
  cov.block(0, 1, 1, n) = delta_.transpose();
  cov.block(1, 0, n, 1) = delta_;
  cov.block(1, 1, n, n) = rho_;
  return cov;
}

InformationStructure build_structure(const Eigen::VectorXd& delta, double rho_offdiag) {
  const Eigen::Index n = delta.size();
  Eigen::MatrixXd rho = Eigen::MatrixXd::Constant(n, n, rho_offdiag);
  rho.diagonal() = delta;
  return InformationStructure(delta, rho);
}

InformationStructure build_structure(const Eigen::VectorXd& delta, const Eigen::MatrixXd& rho) {
  return InformationStructure(delta, rho);
}

InformationStructure structure_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("structure JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("delta") || !doc["delta"].is_array()) {
    throw ParseError("structure JSON must be an object with a \"delta\" array");
  }
  const auto& jd = doc["delta"];
  Eigen::VectorXd delta(jd.size());
  for (std::size_t j = 0; j < jd.size(); ++j) {
    if (!jd[j].is_number()) throw ParseError("delta entries must be numbers");
    delta[static_cast<Eigen::Index>(j)] = jd[j].get<double>();
  }
  if (!doc.contains("rho")) {
    return build_structure(delta, 0.0);
  }
  const auto& jr = doc["rho"];
  if (jr.is_number()) {
    return build_structure(delta, jr.get<double>());
  }
  if (!jr.is_array()) {
    throw ParseError("rho must be a number or a square matrix");
  }
  const Eigen::Index n = delta.size();
  Eigen::MatrixXd rho(n, n);
  if (static_cast<Eigen::Index>(jr.size()) != n) {
    throw ParseError("rho matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = jr[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ParseError("rho matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& cell = row[static_cast<std::size_t>(j)];
      if (!cell.is_number()) throw ParseError("rho entries must be numbers");
      rho(i, j) = cell.get<double>();
    }
  }
  return build_structure(delta, rho);
}

std::string structure_to_json(const InformationStructure& s) {
  nlohmann::json doc;
  doc["delta"] = std::vector<double>(s.delta().data(), s.delta().data() + s.delta().size());
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.n_forecasters(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < s.n_forecasters(); ++j) row.push_back(s.rho()(i, j));
    rows.push_back(std::move(row));
  }
  doc["rho"] = std::move(rows);
  return doc.dump();
}

ForecastPanel sample_panel(const InformationStructure& s, Eigen::Index k, std::uint64_t seed) {
  if (k < 1) {
    throw DimensionMismatch("panel size must be at least 1");
  }
  Eigen::MatrixXd cov = s.full_covariance();
  const double jitter = kJitterScale * cov.diagonal().maxCoeff();
  Eigen::MatrixXd factor;
  bool ok = psd_factor(cov, factor);
  for (int attempt = 0; !ok && attempt < kJitterRetries; ++attempt) {
    cov.diagonal().array() += jitter;
    ok = psd_factor(cov, factor);
  }
  if (!ok) {
    throw CholeskyFailure("could not factor the joint covariance after jitter retries");
  }

  const Eigen::Index n = s.n_forecasters();
  Rng rng(seed);
  Eigen::VectorXd z(n + 1);
  Eigen::VectorXd outcomes(k);
  Eigen::MatrixXd forecasts(n, k);
  for (Eigen::Index col = 0; col < k; ++col) {
    for (Eigen::Index i = 0; i <= n; ++i) z[i] = rng.normal();
    const Eigen::VectorXd draw = factor * z;
    outcomes[col] = draw[0];
    forecasts.col(col) = draw.tail(n);
  }
  return ForecastPanel(std::move(outcomes), std::move(forecasts));
}

namespace {

// Invertibility gate per the eigenvalue-ratio precondition, then an LDL^T
// solve; for diagonal Sigma the coefficients come out bit-exact.
Eigen::VectorXd solve_sigma(const InformationStructure& s, const Eigen::VectorXd& rhs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.rho(), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  if (lambda.minCoeff() <= kSingularTol * lambda_max || lambda_max <= 0.0) {
    throw SingularStructure("Sigma is singular (smallest eigenvalue " +
                            std::to_string(lambda.minCoeff()) + ")");
  }
  return s.rho().ldlt().solve(rhs);
}

}  // namespace

Eigen::VectorXd revealed_coefficients(const InformationStructure& s) {
  return solve_sigma(s, s.delta());
}

double revealed_variance(const InformationStructure& s) {
  return s.delta().dot(revealed_coefficients(s));
}

Eigen::VectorXd revealed_aggregate(const InformationStructure& s, const ForecastPanel& p) {
  if (p.n_forecasters() != s.n_forecasters()) {
    throw DimensionMismatch("panel forecaster count does not match the structure");
  }
  const Eigen::VectorXd c = revealed_coefficients(s);
  return p.forecasts().transpose() * c;
}

}  // namespace elop
