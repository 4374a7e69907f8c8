#pragma once

// Test-only helpers: independent oracles and data generators. Nothing here
// may call into the solver paths it is used to check.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "elop/pif.hpp"
#include "elop/rng.hpp"

namespace elop::test {

// Projected-gradient oracle for
//   min 0.5 b'Qb + c'b  s.t.  b_i >= 0 for flagged i.
// Fixed step 1/lambda_max, run to convergence or max_iter.
inline Eigen::VectorXd projected_gradient_oracle(const Eigen::MatrixXd& q,
                                                 const Eigen::VectorXd& c,
                                                 const std::vector<bool>& nonneg,
                                                 long max_iter = 1000000) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
  const double step = 1.0 / (eig.eigenvalues().maxCoeff() + 1e-12);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(q.rows());
  for (long it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = b - step * (q * b + c);
    for (Eigen::Index i = 0; i < next.size(); ++i) {
      if (nonneg[static_cast<std::size_t>(i)] && next[i] < 0.0) next[i] = 0.0;
    }
    const double moved = (next - b).cwiseAbs().maxCoeff();
    b = next;
    if (moved < 1e-15 * (1.0 + b.cwiseAbs().maxCoeff())) break;
  }
  return b;
}

inline double qp_objective(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                           const Eigen::VectorXd& b) {
  return 0.5 * b.dot(q * b) + c.dot(b);
}

// Valid random information structure via explicit source allocation: each
// forecaster owns a private information source and subscribes to a random
// subset of shared sources, so the joint covariance is PSD by construction
// and Sigma is strictly positive definite.
inline InformationStructure random_structure(Rng& rng, int n) {
  const int n_common = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n) + 2));
  std::vector<double> private_var(static_cast<std::size_t>(n));
  std::vector<double> common_var(static_cast<std::size_t>(n_common));
  double total = 0.0;
  for (auto& v : private_var) {
    v = 0.05 + 0.95 * rng.uniform01();
    total += v;
  }
  for (auto& v : common_var) {
    v = 0.05 + 0.95 * rng.uniform01();
    total += v;
  }
  const double budget = 0.3 + 0.65 * rng.uniform01();  // total information <= 0.95
  for (auto& v : private_var) v *= budget / total;
  for (auto& v : common_var) v *= budget / total;

  std::vector<std::vector<bool>> subscribed(static_cast<std::size_t>(n),
                                            std::vector<bool>(static_cast<std::size_t>(n_common)));
  for (auto& row : subscribed) {
    for (std::size_t s = 0; s < row.size(); ++s) row[s] = rng.uniform01() < 0.5;
  }

  Eigen::VectorXd delta(n);
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double d = private_var[static_cast<std::size_t>(i)];
    for (int s = 0; s < n_common; ++s) {
      if (subscribed[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)]) {
        d += common_var[static_cast<std::size_t>(s)];
      }
    }
    delta[i] = d;
    for (int j = 0; j < i; ++j) {
      double shared = 0.0;
      for (int s = 0; s < n_common; ++s) {
        if (subscribed[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] &&
            subscribed[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)]) {
          shared += common_var[static_cast<std::size_t>(s)];
        }
      }
      rho(i, j) = shared;
      rho(j, i) = shared;
    }
  }
  rho.diagonal() = delta;
  return build_structure(delta, rho);
}

inline Eigen::VectorXd random_simplex(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = -std::log(1.0 - rng.uniform01());
  return w / w.sum();
}

// Ordinary least squares slope/intercept of y on x, used as a reliability
// oracle for sampled panels.
inline std::pair<double, double> slope_intercept(const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& y) {
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh scratch directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() / ("elop_test_" + tag);
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() { std::filesystem::remove_all(dir_); }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace elop::test
