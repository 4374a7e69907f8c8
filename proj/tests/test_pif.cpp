#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "elop/pif.hpp"
#include "support.hpp"

using namespace elop;

namespace {

Eigen::VectorXd scenario_delta() {
  Eigen::VectorXd delta(5);
  for (Eigen::Index j = 0; j < 5; ++j) delta[j] = 0.1 + 0.02 * static_cast<double>(j + 1);
  return delta;
}

// Joint sample covariance of (Y, X), 1/K normalization.
Eigen::MatrixXd sample_covariance(const ForecastPanel& p) {
  const Eigen::Index n = p.n_forecasters();
  const Eigen::Index k = p.n_problems();
  Eigen::MatrixXd stacked(n + 1, k);
  stacked.row(0) = p.outcomes().transpose();
  stacked.bottomRows(n) = p.forecasts();
  const Eigen::VectorXd means = stacked.rowwise().mean();
  stacked.colwise() -= means;
  return stacked * stacked.transpose() / static_cast<double>(k);
}

}  // namespace

TEST_CASE("build_structure accepts the published scenarios") {
  const auto no_overlap = build_structure(scenario_delta(), 0.0);
  CHECK(no_overlap.n_forecasters() == 5);
  CHECK(no_overlap.rho()(0, 1) == 0.0);
  CHECK(no_overlap.rho()(2, 2) == doctest::Approx(0.16));

  const auto high_overlap = build_structure(scenario_delta(), 0.12);
  CHECK(high_overlap.rho()(0, 1) == 0.12);
  CHECK(high_overlap.rho()(4, 4) == doctest::Approx(0.20));

  Eigen::VectorXd one(1);
  one << 1.0;
  const auto full_info = build_structure(one, 0.0);
  CHECK(full_info.full_covariance()(0, 1) == 1.0);
}

TEST_CASE("build_structure rejects invalid input") {
  Eigen::VectorXd delta(2);
  delta << 0.3, 1.2;
  CHECK_THROWS_AS(build_structure(delta, 0.0), DeltaOutOfRange);
  delta << -0.1, 0.5;
  CHECK_THROWS_AS(build_structure(delta, 0.0), DeltaOutOfRange);

  // Overlap larger than the information levels makes Sigma indefinite.
  delta << 0.1, 0.1;
  try {
    build_structure(delta, 0.12);
    FAIL("expected NotPositiveSemidefinite");
  } catch (const NotPositiveSemidefinite& e) {
    CHECK(e.most_negative_eigenvalue < 0.0);
  }

  Eigen::MatrixXd rho(2, 2);
  rho << 0.1, 0.02, 0.03, 0.1;
  CHECK_THROWS_AS(build_structure(delta, rho), DimensionMismatch);  // asymmetric
  rho << 0.2, 0.02, 0.02, 0.1;
  CHECK_THROWS_AS(build_structure(delta, rho), DimensionMismatch);  // diagonal != delta
  CHECK_THROWS_AS(build_structure(Eigen::VectorXd(), 0.0), DimensionMismatch);
}

TEST_CASE("structure JSON round trip") {
  const auto s = build_structure(scenario_delta(), 0.12);
  const auto back = structure_from_json(structure_to_json(s));
  CHECK((back.delta() - s.delta()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.rho() - s.rho()).cwiseAbs().maxCoeff() == 0.0);

  const auto scalar = structure_from_json(R"({"delta": [0.2, 0.3], "rho": 0.05})");
  CHECK(scalar.rho()(0, 1) == 0.05);
  CHECK_THROWS_AS(structure_from_json("{\"rho\": 1}"), ParseError);
  CHECK_THROWS_AS(structure_from_json("not json"), ParseError);
}

TEST_CASE("sampled panels match the target covariance") {
  const auto s = build_structure(scenario_delta(), 0.0);
  const auto panel = sample_panel(s, 10000, 2024);
  const Eigen::MatrixXd target = s.full_covariance();
  const Eigen::MatrixXd observed = sample_covariance(panel);
  CHECK((observed - target).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("a fully informed forecaster reproduces the outcome") {
  Eigen::VectorXd one(1);
  one << 1.0;
  const auto s = build_structure(one, 0.0);
  const auto panel = sample_panel(s, 500, 7);
  CHECK((panel.forecasts().row(0).transpose() - panel.outcomes()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("sampling is a pure function of structure, size, seed") {
  const auto s = build_structure(scenario_delta(), 0.12);
  const auto a = sample_panel(s, 257, 99);
  const auto b = sample_panel(s, 257, 99);
  CHECK((a.outcomes() - b.outcomes()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.forecasts() - b.forecasts()).cwiseAbs().maxCoeff() == 0.0);
  const auto c = sample_panel(s, 257, 100);
  CHECK((a.outcomes() - c.outcomes()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("revealed aggregator closed forms match the scenarios") {
  const auto no_overlap = build_structure(scenario_delta(), 0.0);
  const Eigen::VectorXd c_no = revealed_coefficients(no_overlap);
  for (Eigen::Index j = 0; j < 5; ++j) CHECK(c_no[j] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(revealed_variance(no_overlap) == doctest::Approx(0.80).epsilon(1e-10));

  const auto high_overlap = build_structure(scenario_delta(), 0.12);
  const Eigen::VectorXd c_high = revealed_coefficients(high_overlap);
  CHECK(std::abs(c_high[0] - -3.0) < 1e-8);
  for (Eigen::Index j = 1; j < 5; ++j) CHECK(std::abs(c_high[j] - 1.0) < 1e-8);
  CHECK(revealed_variance(high_overlap) == doctest::Approx(0.32).epsilon(1e-10));

  Eigen::VectorXd single(1);
  single << 0.37;
  const auto s1 = build_structure(single, 0.0);
  CHECK(revealed_coefficients(s1)[0] == doctest::Approx(1.0));
  CHECK(revealed_variance(s1) == doctest::Approx(0.37));
}

TEST_CASE("revealed aggregate applies the coefficients per column") {
  const auto s = build_structure(scenario_delta(), 0.0);
  const auto panel = sample_panel(s, 200, 3);
  const Eigen::VectorXd agg = revealed_aggregate(s, panel);
  const Eigen::VectorXd sums = panel.forecasts().colwise().sum().transpose();
  CHECK((agg - sums).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(5, 4);
  const ForecastPanel zero_panel(Eigen::VectorXd::Ones(4), zeros);
  CHECK(revealed_aggregate(s, zero_panel).cwiseAbs().maxCoeff() == 0.0);

  const auto high = build_structure(scenario_delta(), 0.12);
  const auto hp = sample_panel(high, 300, 4);
  const Eigen::VectorXd via_op = revealed_aggregate(high, hp);
  Eigen::VectorXd coeffs(5);
  coeffs << -3.0, 1.0, 1.0, 1.0, 1.0;
  const Eigen::VectorXd direct = hp.forecasts().transpose() * coeffs;
  CHECK((via_op - direct).cwiseAbs().maxCoeff() < 1e-6);

  Eigen::MatrixXd wrong(2, 4);
  wrong.setZero();
  const ForecastPanel bad(Eigen::VectorXd::Ones(4), wrong);
  CHECK_THROWS_AS(revealed_aggregate(s, bad), DimensionMismatch);
}

TEST_CASE("a singular Sigma is reported") {
  // Two forecasters sharing all information: Sigma is rank one.
  Eigen::VectorXd delta(2);
  delta << 0.4, 0.4;
  const auto s = build_structure(delta, 0.4);
  CHECK_THROWS_AS(revealed_coefficients(s), SingularStructure);
  CHECK_THROWS_AS(revealed_variance(s), SingularStructure);
}

TEST_CASE("variance expansion holds in closed form for random structures") {
  elop::Rng rng(4242);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(6));
    const auto s = elop::test::random_structure(rng, n);
    CHECK(revealed_variance(s) >= s.delta().maxCoeff() - 1e-9);
  }
}

TEST_CASE("sampled revealed aggregator matches its closed-form moments") {
  const auto s = build_structure(scenario_delta(), 0.12);
  const Eigen::Index k = 10000;
  const auto panel = sample_panel(s, k, 77);
  const Eigen::VectorXd agg = revealed_aggregate(s, panel);
  const double target_var = revealed_variance(s);

  const double mean = agg.mean();
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(target_var / static_cast<double>(k)));

  const double var = (agg.array() - mean).square().sum() / static_cast<double>(k - 1);
  CHECK(std::abs(var - target_var) / target_var < 0.05);
}

TEST_CASE("individual forecasts are conditionally unbiased in sample") {
  const auto s = build_structure(scenario_delta(), 0.12);
  const auto panel = sample_panel(s, 10000, 11);
  for (Eigen::Index j = 0; j < panel.n_forecasters(); ++j) {
    const auto [slope, intercept] =
        elop::test::slope_intercept(panel.forecasts().row(j).transpose(), panel.outcomes());
    CHECK(std::abs(slope - 1.0) < 0.05);
    CHECK(std::abs(intercept) < 0.05);
  }
}

TEST_CASE("panel CSV round trip") {
  const auto s = build_structure(scenario_delta(), 0.0);
  const auto panel = sample_panel(s, 50, 13);
  std::ostringstream out;
  write_panel_csv(panel, out);
  std::istringstream in(out.str());
  const auto back = read_panel_csv(in);
  CHECK((back.outcomes() - panel.outcomes()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.forecasts() - panel.forecasts()).cwiseAbs().maxCoeff() == 0.0);

  std::istringstream bad("y,x1\n1.0\n");
  CHECK_THROWS_AS(read_panel_csv(bad), ParseError);
}

TEST_CASE("panels cannot be empty or ragged") {
  CHECK_THROWS_AS(ForecastPanel(Eigen::VectorXd(), Eigen::MatrixXd(1, 0)), EmptyPanel);
  CHECK_THROWS_AS(ForecastPanel(Eigen::VectorXd::Ones(3), Eigen::MatrixXd::Zero(2, 4)),
                  DimensionMismatch);
  Eigen::MatrixXd with_nan = Eigen::MatrixXd::Zero(1, 2);
  with_nan(0, 1) = std::nan("");
  CHECK_THROWS_AS(ForecastPanel(Eigen::VectorXd::Zero(2), with_nan), DimensionMismatch);
}
