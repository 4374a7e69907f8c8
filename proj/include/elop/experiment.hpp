#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elop/errors.hpp"
#include "elop/pif.hpp"
#include "elop/regression.hpp"

namespace elop {

struct SimulateConfig {
  std::uint64_t seed = 42;
  Eigen::Index k_train = 10000;
  Eigen::Index k_test = 10000;
  std::string scenario = "no-overlap";  // "no-overlap", "high-overlap", or a structure JSON path
  Eigen::Index n_bins = 10;
  Eigen::Index bootstrap_b = 1000;
  std::string output_dir;
  bool dump_panels = false;
  bool debug = false;
};

struct ConcreteConfig {
  std::uint64_t seed = 42;
  int folds = 10;
  double split_ratio = 0.5;  // share of the non-test rows used to fit the models
  Eigen::Index n_bins = 10;
  Eigen::Index bootstrap_b = 1000;
  std::string output_dir;
  std::string dataset_path;
  bool debug = false;
};

struct DiagramConfig {
  std::uint64_t seed = 42;
  Eigen::Index n_bins = 10;
  Eigen::Index bootstrap_b = 1000;
  std::string output_dir;
  std::string input_csv;
};

struct ResultRow {
  std::string scenario;
  std::string forecast;
  double loss = 0.0;
  double rel = 0.0;
  double res = 0.0;
  double unc = 0.0;
  double s2 = 0.0;
  double identity_residual = 0.0;
};

struct ParameterRow {
  std::string scenario;
  std::string forecast;
  bool has_extremization = false;  // weighted-average rows leave mu0/alpha blank
  double mu0 = 0.0;
  double alpha = 0.0;
  bool mu0_defined = true;
  std::vector<double> weights;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<ParameterRow> parameters;
};

// The two published information scenarios by name, or a structure JSON file
// by path.
InformationStructure resolve_scenario(const std::string& name_or_path);

// Samples train/test panels, fits the weighted average and its extremized
// version on train, scores everything on test, and writes results.csv,
// parameters.csv, per-forecast diagram data, and manifest.json under
// cfg.output_dir. Byte-deterministic for a fixed config.
ResultsTable run_simulate(const SimulateConfig& cfg);

// The cross-validated case study on the concrete dataset. Same artifact
// layout as run_simulate, with model rows plus one aggregator block per
// information scenario.
ResultsTable run_concrete(const ConcreteConfig& cfg);

// Standalone reliability diagram over a two-column (y, f) CSV: writes
// bins.csv, hist.csv, summary.json.
void run_diagram(const DiagramConfig& cfg);

}  // namespace elop
