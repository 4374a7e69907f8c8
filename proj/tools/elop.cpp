#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "elop/errors.hpp"
#include "elop/experiment.hpp"

namespace {

std::string error_name(const std::exception& e) {
  if (dynamic_cast<const elop::DimensionMismatch*>(&e)) return "DimensionMismatch";
  if (dynamic_cast<const elop::DeltaOutOfRange*>(&e)) return "DeltaOutOfRange";
  if (dynamic_cast<const elop::NotPositiveSemidefinite*>(&e)) return "NotPositiveSemidefinite";
  if (dynamic_cast<const elop::CholeskyFailure*>(&e)) return "CholeskyFailure";
  if (dynamic_cast<const elop::SingularStructure*>(&e)) return "SingularStructure";
  if (dynamic_cast<const elop::InfeasibleConstraint*>(&e)) return "InfeasibleConstraint";
  if (dynamic_cast<const elop::QpFailure*>(&e)) return "QpFailure";
  if (dynamic_cast<const elop::EmptyPanel*>(&e)) return "EmptyPanel";
  if (dynamic_cast<const elop::NegativeBeta*>(&e)) return "NegativeBeta";
  if (dynamic_cast<const elop::DegenerateDesign*>(&e)) return "DegenerateDesign";
  if (dynamic_cast<const elop::TooManyBins*>(&e)) return "TooManyBins";
  if (dynamic_cast<const elop::TooFewPoints*>(&e)) return "TooFewPoints";
  if (dynamic_cast<const elop::RankDeficientDesign*>(&e)) return "RankDeficientDesign";
  if (dynamic_cast<const elop::TooFewRows*>(&e)) return "TooFewRows";
  if (dynamic_cast<const elop::IndexOutOfRange*>(&e)) return "IndexOutOfRange";
  if (dynamic_cast<const elop::DatasetFormatError*>(&e)) return "DatasetFormatError";
  if (dynamic_cast<const elop::ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const elop::ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const elop::Error*>(&e)) return "Error";
  return "Exception";
}

int report_error(const std::exception& e, const std::string& out_dir, bool debug) {
  nlohmann::json record;
  record["error"] = error_name(e);
  record["message"] = e.what();
  if (const auto* qp = dynamic_cast<const elop::QpFailure*>(&e); qp && debug && !out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream dump(std::filesystem::path(out_dir) / "qp_debug.json");
    dump << qp->debug << "\n";
    record["debug_file"] = (std::filesystem::path(out_dir) / "qp_debug.json").string();
  }
  std::cerr << record.dump() << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecast aggregation experiments: weighted averaging vs. linear extremization"};
  app.require_subcommand(1);

  elop::SimulateConfig sim;
  auto* simulate = app.add_subcommand("simulate", "Run the synthetic-panel study for one scenario");
  simulate->add_option("--seed", sim.seed, "Master RNG seed");
  simulate->add_option("--k-train", sim.k_train, "Training panel size");
  simulate->add_option("--k-test", sim.k_test, "Test panel size");
  simulate->add_option("--scenario", sim.scenario,
                       "no-overlap, high-overlap, or a structure JSON file");
  simulate->add_option("--bins", sim.n_bins, "Equal-count bins for tables and diagrams");
  simulate->add_option("--bootstrap", sim.bootstrap_b, "Bootstrap replicates for the envelopes");
  simulate->add_option("--out", sim.output_dir, "Output directory")->required();
  simulate->add_flag("--dump-panels", sim.dump_panels, "Also write train.csv/test.csv");
  simulate->add_flag("--debug", sim.debug, "Dump failed quadratic programs as JSON");

  elop::ConcreteConfig con;
  auto* concrete = app.add_subcommand("concrete", "Run the cross-validated case study");
  concrete->add_option("--seed", con.seed, "Master RNG seed");
  concrete->add_option("--folds", con.folds, "Cross-validation folds");
  concrete->add_option("--split-ratio", con.split_ratio,
                       "Share of non-test rows used to fit the regression models");
  concrete->add_option("--bins", con.n_bins, "Equal-count bins for tables and diagrams");
  concrete->add_option("--bootstrap", con.bootstrap_b, "Bootstrap replicates for the envelopes");
  concrete->add_option("--out", con.output_dir, "Output directory")->required();
  concrete->add_option("--data", con.dataset_path, "Dataset CSV (9 named columns)")->required();
  concrete->add_flag("--debug", con.debug, "Dump failed quadratic programs as JSON");

  elop::DiagramConfig dia;
  auto* diagram = app.add_subcommand("diagram", "Reliability diagram for a y,f CSV");
  diagram->add_option("input", dia.input_csv, "CSV of outcome,forecast pairs")->required();
  diagram->add_option("--seed", dia.seed, "Bootstrap RNG seed");
  diagram->add_option("--bins", dia.n_bins, "Equal-count bins");
  diagram->add_option("--bootstrap", dia.bootstrap_b, "Bootstrap replicates");
  diagram->add_option("--out", dia.output_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      elop::run_simulate(sim);
    } else if (concrete->parsed()) {
      elop::run_concrete(con);
    } else if (diagram->parsed()) {
      elop::run_diagram(dia);
    }
  } catch (const std::exception& e) {
    std::string out_dir;
    bool debug = false;
    if (simulate->parsed()) {
      out_dir = sim.output_dir;
      debug = sim.debug;
    } else if (concrete->parsed()) {
      out_dir = con.output_dir;
      debug = con.debug;
    }
    return report_error(e, out_dir, debug);
  }
  return 0;
}
