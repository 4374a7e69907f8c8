#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "elop/experiment.hpp"
#include "support.hpp"

using namespace elop;
using elop::test::TempDir;
using elop::test::read_file;

namespace {

SimulateConfig small_simulate(const std::string& out_dir) {
  SimulateConfig cfg;
  cfg.seed = 12345;
  cfg.k_train = 600;
  cfg.k_test = 600;
  cfg.scenario = "no-overlap";
  cfg.n_bins = 10;
  cfg.bootstrap_b = 50;
  cfg.output_dir = out_dir;
  return cfg;
}

// Synthetic stand-in for the concrete dataset: same schema, linear signal.
void write_synthetic_concrete(const std::filesystem::path& path, Eigen::Index rows,
                              std::uint64_t seed) {
  elop::Rng rng(seed);
  std::ofstream out(path);
  out << "Cement,Blast Furnace Slag,Fly Ash,Water,Superplasticizer,Coarse Aggregate,"
         "Fine Aggregate,Age,Strength\n";
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double cement = 100.0 + 400.0 * rng.uniform01();
    const double slag = 350.0 * rng.uniform01();
    const double fly_ash = 200.0 * rng.uniform01();
    const double water = 120.0 + 120.0 * rng.uniform01();
    const double plasticizer = 30.0 * rng.uniform01();
    const double coarse = 800.0 + 300.0 * rng.uniform01();
    const double fine = 600.0 + 300.0 * rng.uniform01();
    const double age = 1.0 + 360.0 * rng.uniform01();
    double strength = 15.0 + 0.05 * cement + 0.03 * slag - 0.08 * water + 0.4 * plasticizer +
                      0.02 * age + 3.0 * rng.normal();
    if (strength < 1.0) strength = 1.0;
    out << cement << "," << slag << "," << fly_ash << "," << water << "," << plasticizer << ","
        << coarse << "," << fine << "," << age << "," << strength << "\n";
  }
}

}  // namespace

TEST_CASE("run_simulate emits the full artifact set deterministically") {
  TempDir dir_a("sim_a");
  TempDir dir_b("sim_b");
  const ResultsTable table = run_simulate(small_simulate((dir_a.path() / "out").string()));
  run_simulate(small_simulate((dir_b.path() / "out").string()));

  REQUIRE(table.rows.size() == 6);
  const std::vector<std::string> expected = {"best_individual", "median",     "equal_avg",
                                             "weighted_avg",    "extremized", "revealed"};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(table.rows[i].forecast == expected[i]);
    CHECK(table.rows[i].scenario == "no_overlap");
    CHECK(std::abs(table.rows[i].loss -
                   (table.rows[i].rel - table.rows[i].res + table.rows[i].unc)) <=
          table.rows[i].identity_residual + 1e-12);
  }
  REQUIRE(table.parameters.size() == 2);
  CHECK(table.parameters[0].forecast == "weighted_avg");
  CHECK_FALSE(table.parameters[0].has_extremization);
  CHECK(table.parameters[1].forecast == "extremized");
  CHECK(table.parameters[1].has_extremization);

  const std::vector<std::string> files = {"results.csv",
                                          "parameters.csv",
                                          "manifest.json",
                                          "extremized.json",
                                          "weighted_avg.json",
                                          "diagrams/no_overlap_extremized_bins.csv",
                                          "diagrams/no_overlap_extremized_hist.csv",
                                          "diagrams/no_overlap_revealed_bins.csv"};
  for (const auto& name : files) {
    const auto a = dir_a.path() / "out" / name;
    const auto b = dir_b.path() / "out" / name;
    REQUIRE_MESSAGE(std::filesystem::exists(a), name);
    CHECK_MESSAGE(read_file(a) == read_file(b), ("mismatch in " + name));
  }

  const auto manifest = nlohmann::json::parse(read_file(dir_a.path() / "out" / "manifest.json"));
  CHECK(manifest["mode"] == "simulate");
  CHECK(manifest["config"]["seed"] == 12345);
  CHECK(manifest["rows"].size() == 6);
  for (const auto& row : manifest["rows"]) {
    const double gap = std::abs(row["loss"].get<double>() -
                                (row["rel"].get<double>() - row["res"].get<double>() +
                                 row["unc"].get<double>()));
    CHECK(gap <= row["identity_residual"].get<double>() + 1e-12);
  }
}

TEST_CASE("run_simulate accepts a custom structure file") {
  TempDir dir("sim_custom");
  const auto scenario_path = dir.path() / "structure.json";
  {
    std::ofstream out(scenario_path);
    out << R"({"delta": [0.3, 0.4, 0.5], "rho": 0.1})";
  }
  SimulateConfig cfg = small_simulate((dir.path() / "out").string());
  cfg.scenario = scenario_path.string();
  cfg.dump_panels = true;
  const ResultsTable table = run_simulate(cfg);
  CHECK(table.rows[0].scenario == "custom");
  CHECK(std::filesystem::exists(dir.path() / "out" / "train.csv"));
  CHECK(std::filesystem::exists(dir.path() / "out" / "test.csv"));

  SimulateConfig bad = cfg;
  bad.scenario = (dir.path() / "missing.json").string();
  CHECK_THROWS_AS(run_simulate(bad), ConfigError);
}

TEST_CASE("run_concrete pools folds into scenario tables deterministically") {
  TempDir dir("concrete");
  const auto csv = dir.path() / "synthetic.csv";
  write_synthetic_concrete(csv, 160, 99);

  ConcreteConfig cfg;
  cfg.seed = 7;
  cfg.folds = 5;
  cfg.n_bins = 8;
  cfg.bootstrap_b = 20;
  cfg.dataset_path = csv.string();
  cfg.output_dir = (dir.path() / "out_a").string();
  const ResultsTable table = run_concrete(cfg);

  REQUIRE(table.rows.size() == 10);
  CHECK(table.rows[0].forecast == "m1");
  CHECK(table.rows[0].scenario == "individual");
  CHECK(table.rows[4].scenario == "no_overlap");
  CHECK(table.rows[7].scenario == "high_overlap");
  for (const auto& row : table.rows) {
    CHECK(std::abs(row.loss - (row.rel - row.res + row.unc)) <= row.identity_residual + 1e-12);
    CHECK(row.unc == doctest::Approx(table.rows[0].unc));  // shared pooled outcomes
  }
  REQUIRE(table.parameters.size() == 4);

  cfg.output_dir = (dir.path() / "out_b").string();
  run_concrete(cfg);
  for (const std::string name : {"results.csv", "parameters.csv", "manifest.json"}) {
    CHECK(read_file(dir.path() / "out_a" / name) == read_file(dir.path() / "out_b" / name));
  }

  const auto manifest = nlohmann::json::parse(read_file(dir.path() / "out_a" / "manifest.json"));
  CHECK(manifest["mode"] == "concrete");
  CHECK(manifest["fold_parameters"]["no_overlap"].size() == 5);
}

TEST_CASE("run_concrete surfaces fold context on tiny datasets") {
  TempDir dir("concrete_tiny");
  const auto csv = dir.path() / "tiny.csv";
  {
    std::ofstream out(csv);
    out << "Cement,Blast Furnace Slag,Fly Ash,Water,Superplasticizer,Coarse Aggregate,"
           "Fine Aggregate,Age,Strength\n"
           "540,0,0,162,2.5,1040,676,28,79.99\n"
           "332,142,0,228,0,932,594,270,40.27\n";
  }
  ConcreteConfig cfg;
  cfg.folds = 2;
  cfg.dataset_path = csv.string();
  cfg.output_dir = (dir.path() / "out").string();
  try {
    run_concrete(cfg);
    FAIL("expected TooFewRows");
  } catch (const TooFewRows& e) {
    CHECK(std::string(e.what()).find("fold") != std::string::npos);
  }
}

TEST_CASE("run_diagram reproduces the y=f diagonal and balanced bins") {
  TempDir dir("diagram");
  const auto csv = dir.path() / "pairs.csv";
  {
    std::ofstream out(csv);
    out << "y,f\n";
    for (int i = 0; i < 10; ++i) out << i << "." << 5 << "," << i << ".5\n";
  }
  DiagramConfig cfg;
  cfg.input_csv = csv.string();
  cfg.n_bins = 5;
  cfg.bootstrap_b = 25;
  cfg.seed = 3;
  cfg.output_dir = (dir.path() / "out").string();
  run_diagram(cfg);

  const auto summary = nlohmann::json::parse(read_file(dir.path() / "out" / "summary.json"));
  REQUIRE(summary["bins"].size() == 5);
  for (const auto& bin : summary["bins"]) {
    CHECK(bin["count"] == 2);
    CHECK(std::abs(bin["mean_forecast"].get<double>() - bin["mean_outcome"].get<double>()) <=
          1e-12);
  }
}

TEST_CASE("run_diagram output is invariant to input row order") {
  TempDir dir("diagram_shuffle");
  elop::Rng rng(17);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 101; ++i) {
    const double f = rng.normal();
    pairs.emplace_back(f + 0.2 * rng.normal(), f);
  }
  const auto write_pairs = [&](const std::filesystem::path& path) {
    std::ofstream out(path);
    out.precision(17);
    out << "y,f\n";
    for (const auto& [y, f] : pairs) out << y << "," << f << "\n";
  };
  const auto sorted_csv = dir.path() / "sorted.csv";
  write_pairs(sorted_csv);
  // Deterministic shuffle.
  for (std::size_t i = pairs.size() - 1; i > 0; --i) {
    std::swap(pairs[i], pairs[rng.uniform_index(i + 1)]);
  }
  const auto shuffled_csv = dir.path() / "shuffled.csv";
  write_pairs(shuffled_csv);

  DiagramConfig cfg;
  cfg.n_bins = 7;
  cfg.bootstrap_b = 40;
  cfg.seed = 5;
  cfg.input_csv = sorted_csv.string();
  cfg.output_dir = (dir.path() / "out_sorted").string();
  run_diagram(cfg);
  cfg.input_csv = shuffled_csv.string();
  cfg.output_dir = (dir.path() / "out_shuffled").string();
  run_diagram(cfg);

  CHECK(read_file(dir.path() / "out_sorted" / "bins.csv") ==
        read_file(dir.path() / "out_shuffled" / "bins.csv"));
  CHECK(read_file(dir.path() / "out_sorted" / "hist.csv") ==
        read_file(dir.path() / "out_shuffled" / "hist.csv"));
}

TEST_CASE("the command line runs end to end and reports JSON errors") {
  TempDir dir("cli");
  const auto csv = dir.path() / "pairs.csv";
  {
    std::ofstream out(csv);
    out << "y,f\n";
    for (int i = 0; i < 40; ++i) out << 0.1 * i << "," << 0.1 * i + 0.05 << "\n";
  }
  const std::string cli = ELOP_CLI_PATH;
  const std::string ok_cmd = cli + " diagram " + csv.string() + " --out " +
                             (dir.path() / "out").string() + " --bins 4 --bootstrap 10" +
                             " > /dev/null 2>&1";
  CHECK(std::system(ok_cmd.c_str()) == 0);
  CHECK(std::filesystem::exists(dir.path() / "out" / "bins.csv"));

  const auto tiny = dir.path() / "tiny.csv";
  {
    std::ofstream out(tiny);
    out << "Cement,Blast Furnace Slag,Fly Ash,Water,Superplasticizer,Coarse Aggregate,"
           "Fine Aggregate,Age,Strength\n"
           "540,0,0,162,2.5,1040,676,28,79.99\n"
           "332,142,0,228,0,932,594,270,40.27\n";
  }
  const auto stderr_file = dir.path() / "stderr.json";
  const std::string fail_cmd = cli + " concrete --data " + tiny.string() + " --out " +
                               (dir.path() / "out_fail").string() + " --folds 2 > /dev/null 2> " +
                               stderr_file.string();
  CHECK(std::system(fail_cmd.c_str()) != 0);
  const auto record = nlohmann::json::parse(read_file(stderr_file));
  CHECK(record["error"] == "TooFewRows");
  CHECK(record["message"].get<std::string>().find("fold") != std::string::npos);
}
