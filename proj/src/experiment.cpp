#include "elop/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "elop/aggregators.hpp"
#include "elop/evaluation.hpp"
#include "elop/rng.hpp"

namespace elop {

namespace {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write '" + path.string() + "'");
  }
  out << content;
}

std::string results_csv(const ResultsTable& table) {
  std::string out = "scenario,forecast,L,REL,RES,UNC,s2\n";
  for (const auto& row : table.rows) {
    out += row.scenario + "," + row.forecast + "," + format_double(row.loss) + "," +
           format_double(row.rel) + "," + format_double(row.res) + "," + format_double(row.unc) +
           "," + format_double(row.s2) + "\n";
  }
  return out;
}

std::string parameters_csv(const ResultsTable& table) {
  std::size_t n_weights = 0;
  for (const auto& row : table.parameters) n_weights = std::max(n_weights, row.weights.size());
  std::string out = "scenario,forecast,mu0,alpha";
  for (std::size_t j = 0; j < n_weights; ++j) out += ",w" + std::to_string(j + 1);
  out += "\n";
  for (const auto& row : table.parameters) {
    out += row.scenario + "," + row.forecast + ",";
    if (row.has_extremization) {
      out += (row.mu0_defined ? format_double(row.mu0) : std::string("")) + "," +
             format_double(row.alpha);
    } else {
      out += ",";
    }
    for (std::size_t j = 0; j < n_weights; ++j) {
      out += ",";
      if (j < row.weights.size()) out += format_double(row.weights[j]);
    }
    out += "\n";
  }
  return out;
}

nlohmann::json row_json(const ResultRow& row, const DecompositionResult& dec) {
  nlohmann::json j;
  j["scenario"] = row.scenario;
  j["forecast"] = row.forecast;
  j["loss"] = row.loss;
  j["rel"] = row.rel;
  j["res"] = row.res;
  j["unc"] = row.unc;
  j["s2"] = row.s2;
  j["identity_residual"] = dec.identity_residual;
  j["n_groups"] = dec.n_groups;
  return j;
}

// One scored forecast: decomposition row plus its reliability diagram files.
struct ScoredForecast {
  ResultRow row;
  DecompositionResult decomposition;
  ReliabilityDiagram diagram;
};

ScoredForecast score_forecast(const std::string& scenario, const std::string& name,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                              Eigen::Index n_bins, Eigen::Index bootstrap_b,
                              std::uint64_t diagram_seed) {
  ScoredForecast out;
  out.decomposition = decompose(y, f, Grouping::equal_count(n_bins));
  out.diagram = reliability_diagram(y, f, n_bins, bootstrap_b, diagram_seed);
  out.row.scenario = scenario;
  out.row.forecast = name;
  out.row.loss = out.decomposition.loss;
  out.row.rel = out.decomposition.rel;
  out.row.res = out.decomposition.res;
  out.row.unc = out.decomposition.unc;
  out.row.s2 = sample_variance(f);
  out.row.identity_residual = out.decomposition.identity_residual;
  return out;
}

void write_diagrams(const fs::path& dir, const std::vector<ScoredForecast>& scored) {
  fs::create_directories(dir);
  for (const auto& s : scored) {
    const std::string stem = s.row.scenario == "individual" || s.row.scenario.empty()
                                 ? s.row.forecast
                                 : s.row.scenario + "_" + s.row.forecast;
    {
      std::ostringstream bins;
      write_diagram_bins_csv(s.diagram, bins);
      write_file(dir / (stem + "_bins.csv"), bins.str());
    }
    {
      std::ostringstream hist;
      write_diagram_hist_csv(s.diagram, hist);
      write_file(dir / (stem + "_hist.csv"), hist.str());
    }
  }
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json extremized_json(const ExtremizedAggregator& a) {
  nlohmann::json j;
  j["alpha"] = a.alpha;
  j["weights"] = to_std(a.weights);
  j["mu0"] = a.mu0;
  j["mu0_defined"] = a.mu0_defined;
  j["weights_defined"] = a.weights_defined;
  j["beta_raw"] = to_std(a.beta_raw);
  j["training_loss"] = a.training_loss;
  return j;
}

// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<Eigen::Index> permutation(Eigen::Index n, Rng rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const std::size_t j = rng.uniform_index(static_cast<std::size_t>(i) + 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
  }
  return perm;
}

}  // namespace

InformationStructure resolve_scenario(const std::string& name_or_path) {
  Eigen::VectorXd delta(5);
  for (Eigen::Index j = 0; j < 5; ++j) delta[j] = 0.1 + 0.02 * static_cast<double>(j + 1);
  if (name_or_path == "no-overlap" || name_or_path == "no_overlap") {
    return build_structure(delta, 0.0);
  }
  if (name_or_path == "high-overlap" || name_or_path == "high_overlap") {
    return build_structure(delta, 0.12);
  }
  std::ifstream in(name_or_path);
  if (!in) {
    throw ConfigError("scenario '" + name_or_path +
                      "' is neither a built-in name nor a readable structure file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return structure_from_json(buf.str());
}

namespace {

std::string scenario_label(const std::string& scenario) {
  if (scenario == "no-overlap" || scenario == "no_overlap") return "no_overlap";
  if (scenario == "high-overlap" || scenario == "high_overlap") return "high_overlap";
  return "custom";
}

}  // namespace

ResultsTable run_simulate(const SimulateConfig& cfg) {
  if (cfg.k_train < 2 || cfg.k_test < 2) {
    throw ConfigError("k_train and k_test must be at least 2");
  }
  if (cfg.n_bins < 2) {
    throw ConfigError("n_bins must be at least 2");
  }
  if (cfg.output_dir.empty()) {
    throw ConfigError("output directory is required");
  }

  const InformationStructure structure = resolve_scenario(cfg.scenario);
  const std::string label = scenario_label(cfg.scenario);
  const ForecastPanel train = sample_panel(structure, cfg.k_train, derive_seed(cfg.seed, 0));
  const ForecastPanel test = sample_panel(structure, cfg.k_test, derive_seed(cfg.seed, 1));
  const Eigen::VectorXd& y = test.outcomes();

  const WeightVector weighted = fit_weighted_average(train);
  const ExtremizedAggregator extremized = fit_extremized(train);

  // Best individual: lowest test loss, lowest index on ties.
  Eigen::Index best_j = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < test.n_forecasters(); ++j) {
    const double loss = quadratic_loss(y, test.forecasts().row(j).transpose());
    if (loss < best_loss) {
      best_loss = loss;
      best_j = j;
    }
  }

  std::vector<std::pair<std::string, Eigen::VectorXd>> forecasts;
  forecasts.emplace_back("best_individual", test.forecasts().row(best_j).transpose());
  forecasts.emplace_back("median", median_aggregate(test));
  forecasts.emplace_back("equal_avg", equal_average(test));
  forecasts.emplace_back("weighted_avg", apply_weights(weighted, test));
  forecasts.emplace_back("extremized", apply_extremized(extremized, test));
  forecasts.emplace_back("revealed", revealed_aggregate(structure, test));

  ResultsTable table;
  std::vector<ScoredForecast> scored;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    scored.push_back(score_forecast(label, forecasts[i].first, y, forecasts[i].second, cfg.n_bins,
                                    cfg.bootstrap_b,
                                    derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(i))));
    table.rows.push_back(scored.back().row);
  }

  {
    ParameterRow wrow;
    wrow.scenario = label;
    wrow.forecast = "weighted_avg";
    wrow.weights = to_std(weighted.weights());
    table.parameters.push_back(std::move(wrow));

    ParameterRow erow;
    erow.scenario = label;
    erow.forecast = "extremized";
    erow.has_extremization = true;
    erow.mu0 = extremized.mu0;
    erow.alpha = extremized.alpha;
    erow.mu0_defined = extremized.mu0_defined;
    erow.weights = to_std(extremized.weights);
    table.parameters.push_back(std::move(erow));
  }

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  write_file(out_dir / "results.csv", results_csv(table));
  write_file(out_dir / "parameters.csv", parameters_csv(table));
  write_diagrams(out_dir / "diagrams", scored);
  write_file(out_dir / "extremized.json", aggregator_to_json(extremized));
  {
    nlohmann::json wj;
    wj["weights"] = to_std(weighted.weights());
    write_file(out_dir / "weighted_avg.json", wj.dump());
  }
  if (cfg.dump_panels) {
    std::ostringstream tr, te;
    write_panel_csv(train, tr);
    write_panel_csv(test, te);
    write_file(out_dir / "train.csv", tr.str());
    write_file(out_dir / "test.csv", te.str());
  }

  nlohmann::json manifest;
  manifest["mode"] = "simulate";
  manifest["config"] = {{"seed", cfg.seed},
                        {"k_train", cfg.k_train},
                        {"k_test", cfg.k_test},
                        {"scenario", cfg.scenario},
                        {"n_bins", cfg.n_bins},
                        {"bootstrap", cfg.bootstrap_b},
                        {"dump_panels", cfg.dump_panels}};
  manifest["structure"] = nlohmann::json::parse(structure_to_json(structure));
  manifest["stream_seeds"] = {{"train", derive_seed(cfg.seed, 0)}, {"test", derive_seed(cfg.seed, 1)}};
  auto rows = nlohmann::json::array();
  for (const auto& s : scored) rows.push_back(row_json(s.row, s.decomposition));
  manifest["rows"] = std::move(rows);
  manifest["weighted_avg"] = {{"weights", to_std(weighted.weights())}};
  manifest["extremized"] = extremized_json(extremized);
  manifest["files"] = {"results.csv", "parameters.csv", "extremized.json", "weighted_avg.json"};
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  return table;
}

namespace {

struct FoldFit {
  ExtremizedAggregator extremized;
  Eigen::VectorXd weighted;
};

struct ScenarioPool {
  std::string label;
  std::size_t model_a = 0;  // positions in the m1/m2/m3/mf model list
  std::size_t model_b = 0;
  std::vector<double> equal_avg;
  std::vector<double> weighted_avg;
  std::vector<double> extremized;
  std::vector<FoldFit> fits;
};

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ResultsTable run_concrete(const ConcreteConfig& cfg) {
  if (cfg.folds < 2) {
    throw ConfigError("folds must be at least 2");
  }
  if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) {
    throw ConfigError("split ratio must lie strictly between 0 and 1");
  }
  if (cfg.n_bins < 2) {
    throw ConfigError("n_bins must be at least 2");
  }
  if (cfg.output_dir.empty()) {
    throw ConfigError("output directory is required");
  }
  const Dataset data = load_dataset_csv_file(cfg.dataset_path);
  const Eigen::Index k = data.n_rows();

  const auto perm = permutation(k, Rng(derive_seed(cfg.seed, 0)));
  std::vector<Eigen::Index> fold_of(static_cast<std::size_t>(k));
  {
    // Contiguous rank blocks over the permuted order, sizes differing by <= 1.
    const Eigen::Index base = k / cfg.folds;
    const Eigen::Index rem = k % cfg.folds;
    Eigen::Index pos = 0;
    for (Eigen::Index f = 0; f < cfg.folds; ++f) {
      const Eigen::Index size = base + (f < rem ? 1 : 0);
      for (Eigen::Index i = 0; i < size; ++i) {
        fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])] = f;
      }
    }
  }

  const std::vector<std::pair<std::string, const std::vector<int>*>> models = {
      {"m1", &model_m1()}, {"m2", &model_m2()}, {"m3", &model_m3()}, {"mf", &model_mf()}};

  std::vector<double> pooled_y;
  std::vector<std::vector<double>> pooled_model(models.size());
  std::vector<ScenarioPool> scenarios(2);
  scenarios[0].label = "no_overlap";
  scenarios[0].model_a = 0;  // m1
  scenarios[0].model_b = 1;  // m2
  scenarios[1].label = "high_overlap";
  scenarios[1].model_a = 0;  // m1
  scenarios[1].model_b = 2;  // m3

  for (Eigen::Index fold = 0; fold < cfg.folds; ++fold) {
    try {
      std::vector<bool> test_mask(static_cast<std::size_t>(k), false);
      std::vector<Eigen::Index> pool_rows;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (fold_of[static_cast<std::size_t>(i)] == fold) {
          test_mask[static_cast<std::size_t>(i)] = true;
        } else {
          pool_rows.push_back(i);
        }
      }
      const Eigen::Index pool_size = static_cast<Eigen::Index>(pool_rows.size());
      const Eigen::Index test_size = k - pool_size;
      if (test_size < 1 || pool_size < 2) {
        throw TooFewRows("not enough rows to form the fold split");
      }

      // Seeded half split of the training pool.
      const auto half_perm =
          permutation(pool_size, Rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(fold))));
      Eigen::Index n_half1 = static_cast<Eigen::Index>(
          std::llround(cfg.split_ratio * static_cast<double>(pool_size)));
      n_half1 = std::clamp<Eigen::Index>(n_half1, 1, pool_size - 1);
      std::vector<bool> half1_mask(static_cast<std::size_t>(k), false);
      std::vector<bool> half2_mask(static_cast<std::size_t>(k), false);
      for (Eigen::Index i = 0; i < pool_size; ++i) {
        const Eigen::Index row = pool_rows[static_cast<std::size_t>(half_perm[static_cast<std::size_t>(i)])];
        (i < n_half1 ? half1_mask : half2_mask)[static_cast<std::size_t>(row)] = true;
      }

      // Model forecasts for the aggregator-training half and the test fold.
      std::vector<Eigen::VectorXd> on_half2(models.size());
      std::vector<Eigen::VectorXd> on_test(models.size());
      for (std::size_t m = 0; m < models.size(); ++m) {
        const LinearModel fitted = fit_ols(data, *models[m].second, half1_mask);
        on_half2[m] = predict(fitted, data, half2_mask);
        on_test[m] = predict(fitted, data, test_mask);
      }

      Eigen::VectorXd y_half2(static_cast<Eigen::Index>(on_half2[0].size()));
      Eigen::VectorXd y_test(test_size);
      {
        Eigen::Index a = 0, b = 0;
        for (Eigen::Index i = 0; i < k; ++i) {
          if (half2_mask[static_cast<std::size_t>(i)]) y_half2[a++] = data.outcomes()[i];
          if (test_mask[static_cast<std::size_t>(i)]) y_test[b++] = data.outcomes()[i];
        }
      }

      for (Eigen::Index i = 0; i < test_size; ++i) pooled_y.push_back(y_test[i]);
      for (std::size_t m = 0; m < models.size(); ++m) {
        for (Eigen::Index i = 0; i < test_size; ++i) pooled_model[m].push_back(on_test[m][i]);
      }

      for (auto& scenario : scenarios) {
        Eigen::MatrixXd train_f(2, y_half2.size());
        train_f.row(0) = on_half2[scenario.model_a].transpose();
        train_f.row(1) = on_half2[scenario.model_b].transpose();
        const ForecastPanel train(y_half2, train_f);

        Eigen::MatrixXd test_f(2, test_size);
        test_f.row(0) = on_test[scenario.model_a].transpose();
        test_f.row(1) = on_test[scenario.model_b].transpose();
        const ForecastPanel test_panel(y_test, test_f);

        const WeightVector w = fit_weighted_average(train);
        const ExtremizedAggregator ex = fit_extremized(train);

        const Eigen::VectorXd ea = equal_average(test_panel);
        const Eigen::VectorXd wa = apply_weights(w, test_panel);
        const Eigen::VectorXd xs = apply_extremized(ex, test_panel);
        for (Eigen::Index i = 0; i < test_size; ++i) {
          scenario.equal_avg.push_back(ea[i]);
          scenario.weighted_avg.push_back(wa[i]);
          scenario.extremized.push_back(xs[i]);
        }
        scenario.fits.push_back(FoldFit{ex, w.weights()});
      }
    } catch (const TooFewRows& e) {
      throw TooFewRows("fold " + std::to_string(fold) + ": " + e.what());
    } catch (const QpFailure& e) {
      throw QpFailure("fold " + std::to_string(fold) + ": " + e.what(), e.debug);
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(fold) + ": " + std::string(e.what()));
    }
  }

  const Eigen::VectorXd y_all = from_std(pooled_y);
  ResultsTable table;
  std::vector<ScoredForecast> scored;
  std::uint64_t diagram_stream = 2000;
  for (std::size_t m = 0; m < models.size(); ++m) {
    scored.push_back(score_forecast("individual", models[m].first, y_all,
                                    from_std(pooled_model[m]), cfg.n_bins, cfg.bootstrap_b,
                                    derive_seed(cfg.seed, diagram_stream++)));
    table.rows.push_back(scored.back().row);
  }
  for (const auto& scenario : scenarios) {
    const std::vector<std::pair<std::string, const std::vector<double>*>> aggs = {
        {"equal_avg", &scenario.equal_avg},
        {"weighted_avg", &scenario.weighted_avg},
        {"extremized", &scenario.extremized}};
    for (const auto& [name, values] : aggs) {
      scored.push_back(score_forecast(scenario.label, name, y_all, from_std(*values), cfg.n_bins,
                                      cfg.bootstrap_b, derive_seed(cfg.seed, diagram_stream++)));
      table.rows.push_back(scored.back().row);
    }
  }

  // Parameter rows report across-fold means; per-fold fits go in the manifest.
  nlohmann::json fold_params = nlohmann::json::object();
  for (const auto& scenario : scenarios) {
    const std::size_t n_folds = scenario.fits.size();
    Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd ew_mean = Eigen::VectorXd::Zero(2);
    double alpha_mean = 0.0;
    double mu0_mean = 0.0;
    std::size_t mu0_count = 0;
    auto per_fold = nlohmann::json::array();
    for (const auto& fit : scenario.fits) {
      w_mean += fit.weighted;
      ew_mean += fit.extremized.weights;
      alpha_mean += fit.extremized.alpha;
      if (fit.extremized.mu0_defined) {
        mu0_mean += fit.extremized.mu0;
        ++mu0_count;
      }
      nlohmann::json fj = extremized_json(fit.extremized);
      fj["weighted_avg_weights"] = to_std(fit.weighted);
      per_fold.push_back(std::move(fj));
    }
    w_mean /= static_cast<double>(n_folds);
    ew_mean /= static_cast<double>(n_folds);
    alpha_mean /= static_cast<double>(n_folds);
    const bool mu0_defined = mu0_count > 0;
    if (mu0_defined) mu0_mean /= static_cast<double>(mu0_count);
    fold_params[scenario.label] = std::move(per_fold);

    ParameterRow wrow;
    wrow.scenario = scenario.label;
    wrow.forecast = "weighted_avg";
    wrow.weights = to_std(w_mean);
    table.parameters.push_back(std::move(wrow));

    ParameterRow erow;
    erow.scenario = scenario.label;
    erow.forecast = "extremized";
    erow.has_extremization = true;
    erow.mu0 = mu0_defined ? mu0_mean : 0.0;
    erow.mu0_defined = mu0_defined;
    erow.alpha = alpha_mean;
    erow.weights = to_std(ew_mean);
    table.parameters.push_back(std::move(erow));
  }

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  write_file(out_dir / "results.csv", results_csv(table));
  write_file(out_dir / "parameters.csv", parameters_csv(table));
  write_diagrams(out_dir / "diagrams", scored);

  nlohmann::json manifest;
  manifest["mode"] = "concrete";
  manifest["config"] = {{"seed", cfg.seed},          {"folds", cfg.folds},
                        {"split_ratio", cfg.split_ratio}, {"n_bins", cfg.n_bins},
                        {"bootstrap", cfg.bootstrap_b},   {"dataset", cfg.dataset_path}};
  manifest["n_rows"] = k;
  auto rows = nlohmann::json::array();
  for (const auto& s : scored) rows.push_back(row_json(s.row, s.decomposition));
  manifest["rows"] = std::move(rows);
  manifest["fold_parameters"] = std::move(fold_params);
  {
    auto params = nlohmann::json::array();
    for (const auto& p : table.parameters) {
      nlohmann::json pj;
      pj["scenario"] = p.scenario;
      pj["forecast"] = p.forecast;
      pj["weights"] = p.weights;
      if (p.has_extremization) {
        pj["alpha"] = p.alpha;
        pj["mu0"] = p.mu0;
        pj["mu0_defined"] = p.mu0_defined;
      }
      params.push_back(std::move(pj));
    }
    manifest["parameters"] = std::move(params);
  }
  manifest["files"] = {"results.csv", "parameters.csv"};
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  return table;
}

void run_diagram(const DiagramConfig& cfg) {
  if (cfg.output_dir.empty()) {
    throw ConfigError("output directory is required");
  }
  std::ifstream in(cfg.input_csv);
  if (!in) {
    throw ParseError("cannot open input CSV '" + cfg.input_csv + "'");
  }
  std::vector<double> ys;
  std::vector<double> fs_vals;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream cells(line);
    std::string a, b;
    if (!std::getline(cells, a, ',') || !std::getline(cells, b, ',')) {
      throw ParseError("line " + std::to_string(line_no) + ": expected two comma-separated values");
    }
    try {
      const double yv = std::stod(a);
      const double fv = std::stod(b);
      ys.push_back(yv);
      fs_vals.push_back(fv);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header row
      throw ParseError("line " + std::to_string(line_no) + ": bad number");
    }
  }
  if (ys.empty()) {
    throw ParseError("input CSV has no numeric rows");
  }

  const Eigen::VectorXd y = from_std(ys);
  const Eigen::VectorXd f = from_std(fs_vals);
  const ReliabilityDiagram d = reliability_diagram(y, f, cfg.n_bins, cfg.bootstrap_b, cfg.seed);

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  {
    std::ostringstream bins;
    write_diagram_bins_csv(d, bins);
    write_file(out_dir / "bins.csv", bins.str());
  }
  {
    std::ostringstream hist;
    write_diagram_hist_csv(d, hist);
    write_file(out_dir / "hist.csv", hist.str());
  }
  write_file(out_dir / "summary.json", diagram_to_json(d) + "\n");
}

}  // namespace elop
