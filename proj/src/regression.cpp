#include "elop/regression.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace elop {

namespace {

constexpr double kRankTol = 1e-10;

// Canonical names in v-index order, outcome last.
const std::array<std::string, Dataset::kNumPredictors + 1> kColumnNames = {
    "Cement",         "Coarse Aggregate", "Fly Ash",            "Water", "Superplasticizer",
    "Fine Aggregate", "Blast Furnace Slag", "Age",              "Strength"};

std::string normalize(const std::string& raw) {
  std::string out;
  bool pending_space = false;
  for (char ch : raw) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

const std::array<std::string, Dataset::kNumPredictors + 1>& Dataset::column_names() {
  return kColumnNames;
}

Dataset::Dataset(Eigen::MatrixXd predictors, Eigen::VectorXd outcomes)
    : predictors_(std::move(predictors)), outcomes_(std::move(outcomes)) {
  if (outcomes_.size() < 1) {
    throw DatasetFormatError("dataset has no rows");
  }
  if (predictors_.rows() != outcomes_.size() || predictors_.cols() != kNumPredictors) {
    throw DimensionMismatch("predictor matrix must be K x 8 matching the outcomes");
  }
  if (!predictors_.allFinite() || !outcomes_.allFinite()) {
    throw DatasetFormatError("dataset values must be finite");
  }
}

Dataset load_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetFormatError("empty dataset CSV");
  }
  const auto header = split_csv_line(line);

  // Match headers by name, longest canonical first so e.g. "fine aggregate"
  // is claimed before "age". Decorated UCI headers ("Cement (component 1)
  // (kg in a m^3 mixture)") match by substring.
  const int n_cols = static_cast<int>(kColumnNames.size());
  std::vector<int> canon_order(static_cast<std::size_t>(n_cols));
  for (int i = 0; i < n_cols; ++i) canon_order[static_cast<std::size_t>(i)] = i;
  std::sort(canon_order.begin(), canon_order.end(), [](int a, int b) {
    return kColumnNames[static_cast<std::size_t>(a)].size() >
           kColumnNames[static_cast<std::size_t>(b)].size();
  });

  std::vector<int> column_of(static_cast<std::size_t>(n_cols), -1);  // canonical -> CSV column
  std::vector<bool> claimed(header.size(), false);
  for (int canon : canon_order) {
    const std::string needle = normalize(kColumnNames[static_cast<std::size_t>(canon)]);
    for (std::size_t col = 0; col < header.size(); ++col) {
      if (claimed[col]) continue;
      if (normalize(header[col]).find(needle) != std::string::npos) {
        column_of[static_cast<std::size_t>(canon)] = static_cast<int>(col);
        claimed[col] = true;
        break;
      }
    }
    if (column_of[static_cast<std::size_t>(canon)] < 0) {
      throw DatasetFormatError("dataset header is missing column '" +
                               kColumnNames[static_cast<std::size_t>(canon)] + "'");
    }
  }

  std::vector<std::array<double, Dataset::kNumPredictors + 1>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DatasetFormatError("dataset row " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    }
    std::array<double, Dataset::kNumPredictors + 1> row{};
    for (int canon = 0; canon < n_cols; ++canon) {
      const auto& cell = cells[static_cast<std::size_t>(column_of[static_cast<std::size_t>(canon)])];
      try {
        row[static_cast<std::size_t>(canon)] = std::stod(cell);
      } catch (const std::exception&) {
        throw DatasetFormatError("dataset row " + std::to_string(line_no) + ": bad number '" +
                                 cell + "'");
      }
    }
    if (row[Dataset::kNumPredictors] <= 0.0) {
      throw DatasetFormatError("dataset row " + std::to_string(line_no) +
                               ": outcome must be strictly positive");
    }
    rows.push_back(row);
  }
  if (rows.empty()) {
    throw DatasetFormatError("dataset has no data rows");
  }

  const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd predictors(k, Dataset::kNumPredictors);
  Eigen::VectorXd outcomes(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (int j = 0; j < Dataset::kNumPredictors; ++j) {
      predictors(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    outcomes[i] = rows[static_cast<std::size_t>(i)][Dataset::kNumPredictors];
  }
  return Dataset(std::move(predictors), std::move(outcomes));
}

Dataset load_dataset_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetFormatError("cannot open dataset file '" + path + "'");
  }
  return load_dataset_csv(in);
}

const std::vector<int>& model_m1() {
  static const std::vector<int> v = {0, 1, 2, 3};
  return v;
}
const std::vector<int>& model_m2() {
  static const std::vector<int> v = {4, 5, 6, 7};
  return v;
}
const std::vector<int>& model_m3() {
  static const std::vector<int> v = {2, 3, 4, 5};
  return v;
}
const std::vector<int>& model_mf() {
  static const std::vector<int> v = {0, 1, 2, 3, 4, 5, 6, 7};
  return v;
}

namespace {

std::vector<Eigen::Index> masked_rows(const Dataset& d, const std::vector<bool>& row_mask) {
  if (static_cast<Eigen::Index>(row_mask.size()) != d.n_rows()) {
    throw DimensionMismatch("row mask length does not match the dataset");
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
    if (row_mask[static_cast<std::size_t>(i)]) rows.push_back(i);
  }
  return rows;
}

void check_predictors(const std::vector<int>& predictor_indices) {
  std::vector<int> seen;
  for (int idx : predictor_indices) {
    if (idx < 0 || idx >= Dataset::kNumPredictors) {
      throw IndexOutOfRange("predictor index " + std::to_string(idx) + " out of range");
    }
    if (std::find(seen.begin(), seen.end(), idx) != seen.end()) {
      throw IndexOutOfRange("predictor index " + std::to_string(idx) + " repeated");
    }
    seen.push_back(idx);
  }
}

}  // namespace

LinearModel fit_ols(const Dataset& d, const std::vector<int>& predictor_indices,
                    const std::vector<bool>& row_mask) {
  check_predictors(predictor_indices);
  const auto rows = masked_rows(d, row_mask);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(predictor_indices.size());
  if (n < p + 2) {
    throw TooFewRows("need at least " + std::to_string(p + 2) + " rows to fit " +
                     std::to_string(p) + " predictors, got " + std::to_string(n));
  }

  Eigen::MatrixXd design(n, p + 1);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      design(i, j + 1) = d.predictors()(rows[static_cast<std::size_t>(i)],
                                        predictor_indices[static_cast<std::size_t>(j)]);
    }
    target[i] = d.outcomes()[rows[static_cast<std::size_t>(i)]];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::VectorXd r_diag =
      qr.matrixQR().topLeftCorner(p + 1, p + 1).diagonal().cwiseAbs();
  const double r_max = r_diag.maxCoeff();
  const double r_min = r_diag.minCoeff();
  if (r_min < kRankTol * r_max) {
    throw RankDeficientDesign("design matrix is rank deficient (diagonal ratio " +
                              std::to_string(r_min / r_max) + ")");
  }

  LinearModel m;
  m.predictor_indices = predictor_indices;
  m.coefficients = qr.solve(target);
  m.fit_diagnostics.rss = (target - design * m.coefficients).squaredNorm();
  m.fit_diagnostics.condition_estimate = r_max / r_min;
  return m;
}

Eigen::VectorXd predict(const LinearModel& m, const Dataset& d, const std::vector<bool>& row_mask) {
  check_predictors(m.predictor_indices);
  if (m.coefficients.size() != static_cast<Eigen::Index>(m.predictor_indices.size()) + 1) {
    throw DimensionMismatch("coefficient length does not match the predictor set");
  }
  const auto rows = masked_rows(d, row_mask);
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double value = m.coefficients[0];
    for (std::size_t j = 0; j < m.predictor_indices.size(); ++j) {
      value += m.coefficients[static_cast<Eigen::Index>(j) + 1] *
               d.predictors()(rows[i], m.predictor_indices[j]);
    }
    out[static_cast<Eigen::Index>(i)] = value;
  }
  return out;
}

}  // namespace elop
