#include "elop/panel.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace elop {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ForecastPanel::ForecastPanel(Eigen::VectorXd outcomes, Eigen::MatrixXd forecasts)
    : outcomes_(std::move(outcomes)), forecasts_(std::move(forecasts)) {
  if (outcomes_.size() < 1 || forecasts_.rows() < 1) {
    throw EmptyPanel("panel needs at least one problem and one forecaster");
  }
  if (forecasts_.cols() != outcomes_.size()) {
    throw DimensionMismatch("forecast columns (" + std::to_string(forecasts_.cols()) +
                            ") do not match outcome count (" + std::to_string(outcomes_.size()) +
                            ")");
  }
  if (!outcomes_.allFinite() || !forecasts_.allFinite()) {
    throw DimensionMismatch("panel entries must be finite");
  }
}

void write_panel_csv(const ForecastPanel& panel, std::ostream& out) {
  out << "y";
  for (Eigen::Index j = 0; j < panel.n_forecasters(); ++j) {
    out << ",x" << (j + 1);
  }
  out << "\n";
  for (Eigen::Index k = 0; k < panel.n_problems(); ++k) {
    out << format_double(panel.outcomes()[k]);
    for (Eigen::Index j = 0; j < panel.n_forecasters(); ++j) {
      out << "," << format_double(panel.forecasts()(j, k));
    }
    out << "\n";
  }
}

ForecastPanel read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("empty panel CSV");
  }
  Eigen::Index n = -1;  // header columns minus the outcome
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) ++n;
  }
  if (n < 1) {
    throw ParseError("panel CSV header needs y plus at least one forecaster column");
  }
  std::vector<double> ys;
  std::vector<double> xs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream cells(line);
    std::string cell;
    Eigen::Index col = 0;
    while (std::getline(cells, cell, ',')) {
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError("panel CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      if (col == 0) {
        ys.push_back(v);
      } else {
        xs.push_back(v);
      }
      ++col;
    }
    if (col != n + 1) {
      throw ParseError("panel CSV row " + std::to_string(row) + ": expected " +
                       std::to_string(n + 1) + " cells, got " + std::to_string(col));
    }
  }
  const Eigen::Index k = static_cast<Eigen::Index>(ys.size());
  if (k == 0) {
    throw ParseError("panel CSV has no data rows");
  }
  Eigen::VectorXd outcomes = Eigen::Map<Eigen::VectorXd>(ys.data(), k);
  Eigen::MatrixXd forecasts(n, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index j = 0; j < n; ++j) {
      forecasts(j, r) = xs[static_cast<std::size_t>(r * n + j)];
    }
  }
  return ForecastPanel(std::move(outcomes), std::move(forecasts));
}

}  // namespace elop
