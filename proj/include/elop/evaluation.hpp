#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "elop/errors.hpp"

namespace elop {

// Average quadratic loss split as L = REL - RES + UNC. With exact grouping
// (one group per distinct forecast value) the identity is exact and
// identity_residual is rounding noise; with equal-count binning the
// within-bin forecast spread breaks it and identity_residual reports the gap.
struct DecompositionResult {
  double loss = 0.0;
  double rel = 0.0;
  double res = 0.0;
  double unc = 0.0;
  double identity_residual = 0.0;
  Eigen::Index n_groups = 0;
  bool binned = false;
};

struct Grouping {
  static Grouping exact() { return Grouping{}; }
  static Grouping equal_count(Eigen::Index n_bins) { return Grouping{true, n_bins}; }
  bool binned = false;
  Eigen::Index n_bins = 0;
};

struct DiagramBin {
  double mean_forecast = 0.0;
  double mean_outcome = 0.0;
  Eigen::Index count = 0;
  double lo = 0.0;  // bootstrap envelope on mean_outcome, 2.5% quantile
  double hi = 0.0;  // 97.5% quantile
};

struct HistogramBar {
  double edge_lo = 0.0;
  double edge_hi = 0.0;
  Eigen::Index count = 0;
};

// Equal-count calibration curve with a bootstrap envelope and the forecast
// histogram used in the diagram inset.
struct ReliabilityDiagram {
  std::vector<DiagramBin> bins;
  double marginal_mean = 0.0;  // sample mean of the outcomes (dashed line)
  std::vector<HistogramBar> histogram;
  Eigen::Index n_bins = 0;
  Eigen::Index bootstrap_b = 0;
  std::uint64_t seed = 0;
};

// (1/K) sum (y_k - f_k)^2
double quadratic_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& f);

DecompositionResult decompose(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                              const Grouping& grouping);

// Sorts pairs by forecast (stable, ties by original index), splits into
// n_bins bins whose counts differ by at most one, and resamples the pairs b
// times to get per-bin percentile envelopes. Replicate r draws from
// substream r of `seed`, so replicates can run in any order.
ReliabilityDiagram reliability_diagram(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                                       Eigen::Index n_bins, Eigen::Index b, std::uint64_t seed);

// Unbiased (K-1 denominator) sample variance.
double sample_variance(const Eigen::VectorXd& f);

// bins.csv: mean_forecast,mean_outcome,count,lo,hi
void write_diagram_bins_csv(const ReliabilityDiagram& d, std::ostream& out);
// hist.csv: edge_lo,edge_hi,count
void write_diagram_hist_csv(const ReliabilityDiagram& d, std::ostream& out);

std::string decomposition_to_json(const DecompositionResult& r);
std::string diagram_to_json(const ReliabilityDiagram& d);

}  // namespace elop
