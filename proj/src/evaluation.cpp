#include "elop/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <utility>

#include <json.hpp>

#include "elop/rng.hpp"

namespace elop {

namespace {

constexpr Eigen::Index kHistogramBars = 20;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_pair(const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  if (y.size() != f.size()) {
    throw DimensionMismatch("outcome and forecast lengths differ");
  }
  if (y.size() < 1) {
    throw DimensionMismatch("need at least one pair");
  }
}

// Bin r covers [offsets[r], offsets[r+1]) over the sorted order; counts
// differ by at most one, with the earlier bins taking the remainder.
std::vector<Eigen::Index> equal_count_offsets(Eigen::Index k, Eigen::Index n_bins) {
  const Eigen::Index base = k / n_bins;
  const Eigen::Index rem = k % n_bins;
  std::vector<Eigen::Index> offsets(static_cast<std::size_t>(n_bins) + 1, 0);
  for (Eigen::Index r = 0; r < n_bins; ++r) {
    offsets[static_cast<std::size_t>(r) + 1] =
        offsets[static_cast<std::size_t>(r)] + base + (r < rem ? 1 : 0);
  }
  return offsets;
}

// Linear-interpolation quantile of an already sorted vector.
double sorted_quantile(const std::vector<double>& v, double p) {
  const double h = p * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= v.size()) return v.back();
  const double frac = h - static_cast<double>(i);
  return v[i] + frac * (v[i + 1] - v[i]);
}

}  // namespace

double quadratic_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  check_pair(y, f);
  return (y - f).squaredNorm() / static_cast<double>(y.size());
}

DecompositionResult decompose(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                              const Grouping& grouping) {
  check_pair(y, f);
  const Eigen::Index k = y.size();
  const double y_bar = y.mean();

  DecompositionResult out;
  out.loss = quadratic_loss(y, f);
  out.unc = (y.array() - y_bar).square().sum() / static_cast<double>(k);
  out.binned = grouping.binned;

  if (!grouping.binned) {
    // One group per distinct forecast value.
    std::map<double, std::pair<Eigen::Index, double>> groups;
    for (Eigen::Index i = 0; i < k; ++i) {
      auto& g = groups[f[i]];
      g.first += 1;
      g.second += y[i];
    }
    for (const auto& [value, g] : groups) {
      const double group_mean = g.second / static_cast<double>(g.first);
      out.rel += static_cast<double>(g.first) * (value - group_mean) * (value - group_mean);
      out.res += static_cast<double>(g.first) * (group_mean - y_bar) * (group_mean - y_bar);
    }
    out.n_groups = static_cast<Eigen::Index>(groups.size());
  } else {
    if (grouping.n_bins < 1) {
      throw TooManyBins("bin count must be positive");
    }
    if (grouping.n_bins > k) {
      throw TooManyBins("more bins than forecast-outcome pairs");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return f[a] < f[b]; });
    const auto offsets = equal_count_offsets(k, grouping.n_bins);
    for (Eigen::Index r = 0; r < grouping.n_bins; ++r) {
      const Eigen::Index lo = offsets[static_cast<std::size_t>(r)];
      const Eigen::Index hi = offsets[static_cast<std::size_t>(r) + 1];
      double sum_f = 0.0;
      double sum_y = 0.0;
      for (Eigen::Index i = lo; i < hi; ++i) {
        sum_f += f[order[static_cast<std::size_t>(i)]];
        sum_y += y[order[static_cast<std::size_t>(i)]];
      }
      const Eigen::Index count = hi - lo;
      const double mean_f = sum_f / static_cast<double>(count);
      const double mean_y = sum_y / static_cast<double>(count);
      out.rel += static_cast<double>(count) * (mean_f - mean_y) * (mean_f - mean_y);
      out.res += static_cast<double>(count) * (mean_y - y_bar) * (mean_y - y_bar);
    }
    out.n_groups = grouping.n_bins;
  }

  out.rel /= static_cast<double>(k);
  out.res /= static_cast<double>(k);
  out.identity_residual = std::abs(out.loss - (out.rel - out.res + out.unc));
  return out;
}

ReliabilityDiagram reliability_diagram(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                                       Eigen::Index n_bins, Eigen::Index b, std::uint64_t seed) {
  check_pair(y, f);
  const Eigen::Index k = y.size();
  if (n_bins < 2) {
    throw TooManyBins("a reliability diagram needs at least two bins");
  }
  if (n_bins > k) {
    throw TooManyBins("more bins than forecast-outcome pairs");
  }
  if (b < 0) {
    throw DimensionMismatch("bootstrap count must be nonnegative");
  }

  // Everything below works on the sorted pairs, so equal inputs in any row
  // order produce identical output (up to forecast ties).
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b2) { return f[a] < f[b2]; });
  std::vector<double> fs(static_cast<std::size_t>(k));
  std::vector<double> ys(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    fs[static_cast<std::size_t>(i)] = f[order[static_cast<std::size_t>(i)]];
    ys[static_cast<std::size_t>(i)] = y[order[static_cast<std::size_t>(i)]];
  }

  ReliabilityDiagram d;
  d.n_bins = n_bins;
  d.bootstrap_b = b;
  d.seed = seed;
  {
    double sum_y = 0.0;
    for (double v : ys) sum_y += v;
    d.marginal_mean = sum_y / static_cast<double>(k);
  }

  const auto offsets = equal_count_offsets(k, n_bins);
  d.bins.resize(static_cast<std::size_t>(n_bins));
  for (Eigen::Index r = 0; r < n_bins; ++r) {
    const Eigen::Index lo = offsets[static_cast<std::size_t>(r)];
    const Eigen::Index hi = offsets[static_cast<std::size_t>(r) + 1];
    double sum_f = 0.0;
    double sum_y = 0.0;
    for (Eigen::Index i = lo; i < hi; ++i) {
      sum_f += fs[static_cast<std::size_t>(i)];
      sum_y += ys[static_cast<std::size_t>(i)];
    }
    auto& bin = d.bins[static_cast<std::size_t>(r)];
    bin.count = hi - lo;
    bin.mean_forecast = sum_f / static_cast<double>(bin.count);
    bin.mean_outcome = sum_y / static_cast<double>(bin.count);
    bin.lo = bin.mean_outcome;
    bin.hi = bin.mean_outcome;
  }

  // Forecast histogram for the diagram inset.
  {
    const double f_min = fs.front();
    const double f_max = fs.back();
    if (f_max == f_min) {
      d.histogram.push_back({f_min, f_max, k});
    } else {
      const Eigen::Index bars = std::min<Eigen::Index>(kHistogramBars, k);
      d.histogram.resize(static_cast<std::size_t>(bars));
      const double width = (f_max - f_min) / static_cast<double>(bars);
      for (Eigen::Index r = 0; r < bars; ++r) {
        d.histogram[static_cast<std::size_t>(r)].edge_lo = f_min + width * static_cast<double>(r);
        d.histogram[static_cast<std::size_t>(r)].edge_hi =
            r + 1 == bars ? f_max : f_min + width * static_cast<double>(r + 1);
      }
      for (double v : fs) {
        auto idx = static_cast<Eigen::Index>((v - f_min) / width);
        idx = std::min(idx, bars - 1);
        d.histogram[static_cast<std::size_t>(idx)].count += 1;
      }
    }
  }

  if (b == 0) return d;

  // Percentile envelope over b resampled diagrams. Replicate r draws from
  // substream r of the master seed, so any evaluation order gives the same
  // envelope.
  std::vector<std::vector<double>> boot(static_cast<std::size_t>(n_bins),
                                        std::vector<double>(static_cast<std::size_t>(b)));
  std::vector<std::pair<double, double>> resample(static_cast<std::size_t>(k));
  for (Eigen::Index rep = 0; rep < b; ++rep) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    for (Eigen::Index i = 0; i < k; ++i) {
      const std::size_t pick = rng.uniform_index(static_cast<std::size_t>(k));
      resample[static_cast<std::size_t>(i)] = {fs[pick], ys[pick]};
    }
    std::stable_sort(resample.begin(), resample.end(),
                     [](const auto& a, const auto& b2) { return a.first < b2.first; });
    for (Eigen::Index r = 0; r < n_bins; ++r) {
      const Eigen::Index lo = offsets[static_cast<std::size_t>(r)];
      const Eigen::Index hi = offsets[static_cast<std::size_t>(r) + 1];
      double sum_y = 0.0;
      for (Eigen::Index i = lo; i < hi; ++i) sum_y += resample[static_cast<std::size_t>(i)].second;
      boot[static_cast<std::size_t>(r)][static_cast<std::size_t>(rep)] =
          sum_y / static_cast<double>(hi - lo);
    }
  }
  for (Eigen::Index r = 0; r < n_bins; ++r) {
    auto& values = boot[static_cast<std::size_t>(r)];
    std::sort(values.begin(), values.end());
    auto& bin = d.bins[static_cast<std::size_t>(r)];
    // Clamped so the band always contains the point estimate.
    bin.lo = std::min(sorted_quantile(values, 0.025), bin.mean_outcome);
    bin.hi = std::max(sorted_quantile(values, 0.975), bin.mean_outcome);
  }
  return d;
}

double sample_variance(const Eigen::VectorXd& f) {
  if (f.size() < 2) {
    throw TooFewPoints("sample variance needs at least two points");
  }
  const double mean = f.mean();
  return (f.array() - mean).square().sum() / static_cast<double>(f.size() - 1);
}

void write_diagram_bins_csv(const ReliabilityDiagram& d, std::ostream& out) {
  out << "mean_forecast,mean_outcome,count,lo,hi\n";
  for (const auto& bin : d.bins) {
    out << format_double(bin.mean_forecast) << "," << format_double(bin.mean_outcome) << ","
        << bin.count << "," << format_double(bin.lo) << "," << format_double(bin.hi) << "\n";
  }
}

void write_diagram_hist_csv(const ReliabilityDiagram& d, std::ostream& out) {
  out << "edge_lo,edge_hi,count\n";
  for (const auto& bar : d.histogram) {
    out << format_double(bar.edge_lo) << "," << format_double(bar.edge_hi) << "," << bar.count
        << "\n";
  }
}

std::string decomposition_to_json(const DecompositionResult& r) {
  nlohmann::json doc;
  doc["loss"] = r.loss;
  doc["rel"] = r.rel;
  doc["res"] = r.res;
  doc["unc"] = r.unc;
  doc["identity_residual"] = r.identity_residual;
  doc["n_groups"] = r.n_groups;
  doc["binned"] = r.binned;
  return doc.dump();
}

std::string diagram_to_json(const ReliabilityDiagram& d) {
  nlohmann::json doc;
  doc["n_bins"] = d.n_bins;
  doc["bootstrap_b"] = d.bootstrap_b;
  doc["seed"] = d.seed;
  doc["marginal_mean"] = d.marginal_mean;
  auto bins = nlohmann::json::array();
  for (const auto& bin : d.bins) {
    bins.push_back({{"mean_forecast", bin.mean_forecast},
                    {"mean_outcome", bin.mean_outcome},
                    {"count", bin.count},
                    {"lo", bin.lo},
                    {"hi", bin.hi}});
  }
  doc["bins"] = std::move(bins);
  auto hist = nlohmann::json::array();
  for (const auto& bar : d.histogram) {
    hist.push_back({{"edge_lo", bar.edge_lo}, {"edge_hi", bar.edge_hi}, {"count", bar.count}});
  }
  doc["histogram"] = std::move(hist);
  return doc.dump();
}

}  // namespace elop
