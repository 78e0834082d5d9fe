#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fincon/dataio.hpp"
#include "fincon/pvar.hpp"

namespace fincon {

/// A_0 ... A_{H-1} of the moving-average representation for lag matrices
/// Phi_1 ... Phi_P.
std::vector<Eigen::MatrixXd> ma_coefficients(std::span<const Eigen::MatrixXd> phi, int horizon);
/// Same, from a system matrix [alpha | Phi_1 ... Phi_P].
std::vector<Eigen::MatrixXd> ma_coefficients(const Eigen::MatrixXd& system, int lags, int horizon);

struct GfevdMatrix {
  Eigen::MatrixXd raw;    // generalized shares before normalization
  Eigen::MatrixXd theta;  // rows sum to one
  int horizon = 1;
};

/// Generalized FEVD at horizon H using A_0 ... A_{H-1}.
GfevdMatrix gfevd(std::span<const Eigen::MatrixXd> ma, const Eigen::MatrixXd& sigma, int horizon);

/// 100 (1 - trace / D) with D the sum of all entries.
double total_index(const Eigen::MatrixXd& theta);
/// 100 sum_{j != i} theta_ij / D.
double directional_index(const Eigen::MatrixXd& theta, Eigen::Index i);
Eigen::VectorXd directional_indices(const Eigen::MatrixXd& theta);

struct Band {
  double median = 0.0;
  double q16 = 0.0;
  double q84 = 0.0;
};

/// Type-7 sample quantile of unsorted data.
double quantile(std::vector<double> values, double prob);
Band summarize(const std::vector<double>& values);

struct SpilloverSeries {
  int horizon = 1;
  std::vector<std::string> countries;
  std::vector<YearMonth> dates;
  std::vector<Band> total;
  std::vector<std::vector<Band>> directional;  // date x country
  std::vector<Eigen::MatrixXd> theta_median;   // elementwise posterior median of normalized theta
};

/// Posterior summary of the indices for one fitted window.
struct WindowSummary {
  std::vector<Band> total;                     // per horizon
  std::vector<std::vector<Band>> directional;  // per horizon, per country
  std::vector<Eigen::MatrixXd> theta_median;   // per horizon
};
WindowSummary summarize_window(const PosteriorDraws& draws, std::span<const int> horizons);

struct ExpandingWindowOptions {
  YearMonth holdout_start;
  std::optional<YearMonth> holdout_end;  // defaults to the last panel date
  std::vector<int> horizons{1, 12};
  Eigen::Index min_train = 60;
  unsigned jobs = 1;
  bool forecasts = false;                 // also store 1-step point forecasts
  std::uint64_t stream_base = 0;          // window w uses stream stream_base + w
  std::function<void(const std::string&)> warn;  // defaults to stderr
};

struct WindowFailure {
  YearMonth date;
  std::string message;
};

struct ExpandingWindowResult {
  std::vector<SpilloverSeries> series;  // one per horizon, in option order
  std::vector<WindowFailure> failures;
  std::vector<YearMonth> forecast_dates;  // target month of each 1-step forecast
  Eigen::MatrixXd forecasts;              // rows aligned with forecast_dates
};

ExpandingWindowResult expanding_window_run(const PanelData& panel, const PvarConfig& config,
                                           const ExpandingWindowOptions& options, std::uint64_t seed);

/// `date,horizon,statistic,country,value` with statistic in {median, q16, q84}
/// and country a code or TOTAL.
void write_spillover_csv(const SpilloverSeries& series, std::ostream& out);
/// `date,horizon,country,source,value` rows of the per-date posterior-median theta.
void write_theta_csv(const SpilloverSeries& series, std::ostream& out);

struct ThetaSeries {
  std::vector<std::string> countries;
  std::vector<YearMonth> dates;
  std::vector<Eigen::MatrixXd> theta;
};
ThetaSeries read_theta_csv(std::istream& in, int horizon);

}  // namespace fincon
