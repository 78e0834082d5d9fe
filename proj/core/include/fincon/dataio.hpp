#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fincon/date.hpp"

namespace fincon {

/// Canonical country ordering (alphabetical ISO-2). Loaded panels are
/// reordered to follow it.
inline constexpr std::array<std::string_view, 12> kCanonicalCountries = {
    "AT", "BE", "DE", "ES", "FI", "FR", "GR", "IE", "IT", "LU", "NL", "PT"};

inline constexpr std::array<std::string_view, 7> kCoreCountries = {"AT", "BE", "DE", "FI",
                                                                   "FR", "LU", "NL"};
inline constexpr std::array<std::string_view, 5> kPeripheryCountries = {"ES", "GR", "IE", "IT", "PT"};

/// Market labels: government bonds, long- and short-term lending rates, TARGET2.
inline constexpr std::array<std::string_view, 4> kMarkets = {"gb", "bl", "bs", "t2"};

bool is_known_country(std::string_view code);
bool is_known_market(std::string_view label);

/// Aligned monthly panel, one column per country. Missing values are NaN and
/// may only form a leading block in each column.
struct PanelData {
  std::vector<YearMonth> dates;
  std::vector<std::string> countries;
  std::string variable;
  Eigen::MatrixXd values;          // T x N
  std::vector<Eigen::Index> first_valid;  // first non-missing row per column

  Eigen::Index periods() const { return values.rows(); }
  Eigen::Index size() const { return values.cols(); }
  int country_index(std::string_view code) const;
  std::ptrdiff_t date_index(YearMonth ym) const;

  /// Rows from the first date on which every column is observed.
  PanelData balanced() const;
  /// Rows up to and including `last`.
  PanelData through(YearMonth last) const;
};

/// Checks the panel invariants; throws ValidationError naming the offending
/// row and column. `min_periods` applies to the balanced sub-sample.
void validate_panel(const PanelData& panel, Eigen::Index min_periods = 4);

/// Loads a CSV whose first column is `date` (YYYY-MM) followed by one column
/// per country code. `min_periods` defaults to P + 2 for the default lag P = 2.
PanelData load_panel(const std::filesystem::path& path, std::string_view variable,
                     Eigen::Index min_periods = 4);
PanelData parse_panel(std::istream& in, std::string_view variable, Eigen::Index min_periods = 4);

/// Builds a validated panel from in-memory data (columns reordered canonically).
PanelData make_panel(std::vector<YearMonth> dates, std::vector<std::string> countries,
                     std::string variable, Eigen::MatrixXd values, Eigen::Index min_periods = 4);

void write_panel_csv(const PanelData& panel, std::ostream& out);

/// Rolling PPP weights aligned with a panel: each row is a probability vector
/// over the countries observed on that date.
class WeightScheme {
 public:
  static WeightScheme create(Eigen::MatrixXd weights, const PanelData& panel, double tolerance = 1e-8);
  const Eigen::MatrixXd& weights() const { return weights_; }

 private:
  explicit WeightScheme(Eigen::MatrixXd w) : weights_(std::move(w)) {}
  Eigen::MatrixXd weights_;
};

/// Reads a weight CSV laid out like a panel file (date + country columns).
WeightScheme load_weights(const std::filesystem::path& path, const PanelData& panel);

/// Weighted cross-sectional mean over `members`, weights renormalized over the
/// members observed at each date.
Eigen::VectorXd aggregate_region(const PanelData& panel, std::span<const std::string> members,
                                 const WeightScheme& weights);

struct SeriesStats {
  std::string country;
  Eigen::Index count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double sd = 0.0;  // sample (n - 1) denominator; NaN for a single observation
};

std::vector<SeriesStats> describe(const PanelData& panel);
void write_stats_csv(std::span<const SeriesStats> stats, std::string_view variable, std::ostream& out);

struct ChowLinResult {
  Eigen::VectorXd monthly;
  double rho = 0.0;
  Eigen::Vector2d beta = Eigen::Vector2d::Zero();  // constant, indicator
  double log_likelihood = 0.0;
};

/// Chow-Lin temporal disaggregation of annual averages against a monthly
/// indicator. The regression has a constant and the indicator, residuals
/// follow an AR(1) whose coefficient maximizes the GLS profile likelihood on
/// the grid -0.99, -0.98, ..., 0.99. Months beyond the last full year are
/// extrapolated with the fitted residual process.
ChowLinResult chow_lin_disaggregate(const Eigen::VectorXd& annual, const Eigen::VectorXd& indicator);

/// Chow-Lin GLS solution for a fixed AR(1) coefficient.
ChowLinResult chow_lin_fixed_rho(const Eigen::VectorXd& annual, const Eigen::VectorXd& indicator, double rho);

}  // namespace fincon
