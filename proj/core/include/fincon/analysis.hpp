#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fincon/date.hpp"

namespace fincon {

struct RegressionResult {
  std::vector<std::string> names;
  Eigen::VectorXd coef, se, t, p;
  std::vector<std::string> stars;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double sigma = 0.0;  // residual standard error
  double f_stat = 0.0;
  double f_pvalue = 1.0;
  Eigen::Index nobs = 0;
  Eigen::Index df_resid = 0;
  Eigen::VectorXd fitted, residuals;
};

/// "***" below 1%, "**" below 5%, "*" below 10%.
std::string significance_stars(double pvalue);

/// Least squares with classical standard errors. Rows with any NaN are
/// dropped listwise. The F statistic tests all slopes against the
/// intercept-only model when a constant column is present (all slopes against
/// zero otherwise). Throws ValidationError naming collinear columns.
RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::vector<std::string> names);

/// Monthly table keyed by date with named numeric columns.
struct MacroTable {
  std::vector<YearMonth> dates;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;

  int column(std::string_view name) const;
  /// Appends or replaces a column, aligning `series` by date (NaN elsewhere).
  void set_column(const std::string& name, std::span<const YearMonth> series_dates, const Eigen::VectorXd& series);
};

MacroTable read_macro_table(std::istream& in);
MacroTable read_macro_table(const std::filesystem::path& path);

struct TaylorSpec {
  std::string name;
  std::string dependent = "euribor3m";
  std::vector<std::string> regressors;
  bool smoothing = false;  // prepend the first lag of the dependent variable
};

inline const std::vector<std::string> kLoggedColumns = {"pcom"};

/// Regressors enter in the given order followed by the constant. Columns in
/// kLoggedColumns enter in logs. The lag is taken on the full table before
/// restricting to [start, end].
RegressionResult taylor_rule(const MacroTable& table, const TaylorSpec& spec, YearMonth start, YearMonth end);

/// Columns (1)-(6) of the baseline table; with `smoothing` the interest-rate
/// smoothing variants.
std::vector<TaylorSpec> standard_taylor_specs(bool smoothing);

void write_regression_csv(std::span<const RegressionResult> results, std::span<const std::string> labels,
                          std::ostream& out);
/// Side-by-side text table: estimate with stars, standard error in parentheses.
void write_regression_table(std::span<const RegressionResult> results, std::span<const std::string> labels,
                            std::ostream& out);

/// Point forecasts of one model, one column per country.
struct ForecastSet {
  std::string model;
  std::vector<YearMonth> dates;
  std::vector<std::string> countries;
  Eigen::MatrixXd values;
};

struct RmseTable {
  std::vector<std::string> rows;  // countries, then core / periphery / total when available
  std::vector<std::string> models;
  std::string benchmark;
  Eigen::MatrixXd rmse;      // rows x models
  Eigen::MatrixXd relative;  // rmse / benchmark rmse
  std::vector<int> best;     // per row, model with the smallest relative RMSE
};

/// Relative RMSE over the common hold-out; group rows average country RMSEs
/// before dividing by the benchmark's group average.
RmseTable rmse_eval(std::span<const ForecastSet> forecasts, const ForecastSet& actuals, const std::string& benchmark);
void write_rmse_csv(const RmseTable& table, std::ostream& out);

}  // namespace fincon
