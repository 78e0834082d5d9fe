#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fincon/date.hpp"
#include "fincon/pvar.hpp"

namespace fincon::cli {

struct MarketConfig {
  std::string name;
  std::filesystem::path path;
  YearMonth holdout_start;
  std::optional<YearMonth> holdout_end;
  std::vector<std::string> periods;  // names into RunConfig::periods
  std::optional<std::filesystem::path> weights;
};

struct ChowLinConfig {
  std::string name;
  std::filesystem::path annual;     // year,value
  std::filesystem::path indicator;  // date,value
};

struct TaylorConfig {
  std::filesystem::path macro;
  YearMonth start{2007, 1};
  YearMonth end{2022, 5};
  std::vector<std::string> merge;  // chow_lin outputs added as macro columns
};

struct ForecastEvalConfig {
  std::string benchmark = "pvar";
  // model -> market -> forecast file
  std::map<std::string, std::map<std::string, std::filesystem::path>> models;
};

struct RunConfig {
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
  bool fast = false;
  unsigned jobs = 1;
  std::vector<int> horizons{1, 12};
  Eigen::Index min_train = 60;
  PvarConfig pvar;
  int fast_draws = 3000;
  int fast_burn_in = 1000;
  bool dump_posterior = false;

  int clusters = 4;
  int restarts = 100;
  int block_horizon = 1;
  std::vector<DatePeriod> periods;

  std::vector<MarketConfig> markets;
  std::vector<ChowLinConfig> chow_lin;
  std::optional<TaylorConfig> taylor;
  ForecastEvalConfig forecast_eval;

  const DatePeriod& period(std::string_view name) const;
  /// PvarConfig with the fast budget applied when requested.
  PvarConfig effective_pvar() const;
  void validate() const;
};

/// Relative paths resolve against `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace fincon::cli
