#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "fincon/analysis.hpp"

namespace fincon::cli {

/// Each command writes under config.output_dir only and returns the files it wrote.
std::vector<std::filesystem::path> cmd_ingest(const RunConfig& config);
std::vector<std::filesystem::path> cmd_spillover(const RunConfig& config);
std::vector<std::filesystem::path> cmd_blockmodel(const RunConfig& config);
std::vector<std::filesystem::path> cmd_taylor(const RunConfig& config);
std::vector<std::filesystem::path> cmd_forecast_eval(const RunConfig& config);
std::vector<std::filesystem::path> cmd_all(const RunConfig& config);

/// Stream id block reserved for one market; windows and auxiliary fits add
/// small offsets to it.
std::uint64_t market_stream(const std::string& market);

/// Wide `date,<country>...` forecast file.
ForecastSet read_forecast_csv(const std::filesystem::path& path, const std::string& model);

}  // namespace fincon::cli
