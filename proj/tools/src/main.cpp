#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "fincon/error.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalid = 2, kNumerical = 3, kIo = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool fast = false;
  std::optional<unsigned> jobs;
};

int report(const std::string& command, const char* type, const std::string& message, int code) {
  nlohmann::ordered_json err;
  err["status"] = "error";
  err["command"] = command;
  err["type"] = type;
  err["message"] = message;
  err["exit_code"] = code;
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fincon::cli;
  CLI::App app{"Panel VAR spillover pipeline"};
  app.require_subcommand(1);
  Options opts;

  struct Command {
    const char* name;
    const char* help;
    std::vector<std::filesystem::path> (*run)(const RunConfig&);
  };
  const Command commands[] = {
      {"ingest", "Validate panels, write summary statistics and temporal disaggregations", cmd_ingest},
      {"spillover", "Expanding-window PVAR estimation and spillover indices", cmd_spillover},
      {"blockmodel", "Blockmodel the period-average GFEVD networks", cmd_blockmodel},
      {"taylor", "Spillover-augmented Taylor rule regressions", cmd_taylor},
      {"forecast-eval", "Relative RMSE of one-step forecasts", cmd_forecast_eval},
      {"all", "Run every stage in order", cmd_all},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opts.config, "Run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Override the configured seed");
    sub->add_flag("--fast", opts.fast, "Reduced MCMC budget per window");
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    RunConfig config = load_run_config(opts.config);
    if (opts.seed) config.seed = *opts.seed;
    if (opts.fast) config.fast = true;
    if (opts.jobs) config.jobs = *opts.jobs;
    config.validate();
    for (const auto& c : commands) {
      if (name != c.name) continue;
      for (const auto& path : c.run(config)) std::cout << path.string() << '\n';
    }
  } catch (const fincon::ValidationError& e) {
    return report(name, "validation", e.what(), kInvalid);
  } catch (const fincon::NumericalError& e) {
    return report(name, "numerical", e.what(), kNumerical);
  } catch (const fincon::Error& e) {
    return report(name, "io", e.what(), kIo);
  } catch (const std::exception& e) {
    return report(name, "internal", e.what(), kFailure);
  }
  return kOk;
}
