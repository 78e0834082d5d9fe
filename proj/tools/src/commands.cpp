#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>

#include "fincon/blockmodel.hpp"
#include "fincon/csv.hpp"
#include "fincon/dataio.hpp"
#include "fincon/error.hpp"
#include "fincon/rng.hpp"
#include "fincon/spillover.hpp"
#include "fincon/svg.hpp"

namespace fincon::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMinTaylorRows = 30;
constexpr std::uint64_t kPosteriorStream = 0xFFFFF;
constexpr std::uint64_t kBlockmodelStream = 0xFFF00;

using Outputs = std::vector<fs::path>;

fs::path write_file(const RunConfig& config, const std::string& name, const std::function<void(std::ostream&)>& fn,
                    Outputs& outputs) {
  const fs::path path = config.output_dir / name;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  fn(out);
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
  outputs.push_back(path);
  return path;
}

fs::path require_artifact(const RunConfig& config, const std::string& name, const std::string& command) {
  const fs::path path = config.output_dir / name;
  if (!fs::is_regular_file(path)) {
    throw ValidationError("missing " + path.string() + "; run `fincon " + command + "` first");
  }
  return path;
}

PanelData load_market(const MarketConfig& m) { return load_panel(m.path, m.name); }

std::vector<std::string> to_strings(std::span<const std::string_view> codes) {
  return {codes.begin(), codes.end()};
}

std::vector<std::string> present(const PanelData& panel, const std::vector<std::string>& codes) {
  std::vector<std::string> out;
  for (const auto& c : codes) {
    if (panel.country_index(c) >= 0) out.push_back(c);
  }
  return out;
}

// year,value and date,value series for Chow-Lin.
std::pair<std::vector<int>, Eigen::VectorXd> read_annual(const fs::path& path) {
  const CsvTable t = read_csv_file(path);
  const int cy = t.column("year");
  const int cv = t.column("value");
  if (cy < 0 || cv < 0) throw ValidationError(path.string() + ": expected columns year,value");
  std::vector<int> years;
  Eigen::VectorXd values(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& y = t.rows[r][static_cast<std::size_t>(cy)];
    try {
      years.push_back(std::stoi(y));
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ": invalid year '" + y + "' at line " + std::to_string(t.lines[r]));
    }
    if (r > 0 && years[r] != years[r - 1] + 1) {
      throw ValidationError(path.string() + ": years must be consecutive at line " + std::to_string(t.lines[r]));
    }
    values(static_cast<Eigen::Index>(r)) = parse_number(t.rows[r][static_cast<std::size_t>(cv)]);
  }
  return {years, values};
}

std::pair<std::vector<YearMonth>, Eigen::VectorXd> read_monthly(const fs::path& path) {
  const CsvTable t = read_csv_file(path);
  const int cd = t.column("date");
  const int cv = t.column("value");
  if (cd < 0 || cv < 0) throw ValidationError(path.string() + ": expected columns date,value");
  std::vector<YearMonth> dates;
  Eigen::VectorXd values(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    dates.push_back(YearMonth::parse(t.rows[r][static_cast<std::size_t>(cd)]));
    if (r > 0 && dates[r] - dates[r - 1] != 1) {
      throw ValidationError(path.string() + ": dates must be consecutive months at line " +
                            std::to_string(t.lines[r]));
    }
    values(static_cast<Eigen::Index>(r)) = parse_number(t.rows[r][static_cast<std::size_t>(cv)]);
  }
  return {dates, values};
}

struct DisaggregatedSeries {
  std::vector<YearMonth> dates;
  ChowLinResult fit;
};

DisaggregatedSeries run_chow_lin(const ChowLinConfig& c) {
  const auto [years, annual] = read_annual(c.annual);
  const auto [dates, indicator] = read_monthly(c.indicator);
  if (years.empty() || dates.empty()) throw ValidationError("chow_lin '" + c.name + "': empty input");
  const YearMonth first{years.front(), 1};
  const auto offset = std::find(dates.begin(), dates.end(), first);
  if (offset == dates.end()) {
    throw ValidationError("chow_lin '" + c.name + "': indicator does not cover " + first.to_string());
  }
  const auto start = static_cast<Eigen::Index>(offset - dates.begin());
  const Eigen::Index months = 12 * annual.size();
  if (start + months > indicator.size()) {
    throw ValidationError("chow_lin '" + c.name + "': indicator ends before " + std::to_string(years.back()) + "-12");
  }
  DisaggregatedSeries out;
  out.dates.assign(offset, offset + months);
  try {
    out.fit = chow_lin_disaggregate(annual, indicator.segment(start, months));
  } catch (const Error& e) {
    throw NumericalError("chow_lin '" + c.name + "': " + e.what());
  }
  return out;
}

void write_date_value(std::span<const YearMonth> dates, const Eigen::VectorXd& v, std::ostream& out) {
  out << "date,value\n";
  for (std::size_t t = 0; t < dates.size(); ++t) {
    out << dates[t].to_string() << ',' << format_number(v(static_cast<Eigen::Index>(t))) << '\n';
  }
}

void write_forecast_csv(std::span<const YearMonth> dates, std::span<const std::string> countries,
                        const Eigen::MatrixXd& values, std::ostream& out) {
  out << "date";
  for (const auto& c : countries) out << ',' << c;
  out << '\n';
  for (std::size_t t = 0; t < dates.size(); ++t) {
    out << dates[t].to_string();
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << format_number(values(static_cast<Eigen::Index>(t), j));
    out << '\n';
  }
}

// Median total-index series from a spillover CSV.
std::pair<std::vector<YearMonth>, Eigen::VectorXd> read_total_median(const fs::path& path) {
  const CsvTable t = read_csv_file(path);
  const int cd = t.column("date");
  const int cs = t.column("statistic");
  const int cc = t.column("country");
  const int cv = t.column("value");
  if (cd < 0 || cs < 0 || cc < 0 || cv < 0) throw ValidationError(path.string() + ": not a spillover index file");
  std::vector<YearMonth> dates;
  std::vector<double> values;
  for (const auto& row : t.rows) {
    if (row[static_cast<std::size_t>(cs)] != "median" || row[static_cast<std::size_t>(cc)] != "TOTAL") continue;
    dates.push_back(YearMonth::parse(row[static_cast<std::size_t>(cd)]));
    values.push_back(parse_number(row[static_cast<std::size_t>(cv)]));
  }
  return {dates, Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))};
}

// Keeps the months every set shares with the actuals.
void align_forecasts(std::vector<ForecastSet>& sets, const PanelData& actuals) {
  std::set<YearMonth> common(actuals.dates.begin(), actuals.dates.end());
  for (const auto& s : sets) {
    std::set<YearMonth> mine(s.dates.begin(), s.dates.end());
    std::set<YearMonth> keep;
    std::set_intersection(common.begin(), common.end(), mine.begin(), mine.end(), std::inserter(keep, keep.end()));
    common = std::move(keep);
  }
  for (auto& s : sets) {
    std::vector<YearMonth> dates;
    std::vector<Eigen::Index> rows;
    for (std::size_t t = 0; t < s.dates.size(); ++t) {
      if (common.count(s.dates[t])) {
        dates.push_back(s.dates[t]);
        rows.push_back(static_cast<Eigen::Index>(t));
      }
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), s.values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) values.row(static_cast<Eigen::Index>(r)) = s.values.row(rows[r]);
    s.dates = std::move(dates);
    s.values = std::move(values);
  }
}

}  // namespace

std::uint64_t market_stream(const std::string& market) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : market) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h & ~std::uint64_t{0xFFFFF};
}

ForecastSet read_forecast_csv(const fs::path& path, const std::string& model) {
  const CsvTable t = read_csv_file(path);
  if (t.header.empty() || t.header.front() != "date") throw ValidationError(path.string() + ": first column must be date");
  ForecastSet f;
  f.model = model;
  f.countries.assign(t.header.begin() + 1, t.header.end());
  f.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(f.countries.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size()) {
      throw ValidationError(path.string() + ": wrong number of cells at line " + std::to_string(t.lines[r]));
    }
    f.dates.push_back(YearMonth::parse(row[0]));
    for (std::size_t j = 1; j < row.size(); ++j) {
      f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j - 1)) = parse_number(row[j]);
    }
  }
  return f;
}

Outputs cmd_ingest(const RunConfig& config) {
  Outputs outputs;
  for (const auto& m : config.markets) {
    const PanelData panel = load_market(m);
    write_file(config, "panel_" + m.name + ".csv", [&](std::ostream& o) { write_panel_csv(panel, o); }, outputs);
    const auto stats = describe(panel);
    write_file(config, "stats_" + m.name + ".csv", [&](std::ostream& o) { write_stats_csv(stats, m.name, o); },
               outputs);
    if (m.weights) {
      const WeightScheme w = load_weights(*m.weights, panel);
      std::vector<std::pair<std::string, Eigen::VectorXd>> regions;
      for (const auto& [label, codes] : {std::pair{"core", to_strings(kCoreCountries)},
                                         std::pair{"periphery", to_strings(kPeripheryCountries)}}) {
        const auto members = present(panel, codes);
        if (!members.empty()) regions.emplace_back(label, aggregate_region(panel, members, w));
      }
      regions.emplace_back("total", aggregate_region(panel, panel.countries, w));
      write_file(config, "aggregates_" + m.name + ".csv", [&](std::ostream& o) {
        o << "date";
        for (const auto& r : regions) o << ',' << r.first;
        o << '\n';
        for (Eigen::Index t = 0; t < panel.periods(); ++t) {
          o << panel.dates[static_cast<std::size_t>(t)].to_string();
          for (const auto& r : regions) o << ',' << format_number(r.second(t));
          o << '\n';
        }
      }, outputs);
    }
  }
  for (const auto& c : config.chow_lin) {
    const DisaggregatedSeries s = run_chow_lin(c);
    write_file(config, "chowlin_" + c.name + ".csv", [&](std::ostream& o) { write_date_value(s.dates, s.fit.monthly, o); },
               outputs);
  }
  return outputs;
}

Outputs cmd_spillover(const RunConfig& config) {
  Outputs outputs;
  const PvarConfig pvar = config.effective_pvar();
  for (const auto& m : config.markets) {
    const PanelData panel = load_market(m);
    ExpandingWindowOptions opts;
    opts.holdout_start = m.holdout_start;
    opts.holdout_end = m.holdout_end;
    opts.horizons = config.horizons;
    opts.min_train = config.min_train;
    opts.jobs = config.jobs;
    opts.forecasts = true;
    opts.stream_base = market_stream(m.name);
    opts.warn = [&](const std::string& msg) { std::cerr << "warning: market " << m.name << ": " << msg << '\n'; };
    ExpandingWindowResult result;
    try {
      result = expanding_window_run(panel, pvar, opts, config.seed);
    } catch (const NumericalError& e) {
      throw NumericalError("market " + m.name + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("market " + m.name + ": " + e.what());
    }
    if (!result.series.empty() && result.series.front().dates.empty()) {
      throw NumericalError("market " + m.name + ": every expanding window failed");
    }
    for (const auto& s : result.series) {
      const std::string stem = "spillover_" + m.name + "_h" + std::to_string(s.horizon);
      write_file(config, stem + ".csv", [&](std::ostream& o) { write_spillover_csv(s, o); }, outputs);
      BandPlot plot;
      plot.title = "Total spillover index, " + m.name + ", H=" + std::to_string(s.horizon);
      plot.y_label = "percent";
      plot.dates = s.dates;
      for (const auto& b : s.total) {
        plot.median.push_back(b.median);
        plot.lower.push_back(b.q16);
        plot.upper.push_back(b.q84);
      }
      plot.spans = default_crisis_spans();
      write_file(config, stem + ".svg", [&](std::ostream& o) { write_band_plot(plot, o); }, outputs);
      write_file(config, "theta_" + m.name + "_h" + std::to_string(s.horizon) + ".csv",
                 [&](std::ostream& o) { write_theta_csv(s, o); }, outputs);
    }
    write_file(config, "forecast_" + m.name + ".csv", [&](std::ostream& o) {
      write_forecast_csv(result.forecast_dates, panel.countries, result.forecasts, o);
    }, outputs);
    write_file(config, "failures_" + m.name + ".csv", [&](std::ostream& o) {
      o << "date,message\n";
      for (const auto& f : result.failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), '"', '\'');
        o << f.date.to_string() << ",\"" << msg << "\"\n";
      }
    }, outputs);
    if (config.dump_posterior) {
      RngHandle rng(config.seed, market_stream(m.name) + kPosteriorStream);
      const PosteriorDraws draws = run_mcmc(panel, pvar, rng);
      const fs::path dir = config.output_dir / "posterior";
      write_posterior(draws, dir, m.name);
      for (const char* suffix : {"_coefficients.csv", "_volatility.csv", ".json"}) {
        outputs.push_back(dir / (m.name + suffix));
      }
    }
  }
  return outputs;
}

Outputs cmd_blockmodel(const RunConfig& config) {
  Outputs outputs;
  const std::string h = std::to_string(config.block_horizon);
  for (const auto& m : config.markets) {
    if (m.periods.empty()) continue;
    const fs::path path = require_artifact(config, "theta_" + m.name + "_h" + h + ".csv", "spillover");
    std::ifstream in(path);
    const ThetaSeries theta = read_theta_csv(in, config.block_horizon);
    for (std::size_t k = 0; k < m.periods.size(); ++k) {
      const DatePeriod& period = config.period(m.periods[k]);
      ValuedNetwork net;
      try {
        net = average_gfevd(theta.dates, theta.theta, theta.countries, period);
      } catch (const Error& e) {
        throw ValidationError("market " + m.name + ", period " + period.name + ": " + e.what());
      }
      const int clusters = std::min<int>(config.clusters, static_cast<int>(net.size()));
      RngHandle rng(config.seed, market_stream(m.name) + kBlockmodelStream + k);
      const BlockPartition part = fit_blockmodel(net, clusters, config.restarts, rng, config.jobs);
      const auto roles = classify_roles(part);
      const std::string stem = "partition_" + m.name + "_" + period.name;
      write_file(config, stem + ".csv", [&](std::ostream& o) { write_partition_csv(part, net, roles, o); }, outputs);

      std::vector<int> order(static_cast<std::size_t>(net.size()));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return part.assignment[static_cast<std::size_t>(a)] < part.assignment[static_cast<std::size_t>(b)];
      });
      std::vector<int> boundaries;
      for (std::size_t i = 1; i < order.size(); ++i) {
        if (part.assignment[static_cast<std::size_t>(order[i])] != part.assignment[static_cast<std::size_t>(order[i - 1])]) {
          boundaries.push_back(static_cast<int>(i));
        }
      }
      const std::string title = "Average GFEVD, " + m.name + ", " + period.name + " (" + period.start.to_string() +
                                " to " + period.end.to_string() + ")";
      write_file(config, stem + ".svg", [&](std::ostream& o) {
        write_heatmap(title, net.weights, net.labels, order, boundaries, o);
      }, outputs);
    }
  }
  return outputs;
}

Outputs cmd_taylor(const RunConfig& config) {
  if (!config.taylor) throw ValidationError("config has no [taylor] table");
  const TaylorConfig& tc = *config.taylor;
  MacroTable table = read_macro_table(tc.macro);
  for (const auto& name : tc.merge) {
    const fs::path path = require_artifact(config, "chowlin_" + name + ".csv", "ingest");
    const auto [dates, values] = read_monthly(path);
    table.set_column(name, dates, values);
  }
  for (const char* market : {"gb", "bl", "bs"}) {
    const std::string file = "spillover_" + std::string(market) + "_h1.csv";
    const fs::path path = config.output_dir / file;
    if (!fs::is_regular_file(path)) {
      throw ValidationError("missing spillover column S_" + std::string(market) + " (" + path.string() +
                            "); run `fincon spillover` with market '" + market + "' and horizon 1 first");
    }
    const auto [dates, values] = read_total_median(path);
    table.set_column("S_" + std::string(market), dates, values);
  }
  std::size_t joined = 0;
  const int cols[] = {table.column("S_gb"), table.column("S_bl"), table.column("S_bs")};
  for (std::size_t t = 0; t < table.dates.size(); ++t) {
    if (table.dates[t] < tc.start || tc.end < table.dates[t]) continue;
    const bool ok = std::all_of(std::begin(cols), std::end(cols), [&](int c) {
      return std::isfinite(table.values(static_cast<Eigen::Index>(t), c));
    });
    joined += ok ? 1 : 0;
  }
  if (joined < kMinTaylorRows) {
    throw ValidationError("joining spillover indices onto the macro table leaves " + std::to_string(joined) +
                          " months in " + tc.start.to_string() + " to " + tc.end.to_string() + " (need at least " +
                          std::to_string(kMinTaylorRows) + ")");
  }

  Outputs outputs;
  for (bool smoothing : {false, true}) {
    std::vector<RegressionResult> results;
    std::vector<std::string> labels;
    const auto specs = standard_taylor_specs(smoothing);
    for (const auto& spec : specs) {
      try {
        results.push_back(taylor_rule(table, spec, tc.start, tc.end));
      } catch (const Error& e) {
        throw ValidationError("taylor specification " + spec.name + ": " + e.what());
      }
      labels.push_back(spec.name);
    }
    const std::string stem = smoothing ? "taylor_smoothing" : "taylor";
    write_file(config, stem + ".csv", [&](std::ostream& o) { write_regression_csv(results, labels, o); }, outputs);
    write_file(config, stem + ".txt", [&](std::ostream& o) { write_regression_table(results, labels, o); }, outputs);
  }
  return outputs;
}

Outputs cmd_forecast_eval(const RunConfig& config) {
  Outputs outputs;
  for (const auto& m : config.markets) {
    const PanelData panel = load_market(m);
    std::vector<ForecastSet> sets;
    sets.push_back(read_forecast_csv(require_artifact(config, "forecast_" + m.name + ".csv", "spillover"), "pvar"));
    for (const auto& [model, files] : config.forecast_eval.models) {
      const auto it = files.find(m.name);
      if (it != files.end()) sets.push_back(read_forecast_csv(it->second, model));
    }
    const bool has_benchmark = std::any_of(sets.begin(), sets.end(), [&](const ForecastSet& s) {
      return s.model == config.forecast_eval.benchmark;
    });
    if (!has_benchmark) {
      throw ValidationError("market " + m.name + ": benchmark model '" + config.forecast_eval.benchmark +
                            "' has no forecast file");
    }
    align_forecasts(sets, panel);
    ForecastSet actual{"actual", panel.dates, panel.countries, panel.values};
    const RmseTable table = rmse_eval(sets, actual, config.forecast_eval.benchmark);
    write_file(config, "rmse_" + m.name + ".csv", [&](std::ostream& o) { write_rmse_csv(table, o); }, outputs);
  }
  return outputs;
}

Outputs cmd_all(const RunConfig& config) {
  Outputs outputs;
  auto append = [&](Outputs more) { outputs.insert(outputs.end(), more.begin(), more.end()); };
  append(cmd_ingest(config));
  append(cmd_spillover(config));
  append(cmd_blockmodel(config));
  if (config.taylor) append(cmd_taylor(config));
  append(cmd_forecast_eval(config));
  return outputs;
}

}  // namespace fincon::cli
