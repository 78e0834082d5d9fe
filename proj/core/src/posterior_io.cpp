#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fincon/csv.hpp"
#include "fincon/error.hpp"
#include "fincon/pvar.hpp"

namespace fincon {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> term_names(const PosteriorDraws& draws) {
  std::vector<std::string> names{"const"};
  for (int p = 1; p <= draws.lags; ++p) {
    for (const auto& label : draws.series_labels) names.push_back("L" + std::to_string(p) + "." + label);
  }
  return names;
}

}  // namespace

void write_posterior(const PosteriorDraws& draws, const std::filesystem::path& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  const auto coef_path = dir / (prefix + "_coefficients.csv");
  const auto vol_path = dir / (prefix + "_volatility.csv");
  const auto terms = term_names(draws);

  {
    auto out = open_output(coef_path);
    out << "draw,equation,term,value\n";
    for (std::size_t s = 0; s < draws.size(); ++s) {
      const auto& sys = draws.system[s];
      for (Eigen::Index eq = 0; eq < sys.rows(); ++eq) {
        for (Eigen::Index c = 0; c < sys.cols(); ++c) {
          out << s << ',' << draws.series_labels[static_cast<std::size_t>(eq)] << ',' << terms[static_cast<std::size_t>(c)]
              << ',' << format_number(sys(eq, c)) << '\n';
        }
      }
    }
  }
  {
    auto out = open_output(vol_path);
    out << "date,series,mean_log_variance\n";
    const auto rows = draws.idio_logvar_mean.rows();
    for (Eigen::Index t = 0; t < rows; ++t) {
      const std::string date = t < static_cast<Eigen::Index>(draws.dates.size()) ? draws.dates[t].to_string()
                                                                                  : std::to_string(t + 1);
      for (Eigen::Index k = 0; k < draws.idio_logvar_mean.cols(); ++k) {
        out << date << ',' << draws.series_labels[static_cast<std::size_t>(k)] << ','
            << format_number(draws.idio_logvar_mean(t, k)) << '\n';
      }
      for (Eigen::Index j = 0; j < draws.factor_logvar_mean.cols(); ++j) {
        out << date << ",factor" << (j + 1) << ',' << format_number(draws.factor_logvar_mean(t, j)) << '\n';
      }
    }
  }

  const PvarConfig& c = draws.config;
  nlohmann::ordered_json meta;
  meta["coefficient_file"] = coef_path.filename().string();
  meta["volatility_file"] = vol_path.filename().string();
  meta["countries"] = draws.countries;
  meta["variables"] = draws.variables;
  meta["lags"] = draws.lags;
  meta["components"] = draws.components;
  meta["factors"] = c.factors;
  meta["retained_draws"] = draws.size();
  meta["series"] = draws.series_labels;
  meta["terms"] = terms;
  if (!draws.dates.empty()) {
    meta["sample"] = {{"first", draws.dates.front().to_string()}, {"last", draws.dates.back().to_string()}};
  }
  meta["config"] = {{"draws", c.draws}, {"burn_in", c.burn_in}, {"a0", c.a0}, {"a1", c.a1}, {"b0", c.b0},
                    {"b1", c.b1},       {"c0", c.c0},           {"d0", c.d0}, {"d1", c.d1}, {"theta", c.theta},
                    {"intensity_step", c.intensity_step}};
  meta["intensity_acceptance"] = draws.intensity_acceptance;
  auto out = open_output(dir / (prefix + ".json"));
  out << meta.dump(2) << '\n';
}

}  // namespace fincon
