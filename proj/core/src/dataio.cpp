#include "fincon/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "fincon/csv.hpp"
#include "fincon/error.hpp"

namespace fincon {

namespace {

int canonical_rank(std::string_view code) {
  for (std::size_t k = 0; k < kCanonicalCountries.size(); ++k) {
    if (kCanonicalCountries[k] == code) return static_cast<int>(k);
  }
  return -1;
}

std::string where(const PanelData& panel, Eigen::Index row, Eigen::Index col) {
  return "row " + std::to_string(row + 1) + " (" + panel.dates[row].to_string() + "), column " +
         panel.countries[col];
}

}  // namespace

bool is_known_country(std::string_view code) { return canonical_rank(code) >= 0; }

bool is_known_market(std::string_view label) {
  return std::find(kMarkets.begin(), kMarkets.end(), label) != kMarkets.end();
}

int PanelData::country_index(std::string_view code) const {
  for (std::size_t j = 0; j < countries.size(); ++j) {
    if (countries[j] == code) return static_cast<int>(j);
  }
  return -1;
}

std::ptrdiff_t PanelData::date_index(YearMonth ym) const {
  if (dates.empty()) return -1;
  const int offset = ym - dates.front();
  if (offset < 0 || offset >= static_cast<int>(dates.size())) return -1;
  return offset;
}

PanelData PanelData::balanced() const {
  Eigen::Index start = 0;
  for (auto fv : first_valid) start = std::max(start, fv);
  PanelData out;
  out.dates.assign(dates.begin() + start, dates.end());
  out.countries = countries;
  out.variable = variable;
  out.values = values.bottomRows(values.rows() - start);
  out.first_valid.assign(countries.size(), 0);
  return out;
}

PanelData PanelData::through(YearMonth last) const {
  Eigen::Index rows = 0;
  while (rows < periods() && dates[rows] <= last) ++rows;
  PanelData out;
  out.dates.assign(dates.begin(), dates.begin() + rows);
  out.countries = countries;
  out.variable = variable;
  out.values = values.topRows(rows);
  out.first_valid.resize(countries.size());
  for (std::size_t j = 0; j < countries.size(); ++j) {
    out.first_valid[j] = std::min<Eigen::Index>(first_valid[j], rows);
  }
  return out;
}

void validate_panel(const PanelData& panel, Eigen::Index min_periods) {
  const auto t_len = panel.periods();
  const auto n = panel.size();
  if (static_cast<Eigen::Index>(panel.dates.size()) != t_len ||
      static_cast<Eigen::Index>(panel.countries.size()) != n) {
    throw ValidationError("panel dimensions do not match its date/country labels");
  }
  if (n < 2) throw ValidationError("panel needs at least two countries, found " + std::to_string(n));
  for (Eigen::Index t = 1; t < t_len; ++t) {
    if (panel.dates[t] <= panel.dates[t - 1]) {
      throw ValidationError("non-monotone dates at row " + std::to_string(t + 1) + " (" +
                            panel.dates[t].to_string() + ")");
    }
    if (panel.dates[t] - panel.dates[t - 1] != 1) {
      throw ValidationError("gap in monthly dates between " + panel.dates[t - 1].to_string() + " and " +
                            panel.dates[t].to_string());
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index first = 0;
    while (first < t_len && std::isnan(panel.values(first, j))) ++first;
    if (first == t_len) {
      throw ValidationError("column " + panel.countries[j] + " has no observations");
    }
    for (Eigen::Index t = first; t < t_len; ++t) {
      const double v = panel.values(t, j);
      if (std::isnan(v)) throw ValidationError("interior missing value at " + where(panel, t, j));
      if (!std::isfinite(v)) throw ValidationError("non-finite value at " + where(panel, t, j));
    }
    if (static_cast<Eigen::Index>(panel.first_valid.size()) == n && panel.first_valid[j] != first) {
      throw ValidationError("leading-missingness record inconsistent for column " + panel.countries[j]);
    }
  }
  Eigen::Index start = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index first = 0;
    while (std::isnan(panel.values(first, j))) ++first;
    start = std::max(start, first);
  }
  if (t_len - start < min_periods) {
    throw ValidationError("T too small: " + std::to_string(t_len - start) +
                          " balanced observations, need at least " + std::to_string(min_periods));
  }
}

PanelData make_panel(std::vector<YearMonth> dates, std::vector<std::string> countries, std::string variable,
                     Eigen::MatrixXd values, Eigen::Index min_periods) {
  if (values.cols() != static_cast<Eigen::Index>(countries.size()) ||
      values.rows() != static_cast<Eigen::Index>(dates.size())) {
    throw ValidationError("panel values are " + std::to_string(values.rows()) + "x" +
                          std::to_string(values.cols()) + " but labels describe " +
                          std::to_string(dates.size()) + "x" + std::to_string(countries.size()));
  }
  for (std::size_t j = 0; j < countries.size(); ++j) {
    if (!is_known_country(countries[j])) {
      throw ValidationError("unknown country code '" + countries[j] + "'");
    }
    for (std::size_t k = 0; k < j; ++k) {
      if (countries[k] == countries[j]) throw ValidationError("duplicate country column " + countries[j]);
    }
  }
  std::vector<std::size_t> order(countries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return canonical_rank(countries[a]) < canonical_rank(countries[b]);
  });

  PanelData panel;
  panel.dates = std::move(dates);
  panel.variable = std::move(variable);
  panel.values.resize(values.rows(), values.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    panel.countries.push_back(countries[order[j]]);
    panel.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(order[j]));
  }
  validate_panel(panel, min_periods);
  panel.first_valid.resize(panel.countries.size());
  for (Eigen::Index j = 0; j < panel.size(); ++j) {
    Eigen::Index first = 0;
    while (std::isnan(panel.values(first, j))) ++first;
    panel.first_valid[j] = first;
  }
  return panel;
}

PanelData parse_panel(std::istream& in, std::string_view variable, Eigen::Index min_periods) {
  const CsvTable table = read_csv(in);
  if (table.header.empty() || table.header.front() != "date") {
    throw ValidationError("first column must be 'date'");
  }
  std::vector<std::string> countries(table.header.begin() + 1, table.header.end());
  std::vector<YearMonth> dates;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(table.rows.size()),
                         static_cast<Eigen::Index>(countries.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      dates.push_back(YearMonth::parse(row[0]));
    } catch (const ValidationError&) {
      throw ValidationError("malformed date '" + row[0] + "' on line " + std::to_string(table.lines[r]));
    }
    for (std::size_t j = 0; j < countries.size(); ++j) {
      try {
        values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = parse_number(row[j + 1]);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + " on line " + std::to_string(table.lines[r]) +
                              ", column " + countries[j]);
      }
    }
  }
  return make_panel(std::move(dates), std::move(countries), std::string(variable), std::move(values),
                    min_periods);
}

PanelData load_panel(const std::filesystem::path& path, std::string_view variable, Eigen::Index min_periods) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel file '" + path.string() + "'");
  try {
    return parse_panel(in, variable, min_periods);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_panel_csv(const PanelData& panel, std::ostream& out) {
  out << "date";
  for (const auto& c : panel.countries) out << ',' << c;
  out << '\n';
  for (Eigen::Index t = 0; t < panel.periods(); ++t) {
    out << panel.dates[t].to_string();
    for (Eigen::Index j = 0; j < panel.size(); ++j) out << ',' << format_number(panel.values(t, j));
    out << '\n';
  }
}

WeightScheme WeightScheme::create(Eigen::MatrixXd weights, const PanelData& panel, double tolerance) {
  if (weights.rows() != panel.periods() || weights.cols() != panel.size()) {
    throw ValidationError("weight matrix must be " + std::to_string(panel.periods()) + "x" +
                          std::to_string(panel.size()));
  }
  for (Eigen::Index t = 0; t < weights.rows(); ++t) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      const double w = weights(t, j);
      if (std::isnan(panel.values(t, j))) continue;
      if (!std::isfinite(w) || w < 0.0) {
        throw ValidationError("weights must be nonnegative and finite (" + panel.dates[t].to_string() +
                              ", " + panel.countries[j] + ")");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > tolerance) {
      throw ValidationError("weights on " + panel.dates[t].to_string() + " sum to " + format_number(total, 10) +
                            " over observed countries, expected 1");
    }
  }
  return WeightScheme(std::move(weights));
}

WeightScheme load_weights(const std::filesystem::path& path, const PanelData& panel) {
  const CsvTable table = read_csv_file(path);
  if (table.header.empty() || table.header.front() != "date") {
    throw ValidationError(path.string() + ": first column must be 'date'");
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(panel.periods(), panel.size(), std::nan(""));
  std::vector<bool> seen(static_cast<std::size_t>(panel.periods()), false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const YearMonth ym = YearMonth::parse(table.rows[r][0]);
    const auto t = panel.date_index(ym);
    if (t < 0) continue;
    seen[static_cast<std::size_t>(t)] = true;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
      const int j = panel.country_index(table.header[c]);
      if (j < 0) continue;
      w(t, j) = parse_number(table.rows[r][c]);
    }
  }
  for (std::size_t t = 0; t < seen.size(); ++t) {
    if (!seen[t]) {
      throw ValidationError(path.string() + ": no weights for " + panel.dates[t].to_string());
    }
  }
  for (Eigen::Index t = 0; t < w.rows(); ++t) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (std::isnan(w(t, j))) {
        if (!std::isnan(panel.values(t, j))) {
          throw ValidationError(path.string() + ": missing weight for " + panel.countries[j] + " on " +
                                panel.dates[t].to_string());
        }
        w(t, j) = 0.0;
      }
    }
  }
  return WeightScheme::create(std::move(w), panel);
}

Eigen::VectorXd aggregate_region(const PanelData& panel, std::span<const std::string> members,
                                 const WeightScheme& weights) {
  if (members.empty()) throw ValidationError("aggregate_region: empty member set");
  std::vector<int> cols;
  for (const auto& m : members) {
    const int j = panel.country_index(m);
    if (j < 0) throw ValidationError("aggregate_region: country " + m + " not in panel");
    cols.push_back(j);
  }
  const auto& w = weights.weights();
  if (w.rows() != panel.periods() || w.cols() != panel.size()) {
    throw ValidationError("aggregate_region: weights not aligned with the panel");
  }
  Eigen::VectorXd out(panel.periods());
  for (Eigen::Index t = 0; t < panel.periods(); ++t) {
    double num = 0.0;
    double den = 0.0;
    bool any = false;
    for (int j : cols) {
      const double y = panel.values(t, j);
      if (std::isnan(y)) continue;
      any = true;
      num += w(t, j) * y;
      den += w(t, j);
    }
    if (!any) {
      throw ValidationError("aggregate_region: all members missing on " + panel.dates[t].to_string());
    }
    if (!(den > 0.0)) {
      throw ValidationError("aggregate_region: observed members carry zero weight on " +
                            panel.dates[t].to_string());
    }
    out[t] = num / den;
  }
  return out;
}

std::vector<SeriesStats> describe(const PanelData& panel) {
  std::vector<SeriesStats> stats;
  for (Eigen::Index j = 0; j < panel.size(); ++j) {
    SeriesStats s;
    s.country = panel.countries[j];
    double sum = 0.0;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < panel.periods(); ++t) {
      const double y = panel.values(t, j);
      if (std::isnan(y)) continue;
      ++s.count;
      sum += y;
      s.min = std::min(s.min, y);
      s.max = std::max(s.max, y);
    }
    s.mean = sum / static_cast<double>(s.count);
    double ss = 0.0;
    for (Eigen::Index t = 0; t < panel.periods(); ++t) {
      const double y = panel.values(t, j);
      if (!std::isnan(y)) ss += (y - s.mean) * (y - s.mean);
    }
    s.sd = s.count > 1 ? std::sqrt(ss / static_cast<double>(s.count - 1)) : std::nan("");
    stats.push_back(s);
  }
  return stats;
}

void write_stats_csv(std::span<const SeriesStats> stats, std::string_view variable, std::ostream& out) {
  out << "variable,country,count,mean,min,max,sd\n";
  for (const auto& s : stats) {
    out << variable << ',' << s.country << ',' << s.count << ',' << format_number(s.mean) << ','
        << format_number(s.min) << ',' << format_number(s.max) << ',' << format_number(s.sd) << '\n';
  }
}

}  // namespace fincon
