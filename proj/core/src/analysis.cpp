#include "fincon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "fincon/csv.hpp"
#include "fincon/dataio.hpp"
#include "fincon/error.hpp"

namespace fincon {

namespace {

constexpr double kCollinearTol = 1e-10;
const std::string kConstant = "Constant";

bool is_constant_column(const Eigen::VectorXd& c) {
  return c.size() > 0 && c[0] != 0.0 && (c.array() == c[0]).all();
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string significance_stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

RegressionResult ols(const Eigen::VectorXd& y_all, const Eigen::MatrixXd& x_all, std::vector<std::string> names) {
  if (x_all.rows() != y_all.size()) throw ValidationError("ols: y and X have different row counts");
  if (static_cast<Eigen::Index>(names.size()) != x_all.cols()) throw ValidationError("ols: one name per column required");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < x_all.rows(); ++r) {
    const bool missing = std::isnan(y_all[r]) || x_all.row(r).hasNaN();
    if (missing) continue;
    if (!std::isfinite(y_all[r]) || !x_all.row(r).allFinite()) {
      throw ValidationError("ols: infinite value in row " + std::to_string(r + 1));
    }
    keep.push_back(r);
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  const auto k = x_all.cols();
  if (n == 0) throw ValidationError("ols: empty sample after listwise deletion");
  if (n <= k) {
    throw ValidationError("ols: " + std::to_string(n) + " observations for " + std::to_string(k) + " regressors");
  }
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index r = 0; r < n; ++r) {
    y[r] = y_all[keep[static_cast<std::size_t>(r)]];
    x.row(r) = x_all.row(keep[static_cast<std::size_t>(r)]);
  }

  // Sequential rank check: each column against the span of its predecessors.
  std::vector<std::string> offending;
  Eigen::MatrixXd basis(n, 0);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd r = x.col(j);
    const double norm = r.norm();
    for (int pass = 0; pass < 2; ++pass) r -= basis * (basis.transpose() * r);
    if (norm == 0.0 || r.norm() <= kCollinearTol * norm) {
      offending.push_back(names[static_cast<std::size_t>(j)]);
      continue;
    }
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = r / r.norm();
  }
  if (!offending.empty()) {
    std::string list;
    for (const auto& o : offending) list += (list.empty() ? "" : ", ") + o;
    throw ValidationError("ols: design is rank deficient; linearly dependent column(s): " + list);
  }

  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success) throw NumericalError("ols: normal equations are not positive definite");

  RegressionResult res;
  res.names = std::move(names);
  res.nobs = n;
  res.df_resid = n - k;
  res.coef = llt.solve(x.transpose() * y);
  res.fitted = x * res.coef;
  res.residuals = y - res.fitted;
  const double ssr = res.residuals.squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();
  bool has_const = false;
  for (Eigen::Index j = 0; j < k; ++j) has_const = has_const || is_constant_column(x.col(j));
  res.r2 = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
  res.adj_r2 = 1.0 - (1.0 - res.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);
  const double s2 = ssr / static_cast<double>(n - k);
  res.sigma = std::sqrt(s2);
  const Eigen::VectorXd diag_inv = llt.solve(Eigen::MatrixXd::Identity(k, k)).diagonal();
  res.se = (s2 * diag_inv.array()).sqrt();
  res.t.resize(k);
  res.p.resize(k);
  const boost::math::students_t tdist(static_cast<double>(n - k));
  for (Eigen::Index j = 0; j < k; ++j) {
    if (res.se[j] > 0.0) {
      res.t[j] = res.coef[j] / res.se[j];
      res.p[j] = 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(res.t[j])));
    } else {
      res.t[j] = res.coef[j] == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), res.coef[j]);
      res.p[j] = res.coef[j] == 0.0 ? 1.0 : 0.0;
    }
    res.stars.push_back(significance_stars(res.p[j]));
  }
  const Eigen::Index df1 = has_const ? k - 1 : k;
  const double restricted = has_const ? tss : y.squaredNorm();
  if (df1 == 0) {
    res.f_stat = std::nan("");
    res.f_pvalue = std::nan("");
  } else if (ssr == 0.0) {
    res.f_stat = std::numeric_limits<double>::infinity();
    res.f_pvalue = 0.0;
  } else {
    res.f_stat = ((restricted - ssr) / static_cast<double>(df1)) / s2;
    const boost::math::fisher_f fdist(static_cast<double>(df1), static_cast<double>(n - k));
    res.f_pvalue = boost::math::cdf(boost::math::complement(fdist, std::max(res.f_stat, 0.0)));
  }
  return res;
}

int MacroTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] == name) return static_cast<int>(j);
  }
  return -1;
}

void MacroTable::set_column(const std::string& name, std::span<const YearMonth> series_dates,
                            const Eigen::VectorXd& series) {
  if (static_cast<Eigen::Index>(series_dates.size()) != series.size()) {
    throw ValidationError("MacroTable::set_column: dates and values differ in length");
  }
  int j = column(name);
  if (j < 0) {
    columns.push_back(name);
    values.conservativeResize(static_cast<Eigen::Index>(dates.size()), values.cols() + 1);
    j = static_cast<int>(columns.size()) - 1;
  }
  values.col(j).setConstant(std::nan(""));
  std::map<YearMonth, double> lookup;
  for (std::size_t t = 0; t < series_dates.size(); ++t) lookup[series_dates[t]] = series[static_cast<Eigen::Index>(t)];
  for (std::size_t t = 0; t < dates.size(); ++t) {
    const auto it = lookup.find(dates[t]);
    if (it != lookup.end()) values(static_cast<Eigen::Index>(t), j) = it->second;
  }
}

MacroTable read_macro_table(std::istream& in) {
  const CsvTable csv = read_csv(in);
  if (csv.header.empty() || csv.header.front() != "date") throw ValidationError("macro table: first column must be 'date'");
  MacroTable t;
  t.columns.assign(csv.header.begin() + 1, csv.header.end());
  t.values.resize(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const YearMonth ym = YearMonth::parse(csv.rows[r][0]);
    if (!t.dates.empty() && ym <= t.dates.back()) {
      throw ValidationError("macro table: non-monotone dates on line " + std::to_string(csv.lines[r]));
    }
    t.dates.push_back(ym);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_number(csv.rows[r][c + 1]);
    }
  }
  return t;
}

MacroTable read_macro_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open macro table '" + path.string() + "'");
  return read_macro_table(in);
}

RegressionResult taylor_rule(const MacroTable& table, const TaylorSpec& spec, YearMonth start, YearMonth end) {
  auto fetch = [&](const std::string& name) {
    const int j = table.column(name);
    if (j < 0) throw ValidationError("taylor_rule: missing column '" + name + "'");
    Eigen::VectorXd v = table.values.col(j);
    if (std::find(kLoggedColumns.begin(), kLoggedColumns.end(), name) != kLoggedColumns.end()) {
      for (Eigen::Index t = 0; t < v.size(); ++t) {
        if (std::isnan(v[t])) continue;
        if (!(v[t] > 0.0)) throw ValidationError("taylor_rule: column '" + name + "' must be positive to take logs");
        v[t] = std::log(v[t]);
      }
    }
    return v;
  };
  const Eigen::VectorXd dep = fetch(spec.dependent);
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> names;
  if (spec.smoothing) {
    Eigen::VectorXd lag = Eigen::VectorXd::Constant(dep.size(), std::nan(""));
    for (std::size_t t = 1; t < table.dates.size(); ++t) {
      if (table.dates[t] - table.dates[t - 1] == 1) lag[static_cast<Eigen::Index>(t)] = dep[static_cast<Eigen::Index>(t - 1)];
    }
    cols.push_back(lag);
    names.push_back(spec.dependent + "_lag1");
  }
  for (const auto& r : spec.regressors) {
    cols.push_back(fetch(r));
    names.push_back(r);
  }
  std::vector<Eigen::Index> rows;
  for (std::size_t t = 0; t < table.dates.size(); ++t) {
    if (start <= table.dates[t] && table.dates[t] <= end) rows.push_back(static_cast<Eigen::Index>(t));
  }
  if (rows.empty()) {
    throw ValidationError("taylor_rule: no observations between " + start.to_string() + " and " + end.to_string());
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()) + 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    y[r] = dep[rows[static_cast<std::size_t>(r)]];
    for (std::size_t c = 0; c < cols.size(); ++c) x(r, static_cast<Eigen::Index>(c)) = cols[c][rows[static_cast<std::size_t>(r)]];
    x(r, x.cols() - 1) = 1.0;
  }
  names.push_back(kConstant);
  return ols(y, x, std::move(names));
}

std::vector<TaylorSpec> standard_taylor_specs(bool smoothing) {
  const std::vector<std::string> z = {"y_gap", "Dp_yoy", "m2_mom", "pcom", "gb_med", "gb_long"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> r = z;
    r.insert(r.end(), extra.begin(), extra.end());
    return r;
  };
  std::vector<TaylorSpec> specs = {
      {"(1)", "euribor3m", z, smoothing},
      {"(2)", "euribor3m", with({"S_gb"}), smoothing},
      {"(3)", "euribor3m", with({"S_bl"}), smoothing},
      {"(4)", "euribor3m", with({"S_bs"}), smoothing},
      {"(5)", "euribor3m", with({"S_gb", "S_bl", "S_bs"}), smoothing},
      {"(6)", "ssr", with({"S_gb", "S_bl", "S_bs"}), smoothing},
  };
  return specs;
}

void write_regression_csv(std::span<const RegressionResult> results, std::span<const std::string> labels,
                          std::ostream& out) {
  out << "model,term,estimate,std_error,t_value,p_value,stars\n";
  for (std::size_t m = 0; m < results.size(); ++m) {
    const auto& r = results[m];
    for (std::size_t j = 0; j < r.names.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out << labels[m] << ',' << r.names[j] << ',' << format_number(r.coef[jj]) << ',' << format_number(r.se[jj])
          << ',' << format_number(r.t[jj]) << ',' << format_number(r.p[jj]) << ',' << r.stars[j] << '\n';
    }
    out << labels[m] << ",observations," << r.nobs << ",,,,\n";
    out << labels[m] << ",r_squared," << format_number(r.r2) << ",,,,\n";
    out << labels[m] << ",adj_r_squared," << format_number(r.adj_r2) << ",,,,\n";
    out << labels[m] << ",residual_std_error," << format_number(r.sigma) << ",,,,\n";
    out << labels[m] << ",f_statistic," << format_number(r.f_stat) << ",,," << format_number(r.f_pvalue)
        << ',' << significance_stars(r.f_pvalue) << '\n';
  }
}

void write_regression_table(std::span<const RegressionResult> results, std::span<const std::string> labels,
                            std::ostream& out) {
  std::vector<std::string> terms;
  for (const auto& r : results) {
    for (const auto& n : r.names) {
      if (n != kConstant && std::find(terms.begin(), terms.end(), n) == terms.end()) terms.push_back(n);
    }
  }
  terms.push_back(kConstant);
  constexpr int kLabel = 22;
  constexpr int kCell = 16;
  auto row = [&](const std::string& label, const std::vector<std::string>& cells) {
    out << std::left << std::setw(kLabel) << label;
    for (const auto& c : cells) out << std::right << std::setw(kCell) << c;
    out << '\n';
  };
  row("", std::vector<std::string>(labels.begin(), labels.end()));
  out << std::string(static_cast<std::size_t>(kLabel + kCell * static_cast<int>(results.size())), '-') << '\n';
  for (const auto& term : terms) {
    std::vector<std::string> est, se;
    for (const auto& r : results) {
      const auto it = std::find(r.names.begin(), r.names.end(), term);
      if (it == r.names.end()) {
        est.emplace_back();
        se.emplace_back();
        continue;
      }
      const auto j = static_cast<std::size_t>(it - r.names.begin());
      est.push_back(fixed(r.coef[static_cast<Eigen::Index>(j)], 3) + r.stars[j]);
      se.push_back("(" + fixed(r.se[static_cast<Eigen::Index>(j)], 3) + ")");
    }
    row(term, est);
    row("", se);
  }
  out << std::string(static_cast<std::size_t>(kLabel + kCell * static_cast<int>(results.size())), '-') << '\n';
  std::vector<std::string> nobs, r2, adj, sig, f;
  for (const auto& r : results) {
    nobs.push_back(std::to_string(r.nobs));
    r2.push_back(fixed(r.r2, 3));
    adj.push_back(fixed(r.adj_r2, 3));
    sig.push_back(fixed(r.sigma, 3));
    f.push_back(fixed(r.f_stat, 3) + significance_stars(r.f_pvalue));
  }
  row("Observations", nobs);
  row("R2", r2);
  row("Adjusted R2", adj);
  row("Residual Std. Error", sig);
  row("F Statistic", f);
  out << "Note: * p<0.1; ** p<0.05; *** p<0.01\n";
}

RmseTable rmse_eval(std::span<const ForecastSet> forecasts, const ForecastSet& actuals, const std::string& benchmark) {
  if (forecasts.empty()) throw ValidationError("rmse_eval: no forecast sets");
  const auto bench_it = std::find_if(forecasts.begin(), forecasts.end(),
                                     [&](const ForecastSet& f) { return f.model == benchmark; });
  if (bench_it == forecasts.end()) throw ValidationError("rmse_eval: benchmark model '" + benchmark + "' not found");
  const ForecastSet& ref = forecasts.front();
  std::map<YearMonth, Eigen::Index> actual_row;
  for (std::size_t t = 0; t < actuals.dates.size(); ++t) actual_row[actuals.dates[t]] = static_cast<Eigen::Index>(t);
  std::vector<Eigen::Index> actual_cols;
  for (const auto& c : ref.countries) {
    const auto it = std::find(actuals.countries.begin(), actuals.countries.end(), c);
    if (it == actuals.countries.end()) throw ValidationError("rmse_eval: no actuals for country " + c);
    actual_cols.push_back(static_cast<Eigen::Index>(it - actuals.countries.begin()));
  }
  for (const auto& f : forecasts) {
    if (f.dates != ref.dates) throw ValidationError("rmse_eval: misaligned dates for model '" + f.model + "'");
    if (f.countries != ref.countries) throw ValidationError("rmse_eval: country columns differ for model '" + f.model + "'");
    if (f.values.rows() != static_cast<Eigen::Index>(f.dates.size()) ||
        f.values.cols() != static_cast<Eigen::Index>(f.countries.size())) {
      throw ValidationError("rmse_eval: forecast matrix shape mismatch for model '" + f.model + "'");
    }
  }
  if (ref.dates.empty()) throw ValidationError("rmse_eval: empty hold-out");
  for (const auto& d : ref.dates) {
    if (!actual_row.contains(d)) throw ValidationError("rmse_eval: misaligned dates, no actual for " + d.to_string());
  }

  RmseTable out;
  out.benchmark = benchmark;
  out.rows = ref.countries;
  const auto nc = static_cast<Eigen::Index>(ref.countries.size());
  auto group_members = [&](auto codes) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index c = 0; c < nc; ++c) {
      if (std::find(codes.begin(), codes.end(), ref.countries[static_cast<std::size_t>(c)]) != codes.end()) idx.push_back(c);
    }
    return idx;
  };
  std::vector<std::vector<Eigen::Index>> groups;
  const auto core = group_members(kCoreCountries);
  const auto periphery = group_members(kPeripheryCountries);
  if (!core.empty()) {
    out.rows.emplace_back("core");
    groups.push_back(core);
  }
  if (!periphery.empty()) {
    out.rows.emplace_back("periphery");
    groups.push_back(periphery);
  }
  std::vector<Eigen::Index> all(static_cast<std::size_t>(nc));
  for (Eigen::Index c = 0; c < nc; ++c) all[static_cast<std::size_t>(c)] = c;
  out.rows.emplace_back("total");
  groups.push_back(all);

  const auto nm = static_cast<Eigen::Index>(forecasts.size());
  out.rmse.resize(static_cast<Eigen::Index>(out.rows.size()), nm);
  Eigen::Index bench_col = 0;
  for (Eigen::Index m = 0; m < nm; ++m) {
    const auto& f = forecasts[static_cast<std::size_t>(m)];
    out.models.push_back(f.model);
    if (f.model == benchmark) bench_col = m;
    for (Eigen::Index c = 0; c < nc; ++c) {
      double ss = 0.0;
      for (std::size_t t = 0; t < f.dates.size(); ++t) {
        const double a = actuals.values(actual_row[f.dates[t]], actual_cols[static_cast<std::size_t>(c)]);
        if (std::isnan(a)) throw ValidationError("rmse_eval: missing actual on " + f.dates[t].to_string());
        const double e = f.values(static_cast<Eigen::Index>(t), c) - a;
        ss += e * e;
      }
      out.rmse(c, m) = std::sqrt(ss / static_cast<double>(f.dates.size()));
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      double acc = 0.0;
      for (Eigen::Index c : groups[g]) acc += out.rmse(c, m);
      out.rmse(nc + static_cast<Eigen::Index>(g), m) = acc / static_cast<double>(groups[g].size());
    }
  }
  out.relative = out.rmse.array().colwise() / out.rmse.col(bench_col).array();
  for (Eigen::Index r = 0; r < out.relative.rows(); ++r) {
    Eigen::Index arg = 0;
    for (Eigen::Index m = 1; m < nm; ++m) {
      if (out.rmse(r, m) < out.rmse(r, arg)) arg = m;
    }
    out.best.push_back(static_cast<int>(arg));
  }
  return out;
}

void write_rmse_csv(const RmseTable& t, std::ostream& out) {
  out << "row,model,rmse,relative,best\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      const auto rr = static_cast<Eigen::Index>(r);
      const auto mm = static_cast<Eigen::Index>(m);
      out << t.rows[r] << ',' << t.models[m] << ',' << format_number(t.rmse(rr, mm)) << ','
          << format_number(t.relative(rr, mm)) << ',' << (t.best[r] == static_cast<int>(m) ? 1 : 0) << '\n';
    }
  }
}

}  // namespace fincon
