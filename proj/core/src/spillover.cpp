#include "fincon/spillover.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <tuple>

#include "fincon/csv.hpp"
#include "fincon/error.hpp"
#include "fincon/parallel.hpp"

namespace fincon {

std::vector<Eigen::MatrixXd> ma_coefficients(std::span<const Eigen::MatrixXd> phi, int horizon) {
  if (horizon < 1) throw ValidationError("ma_coefficients: horizon must be at least 1");
  if (phi.empty()) throw ValidationError("ma_coefficients: at least one lag matrix required");
  const auto k = phi.front().rows();
  for (const auto& p : phi) {
    if (p.rows() != k || p.cols() != k) throw ValidationError("ma_coefficients: lag matrices must be K x K");
    if (!p.allFinite()) throw ValidationError("ma_coefficients: non-finite coefficients");
  }
  std::vector<Eigen::MatrixXd> a;
  a.reserve(static_cast<std::size_t>(horizon));
  a.push_back(Eigen::MatrixXd::Identity(k, k));
  for (int h = 1; h < horizon; ++h) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, k);
    for (int p = 1; p <= static_cast<int>(phi.size()) && p <= h; ++p) {
      next.noalias() += phi[static_cast<std::size_t>(p - 1)] * a[static_cast<std::size_t>(h - p)];
    }
    a.push_back(std::move(next));
  }
  return a;
}

std::vector<Eigen::MatrixXd> ma_coefficients(const Eigen::MatrixXd& system, int lags, int horizon) {
  const auto k = system.rows();
  if (lags < 1 || system.cols() != 1 + k * lags) throw ValidationError("ma_coefficients: system shape mismatch");
  std::vector<Eigen::MatrixXd> phi;
  for (int p = 0; p < lags; ++p) phi.emplace_back(system.middleCols(1 + p * k, k));
  return ma_coefficients(phi, horizon);
}

GfevdMatrix gfevd(std::span<const Eigen::MatrixXd> ma, const Eigen::MatrixXd& sigma, int horizon) {
  if (horizon < 1 || static_cast<std::size_t>(horizon) > ma.size()) {
    throw ValidationError("gfevd: horizon " + std::to_string(horizon) + " needs that many MA matrices, got " +
                          std::to_string(ma.size()));
  }
  const auto k = sigma.rows();
  if (sigma.cols() != k || !sigma.allFinite() || (sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
                                                     1e-10 * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw ValidationError("gfevd: Sigma must be a finite symmetric matrix");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw ValidationError("gfevd: Sigma is not positive definite");
  for (int h = 0; h < horizon; ++h) {
    if (ma[static_cast<std::size_t>(h)].rows() != k || ma[static_cast<std::size_t>(h)].cols() != k) {
      throw ValidationError("gfevd: MA matrices must match the " + std::to_string(k) + " x " + std::to_string(k) +
                            " Sigma");
    }
  }

  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(k);
  for (int h = 0; h < horizon; ++h) {
    const Eigen::MatrixXd as = ma[static_cast<std::size_t>(h)] * sigma;
    num += as.array().square().matrix();
    den += (as.array() * ma[static_cast<std::size_t>(h)].array()).rowwise().sum().matrix();
  }
  GfevdMatrix out;
  out.horizon = horizon;
  out.raw.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) out.raw(i, j) = num(i, j) / (sigma(j, j) * den[i]);
  }
  out.theta = out.raw.array().colwise() / out.raw.rowwise().sum().array();
  return out;
}

double total_index(const Eigen::MatrixXd& theta) {
  const double d = theta.sum();
  return 100.0 * (1.0 - theta.trace() / d);
}

double directional_index(const Eigen::MatrixXd& theta, Eigen::Index i) {
  if (i < 0 || i >= theta.rows()) throw ValidationError("directional_index: row " + std::to_string(i) + " out of range");
  return 100.0 * (theta.row(i).sum() - theta(i, i)) / theta.sum();
}

Eigen::VectorXd directional_indices(const Eigen::MatrixXd& theta) {
  Eigen::VectorXd out(theta.rows());
  for (Eigen::Index i = 0; i < theta.rows(); ++i) out[i] = directional_index(theta, i);
  return out;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw ValidationError("quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Band summarize(const std::vector<double>& values) {
  return {quantile(values, 0.5), quantile(values, 0.16), quantile(values, 0.84)};
}

WindowSummary summarize_window(const PosteriorDraws& draws, std::span<const int> horizons) {
  if (draws.size() == 0) throw ValidationError("summarize_window: no posterior draws");
  const int h_max = *std::max_element(horizons.begin(), horizons.end());
  const auto k = static_cast<Eigen::Index>(draws.series());
  const std::size_t nh = horizons.size();
  const std::size_t nd = draws.size();
  std::vector<std::vector<double>> totals(nh);
  std::vector<std::vector<std::vector<double>>> dirs(nh, std::vector<std::vector<double>>(static_cast<std::size_t>(k)));
  std::vector<std::vector<Eigen::MatrixXd>> thetas(nh);
  for (std::size_t d = 0; d < nd; ++d) {
    const auto ma = ma_coefficients(draws.system[d], draws.lags, h_max);
    const Eigen::MatrixXd sigma = draws.fsv[d].covariance();
    for (std::size_t h = 0; h < nh; ++h) {
      const GfevdMatrix g = gfevd(ma, sigma, horizons[h]);
      totals[h].push_back(total_index(g.theta));
      const Eigen::VectorXd di = directional_indices(g.theta);
      for (Eigen::Index i = 0; i < k; ++i) dirs[h][static_cast<std::size_t>(i)].push_back(di[i]);
      thetas[h].push_back(g.theta);
    }
  }
  WindowSummary out;
  std::vector<double> cell(nd);
  for (std::size_t h = 0; h < nh; ++h) {
    out.total.push_back(summarize(totals[h]));
    std::vector<Band> bands;
    for (const auto& v : dirs[h]) bands.push_back(summarize(v));
    out.directional.push_back(std::move(bands));
    Eigen::MatrixXd med(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        for (std::size_t d = 0; d < nd; ++d) cell[d] = thetas[h][d](i, j);
        med(i, j) = quantile(cell, 0.5);
      }
    }
    out.theta_median.push_back(std::move(med));
  }
  return out;
}

ExpandingWindowResult expanding_window_run(const PanelData& panel, const PvarConfig& config,
                                           const ExpandingWindowOptions& options, std::uint64_t seed) {
  config.validate();
  if (options.horizons.empty()) throw ValidationError("expanding_window_run: no horizons requested");
  for (int h : options.horizons) {
    if (h < 1) throw ValidationError("expanding_window_run: horizons must be positive");
  }
  const auto start = panel.date_index(options.holdout_start);
  if (start < 0) {
    throw ValidationError("expanding_window_run: holdout start " + options.holdout_start.to_string() +
                          " outside the panel");
  }
  const YearMonth last = options.holdout_end.value_or(panel.dates.back());
  const auto end = panel.date_index(last);
  if (end < start) throw ValidationError("expanding_window_run: holdout end precedes its start");
  const auto train = panel.through(options.holdout_start).balanced().periods();
  if (train < options.min_train) {
    throw ValidationError("expanding_window_run: only " + std::to_string(train) + " balanced months through " +
                          options.holdout_start.to_string() + ", need " + std::to_string(options.min_train));
  }

  const auto windows = static_cast<std::size_t>(end - start + 1);
  std::vector<std::optional<WindowSummary>> summaries(windows);
  std::vector<std::string> errors(windows);
  std::vector<Eigen::VectorXd> point(windows);
  parallel_for(windows, options.jobs, [&](std::size_t w) {
    const YearMonth tau = panel.dates[static_cast<std::size_t>(start) + w];
    try {
      RngHandle rng(seed, options.stream_base + w);
      const PosteriorDraws draws = run_mcmc(panel.through(tau), config, rng);
      summaries[w] = summarize_window(draws, options.horizons);
      if (options.forecasts) point[w] = forecast_median(forecast(draws, 1, rng)).row(0).transpose();
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  });

  ExpandingWindowResult out;
  for (int h : options.horizons) {
    SpilloverSeries s;
    s.horizon = h;
    s.countries = panel.countries;
    out.series.push_back(std::move(s));
  }
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t w = 0; w < windows; ++w) {
    const YearMonth tau = panel.dates[static_cast<std::size_t>(start) + w];
    if (!summaries[w]) {
      out.failures.push_back({tau, errors[w]});
      const std::string msg = "window " + tau.to_string() + " failed and was skipped: " + errors[w];
      if (options.warn) {
        options.warn(msg);
      } else {
        std::cerr << "warning: " << msg << '\n';
      }
      continue;
    }
    for (std::size_t h = 0; h < options.horizons.size(); ++h) {
      auto& s = out.series[h];
      s.dates.push_back(tau);
      s.total.push_back(summaries[w]->total[h]);
      s.directional.push_back(summaries[w]->directional[h]);
      s.theta_median.push_back(summaries[w]->theta_median[h]);
    }
    if (options.forecasts) {
      out.forecast_dates.push_back(tau + 1);
      rows.push_back(point[w]);
    }
  }
  out.forecasts.resize(static_cast<Eigen::Index>(rows.size()), panel.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out.forecasts.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return out;
}

void write_spillover_csv(const SpilloverSeries& s, std::ostream& out) {
  out << "date,horizon,statistic,country,value\n";
  auto emit = [&](const std::string& date, const std::string& who, const Band& b) {
    out << date << ',' << s.horizon << ",median," << who << ',' << format_number(b.median) << '\n';
    out << date << ',' << s.horizon << ",q16," << who << ',' << format_number(b.q16) << '\n';
    out << date << ',' << s.horizon << ",q84," << who << ',' << format_number(b.q84) << '\n';
  };
  for (std::size_t t = 0; t < s.dates.size(); ++t) {
    const std::string date = s.dates[t].to_string();
    emit(date, "TOTAL", s.total[t]);
    for (std::size_t i = 0; i < s.countries.size(); ++i) emit(date, s.countries[i], s.directional[t][i]);
  }
}

void write_theta_csv(const SpilloverSeries& s, std::ostream& out) {
  out << "date,horizon,country,source,value\n";
  for (std::size_t t = 0; t < s.dates.size(); ++t) {
    const auto& th = s.theta_median[t];
    for (Eigen::Index i = 0; i < th.rows(); ++i) {
      for (Eigen::Index j = 0; j < th.cols(); ++j) {
        out << s.dates[t].to_string() << ',' << s.horizon << ',' << s.countries[static_cast<std::size_t>(i)] << ','
            << s.countries[static_cast<std::size_t>(j)] << ',' << format_number(th(i, j)) << '\n';
      }
    }
  }
}

ThetaSeries read_theta_csv(std::istream& in, int horizon) {
  const CsvTable table = read_csv(in);
  const int c_date = table.column("date");
  const int c_h = table.column("horizon");
  const int c_i = table.column("country");
  const int c_j = table.column("source");
  const int c_v = table.column("value");
  if (c_date < 0 || c_h < 0 || c_i < 0 || c_j < 0 || c_v < 0) {
    throw ValidationError("theta file needs columns date,horizon,country,source,value");
  }
  ThetaSeries out;
  std::map<std::string, int> index;
  std::map<YearMonth, std::vector<std::tuple<std::string, std::string, double>>> cells;
  for (const auto& row : table.rows) {
    if (std::stoi(row[static_cast<std::size_t>(c_h)]) != horizon) continue;
    const auto& ci = row[static_cast<std::size_t>(c_i)];
    if (!index.contains(ci)) {
      index[ci] = static_cast<int>(out.countries.size());
      out.countries.push_back(ci);
    }
    cells[YearMonth::parse(row[static_cast<std::size_t>(c_date)])].emplace_back(
        ci, row[static_cast<std::size_t>(c_j)], parse_number(row[static_cast<std::size_t>(c_v)]));
  }
  const auto n = static_cast<Eigen::Index>(out.countries.size());
  for (const auto& [date, list] : cells) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, std::nan(""));
    for (const auto& [ci, cj, v] : list) {
      const auto it = index.find(cj);
      if (it == index.end()) throw ValidationError("theta file: source " + cj + " never appears as a country");
      m(index[ci], it->second) = v;
    }
    if (m.hasNaN()) throw ValidationError("theta file: incomplete matrix on " + date.to_string());
    out.dates.push_back(date);
    out.theta.push_back(std::move(m));
  }
  if (out.dates.empty()) throw ValidationError("theta file: no rows for horizon " + std::to_string(horizon));
  return out;
}

}  // namespace fincon
