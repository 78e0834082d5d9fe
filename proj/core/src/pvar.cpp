#include "fincon/pvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "fincon/error.hpp"
#include "fincon/samplers.hpp"

namespace fincon {

namespace {

constexpr double kScaleFloor = 1e-100;
constexpr double kRangeFloor = 1e-4;
constexpr int kMaxComponents = 8;
constexpr Eigen::Index kMinRows = 10;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("PvarConfig: ") + name + " must be positive");
}

double log_normal_diag(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
  const Eigen::ArrayXd d = (x - mean).array();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + var.array().log().sum() + (d.square() / var.array()).sum());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Lloyd's algorithm on range-scaled coordinates, farthest-point seeding from
// the first column.
std::vector<int> kmeans_labels(const Eigen::MatrixXd& points, const Eigen::VectorXd& scale, int groups) {
  const auto n = points.cols();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (groups <= 1 || n == 0) return labels;
  const Eigen::MatrixXd x = scale.cwiseInverse().asDiagonal() * points;
  const int g_eff = std::min<int>(groups, static_cast<int>(n));
  Eigen::MatrixXd centers(x.rows(), g_eff);
  centers.col(0) = x.col(0);
  for (int g = 1; g < g_eff; ++g) {
    Eigen::Index far = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (int h = 0; h < g; ++h) dmin = std::min(dmin, (x.col(i) - centers.col(h)).squaredNorm());
      if (dmin > best) {
        best = dmin;
        far = i;
      }
    }
    centers.col(g) = x.col(far);
  }
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = iter == 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double dmin = std::numeric_limits<double>::infinity();
      for (int g = 0; g < g_eff; ++g) {
        const double d = (x.col(i) - centers.col(g)).squaredNorm();
        if (d < dmin) {
          dmin = d;
          arg = g;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != arg) {
        labels[static_cast<std::size_t>(i)] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    for (int g = 0; g < g_eff; ++g) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.rows());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == g) {
          acc += x.col(i);
          ++count;
        }
      }
      if (count > 0) centers.col(g) = acc / count;
    }
  }
  return labels;
}

Eigen::MatrixXd factor_offset(const FsvState& fsv, Eigen::Index rows, Eigen::Index k) {
  if (fsv.num_factors() == 0) return Eigen::MatrixXd::Zero(rows, k);
  return fsv.factors * fsv.loadings.transpose();
}

FsvSnapshot snapshot(const FsvState& s) {
  FsvSnapshot out;
  out.loadings = s.loadings;
  const auto last = s.periods() - 1;
  out.factor_logvar = last >= 0 ? Eigen::VectorXd(s.factor_logvar.row(last).transpose())
                                : Eigen::VectorXd::Zero(s.num_factors());
  out.idio_logvar = last >= 0 ? Eigen::VectorXd(s.idio_logvar.row(last).transpose()) : s.idio_mean;
  out.factor_rho = s.factor_rho;
  out.factor_sigma2 = s.factor_sigma2;
  out.idio_mean = s.idio_mean;
  out.idio_rho = s.idio_rho;
  out.idio_sigma2 = s.idio_sigma2;
  return out;
}

}  // namespace

void PvarConfig::validate() const {
  if (lags < 1) throw ValidationError("PvarConfig: lags must be at least 1");
  if (components < 1 || components > kMaxComponents) {
    throw ValidationError("PvarConfig: components must be in [1, " + std::to_string(kMaxComponents) + "]");
  }
  if (burn_in < 0 || draws <= burn_in) throw ValidationError("PvarConfig: draws must exceed burn_in >= 0");
  if (variables < 1) throw ValidationError("PvarConfig: variables must be at least 1");
  if (factors < 0) throw ValidationError("PvarConfig: factors must be nonnegative");
  require_positive(a0, "a0");
  require_positive(a1, "a1");
  require_positive(b0, "b0");
  require_positive(b1, "b1");
  require_positive(c0, "c0");
  require_positive(d0, "d0");
  require_positive(d1, "d1");
  require_positive(theta, "theta");
  if (!(intensity_step >= 0.0)) throw ValidationError("PvarConfig: intensity_step must be nonnegative");
  fsv.validate();
}

PvarDesign build_design(const Eigen::MatrixXd& data, int countries, int variables, int lags) {
  if (countries < 1 || variables < 1 || lags < 1) {
    throw ValidationError("build_design: countries, variables and lags must be positive");
  }
  const int k = countries * variables;
  if (data.cols() != k) {
    throw ValidationError("build_design: data has " + std::to_string(data.cols()) + " columns, expected " +
                          std::to_string(k));
  }
  if (!data.allFinite()) throw ValidationError("build_design: data must be finite (trim leading missingness first)");
  const Eigen::Index rows = data.rows() - lags;
  if (rows < 1) {
    throw ValidationError("build_design: insufficient observations, T = " + std::to_string(data.rows()) +
                          " with P = " + std::to_string(lags));
  }
  PvarDesign d;
  d.countries = countries;
  d.variables = variables;
  d.lags = lags;
  d.response = data.bottomRows(rows);
  d.history = data.bottomRows(lags);
  for (int s = 0; s < k; ++s) d.series_labels.push_back("y" + std::to_string(s + 1));
  const int dom = d.domestic_per_equation();
  const int fpe = d.foreign_per_equation();
  for (int i = 0; i < countries; ++i) {
    Eigen::MatrixXd x(rows, dom + fpe);
    x.col(0).setOnes();
    for (int p = 1; p <= lags; ++p) {
      for (int u = 0; u < variables; ++u) {
        x.col(1 + (p - 1) * variables + u) = data.col(i * variables + u).segment(lags - p, rows);
      }
      int jj = 0;
      for (int j = 0; j < countries; ++j) {
        if (j == i) continue;
        for (int u = 0; u < variables; ++u) {
          x.col(dom + (p - 1) * variables * (countries - 1) + jj * variables + u) =
              data.col(j * variables + u).segment(lags - p, rows);
        }
        ++jj;
      }
    }
    d.regressors.push_back(std::move(x));
  }
  return d;
}

PvarDesign build_design(const PanelData& panel, int lags) {
  const PanelData bal = panel.balanced();
  PvarDesign d = build_design(bal.values, static_cast<int>(bal.size()), 1, lags);
  d.series_labels = bal.countries;
  d.dates.assign(bal.dates.begin() + lags, bal.dates.end());
  return d;
}

void validate_pvar_state(const PvarState& s, const PvarDesign& d) {
  const int n = d.countries;
  const int g = s.components();
  if (s.domestic.rows() != d.domestic_size() || s.domestic.cols() != n || s.foreign.rows() != d.foreign_size() ||
      s.foreign.cols() != n || s.foreign_scale.rows() != s.foreign.rows() || s.foreign_scale.cols() != n ||
      s.foreign_global.size() != n || static_cast<int>(s.labels.size()) != n || s.means.cols() != g ||
      s.means.rows() != d.domestic_size() || s.common_var.size() != d.domestic_size() ||
      s.lambda.size() != d.domestic_size() || s.mu0.size() != d.domestic_size()) {
    throw ValidationError("PvarState: inconsistent dimensions");
  }
  for (int l : s.labels) {
    if (l < 0 || l >= g) throw ValidationError("PvarState: label out of range");
  }
  if ((s.weights.array() < 0.0).any() || std::abs(s.weights.sum() - 1.0) > 1e-8) {
    throw ValidationError("PvarState: mixture weights are not on the simplex");
  }
  if ((s.common_var.array() <= 0.0).any() || (s.lambda.array() <= 0.0).any() ||
      (s.foreign_scale.array() <= 0.0).any() || (s.foreign_global.array() <= 0.0).any() || !(s.intensity > 0.0)) {
    throw ValidationError("PvarState: variance and scale parameters must be positive");
  }
  validate_fsv_state(s.fsv);
}

GaussianMoments coefficient_conditional(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& weights, const Eigen::VectorXd& prior_mean,
                                        const Eigen::VectorXd& prior_precision) {
  Eigen::MatrixXd prec = x.transpose() * weights.asDiagonal() * x;
  prec.diagonal() += prior_precision;
  const Eigen::VectorXd rhs =
      x.transpose() * (weights.array() * y.array()).matrix() + prior_precision.cwiseProduct(prior_mean);
  const Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) throw NumericalError("coefficient_conditional: precision not positive definite");
  GaussianMoments out;
  out.mean = llt.solve(rhs);
  out.covariance = llt.solve(Eigen::MatrixXd::Identity(prec.rows(), prec.cols()));
  return out;
}

PvarState init_pvar_state(const PvarDesign& d, const PvarConfig& config) {
  config.validate();
  const int n = d.countries;
  const int mv = d.variables;
  const int dom = d.domestic_per_equation();
  const int fpe = d.foreign_per_equation();
  const int g = config.components;
  if (config.factors > d.series()) {
    throw ValidationError("PvarConfig: " + std::to_string(config.factors) + " factors exceed " +
                          std::to_string(d.series()) + " series");
  }
  if (config.variables != mv || config.lags != d.lags) {
    throw ValidationError("PvarConfig: variables/lags do not match the design");
  }

  PvarState s;
  s.domestic = Eigen::MatrixXd::Zero(d.domestic_size(), n);
  s.foreign = Eigen::MatrixXd::Zero(d.foreign_size(), n);
  Eigen::MatrixXd resid = d.response;
  for (int i = 0; i < n; ++i) {
    const auto& x = d.regressors[static_cast<std::size_t>(i)];
    for (int v = 0; v < mv; ++v) {
      const int eq = i * mv + v;
      if (d.rows() == 0) continue;
      const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(d.response.col(eq));
      s.domestic.col(i).segment(v * dom, dom) = beta.head(dom);
      s.foreign.col(i).segment(v * fpe, fpe) = beta.tail(fpe);
      resid.col(eq) = d.response.col(eq) - x * beta;
    }
  }
  s.fsv = init_fsv_state(resid, config.factors);

  const auto m = d.domestic_size();
  s.range2.resize(m);
  s.m0.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double r = s.domestic.row(j).maxCoeff() - s.domestic.row(j).minCoeff();
    s.range2[j] = std::max(r * r, kRangeFloor);
    std::vector<double> row;
    for (int i = 0; i < n; ++i) row.push_back(s.domestic(j, i));
    s.m0[j] = median(row);
  }
  s.mu0 = s.m0;
  s.labels = kmeans_labels(s.domestic, s.range2.cwiseSqrt(), g);
  s.means.resize(m, g);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(g);
  for (int k = 0; k < g; ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
      if (s.labels[static_cast<std::size_t>(i)] == k) {
        acc += s.domestic.col(i);
        counts[k] += 1.0;
      }
    }
    s.means.col(k) = counts[k] > 0 ? Eigen::VectorXd(acc / counts[k]) : s.mu0;
  }
  s.common_var = Eigen::VectorXd::Constant(m, kRangeFloor);
  for (Eigen::Index j = 0; j < m; ++j) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dv = s.domestic(j, i) - s.means(j, s.labels[static_cast<std::size_t>(i)]);
      ss += dv * dv;
    }
    s.common_var[j] = std::max(ss / n, kRangeFloor);
  }
  s.lambda = Eigen::VectorXd::Ones(m);
  s.foreign_scale = Eigen::MatrixXd::Ones(d.foreign_size(), n);
  s.foreign_global = Eigen::VectorXd::Ones(n);
  s.intensity = 1.0 / g;
  s.weights = (counts.array() + s.intensity) / (n + g * s.intensity);
  return s;
}

Eigen::MatrixXd fitted_values(const PvarState& s, const PvarDesign& d) {
  Eigen::MatrixXd fit(d.rows(), d.series());
  const int dom = d.domestic_per_equation();
  const int fpe = d.foreign_per_equation();
  for (int i = 0; i < d.countries; ++i) {
    const auto& x = d.regressors[static_cast<std::size_t>(i)];
    for (int v = 0; v < d.variables; ++v) {
      Eigen::VectorXd beta(dom + fpe);
      beta << s.domestic.col(i).segment(v * dom, dom), s.foreign.col(i).segment(v * fpe, fpe);
      fit.col(i * d.variables + v) = x * beta;
    }
  }
  return fit;
}

PvarState gibbs_sweep(PvarState s, const PvarDesign& d, const PvarConfig& cfg, RngHandle& rng, SweepStats* stats) {
  const int n = d.countries;
  const int mv = d.variables;
  const int dom = d.domestic_per_equation();
  const int fpe = d.foreign_per_equation();
  const int g_max = s.components();
  const auto m = d.domestic_size();
  const auto kf = d.foreign_size();
  const auto rows = d.rows();

  // (1) VAR coefficients equation by equation, then the FSV block.
  const Eigen::MatrixXd offset = factor_offset(s.fsv, rows, d.series());
  for (int i = 0; i < n; ++i) {
    const auto& x = d.regressors[static_cast<std::size_t>(i)];
    const int g = s.labels[static_cast<std::size_t>(i)];
    for (int v = 0; v < mv; ++v) {
      const int eq = i * mv + v;
      Eigen::VectorXd prior_mean = Eigen::VectorXd::Zero(dom + fpe);
      Eigen::VectorXd prior_prec(dom + fpe);
      prior_mean.head(dom) = s.means.col(g).segment(v * dom, dom);
      prior_prec.head(dom) = s.common_var.segment(v * dom, dom).cwiseInverse();
      prior_prec.tail(fpe) = s.foreign_global[i] * (2.0 * s.foreign_scale.col(i).segment(v * fpe, fpe)).cwiseInverse();
      const Eigen::ArrayXd w = (-s.fsv.idio_logvar.col(eq)).array().exp();
      const Eigen::MatrixXd xw = x.array().colwise() * w.sqrt();
      Eigen::MatrixXd prec = xw.transpose() * xw;
      prec.diagonal() += prior_prec;
      const Eigen::VectorXd rhs =
          x.transpose() * (w * (d.response.col(eq) - offset.col(eq)).array()).matrix() +
          prior_prec.cwiseProduct(prior_mean);
      Eigen::VectorXd beta;
      try {
        beta = sample_gaussian_precision(prec, rhs, rng);
      } catch (const NumericalError& e) {
        throw NumericalError("coefficient conditional for equation " + std::to_string(eq) + " (" +
                             (eq < static_cast<int>(d.series_labels.size()) ? d.series_labels[eq] : "") +
                             "): " + e.what());
      }
      s.domestic.col(i).segment(v * dom, dom) = beta.head(dom);
      s.foreign.col(i).segment(v * fpe, fpe) = beta.tail(fpe);
    }
  }
  const Eigen::MatrixXd resid = d.response - fitted_values(s, d);
  s.fsv = fsv_update(resid, std::move(s.fsv), cfg.fsv, rng);

  // (2) mixture block
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(g_max);
  for (int l : s.labels) counts[l] += 1.0;
  s.weights = sample_dirichlet((counts.array() + s.intensity).matrix(), rng);
  std::vector<double> logw(static_cast<std::size_t>(g_max));
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < g_max; ++g) {
      logw[static_cast<std::size_t>(g)] =
          std::log(s.weights[g]) + log_normal_diag(s.domestic.col(i), s.means.col(g), s.common_var);
    }
    s.labels[static_cast<std::size_t>(i)] = sample_categorical_log(logw, rng);
  }
  counts.setZero();
  for (int l : s.labels) counts[l] += 1.0;
  const Eigen::VectorXd q0 = s.lambda.cwiseProduct(s.range2);
  for (int g = 0; g < g_max; ++g) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
      if (s.labels[static_cast<std::size_t>(i)] == g) sum += s.domestic.col(i);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      const double prec = counts[g] / s.common_var[j] + 1.0 / q0[j];
      const double mean = (sum[j] / s.common_var[j] + s.mu0[j] / q0[j]) / prec;
      s.means(j, g) = mean + rng.normal() / std::sqrt(prec);
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const double ss = (s.means.row(j).array() - s.mu0[j]).square().sum() / s.range2[j];
    s.lambda[j] = std::max(sample_gig(cfg.b0 - 0.5 * g_max, 2.0 * cfg.b1, std::max(ss, kScaleFloor), rng), kScaleFloor);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const double q = s.lambda[j] * s.range2[j];
    s.mu0[j] = s.means.row(j).mean() + std::sqrt(q / g_max) * rng.normal();
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dv = s.domestic(j, i) - s.means(j, s.labels[static_cast<std::size_t>(i)]);
      ss += dv * dv;
    }
    s.common_var[j] = std::max(1.0 / rng.gamma(cfg.a0 + 0.5 * n, cfg.a1 + 0.5 * ss), kScaleFloor);
  }
  const IntensityStep step = mh_intensity_step(s.intensity, s.weights, cfg.c0, g_max, rng, cfg.intensity_step);
  s.intensity = step.value;
  if (stats != nullptr) stats->intensity_accepted = step.accepted;

  // (3) Normal-Gamma scales on the cross-country coefficients
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < kf; ++l) {
      const double b2 = s.foreign(l, i) * s.foreign(l, i);
      s.foreign_scale(l, i) = std::max(
          sample_gig(cfg.theta - 0.5, 2.0 * cfg.theta, std::max(b2 * s.foreign_global[i] / 2.0, kScaleFloor), rng),
          kScaleFloor);
      acc += b2 / (4.0 * s.foreign_scale(l, i));
    }
    s.foreign_global[i] = std::max(rng.gamma(cfg.d0 + 0.5 * static_cast<double>(kf), cfg.d1 + acc), kScaleFloor);
  }

  // (4) random permutation sampler
  MixtureLabels mix{s.labels, s.means, s.weights};
  Relabeling relabeled = random_permutation_relabel(mix, rng);
  s.labels = std::move(relabeled.state.labels);
  s.means = std::move(relabeled.state.means);
  s.weights = std::move(relabeled.state.weights);

  if (!s.domestic.allFinite() || !s.foreign.allFinite() || !s.means.allFinite() || !s.common_var.allFinite() ||
      !s.mu0.allFinite() || !std::isfinite(s.intensity)) {
    throw NumericalError("gibbs_sweep: non-finite draw");
  }
  return s;
}

double log_likelihood(const PvarState& s, const PvarDesign& d) {
  const Eigen::MatrixXd resid = d.response - fitted_values(s, d);
  double total = 0.0;
  for (Eigen::Index t = 0; t < d.rows(); ++t) {
    const Eigen::LLT<Eigen::MatrixXd> llt(covariance_at(s.fsv, t));
    if (llt.info() != Eigen::Success) throw NumericalError("log_likelihood: Sigma_t not positive definite at t=" + std::to_string(t));
    const Eigen::VectorXd z = llt.matrixL().solve(resid.row(t).transpose());
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    total += -0.5 * (static_cast<double>(d.series()) * kLog2Pi + log_det + z.squaredNorm());
  }
  return total;
}

double log_joint_density(const PvarState& s, const PvarDesign& d, const PvarConfig& cfg) {
  const Eigen::MatrixXd resid = d.response - fitted_values(s, d) - factor_offset(s.fsv, d.rows(), d.series());
  double total = 0.0;
  for (Eigen::Index k = 0; k < resid.cols(); ++k) {
    for (Eigen::Index t = 0; t < resid.rows(); ++t) {
      const double lv = s.fsv.idio_logvar(t, k);
      total += -0.5 * (kLog2Pi + lv + resid(t, k) * resid(t, k) * std::exp(-lv));
    }
  }
  const int g_max = s.components();
  for (int i = 0; i < d.countries; ++i) {
    const int g = s.labels[static_cast<std::size_t>(i)];
    total += std::log(s.weights[g]) + log_normal_diag(s.domestic.col(i), s.means.col(g), s.common_var);
    if (s.foreign.rows() > 0) {
      total += log_normal_diag(s.foreign.col(i), Eigen::VectorXd::Zero(s.foreign.rows()),
                               2.0 * s.foreign_scale.col(i) / s.foreign_global[i]);
    }
  }
  const Eigen::VectorXd q0 = s.lambda.cwiseProduct(s.range2);
  for (int g = 0; g < g_max; ++g) total += log_normal_diag(s.means.col(g), s.mu0, q0);
  total += std::lgamma(g_max * s.intensity) - g_max * std::lgamma(s.intensity) +
           (s.intensity - 1.0) * s.weights.array().log().sum();
  total += (cfg.c0 - 1.0) * std::log(s.intensity) - cfg.c0 * g_max * s.intensity;
  return total;
}

Eigen::MatrixXd system_matrix(const PvarState& s, const PvarDesign& d) {
  const int n = d.countries;
  const int mv = d.variables;
  const int k = d.series();
  const int dom = d.domestic_per_equation();
  const int fpe = d.foreign_per_equation();
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(k, 1 + k * d.lags);
  for (int i = 0; i < n; ++i) {
    for (int v = 0; v < mv; ++v) {
      const int eq = i * mv + v;
      sys(eq, 0) = s.domestic(v * dom, i);
      for (int p = 1; p <= d.lags; ++p) {
        const int base = 1 + (p - 1) * k;
        for (int u = 0; u < mv; ++u) sys(eq, base + i * mv + u) = s.domestic(v * dom + 1 + (p - 1) * mv + u, i);
        int jj = 0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          for (int u = 0; u < mv; ++u) {
            sys(eq, base + j * mv + u) = s.foreign(v * fpe + (p - 1) * mv * (n - 1) + jj * mv + u, i);
          }
          ++jj;
        }
      }
    }
  }
  return sys;
}

Eigen::MatrixXd companion_matrix(const Eigen::MatrixXd& system, int lags) {
  const auto k = system.rows();
  if (lags < 1 || system.cols() != 1 + k * lags) throw ValidationError("companion_matrix: system shape mismatch");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k * lags, k * lags);
  c.topRows(k) = system.rightCols(k * lags);
  if (lags > 1) c.bottomLeftCorner(k * (lags - 1), k * (lags - 1)).setIdentity();
  return c;
}

Eigen::MatrixXd FsvSnapshot::covariance() const {
  Eigen::MatrixXd cov = loadings * factor_logvar.array().exp().matrix().asDiagonal() * loadings.transpose();
  cov.diagonal() += idio_logvar.array().exp().matrix();
  return cov;
}

PosteriorDraws run_mcmc(const PvarDesign& d, const PvarConfig& cfg, RngHandle& rng) {
  cfg.validate();
  if (d.rows() < kMinRows) {
    throw ValidationError("run_mcmc: insufficient observations, T - P = " + std::to_string(d.rows()) +
                          ", need at least " + std::to_string(kMinRows));
  }
  PvarState state = init_pvar_state(d, cfg);
  PosteriorDraws out;
  out.countries = d.countries;
  out.variables = d.variables;
  out.lags = d.lags;
  out.components = cfg.components;
  out.series_labels = d.series_labels;
  out.dates = d.dates;
  out.history = d.history;
  out.config = cfg;
  const auto kept = static_cast<std::size_t>(cfg.retained());
  out.system.reserve(kept);
  out.labels.reserve(kept);
  out.weights.reserve(kept);
  out.intensity.reserve(kept);
  out.fsv.reserve(kept);
  out.log_likelihood_trace.reserve(static_cast<std::size_t>(cfg.draws));
  out.idio_logvar_mean = Eigen::MatrixXd::Zero(d.rows(), d.series());
  out.factor_logvar_mean = Eigen::MatrixXd::Zero(d.rows(), cfg.factors);
  int accepted = 0;
  for (int sweep = 0; sweep < cfg.draws; ++sweep) {
    SweepStats stats;
    state = gibbs_sweep(std::move(state), d, cfg, rng, &stats);
    accepted += stats.intensity_accepted ? 1 : 0;
    out.log_likelihood_trace.push_back(log_likelihood(state, d));
    if (sweep < cfg.burn_in) continue;
    out.system.push_back(system_matrix(state, d));
    out.labels.push_back(state.labels);
    out.weights.push_back(state.weights);
    out.intensity.push_back(state.intensity);
    out.fsv.push_back(snapshot(state.fsv));
    out.idio_logvar_mean += state.fsv.idio_logvar;
    out.factor_logvar_mean += state.fsv.factor_logvar;
  }
  out.idio_logvar_mean /= static_cast<double>(kept);
  out.factor_logvar_mean /= static_cast<double>(kept);
  out.intensity_acceptance = static_cast<double>(accepted) / cfg.draws;
  return out;
}

PosteriorDraws run_mcmc(const PanelData& panel, const PvarConfig& cfg, RngHandle& rng) {
  if (cfg.variables != 1) throw ValidationError("run_mcmc: a single-market panel implies variables = 1");
  return run_mcmc(build_design(panel, cfg.lags), cfg, rng);
}

std::vector<int> align_labels(const std::vector<int>& labels, const std::vector<int>& reference, int components) {
  if (labels.size() != reference.size()) throw ValidationError("align_labels: length mismatch");
  if (components < 1 || components > kMaxComponents) throw ValidationError("align_labels: unsupported component count");
  std::vector<int> perm(static_cast<std::size_t>(components));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  int best_score = -1;
  do {
    int score = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) score += perm[static_cast<std::size_t>(labels[i])] == reference[i] ? 1 : 0;
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Eigen::MatrixXd cluster_probabilities(const PosteriorDraws& draws) {
  if (draws.labels.empty()) throw ValidationError("cluster_probabilities: no draws");
  const int g = draws.components;
  const auto& ref = draws.labels.front();
  Eigen::MatrixXd prob = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ref.size()), g);
  for (const auto& lab : draws.labels) {
    const auto perm = align_labels(lab, ref, g);
    for (std::size_t i = 0; i < lab.size(); ++i) prob(static_cast<Eigen::Index>(i), perm[static_cast<std::size_t>(lab[i])]) += 1.0;
  }
  return prob / static_cast<double>(draws.labels.size());
}

std::vector<Eigen::MatrixXd> forecast(const PosteriorDraws& draws, int horizon, RngHandle& rng, bool with_shocks) {
  if (horizon < 1) throw ValidationError("forecast: horizon must be at least 1");
  const int k = draws.series();
  const int p = draws.lags;
  if (draws.history.rows() != p || draws.history.cols() != k) throw ValidationError("forecast: history has wrong shape");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(draws.size());
  for (std::size_t s = 0; s < draws.size(); ++s) {
    const Eigen::MatrixXd& sys = draws.system[s];
    Eigen::MatrixXd path(p + horizon, k);
    path.topRows(p) = draws.history;
    FsvSnapshot vol = with_shocks ? draws.fsv[s] : FsvSnapshot{};
    for (int step = 0; step < horizon; ++step) {
      Eigen::VectorXd y = sys.col(0);
      for (int l = 1; l <= p; ++l) y += sys.middleCols(1 + (l - 1) * k, k) * path.row(p + step - l).transpose();
      if (with_shocks) {
        for (Eigen::Index j = 0; j < vol.factor_logvar.size(); ++j) {
          vol.factor_logvar[j] = vol.factor_rho[j] * vol.factor_logvar[j] + std::sqrt(vol.factor_sigma2[j]) * rng.normal();
        }
        for (Eigen::Index j = 0; j < k; ++j) {
          vol.idio_logvar[j] = vol.idio_mean[j] + vol.idio_rho[j] * (vol.idio_logvar[j] - vol.idio_mean[j]) +
                               std::sqrt(vol.idio_sigma2[j]) * rng.normal();
        }
        Eigen::VectorXd f(vol.factor_logvar.size());
        for (Eigen::Index j = 0; j < f.size(); ++j) f[j] = std::exp(0.5 * vol.factor_logvar[j]) * rng.normal();
        Eigen::VectorXd eta(k);
        for (Eigen::Index j = 0; j < k; ++j) eta[j] = std::exp(0.5 * vol.idio_logvar[j]) * rng.normal();
        y += eta;
        if (f.size() > 0) y += vol.loadings * f;
      }
      path.row(p + step) = y.transpose();
    }
    out.emplace_back(path.bottomRows(horizon));
  }
  return out;
}

Eigen::MatrixXd forecast_median(const std::vector<Eigen::MatrixXd>& paths) {
  if (paths.empty()) throw ValidationError("forecast_median: no predictive draws");
  const auto h = paths.front().rows();
  const auto k = paths.front().cols();
  Eigen::MatrixXd med(h, k);
  std::vector<double> buf(paths.size());
  for (Eigen::Index s = 0; s < h; ++s) {
    for (Eigen::Index j = 0; j < k; ++j) {
      for (std::size_t d = 0; d < paths.size(); ++d) buf[d] = paths[d](s, j);
      med(s, j) = median(buf);
    }
  }
  return med;
}

}  // namespace fincon
