#include "fincon/fsv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fincon/error.hpp"
#include "fincon/samplers.hpp"

namespace fincon {

namespace {

constexpr double kScaleFloor = 1e-100;
constexpr Eigen::Index kRollingWindow = 12;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("FsvPriors: ") + name + " must be positive");
}

double log_rho_prior(double rho, const FsvPriors& priors) {
  return (priors.rho_a - 1.0) * std::log1p(rho) + (priors.rho_b - 1.0) * std::log1p(-rho);
}

// log N(x1 | mean, sigma2 / (1 - rho^2)) up to a constant.
double log_initial_density(double x1, const Ar1Params& p) {
  const double q = 1.0 - p.rho * p.rho;
  const double d = x1 - p.mean;
  return 0.5 * std::log(q) - 0.5 * q * d * d / p.sigma2;
}

double sample_rho_prior(const FsvPriors& priors, RngHandle& rng) {
  return 2.0 * rng.beta(priors.rho_a, priors.rho_b) - 1.0;
}

}  // namespace

void FsvPriors::validate() const {
  require_positive(loading_shape, "loading_shape");
  require_positive(row_shape, "row_shape");
  require_positive(row_rate, "row_rate");
  require_positive(mean_var, "mean_var");
  require_positive(sigma2_shape, "sigma2_shape");
  require_positive(sigma2_rate, "sigma2_rate");
  require_positive(rho_a, "rho_a");
  require_positive(rho_b, "rho_b");
  if (!std::isfinite(mean_mean)) throw ValidationError("FsvPriors: mean_mean must be finite");
}

void validate_fsv_state(const FsvState& s) {
  const auto k = s.series();
  const auto d = s.num_factors();
  const auto t = s.periods();
  if (d > k) throw ValidationError("FsvState: more factors than series");
  if (s.factors.rows() != t || s.factors.cols() != d || s.factor_logvar.rows() != t ||
      s.factor_logvar.cols() != d || s.idio_logvar.cols() != k || s.factor_rho.size() != d ||
      s.factor_sigma2.size() != d || s.idio_mean.size() != k || s.idio_rho.size() != k ||
      s.idio_sigma2.size() != k || s.local_scale.rows() != k || s.local_scale.cols() != d ||
      s.row_scale.size() != k) {
    throw ValidationError("FsvState: inconsistent dimensions");
  }
  auto stationary = [](const Eigen::VectorXd& r) { return (r.array().abs() < 1.0).all(); };
  auto positive = [](const auto& v) { return (v.array() > 0.0).all() && v.allFinite(); };
  if (!stationary(s.factor_rho) || !stationary(s.idio_rho)) {
    throw ValidationError("FsvState: AR(1) coefficients must satisfy |rho| < 1");
  }
  if (!positive(s.factor_sigma2) || !positive(s.idio_sigma2) || !positive(s.local_scale) ||
      !positive(s.row_scale)) {
    throw ValidationError("FsvState: variances and shrinkage scales must be positive");
  }
}

FsvState init_fsv_state(const Eigen::MatrixXd& residuals, Eigen::Index factors) {
  const auto t_len = residuals.rows();
  const auto k = residuals.cols();
  if (factors < 0 || factors > k) {
    throw ValidationError("init_fsv_state: factor count " + std::to_string(factors) + " not in [0, " +
                          std::to_string(k) + "]");
  }
  if (!residuals.allFinite()) throw ValidationError("init_fsv_state: non-finite residuals");
  FsvState s;
  s.loadings = Eigen::MatrixXd::Zero(k, factors);
  s.factors = Eigen::MatrixXd::Zero(t_len, factors);
  s.factor_logvar = Eigen::MatrixXd::Zero(t_len, factors);
  s.factor_rho = Eigen::VectorXd::Constant(factors, 0.9);
  s.factor_sigma2 = Eigen::VectorXd::Constant(factors, 0.1);
  s.idio_mean = Eigen::VectorXd::Zero(k);
  s.idio_rho = Eigen::VectorXd::Constant(k, 0.9);
  s.idio_sigma2 = Eigen::VectorXd::Constant(k, 0.1);
  s.local_scale = Eigen::MatrixXd::Ones(k, factors);
  s.row_scale = Eigen::VectorXd::Ones(k);

  if (t_len > 0 && factors > 0) {
    const Eigen::MatrixXd cov = residuals.transpose() * residuals / static_cast<double>(t_len);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (Eigen::Index j = 0; j < factors; ++j) {
      const double lambda = std::max(eig.eigenvalues()[k - 1 - j], 0.0);
      const Eigen::VectorXd v = eig.eigenvectors().col(k - 1 - j);
      s.loadings.col(j) = v * std::sqrt(lambda);
      if (lambda > 0.0) s.factors.col(j) = residuals * v / std::sqrt(lambda);
    }
  }
  const Eigen::MatrixXd idio = residuals - s.factors * s.loadings.transpose();
  s.idio_logvar.resize(t_len, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, t - kRollingWindow + 1);
      const double ms = idio.col(j).segment(lo, t - lo + 1).squaredNorm() / static_cast<double>(t - lo + 1);
      s.idio_logvar(t, j) = std::log(ms + kLogSquareOffset);
    }
    if (t_len > 0) s.idio_mean[j] = s.idio_logvar.col(j).mean();
  }
  normalize_signs(s);
  return s;
}

Eigen::MatrixXd covariance_at(const FsvState& s, Eigen::Index t) {
  if (t < 0 || t >= s.periods()) {
    throw ValidationError("covariance_at: time index " + std::to_string(t) + " outside [0, " +
                          std::to_string(s.periods()) + ")");
  }
  Eigen::MatrixXd cov = s.loadings * s.factor_logvar.row(t).array().exp().matrix().asDiagonal() *
                        s.loadings.transpose();
  cov.diagonal() += s.idio_logvar.row(t).transpose().array().exp().matrix();
  return cov;
}

void normalize_signs(FsvState& s) {
  for (Eigen::Index j = 0; j < s.num_factors(); ++j) {
    if (s.loadings(j, j) < 0.0) {
      s.loadings.col(j) *= -1.0;
      s.factors.col(j) *= -1.0;
    }
  }
}

Eigen::VectorXd sample_log_variance_path(const Eigen::VectorXd& innovations, const Eigen::VectorXd& current,
                                         const Ar1Params& params, RngHandle& rng) {
  using Mix = LogChi2Mixture;
  const auto t_len = innovations.size();
  if (current.size() != t_len) throw ValidationError("sample_log_variance_path: path length mismatch");
  Eigen::VectorXd x(t_len);
  if (t_len == 0) return x;

  Eigen::VectorXd obs(t_len), obs_var(t_len);
  std::array<double, 10> logw{};
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const double z = std::log(innovations[t] * innovations[t] + kLogSquareOffset);
    for (std::size_t c = 0; c < 10; ++c) {
      const double r = z - current[t] - Mix::mean[c];
      logw[c] = std::log(Mix::prob[c]) - 0.5 * std::log(Mix::var[c]) - 0.5 * r * r / Mix::var[c];
    }
    const auto c = static_cast<std::size_t>(sample_categorical_log(logw, rng));
    obs[t] = z - Mix::mean[c];
    obs_var[t] = Mix::var[c];
  }

  Eigen::VectorXd a_f(t_len), p_f(t_len);
  double a = params.mean;
  double p = params.sigma2 / (1.0 - params.rho * params.rho);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const double gain = p / (p + obs_var[t]);
    a_f[t] = a + gain * (obs[t] - a);
    p_f[t] = p * (1.0 - gain);
    if (!(p_f[t] > 0.0) || !std::isfinite(a_f[t])) {
      throw NumericalError("log-variance filter lost positive definiteness at t=" + std::to_string(t));
    }
    a = params.mean + params.rho * (a_f[t] - params.mean);
    p = params.rho * params.rho * p_f[t] + params.sigma2;
  }
  x[t_len - 1] = a_f[t_len - 1] + std::sqrt(p_f[t_len - 1]) * rng.normal();
  for (Eigen::Index t = t_len - 2; t >= 0; --t) {
    const double pred = params.rho * params.rho * p_f[t] + params.sigma2;
    const double gain = p_f[t] * params.rho / pred;
    const double m = a_f[t] + gain * (x[t + 1] - params.mean - params.rho * (a_f[t] - params.mean));
    const double v = p_f[t] * (1.0 - gain * params.rho);
    if (!(v > 0.0)) {
      throw NumericalError("log-variance smoother variance not positive at t=" + std::to_string(t));
    }
    x[t] = m + std::sqrt(v) * rng.normal();
  }
  return x;
}

Ar1Params sample_ar1_params(const Eigen::VectorXd& path, Ar1Params cur, const FsvPriors& priors,
                            bool estimate_mean, RngHandle& rng) {
  const auto t_len = path.size();

  if (estimate_mean) {
    const double q = 1.0 - cur.rho * cur.rho;
    double prec = 1.0 / priors.mean_var;
    double rhs = priors.mean_mean / priors.mean_var;
    if (t_len > 0) {
      prec += q / cur.sigma2;
      rhs += q * path[0] / cur.sigma2;
      const double w = 1.0 - cur.rho;
      for (Eigen::Index t = 1; t < t_len; ++t) {
        prec += w * w / cur.sigma2;
        rhs += w * (path[t] - cur.rho * path[t - 1]) / cur.sigma2;
      }
    }
    cur.mean = rhs / prec + rng.normal() / std::sqrt(prec);
  } else {
    cur.mean = 0.0;
  }

  double sxx = 0.0;
  double sxy = 0.0;
  for (Eigen::Index t = 1; t < t_len; ++t) {
    const double lag = path[t - 1] - cur.mean;
    sxx += lag * lag;
    sxy += lag * (path[t] - cur.mean);
  }
  if (sxx > 0.0) {
    const double proposal = sxy / sxx + std::sqrt(cur.sigma2 / sxx) * rng.normal();
    if (std::abs(proposal) < 1.0) {
      Ar1Params prop = cur;
      prop.rho = proposal;
      const double log_ratio = log_rho_prior(proposal, priors) + log_initial_density(path[0], prop) -
                               log_rho_prior(cur.rho, priors) - log_initial_density(path[0], cur);
      if (std::log(rng.uniform()) < log_ratio) cur.rho = proposal;
    }
  } else if (t_len == 1) {
    Ar1Params prop = cur;
    prop.rho = sample_rho_prior(priors, rng);
    const double log_ratio = log_initial_density(path[0], prop) - log_initial_density(path[0], cur);
    if (std::abs(prop.rho) < 1.0 && std::log(rng.uniform()) < log_ratio) cur.rho = prop.rho;
  } else {
    cur.rho = sample_rho_prior(priors, rng);
  }
  // Beta draws at the boundary round to |rho| = 1.
  cur.rho = std::clamp(cur.rho, -1.0 + 1e-12, 1.0 - 1e-12);

  double ss = 0.0;
  if (t_len > 0) {
    const double d0 = path[0] - cur.mean;
    ss = (1.0 - cur.rho * cur.rho) * d0 * d0;
    for (Eigen::Index t = 1; t < t_len; ++t) {
      const double r = path[t] - cur.mean - cur.rho * (path[t - 1] - cur.mean);
      ss += r * r;
    }
  }
  cur.sigma2 = std::max(sample_gig(priors.sigma2_shape - 0.5 * static_cast<double>(t_len),
                                   2.0 * priors.sigma2_rate, ss, rng),
                        kScaleFloor);
  return cur;
}

GaussianMoments loading_row_posterior(const Eigen::VectorXd& y, const Eigen::MatrixXd& factors,
                                      const Eigen::VectorXd& weights, const Eigen::VectorXd& prior_var) {
  Eigen::MatrixXd prec = factors.transpose() * weights.asDiagonal() * factors;
  prec.diagonal() += prior_var.cwiseInverse();
  const Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) throw NumericalError("loading_row_posterior: precision not positive definite");
  GaussianMoments out;
  out.covariance = llt.solve(Eigen::MatrixXd::Identity(prec.rows(), prec.cols()));
  out.mean = llt.solve(factors.transpose() * weights.asDiagonal() * y);
  return out;
}

FsvState fsv_update(const Eigen::MatrixXd& residuals, FsvState s, const FsvPriors& priors, RngHandle& rng) {
  const auto t_len = residuals.rows();
  const auto k = residuals.cols();
  const auto d = s.num_factors();
  if (!residuals.allFinite()) throw ValidationError("fsv_update: non-finite residuals");
  if (k != s.series() || t_len != s.periods()) {
    throw ValidationError("fsv_update: residuals are " + std::to_string(t_len) + "x" + std::to_string(k) +
                          " but the state expects " + std::to_string(s.periods()) + "x" +
                          std::to_string(s.series()));
  }

  if (d > 0) {
    // (a) factors
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Eigen::VectorXd inv_omega = (-s.idio_logvar.row(t).transpose()).array().exp();
      Eigen::MatrixXd prec = s.loadings.transpose() * inv_omega.asDiagonal() * s.loadings;
      prec.diagonal() += (-s.factor_logvar.row(t).transpose()).array().exp().matrix();
      const Eigen::VectorXd rhs =
          s.loadings.transpose() * (inv_omega.array() * residuals.row(t).transpose().array()).matrix();
      s.factors.row(t) = sample_gaussian_precision(prec, rhs, rng).transpose();
    }
    // (b) loadings and shrinkage scales
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::VectorXd prior_var = 2.0 * s.local_scale.row(j).transpose() / s.row_scale[j];
      Eigen::MatrixXd prec = s.factors.transpose() *
                             (-s.idio_logvar.col(j)).array().exp().matrix().asDiagonal() * s.factors;
      prec.diagonal() += prior_var.cwiseInverse();
      const Eigen::VectorXd rhs =
          s.factors.transpose() * ((-s.idio_logvar.col(j)).array().exp() * residuals.col(j).array()).matrix();
      s.loadings.row(j) = sample_gaussian_precision(prec, rhs, rng).transpose();

      double acc = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double l2 = s.loadings(j, i) * s.loadings(j, i);
        const double b = std::max(l2 * s.row_scale[j] / 2.0, kScaleFloor);
        s.local_scale(j, i) =
            std::max(sample_gig(priors.loading_shape - 0.5, 2.0 * priors.loading_shape, b, rng), kScaleFloor);
        acc += l2 / (4.0 * s.local_scale(j, i));
      }
      s.row_scale[j] = std::max(
          rng.gamma(priors.row_shape + 0.5 * static_cast<double>(d), priors.row_rate + acc), kScaleFloor);
    }
  }

  // (c) + (d) log-variance paths and their AR(1) laws
  const Eigen::MatrixXd idio = residuals - s.factors * s.loadings.transpose();
  for (Eigen::Index j = 0; j < k; ++j) {
    const Ar1Params p = s.idio_params(j);
    s.idio_logvar.col(j) = sample_log_variance_path(idio.col(j), s.idio_logvar.col(j), p, rng);
    const Ar1Params next = sample_ar1_params(s.idio_logvar.col(j), p, priors, true, rng);
    s.idio_mean[j] = next.mean;
    s.idio_rho[j] = next.rho;
    s.idio_sigma2[j] = next.sigma2;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const Ar1Params p = s.factor_params(i);
    s.factor_logvar.col(i) = sample_log_variance_path(s.factors.col(i), s.factor_logvar.col(i), p, rng);
    const Ar1Params next = sample_ar1_params(s.factor_logvar.col(i), p, priors, false, rng);
    s.factor_rho[i] = next.rho;
    s.factor_sigma2[i] = next.sigma2;
  }

  normalize_signs(s);
  if (!s.loadings.allFinite() || !s.factors.allFinite() || !s.idio_logvar.allFinite() ||
      !s.factor_logvar.allFinite()) {
    throw NumericalError("fsv_update: non-finite draw");
  }
  return s;
}

}  // namespace fincon
