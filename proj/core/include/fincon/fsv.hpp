#pragma once

#include <array>

#include <Eigen/Dense>

#include "fincon/rng.hpp"

namespace fincon {

struct FsvPriors {
  double loading_shape = 0.1;  // psi_l: phi^2 ~ Gamma(psi_l, psi_l)
  double row_shape = 1.0;      // s0
  double row_rate = 1.0;       // s1
  double mean_mean = 0.0;      // idiosyncratic level ~ N(mean_mean, mean_var)
  double mean_var = 10.0;
  double sigma2_shape = 0.5;   // sigma^2 ~ Gamma(shape, rate)
  double sigma2_rate = 0.5;
  double rho_a = 10.0;         // (rho + 1) / 2 ~ Beta(rho_a, rho_b)
  double rho_b = 3.0;

  void validate() const;
};

/// AR(1) law of one log-variance path: x_t = mean + rho (x_{t-1} - mean) + sigma eta_t,
/// started from the stationary distribution.
struct Ar1Params {
  double mean = 0.0;
  double rho = 0.9;
  double sigma2 = 0.1;
};

/// Factor stochastic volatility state for K series and d factors over T periods.
struct FsvState {
  Eigen::MatrixXd loadings;       // K x d
  Eigen::MatrixXd factors;        // T x d
  Eigen::MatrixXd factor_logvar;  // T x d, zero-mean AR(1) paths
  Eigen::MatrixXd idio_logvar;    // T x K
  Eigen::VectorXd factor_rho, factor_sigma2;              // d
  Eigen::VectorXd idio_mean, idio_rho, idio_sigma2;       // K
  Eigen::MatrixXd local_scale;    // phi^2, K x d
  Eigen::VectorXd row_scale;      // varrho, K

  Eigen::Index series() const { return loadings.rows(); }
  Eigen::Index num_factors() const { return loadings.cols(); }
  Eigen::Index periods() const { return idio_logvar.rows(); }

  Ar1Params factor_params(Eigen::Index j) const { return {0.0, factor_rho[j], factor_sigma2[j]}; }
  Ar1Params idio_params(Eigen::Index j) const { return {idio_mean[j], idio_rho[j], idio_sigma2[j]}; }
};

/// Throws ValidationError unless dimensions agree and every parameter lies in
/// its support.
void validate_fsv_state(const FsvState& state);

/// Starting values: principal-component loadings and factors, idiosyncratic
/// log-variances at the log of 12-month rolling mean squared residuals,
/// factor log-variances at zero, rho = 0.9, sigma^2 = 0.1, scales at 1.
FsvState init_fsv_state(const Eigen::MatrixXd& residuals, Eigen::Index factors);

/// One Gibbs sweep over factors, loadings, shrinkage scales, log-variance
/// paths and their AR(1) parameters; ends with the sign normalization.
FsvState fsv_update(const Eigen::MatrixXd& residuals, FsvState state, const FsvPriors& priors, RngHandle& rng);

/// L diag(exp h_t) L' + diag(exp omega_t).
Eigen::MatrixXd covariance_at(const FsvState& state, Eigen::Index t);

/// Flips loading column j and factor column j together so that L(j, j) >= 0.
void normalize_signs(FsvState& state);

/// Ten-component normal mixture approximating the log chi-square(1) law.
struct LogChi2Mixture {
  static constexpr std::array<double, 10> prob = {0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                                                  0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
  static constexpr std::array<double, 10> mean = {1.92677,  1.34744,  0.73504,  0.02266,  -0.85173,
                                                  -1.97278, -3.46788, -5.55246, -8.68384, -14.65};
  static constexpr std::array<double, 10> var = {0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                                                 0.98583, 1.57469, 2.54498, 4.16591, 7.33342};
};

/// Offset added to squared innovations before taking logs.
inline constexpr double kLogSquareOffset = 1e-10;

/// Draws a log-variance path given innovations e_t ~ N(0, exp(x_t)): mixture
/// indicators conditional on `current`, then forward-filtering
/// backward-sampling of the linear Gaussian state space.
Eigen::VectorXd sample_log_variance_path(const Eigen::VectorXd& innovations, const Eigen::VectorXd& current,
                                         const Ar1Params& params, RngHandle& rng);

/// Updates (mean, rho, sigma^2) given a path. `estimate_mean` false keeps the
/// mean at zero. rho uses an independence MH step; sigma^2 is an exact GIG draw.
Ar1Params sample_ar1_params(const Eigen::VectorXd& path, Ar1Params current, const FsvPriors& priors,
                            bool estimate_mean, RngHandle& rng);

/// Gaussian conditional of one loading row: y_t = f_t' l + e_t with
/// e_t ~ N(0, 1 / weights_t) and prior l ~ N(0, diag(prior_var)).
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};
GaussianMoments loading_row_posterior(const Eigen::VectorXd& y, const Eigen::MatrixXd& factors,
                                      const Eigen::VectorXd& weights, const Eigen::VectorXd& prior_var);

}  // namespace fincon
