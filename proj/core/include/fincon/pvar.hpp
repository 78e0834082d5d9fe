#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fincon/dataio.hpp"
#include "fincon/fsv.hpp"
#include "fincon/rng.hpp"

namespace fincon {

struct PvarConfig {
  int lags = 2;
  int components = 4;  // G_max
  int draws = 10000;   // total sweeps, burn-in included
  int burn_in = 4000;
  int variables = 1;   // M
  int factors = 1;     // d
  double a0 = 0.01, a1 = 0.01;  // v_j ~ IG(a0, a1)
  double b0 = 0.5, b1 = 0.5;    // lambda_j ~ G(b0, b1)
  double c0 = 10.0;             // p0 ~ G(c0, c0 G)
  double d0 = 0.01, d1 = 0.01;  // phi_i ~ G(d0, d1)
  double theta = 0.1;           // gamma_ij^2 ~ G(theta, theta)
  double intensity_step = 0.25;
  FsvPriors fsv;

  int retained() const { return draws - burn_in; }
  void validate() const;
};

/// Regression arrays for the panel VAR. Series are ordered country-major
/// (column i * M + v). Each country shares one regressor matrix across its M
/// equations: [1, own lags 1..P (M columns each), foreign lags ordered by lag,
/// then country j != i, then variable].
struct PvarDesign {
  int countries = 0;  // N
  int variables = 0;  // M
  int lags = 0;       // P
  Eigen::MatrixXd response;                // (T - P) x K
  std::vector<Eigen::MatrixXd> regressors;  // per country, (T - P) x (1 + MP + MP(N-1))
  Eigen::MatrixXd history;                 // last P rows of the data, oldest first
  std::vector<std::string> series_labels;  // K
  std::vector<YearMonth> dates;            // dates of the response rows

  int series() const { return countries * variables; }
  int domestic_per_equation() const { return 1 + variables * lags; }
  int foreign_per_equation() const { return variables * lags * (countries - 1); }
  int domestic_size() const { return variables * domestic_per_equation(); }  // m
  int foreign_size() const { return variables * foreign_per_equation(); }   // k
  Eigen::Index rows() const { return response.rows(); }
};

/// `data` is T x (N M), countries major. Requires T - P >= 1.
PvarDesign build_design(const Eigen::MatrixXd& data, int countries, int variables, int lags);
/// Uses the balanced sub-sample of a single-market panel (M = 1).
PvarDesign build_design(const PanelData& panel, int lags);

struct PvarState {
  Eigen::MatrixXd domestic;       // m x N, column i = c_i (equation-major)
  Eigen::MatrixXd foreign;        // k x N, column i = b_i (equation-major)
  Eigen::MatrixXd foreign_scale;  // gamma^2, k x N
  Eigen::VectorXd foreign_global; // phi_i, N
  std::vector<int> labels;        // delta_i in [0, G)
  Eigen::VectorXd weights;        // nu, G
  Eigen::MatrixXd means;          // mu_g, m x G
  Eigen::VectorXd common_var;     // diag(V), m
  Eigen::VectorXd lambda;         // m
  Eigen::VectorXd mu0;            // m
  Eigen::VectorXd range2;         // diag(R0), m
  Eigen::VectorXd m0;             // m
  double intensity = 0.25;        // p0
  FsvState fsv;

  int components() const { return static_cast<int>(weights.size()); }
};

void validate_pvar_state(const PvarState& state, const PvarDesign& design);

/// Starting values: equation-wise least squares, k-means labels, FSV from the
/// least-squares residuals.
PvarState init_pvar_state(const PvarDesign& design, const PvarConfig& config);

struct SweepStats {
  bool intensity_accepted = false;
};

PvarState gibbs_sweep(PvarState state, const PvarDesign& design, const PvarConfig& config, RngHandle& rng,
                      SweepStats* stats = nullptr);

/// Fitted values X_i [c_i; b_i] per equation, (T - P) x K.
Eigen::MatrixXd fitted_values(const PvarState& state, const PvarDesign& design);

/// K x (1 + K P) matrix [alpha | Phi_1 ... Phi_P] of the stacked system.
Eigen::MatrixXd system_matrix(const PvarState& state, const PvarDesign& design);

/// K P x K P companion matrix of the lag polynomial in a system matrix.
Eigen::MatrixXd companion_matrix(const Eigen::MatrixXd& system, int lags);

/// Gaussian conditional of one equation: y = X beta + e, e_t ~ N(0, 1/w_t),
/// prior beta ~ N(prior_mean, diag(1 / prior_precision)).
GaussianMoments coefficient_conditional(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& weights, const Eigen::VectorXd& prior_mean,
                                        const Eigen::VectorXd& prior_precision);

/// Log joint density of the mixture-and-shrinkage hierarchy plus the data
/// likelihood conditional on the FSV factors. Invariant to relabeling.
double log_joint_density(const PvarState& state, const PvarDesign& design, const PvarConfig& config);

/// Gaussian log-likelihood of the residuals under Sigma_t, summed over t.
double log_likelihood(const PvarState& state, const PvarDesign& design);

/// Per-draw FSV quantities needed for forecasting and decompositions.
struct FsvSnapshot {
  Eigen::MatrixXd loadings;
  Eigen::VectorXd factor_logvar;  // at the last period
  Eigen::VectorXd idio_logvar;
  Eigen::VectorXd factor_rho, factor_sigma2;
  Eigen::VectorXd idio_mean, idio_rho, idio_sigma2;

  /// Sigma at the last sample period.
  Eigen::MatrixXd covariance() const;
};

struct PosteriorDraws {
  int countries = 0;
  int variables = 0;
  int lags = 0;
  int components = 0;
  std::vector<std::string> series_labels;
  std::vector<YearMonth> dates;
  Eigen::MatrixXd history;  // last P observations, oldest first

  std::vector<Eigen::MatrixXd> system;   // K x (1 + K P) per draw
  std::vector<std::vector<int>> labels;  // N per draw
  std::vector<Eigen::VectorXd> weights;  // G per draw
  std::vector<double> intensity;
  std::vector<FsvSnapshot> fsv;
  Eigen::MatrixXd idio_logvar_mean;    // T x K posterior mean
  Eigen::MatrixXd factor_logvar_mean;  // T x d

  double intensity_acceptance = 0.0;
  std::vector<double> log_likelihood_trace;  // every sweep, burn-in included
  PvarConfig config;

  std::size_t size() const { return system.size(); }
  int series() const { return countries * variables; }
};

PosteriorDraws run_mcmc(const PvarDesign& design, const PvarConfig& config, RngHandle& rng);
PosteriorDraws run_mcmc(const PanelData& panel, const PvarConfig& config, RngHandle& rng);

/// N x G matrix of posterior membership frequencies after aligning every
/// draw's labels to the first retained draw.
Eigen::MatrixXd cluster_probabilities(const PosteriorDraws& draws);

/// Label map (exhaustive over permutations, G <= 8) maximizing agreement of
/// `labels` with `reference`; result[g] is the aligned label of g.
std::vector<int> align_labels(const std::vector<int>& labels, const std::vector<int>& reference, int components);

/// Predictive paths, one h x K matrix per retained draw. Without shocks the
/// recursion is deterministic.
std::vector<Eigen::MatrixXd> forecast(const PosteriorDraws& draws, int horizon, RngHandle& rng,
                                      bool with_shocks = true);

/// Pointwise median over predictive draws, h x K.
Eigen::MatrixXd forecast_median(const std::vector<Eigen::MatrixXd>& paths);

/// Writes `<prefix>_coefficients.csv`, `<prefix>_volatility.csv` and
/// `<prefix>.json` under `dir`.
void write_posterior(const PosteriorDraws& draws, const std::filesystem::path& dir, const std::string& prefix);

}  // namespace fincon
