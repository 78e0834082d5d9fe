#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fincon/dataio.hpp"
#include "fincon/rng.hpp"

namespace fincon::testing {

/// Shock generator: returns the period-t innovation vector.
using ShockFn = std::function<Eigen::VectorXd(int t, RngHandle& rng)>;

/// Simulates y_t = alpha + sum_p Phi_p y_{t-p} + e_t from the [alpha | Phi_1 ... Phi_P]
/// system matrix, discarding `burn` initial periods. Returns T x K.
Eigen::MatrixXd simulate_var(const Eigen::MatrixXd& system, int lags, int periods, int burn, const ShockFn& shocks,
                             RngHandle& rng);

/// Gaussian shocks with a fixed covariance.
ShockFn gaussian_shocks(const Eigen::MatrixXd& covariance);

/// Random system whose companion matrix has spectral radius <= max_modulus.
Eigen::MatrixXd random_stable_system(int k, int lags, double max_modulus, RngHandle& rng);

/// Random symmetric positive definite matrix.
Eigen::MatrixXd random_spd(int k, RngHandle& rng);

/// Spectral radius of the companion form of a system matrix.
double spectral_radius(const Eigen::MatrixXd& system, int lags);

/// Wraps simulated data in a panel with monthly dates from `start`.
PanelData to_panel(const Eigen::MatrixXd& data, const std::vector<std::string>& countries, YearMonth start,
                   const std::string& variable);

}  // namespace fincon::testing
