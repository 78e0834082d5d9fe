#include "simulate.hpp"

#include <Eigen/Eigenvalues>

#include "fincon/pvar.hpp"

namespace fincon::testing {

Eigen::MatrixXd simulate_var(const Eigen::MatrixXd& system, int lags, int periods, int burn, const ShockFn& shocks,
                             RngHandle& rng) {
  const auto k = system.rows();
  const int total = periods + burn + lags;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(total, k);
  for (int t = lags; t < total; ++t) {
    Eigen::VectorXd v = system.col(0);
    for (int p = 1; p <= lags; ++p) v += system.block(0, 1 + (p - 1) * k, k, k) * y.row(t - p).transpose();
    y.row(t) = (v + shocks(t - lags - burn, rng)).transpose();
  }
  return y.bottomRows(periods);
}

ShockFn gaussian_shocks(const Eigen::MatrixXd& covariance) {
  const Eigen::MatrixXd chol = covariance.llt().matrixL();
  return [chol](int, RngHandle& rng) {
    Eigen::VectorXd z(chol.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return Eigen::VectorXd(chol * z);
  };
}

double spectral_radius(const Eigen::MatrixXd& system, int lags) {
  const Eigen::MatrixXd c = companion_matrix(system, lags);
  return Eigen::EigenSolver<Eigen::MatrixXd>(c, false).eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd random_stable_system(int k, int lags, double max_modulus, RngHandle& rng) {
  Eigen::MatrixXd s(k, 1 + k * lags);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = 0.4 * rng.normal();
  const double r = spectral_radius(s, lags);
  if (r > max_modulus) {
    // Scaling Phi_p by c^p scales every companion eigenvalue by c.
    const double c = max_modulus / r;
    for (int p = 1; p <= lags; ++p) s.block(0, 1 + (p - 1) * k, k, k) *= std::pow(c, p);
  }
  return s;
}

Eigen::MatrixXd random_spd(int k, RngHandle& rng) {
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a * a.transpose() / k + 0.5 * Eigen::MatrixXd::Identity(k, k);
}

PanelData to_panel(const Eigen::MatrixXd& data, const std::vector<std::string>& countries, YearMonth start,
                   const std::string& variable) {
  std::vector<YearMonth> dates;
  for (Eigen::Index t = 0; t < data.rows(); ++t) dates.push_back(start + static_cast<int>(t));
  return make_panel(std::move(dates), countries, variable, data);
}

}  // namespace fincon::testing
