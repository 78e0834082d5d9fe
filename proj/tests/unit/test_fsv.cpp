#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fincon/error.hpp"
#include "fincon/fsv.hpp"
#include "fincon/rng.hpp"

using namespace fincon;

namespace {

FsvState make_state(Eigen::Index k, Eigen::Index d, Eigen::Index t) {
  FsvState s;
  s.loadings = Eigen::MatrixXd::Zero(k, d);
  s.factors = Eigen::MatrixXd::Zero(t, d);
  s.factor_logvar = Eigen::MatrixXd::Zero(t, d);
  s.idio_logvar = Eigen::MatrixXd::Zero(t, k);
  s.factor_rho = Eigen::VectorXd::Constant(d, 0.9);
  s.factor_sigma2 = Eigen::VectorXd::Constant(d, 0.1);
  s.idio_mean = Eigen::VectorXd::Zero(k);
  s.idio_rho = Eigen::VectorXd::Constant(k, 0.9);
  s.idio_sigma2 = Eigen::VectorXd::Constant(k, 0.1);
  s.local_scale = Eigen::MatrixXd::Ones(k, d);
  s.row_scale = Eigen::VectorXd::Ones(k);
  return s;
}

FsvState random_state(Eigen::Index k, Eigen::Index d, Eigen::Index t, RngHandle& rng) {
  FsvState s = make_state(k, d, t);
  for (Eigen::Index i = 0; i < s.loadings.size(); ++i) s.loadings.data()[i] = 2.0 * rng.normal();
  for (Eigen::Index i = 0; i < s.factors.size(); ++i) s.factors.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < s.factor_logvar.size(); ++i) s.factor_logvar.data()[i] = 3.0 * rng.normal();
  for (Eigen::Index i = 0; i < s.idio_logvar.size(); ++i) s.idio_logvar.data()[i] = 3.0 * rng.normal();
  return s;
}

// Residuals from a known FSV process with persistent log-volatilities.
Eigen::MatrixXd simulate_fsv(const Eigen::MatrixXd& loadings, Eigen::Index t, double idio_sd, RngHandle& rng) {
  const auto k = loadings.rows();
  const auto d = loadings.cols();
  Eigen::MatrixXd e(t, k);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
  for (Eigen::Index s = 0; s < t; ++s) {
    Eigen::VectorXd f(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      h[j] = 0.95 * h[j] + 0.2 * rng.normal();
      f[j] = std::exp(0.5 * h[j]) * rng.normal();
    }
    for (Eigen::Index i = 0; i < k; ++i) e(s, i) = loadings.row(i).dot(f) + idio_sd * rng.normal();
  }
  return e;
}

}  // namespace

TEST(LogChi2Mixture, MomentsMatchLogChiSquare) {
  double mean = 0.0, second = 0.0, mass = 0.0;
  for (std::size_t c = 0; c < LogChi2Mixture::prob.size(); ++c) {
    mass += LogChi2Mixture::prob[c];
    mean += LogChi2Mixture::prob[c] * LogChi2Mixture::mean[c];
    second += LogChi2Mixture::prob[c] * (LogChi2Mixture::var[c] + LogChi2Mixture::mean[c] * LogChi2Mixture::mean[c]);
  }
  EXPECT_NEAR(mass, 1.0, 1e-4);
  // log chi^2_1: mean digamma(1/2) + log 2, variance pi^2 / 2.
  EXPECT_NEAR(mean, -1.2703628454614782, 2e-3);
  EXPECT_NEAR(second - mean * mean, std::numbers::pi * std::numbers::pi / 2.0, 2e-2);
}

TEST(CovarianceAt, HandArithmetic) {
  FsvState s = make_state(2, 1, 3);
  s.loadings << 1.0, 1.0;
  Eigen::Matrix2d expected;
  expected << 2, 1, 1, 2;
  EXPECT_EQ(covariance_at(s, 1), expected);
}

TEST(CovarianceAt, ZeroLoadingsGiveDiagonal) {
  RngHandle rng(1);
  FsvState s = random_state(3, 2, 4, rng);
  s.loadings.setZero();
  const Eigen::MatrixXd c = covariance_at(s, 2);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  for (int j = 0; j < 3; ++j) expected(j, j) = std::exp(s.idio_logvar(2, j));
  EXPECT_EQ(c, expected);
  EXPECT_THROW(covariance_at(s, 4), ValidationError);
  EXPECT_THROW(covariance_at(s, -1), ValidationError);
}

TEST(CovarianceAt, RandomStatesArePositiveDefinite) {
  RngHandle rng(2);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto k = 2 + static_cast<Eigen::Index>(rng.uniform_index(5));
    const auto d = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(k) + 1));
    const FsvState s = random_state(k, d, 5, rng);
    const auto t = static_cast<Eigen::Index>(rng.uniform_index(5));
    const Eigen::MatrixXd c = covariance_at(s, t);
    ASSERT_LT((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-12 * c.cwiseAbs().maxCoeff());
    ASSERT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(SignNormalization, CovarianceInvariant) {
  RngHandle rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    FsvState s = random_state(4, 2, 6, rng);
    s.loadings(0, 0) = -std::abs(s.loadings(0, 0));
    const FsvState before = s;
    normalize_signs(s);
    EXPECT_GE(s.loadings(0, 0), 0.0);
    EXPECT_GE(s.loadings(1, 1), 0.0);
    for (Eigen::Index t = 0; t < 6; ++t) {
      EXPECT_LT((covariance_at(s, t) - covariance_at(before, t)).cwiseAbs().maxCoeff(), 1e-12);
      // The common component L f_t is unchanged.
      EXPECT_LT((s.loadings * s.factors.row(t).transpose() - before.loadings * before.factors.row(t).transpose())
                    .cwiseAbs()
                    .maxCoeff(),
                1e-12);
    }
  }
}

TEST(LoadingPosterior, MatchesAugmentedLeastSquares) {
  // Three observations, two factors held at known values.
  Eigen::MatrixXd f(3, 2);
  f << 1.0, 0.5, -0.3, 2.0, 0.8, -1.1;
  const Eigen::Vector3d y(0.7, 1.9, -0.4);
  const Eigen::Vector3d w(2.0, 0.5, 1.5);
  const Eigen::Vector2d prior_var(0.8, 3.0);
  const GaussianMoments got = loading_row_posterior(y, f, w, prior_var);
  // Stack [sqrt(W) F; diag(1/sqrt(prior_var))] against [sqrt(W) y; 0] and solve by QR.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 2);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
  for (int t = 0; t < 3; ++t) {
    a.row(t) = std::sqrt(w[t]) * f.row(t);
    b[t] = std::sqrt(w[t]) * y[t];
  }
  a(3, 0) = 1.0 / std::sqrt(prior_var[0]);
  a(4, 1) = 1.0 / std::sqrt(prior_var[1]);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Vector2d mean = qr.solve(b);
  const Eigen::Matrix2d r = qr.matrixQR().topRows(2).triangularView<Eigen::Upper>();
  const Eigen::Matrix2d cov = (r.transpose() * r).inverse();
  EXPECT_LT((got.mean - mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((got.covariance - cov).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ar1Params, RecoversKnownProcess) {
  RngHandle rng(4);
  const Ar1Params truth{-1.0, 0.8, 0.25};
  const int n = 4000;
  Eigen::VectorXd x(n);
  x[0] = truth.mean + std::sqrt(truth.sigma2 / (1 - truth.rho * truth.rho)) * rng.normal();
  for (int t = 1; t < n; ++t) x[t] = truth.mean + truth.rho * (x[t - 1] - truth.mean) + std::sqrt(truth.sigma2) * rng.normal();
  FsvPriors priors;
  Ar1Params p{0.0, 0.5, 1.0};
  double m = 0, r = 0, s = 0;
  const int sweeps = 3000;
  for (int i = 0; i < sweeps + 500; ++i) {
    p = sample_ar1_params(x, p, priors, true, rng);
    ASSERT_LT(std::abs(p.rho), 1.0);
    ASSERT_GT(p.sigma2, 0.0);
    if (i >= 500) {
      m += p.mean;
      r += p.rho;
      s += p.sigma2;
    }
  }
  EXPECT_NEAR(m / sweeps, truth.mean, 0.1);
  EXPECT_NEAR(r / sweeps, truth.rho, 0.03);
  EXPECT_NEAR(s / sweeps, truth.sigma2, 0.02);
}

TEST(Ar1Params, ZeroMeanIsKept) {
  RngHandle rng(5);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(50, -1.0, 1.0);
  const Ar1Params p = sample_ar1_params(x, {0.0, 0.9, 0.1}, FsvPriors{}, false, rng);
  EXPECT_EQ(p.mean, 0.0);
}

TEST(LogVariancePath, TracksSimulatedVolatility) {
  RngHandle rng(6);
  const int n = 1500;
  const Ar1Params truth{0.0, 0.97, 0.05};
  Eigen::VectorXd h(n), e(n);
  h[0] = 0.0;
  for (int t = 0; t < n; ++t) {
    if (t > 0) h[t] = truth.rho * h[t - 1] + std::sqrt(truth.sigma2) * rng.normal();
    e[t] = std::exp(0.5 * h[t]) * rng.normal();
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  const int sweeps = 400;
  for (int i = 0; i < sweeps + 100; ++i) {
    x = sample_log_variance_path(e, x, truth, rng);
    ASSERT_TRUE(x.allFinite());
    if (i >= 100) mean += x / sweeps;
  }
  const double corr = ((mean.array() - mean.mean()) * (h.array() - h.mean())).sum() /
                      std::sqrt((mean.array() - mean.mean()).square().sum() * (h.array() - h.mean()).square().sum());
  EXPECT_GT(corr, 0.8);
}

TEST(FsvUpdate, FactorlessReduction) {
  RngHandle rng(7);
  Eigen::MatrixXd e(60, 3);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
  FsvState s = init_fsv_state(e, 0);
  ASSERT_EQ(s.num_factors(), 0);
  for (int i = 0; i < 20; ++i) s = fsv_update(e, std::move(s), FsvPriors{}, rng);
  EXPECT_EQ(s.loadings.cols(), 0);
  EXPECT_EQ(s.factors.cols(), 0);
  const Eigen::MatrixXd c = covariance_at(s, 10);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  for (int j = 0; j < 3; ++j) expected(j, j) = std::exp(s.idio_logvar(10, j));
  EXPECT_EQ(c, expected);
}

TEST(FsvUpdate, ZeroResidualsStayFinite) {
  RngHandle rng(8);
  const Eigen::MatrixXd e = Eigen::MatrixXd::Zero(40, 3);
  FsvState s = init_fsv_state(e, 1);
  for (int i = 0; i < 200; ++i) {
    s = fsv_update(e, std::move(s), FsvPriors{}, rng);
    ASSERT_TRUE(s.idio_logvar.allFinite());
    ASSERT_TRUE(s.factor_logvar.allFinite());
    ASSERT_TRUE(s.loadings.allFinite());
  }
  // log(0 + offset) is about -23; the paths head far below any data-driven level.
  EXPECT_LT(s.idio_logvar.mean(), -5.0);
}

TEST(FsvUpdate, StationarityAndSignsHoldEverySweep) {
  RngHandle rng(9);
  Eigen::MatrixXd l(4, 1);
  l << 0.8, 0.6, -0.5, 0.7;
  const Eigen::MatrixXd e = simulate_fsv(l, 200, 0.5, rng);
  FsvState s = init_fsv_state(e, 1);
  for (int i = 0; i < 300; ++i) {
    s = fsv_update(e, std::move(s), FsvPriors{}, rng);
    ASSERT_LT(s.idio_rho.cwiseAbs().maxCoeff(), 1.0);
    ASSERT_LT(s.factor_rho.cwiseAbs().maxCoeff(), 1.0);
    ASSERT_GT(s.idio_sigma2.minCoeff(), 0.0);
    ASSERT_GT(s.local_scale.minCoeff(), 0.0);
    ASSERT_GT(s.row_scale.minCoeff(), 0.0);
    ASSERT_GE(s.loadings(0, 0), 0.0);
    validate_fsv_state(s);
  }
}

TEST(FsvUpdate, RecoversLoadings) {
  RngHandle rng(10);
  Eigen::MatrixXd l(4, 1);
  l << 0.8, 0.6, -0.5, 0.7;
  const Eigen::MatrixXd e = simulate_fsv(l, 600, 0.5, rng);
  FsvState s = init_fsv_state(e, 1);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(4, 1);
  const int sweeps = 10000, burn = 2000;
  for (int i = 0; i < sweeps; ++i) {
    s = fsv_update(e, std::move(s), FsvPriors{}, rng);
    if (i >= burn) mean += s.loadings / (sweeps - burn);
  }
  const double sign = mean(0, 0) * l(0, 0) >= 0 ? 1.0 : -1.0;
  EXPECT_LT((sign * mean - l).cwiseAbs().maxCoeff(), 0.15) << mean.transpose();
}

TEST(FsvState, ValidationRejectsBadStates) {
  FsvState s = make_state(3, 1, 5);
  validate_fsv_state(s);
  FsvState bad = s;
  bad.idio_rho[0] = 1.0;
  EXPECT_THROW(validate_fsv_state(bad), ValidationError);
  bad = s;
  bad.factor_sigma2[0] = 0.0;
  EXPECT_THROW(validate_fsv_state(bad), ValidationError);
  bad = s;
  bad.factors.resize(4, 1);
  EXPECT_THROW(validate_fsv_state(bad), ValidationError);
  EXPECT_THROW(init_fsv_state(Eigen::MatrixXd::Zero(10, 2), 3), ValidationError);
}
