#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fincon/error.hpp"
#include "fincon/samplers.hpp"

using namespace fincon;

namespace {

// Unnormalized GIG density integrals by adaptive Gauss-Kronrod.
double gig_integral(double p, double a, double b, double power, double lo, double hi) {
  auto f = [&](double x) { return x <= 0.0 ? 0.0 : std::pow(x, p - 1.0 + power) * std::exp(-0.5 * (a * x + b / x)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-12);
}

struct GigCase {
  double p, a, b;
};

double upper_limit(const GigCase& c) {
  // Far enough into the exponential tail for every case below.
  return c.a > 0.0 ? 80.0 / c.a + 50.0 : 1e6;
}

std::vector<double> gig_draws(const GigCase& c, int n, std::uint64_t seed) {
  RngHandle rng(seed, 1);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& x : out) x = sample_gig(c.p, c.a, c.b, rng);
  return out;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST(Gig, GammaBoundary) {
  const double lambda = 2.5;
  const auto draws = gig_draws({1.0, 2.0 * lambda, 0.0}, 100000, 1);
  const double se = (1.0 / lambda) / std::sqrt(draws.size());
  EXPECT_NEAR(mean_of(draws), 1.0 / lambda, 3.0 * se);
}

TEST(Gig, InverseGaussianBoundary) {
  const double a = 2.0, b = 3.0;
  const auto draws = gig_draws({-0.5, a, b}, 100000, 2);
  const double mu = std::sqrt(b / a);
  const double var = mu * mu * mu / b;  // inverse Gaussian with shape b
  EXPECT_NEAR(mean_of(draws), mu, 3.0 * std::sqrt(var / draws.size()));
}

TEST(Gig, InverseGammaBoundary) {
  // a = 0: inverse-Gamma(-p, b/2); mean (b/2) / (-p - 1).
  const auto draws = gig_draws({-4.0, 0.0, 6.0}, 100000, 3);
  const double mean = 3.0 / 3.0;
  const double var = mean * mean / 2.0;
  EXPECT_NEAR(mean_of(draws), mean, 3.0 * std::sqrt(var / draws.size()));
}

TEST(Gig, MomentsMatchQuadrature) {
  const std::vector<GigCase> cases = {{0.35, 1.7, 0.9}, {3.5, 2.0, 1.0}, {-2.5, 1.5, 3.0}, {0.1, 5.0, 5.0},
                                      {1.2, 0.3, 0.2}};
  std::uint64_t seed = 10;
  for (const auto& c : cases) {
    const auto draws = gig_draws(c, 200000, seed++);
    const double hi = upper_limit(c);
    const double z = gig_integral(c.p, c.a, c.b, 0.0, 0.0, hi);
    for (int k = 1; k <= 4; ++k) {
      const double exact = gig_integral(c.p, c.a, c.b, k, 0.0, hi) / z;
      const double exact2k = gig_integral(c.p, c.a, c.b, 2 * k, 0.0, hi) / z;
      const double se = std::sqrt((exact2k - exact * exact) / draws.size());
      double emp = 0.0;
      for (double x : draws) emp += std::pow(x, k);
      emp /= draws.size();
      EXPECT_NEAR(emp, exact, std::max(4.0 * se, 1e-3 * exact))
          << "p=" << c.p << " a=" << c.a << " b=" << c.b << " moment " << k;
    }
  }
}

TEST(Gig, KolmogorovSmirnovAgainstQuadratureCdf) {
  const std::vector<GigCase> cases = {{0.35, 1.7, 0.9}, {0.2, 0.01, 0.01}, {-0.7, 0.05, 0.08},
                                      {3.5, 2.0, 1.0},   {-2.5, 1.5, 3.0},  {0.1, 5.0, 5.0}};
  std::uint64_t seed = 30;
  for (const auto& c : cases) {
    auto draws = gig_draws(c, 100000, seed++);
    std::sort(draws.begin(), draws.end());
    const double hi = std::max(upper_limit(c), draws.back() * 2.0);
    const double z = gig_integral(c.p, c.a, c.b, 0.0, 0.0, hi);
    double d = 0.0;
    double prev_x = 0.0, cdf = 0.0;
    for (int q = 1; q < 400; ++q) {
      const double x = draws[static_cast<std::size_t>(q * draws.size() / 400)];
      cdf += gig_integral(c.p, c.a, c.b, 0.0, prev_x, x) / z;
      prev_x = x;
      const double emp = static_cast<double>(std::upper_bound(draws.begin(), draws.end(), x) - draws.begin()) /
                         draws.size();
      d = std::max(d, std::abs(emp - cdf));
    }
    EXPECT_LT(d, 0.01) << "p=" << c.p << " a=" << c.a << " b=" << c.b;
  }
}

TEST(Gig, RejectsInvalidParameters) {
  RngHandle rng(1);
  EXPECT_THROW(sample_gig(1.0, 0.0, 0.0, rng), ValidationError);
  EXPECT_THROW(sample_gig(-1.0, 1.0, 0.0, rng), ValidationError);
  EXPECT_THROW(sample_gig(1.0, 0.0, 1.0, rng), ValidationError);
  EXPECT_THROW(sample_gig(1.0, -1.0, 1.0, rng), ValidationError);
}

TEST(Dirichlet, ConcentrationLimit) {
  RngHandle rng(4);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd w = sample_dirichlet(Eigen::Vector2d(1e6, 1e6), rng);
    EXPECT_NEAR(w[0], 0.5, 0.01);
    EXPECT_NEAR(w[1], 0.5, 0.01);
  }
}

TEST(Dirichlet, SingleComponent) {
  RngHandle rng(4);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_dirichlet(Eigen::VectorXd::Constant(1, 0.3), rng)[0], 1.0);
}

TEST(Dirichlet, MeanMatchesMomentFormula) {
  RngHandle rng(5);
  const Eigen::Vector3d alpha(2, 3, 5);
  const int n = 100000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) sum += sample_dirichlet(alpha, rng);
  const double a0 = alpha.sum();
  for (int j = 0; j < 3; ++j) {
    const double mean = alpha[j] / a0;
    const double var = alpha[j] * (a0 - alpha[j]) / (a0 * a0 * (a0 + 1.0));
    EXPECT_NEAR(sum[j] / n, mean, 3.0 * std::sqrt(var / n));
  }
}

TEST(Dirichlet, TinyConcentrationsStayOnSimplex) {
  RngHandle rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd w = sample_dirichlet(Eigen::VectorXd::Constant(4, 1e-4), rng);
    ASSERT_TRUE(w.allFinite());
    ASSERT_NEAR(w.sum(), 1.0, 1e-12);
    ASSERT_GE(w.minCoeff(), 0.0);
  }
}

TEST(Categorical, FrequenciesMatchWeights) {
  RngHandle rng(7);
  const std::vector<double> logw = {std::log(0.2), std::log(0.5), std::log(0.3)};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_categorical_log(logw, rng))];
  const double p[] = {0.2, 0.5, 0.3};
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(counts[j] / double(n), p[j], 3.5 * std::sqrt(p[j] * (1 - p[j]) / n));
}

TEST(Categorical, HugeLogWeightsAreStable) {
  RngHandle rng(8);
  const std::vector<double> logw = {-1e6, -1e6 + std::log(3.0)};
  int ones = 0;
  for (int i = 0; i < 40000; ++i) ones += sample_categorical_log(logw, rng);
  EXPECT_NEAR(ones / 40000.0, 0.75, 0.015);
}

TEST(GaussianPrecision, MomentsAndFailures) {
  RngHandle rng(9);
  Eigen::Matrix2d prec;
  prec << 2.0, 0.5, 0.5, 1.0;
  const Eigen::Vector2d rhs(1.0, -1.0);
  const Eigen::Vector2d mean = prec.inverse() * rhs;
  const Eigen::Matrix2d cov = prec.inverse();
  const int n = 100000;
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  Eigen::Matrix2d ss = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = sample_gaussian_precision(prec, rhs, rng);
    s += x;
    ss += x * x.transpose();
  }
  s /= n;
  const Eigen::Matrix2d emp_cov = ss / n - s * s.transpose();
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(s[j], mean[j], 3.5 * std::sqrt(cov(j, j) / n));
  EXPECT_LT((emp_cov - cov).cwiseAbs().maxCoeff(), 0.02);

  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(sample_gaussian_precision(bad, rhs, rng), NumericalError);
}

namespace {

// Batch-means standard error of a correlated chain.
double batch_se(const std::vector<double>& x, int batches = 50) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += x[b * len + i];
    means.push_back(s / len);
  }
  const double m = mean_of(means);
  double v = 0.0;
  for (double y : means) v += (y - m) * (y - m);
  return std::sqrt(v / (batches - 1) / batches);
}

std::vector<double> intensity_chain(const Eigen::VectorXd& weights, double c0, int g, int n, std::uint64_t seed) {
  RngHandle rng(seed);
  double p0 = 1.0;
  std::vector<double> out;
  for (int i = 0; i < n + 2000; ++i) {
    p0 = mh_intensity_step(p0, weights, c0, g, rng).value;
    if (i >= 2000) out.push_back(p0);
  }
  return out;
}

}  // namespace

TEST(Intensity, ZeroStepNeverMoves) {
  RngHandle rng(1);
  const Eigen::Vector4d w(0.1, 0.2, 0.3, 0.4);
  double p0 = 0.7;
  for (int i = 0; i < 1000; ++i) {
    const auto step = mh_intensity_step(p0, w, 10.0, 4, rng, 0.0);
    ASSERT_EQ(step.value, 0.7);
    p0 = step.value;
  }
}

TEST(Intensity, SingleComponentReturnsGammaPrior) {
  // With G = 1 the Dirichlet factor is constant, leaving Gamma(c0, c0).
  const double c0 = 10.0;
  const auto chain = intensity_chain(Eigen::VectorXd::Ones(1), c0, 1, 200000, 2);
  EXPECT_NEAR(mean_of(chain), 1.0, 3.0 * batch_se(chain));
  double v = 0.0;
  const double m = mean_of(chain);
  for (double x : chain) v += (x - m) * (x - m);
  EXPECT_NEAR(v / chain.size(), 1.0 / c0, 0.01);
}

TEST(Intensity, StationaryMeanMatchesGridPosterior) {
  const int g = 4;
  const double c0 = 10.0;
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(g, 1.0 / g);
  double num = 0.0, den = 0.0;
  const double h = 1e-4;
  for (double p = h / 2; p < 20.0; p += h) {
    const double dens = std::exp(intensity_log_posterior(p, w, c0, g) - intensity_log_posterior(1.0, w, c0, g));
    num += p * dens;
    den += dens;
  }
  const double grid_mean = num / den;
  const auto chain = intensity_chain(w, c0, g, 200000, 3);
  EXPECT_NEAR(mean_of(chain) / grid_mean, 1.0, 0.02);
}

TEST(Intensity, LogPosteriorMatchesDirichletTimesGamma) {
  // Independent evaluation of log Dir(w | p0) + log Gamma(p0 | c0, c0 G) up to constants.
  const Eigen::Vector3d w(0.2, 0.3, 0.5);
  const double c0 = 4.0;
  auto direct = [&](double p) {
    double s = std::lgamma(3 * p) - 3 * std::lgamma(p);
    for (int j = 0; j < 3; ++j) s += (p - 1) * std::log(w[j]);
    return s + (c0 - 1) * std::log(p) - c0 * 3 * p;
  };
  const double base = intensity_log_posterior(0.5, w, c0, 3) - direct(0.5);
  for (double p : {0.01, 0.1, 1.0, 3.0}) EXPECT_NEAR(intensity_log_posterior(p, w, c0, 3) - direct(p), base, 1e-9);
}

namespace {

MixtureLabels random_mixture(int n, int g, int dim, RngHandle& rng) {
  MixtureLabels s;
  for (int i = 0; i < n; ++i) s.labels.push_back(static_cast<int>(rng.uniform_index(g)));
  s.means.resize(dim, g);
  for (Eigen::Index i = 0; i < s.means.size(); ++i) s.means.data()[i] = 2.0 * rng.normal();
  s.weights = sample_dirichlet(Eigen::VectorXd::Constant(g, 1.0), rng);
  return s;
}

double mixture_density(const MixtureLabels& s, const Eigen::VectorXd& x) {
  double d = 0.0;
  for (int g = 0; g < s.components(); ++g) d += s.weights[g] * std::exp(-0.5 * (x - s.means.col(g)).squaredNorm());
  return d;
}

}  // namespace

TEST(Relabel, SingleComponentIsIdentity) {
  RngHandle rng(1);
  const MixtureLabels s = random_mixture(5, 1, 2, rng);
  const Relabeling r = random_permutation_relabel(s, rng);
  EXPECT_EQ(r.permutation, std::vector<int>{0});
  EXPECT_EQ(r.state.labels, s.labels);
  EXPECT_EQ(r.state.means, s.means);
  EXPECT_EQ(r.state.weights, s.weights);
}

TEST(Relabel, MixtureDensityInvariant) {
  RngHandle rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const MixtureLabels s = random_mixture(8, 4, 3, rng);
    const Relabeling r = random_permutation_relabel(s, rng);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd x(3);
      for (int j = 0; j < 3; ++j) x[j] = 3.0 * rng.normal();
      EXPECT_NEAR(mixture_density(r.state, x), mixture_density(s, x), 1e-12);
    }
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      EXPECT_EQ(r.state.means.col(r.state.labels[i]), s.means.col(s.labels[i]));
      EXPECT_EQ(r.state.weights[r.state.labels[i]], s.weights[s.labels[i]]);
    }
  }
}

TEST(Relabel, InverseRestoresBitForBit) {
  RngHandle rng(3);
  const MixtureLabels s = random_mixture(10, 5, 2, rng);
  const Relabeling r = random_permutation_relabel(s, rng);
  const MixtureLabels back = apply_permutation(r.state, invert_permutation(r.permutation));
  EXPECT_EQ(back.labels, s.labels);
  EXPECT_EQ(back.means, s.means);
  EXPECT_EQ(back.weights, s.weights);
}

TEST(Relabel, PermutationsAreUniform) {
  RngHandle rng(4);
  std::map<std::vector<int>, int> counts;
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[random_permutation(3, rng)];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [perm, c] : counts) EXPECT_NEAR(c, n / 6.0, 4.0 * std::sqrt(n / 6.0));
}
