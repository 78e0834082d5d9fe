#include "fincon/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fincon/error.hpp"

namespace fincon {

namespace {

// Mode of the standardized GIG with density x^(lambda-1) exp(-omega (x + 1/x) / 2).
double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) {
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  }
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

double gig_rou_noshift(double lambda, double omega, RngHandle& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

double gig_rou_shift(double lambda, double omega, RngHandle& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Roots of the cubic bounding the minimal enclosing rectangle.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = (2.0 * (lambda - 1.0) * xm / omega - 1.0);
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a three-piece dominating density; valid for 0 <= lambda < 1
// and small omega where the ratio-of-uniforms bounds are poor.
double gig_small_omega(double lambda, double omega, RngHandle& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  double k1;
  double k2;
  area[0] = k0 * x0;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                            : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];

  for (;;) {
    double v = total * rng.uniform();
    double x;
    double hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double lo = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

double sample_gig(double p, double a, double b, RngHandle& rng) {
  if (!std::isfinite(p) || !std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < 0.0) {
    throw ValidationError("sample_gig: parameters must be finite with a, b >= 0");
  }
  if (a == 0.0 && b == 0.0) throw ValidationError("sample_gig: a and b cannot both be zero");
  if (b == 0.0) {
    if (!(p > 0.0)) throw ValidationError("sample_gig: b = 0 requires p > 0");
    return rng.gamma(p, a / 2.0);
  }
  if (a == 0.0) {
    if (!(p < 0.0)) throw ValidationError("sample_gig: a = 0 requires p < 0");
    return 1.0 / rng.gamma(-p, b / 2.0);
  }

  const double lambda = std::abs(p);
  const double omega = std::sqrt(a * b);
  const double alpha = std::sqrt(b / a);

  // Below this omega the law is numerically indistinguishable from its
  // Gamma / inverse-Gamma boundary.
  if (omega < 1e-12 && p > 0.0) return rng.gamma(p, a / 2.0);
  if (omega < 1e-12 && p < 0.0) return 1.0 / rng.gamma(-p, b / 2.0);

  double x;
  if (lambda > 2.0 || omega > 3.0) {
    x = gig_rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = gig_rou_noshift(lambda, omega, rng);
  } else {
    x = gig_small_omega(lambda, omega, rng);
  }
  return p < 0.0 ? alpha / x : alpha * x;
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& concentrations, RngHandle& rng) {
  const auto n = concentrations.size();
  if (n == 0) throw ValidationError("sample_dirichlet: empty concentration vector");
  for (Eigen::Index g = 0; g < n; ++g) {
    if (!(concentrations[g] > 0.0) || !std::isfinite(concentrations[g])) {
      throw ValidationError("sample_dirichlet: concentrations must be positive, got " +
                            std::to_string(concentrations[g]));
    }
  }
  if (n == 1) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd logs(n);
  for (Eigen::Index g = 0; g < n; ++g) logs[g] = rng.log_gamma_unit(concentrations[g]);
  const double m = logs.maxCoeff();
  Eigen::VectorXd out = (logs.array() - m).exp();
  out /= out.sum();
  return out;
}

int sample_categorical_log(std::span<const double> log_weights, RngHandle& rng) {
  if (log_weights.empty()) throw ValidationError("sample_categorical_log: no categories");
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(m)) throw NumericalError("sample_categorical_log: no finite weight");
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - m);
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    u -= std::exp(log_weights[k] - m);
    if (u <= 0.0) return static_cast<int>(k);
  }
  // Rounding can leave a sliver of mass; fall back to the last finite category.
  for (std::size_t k = log_weights.size(); k-- > 0;) {
    if (std::isfinite(log_weights[k])) return static_cast<int>(k);
  }
  return static_cast<int>(log_weights.size()) - 1;
}

Eigen::VectorXd sample_gaussian_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs,
                                          RngHandle& rng) {
  const auto n = precision.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("sample_gaussian_precision: precision matrix is not positive definite");
  }
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  // mean = P^{-1} r; P = U'U with U = L'; draw = mean + U^{-1} z.
  Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd noise = llt.matrixU().solve(z);
  Eigen::VectorXd out = mean + noise;
  if (!out.allFinite()) throw NumericalError("sample_gaussian_precision: non-finite draw");
  return out;
}

double intensity_log_posterior(double p0, const Eigen::VectorXd& weights, double c0, int components) {
  if (!(p0 > 0.0)) return -std::numeric_limits<double>::infinity();
  const double g = components;
  double sum_log = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    sum_log += std::log(std::max(weights[k], std::numeric_limits<double>::min()));
  }
  const double log_dirichlet = std::lgamma(g * p0) - g * std::lgamma(p0) + (p0 - 1.0) * sum_log;
  const double log_prior = (c0 - 1.0) * std::log(p0) - c0 * g * p0;
  return log_dirichlet + log_prior;
}

IntensityStep mh_intensity_step(double p0, const Eigen::VectorXd& weights, double c0, int components,
                                RngHandle& rng, double step_size) {
  if (weights.size() != components) {
    throw ValidationError("mh_intensity_step: weight vector length differs from component count");
  }
  if (step_size <= 0.0) return {p0, false};
  const double proposal = p0 * std::exp(step_size * rng.normal());
  // The log(proposal / p0) term is the Jacobian of the log-scale walk.
  const double log_ratio = intensity_log_posterior(proposal, weights, c0, components) -
                           intensity_log_posterior(p0, weights, c0, components) +
                           std::log(proposal) - std::log(p0);
  if (std::isfinite(log_ratio) && std::log(rng.uniform()) < log_ratio) return {proposal, true};
  return {p0, false};
}

MixtureLabels apply_permutation(const MixtureLabels& state, std::span<const int> perm) {
  const int g = state.components();
  if (static_cast<int>(perm.size()) != g || state.means.cols() != g) {
    throw ValidationError("apply_permutation: permutation length does not match the component count");
  }
  MixtureLabels out;
  out.weights.resize(g);
  out.means.resize(state.means.rows(), g);
  for (int k = 0; k < g; ++k) {
    out.weights[perm[k]] = state.weights[k];
    out.means.col(perm[k]) = state.means.col(k);
  }
  out.labels.reserve(state.labels.size());
  for (int label : state.labels) out.labels.push_back(perm[label]);
  return out;
}

std::vector<int> invert_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = static_cast<int>(k);
  return inv;
}

std::vector<int> random_permutation(int n, RngHandle& rng) {
  std::vector<int> perm(n);
  for (int k = 0; k < n; ++k) perm[k] = k;
  for (int k = n - 1; k > 0; --k) {
    const auto j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k) + 1));
    std::swap(perm[k], perm[j]);
  }
  return perm;
}

Relabeling random_permutation_relabel(const MixtureLabels& state, RngHandle& rng) {
  auto perm = random_permutation(state.components(), rng);
  return {apply_permutation(state, perm), std::move(perm)};
}

}  // namespace fincon
