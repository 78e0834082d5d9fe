#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fincon/rng.hpp"

namespace fincon {

/// Draw from the generalized inverse Gaussian distribution with density
/// proportional to x^(p-1) exp(-(a x + b / x) / 2).
///
/// Requires a, b >= 0 and not both zero. With b = 0 the law is Gamma(p, a/2)
/// and needs p > 0; with a = 0 it is inverse-Gamma(-p, b/2) and needs p < 0.
/// Otherwise uses the ratio-of-uniforms family of Hörmann and Leydold
/// (with or without mode shift) and the Devroye-style rejection scheme for
/// small omega = sqrt(a b).
double sample_gig(double p, double a, double b, RngHandle& rng);

/// Symmetric-or-not Dirichlet draw. Gamma variates are generated in log space
/// so tiny concentrations (sparse mixtures) do not underflow to an all-zero
/// vector.
Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& concentrations, RngHandle& rng);

/// Index drawn with probability proportional to exp(log_weights).
int sample_categorical_log(std::span<const double> log_weights, RngHandle& rng);

/// Draw from N(P^{-1} r, P^{-1}) given the precision P and r. Throws
/// NumericalError when P is not positive definite.
Eigen::VectorXd sample_gaussian_precision(const Eigen::MatrixXd& precision,
                                          const Eigen::VectorXd& rhs, RngHandle& rng);

/// Log posterior kernel of the Dirichlet intensity p0 under weights ~ Dir(p0, ..., p0)
/// and p0 ~ Gamma(c0, c0 * G) (shape, rate).
double intensity_log_posterior(double p0, const Eigen::VectorXd& weights, double c0, int components);

struct IntensityStep {
  double value;
  bool accepted;
};

/// One log-scale random-walk Metropolis-Hastings update of the Dirichlet
/// intensity. A zero step size never moves.
IntensityStep mh_intensity_step(double p0, const Eigen::VectorXd& weights, double c0, int components,
                                RngHandle& rng, double step_size = 0.25);

/// Label-dependent part of a finite mixture state: per-unit labels in
/// [0, G), component means (one column per component) and weights.
struct MixtureLabels {
  std::vector<int> labels;
  Eigen::MatrixXd means;
  Eigen::VectorXd weights;

  int components() const { return static_cast<int>(weights.size()); }
};

/// `perm[g]` is the new label of old component g.
MixtureLabels apply_permutation(const MixtureLabels& state, std::span<const int> perm);
std::vector<int> invert_permutation(std::span<const int> perm);
std::vector<int> random_permutation(int n, RngHandle& rng);

struct Relabeling {
  MixtureLabels state;
  std::vector<int> permutation;
};

/// Random permutation sampler step: one uniform permutation applied jointly to
/// weights, means and labels.
Relabeling random_permutation_relabel(const MixtureLabels& state, RngHandle& rng);

}  // namespace fincon
