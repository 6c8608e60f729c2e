#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <random>

#include "pmax/dataset.hpp"

namespace pmax::dgp {

/// Covariate dependence structure.
///  - Independent: every covariate iid truncated normal.
///  - BlockDependent: x = A w + v applied separately inside the nuisance and
///    test blocks with independent A draws, so there is dependence within
///    each block and none across.
///  - CrossBlockDependent: one A over the full (k_delta + k_theta) vector.
enum class Dependence { Independent, BlockDependent, CrossBlockDependent };

/// Design of the simulated covariates. `bound` is the truncation level U of
/// the primitive truncated-normal draws; +infinity disables truncation. For
/// the dependent types truncation applies to the primitive (w, v) draws, not
/// to the mixed x.
struct CovariateSpec {
  Eigen::Index k_delta = 0;
  Eigen::Index k_theta = 1;
  double bound = std::numeric_limits<double>::infinity();
  Dependence dependence = Dependence::Independent;
  std::uint64_t seed = 0;
};

/// Coefficient vector theta_0 of the data generating process. The named
/// alternatives fix magnitudes:
///   AltOne:   theta_0,1 = .0015, rest 0
///   AltTwo:   theta_0,i = .0002 * i / k_theta
///   AltThree: theta_0,i = .00015 for i <= 10, rest 0
///   LocalDrift: theta_0 = c .* sqrt(ln(k_theta) * Mhat_n / n), with the
///     fourth moment of the max l1-norm Mhat_n estimated from a pilot draw
///     (see resolve_theta).
/// The nuisance coefficients are always delta_0 = 1.
struct AlternativeSpec {
  enum class Kind { Null, AltOne, AltTwo, AltThree, Custom, LocalDrift };
  Kind kind = Kind::Null;
  Eigen::VectorXd custom;   ///< Custom: theta_0, length k_theta
  Eigen::VectorXd drift_c;  ///< LocalDrift: scale c, length 1 (broadcast) or k_theta

  static AlternativeSpec null() { return {}; }
  static AlternativeSpec alt_one() { return {Kind::AltOne, {}, {}}; }
  static AlternativeSpec alt_two() { return {Kind::AltTwo, {}, {}}; }
  static AlternativeSpec alt_three() { return {Kind::AltThree, {}, {}}; }
  static AlternativeSpec custom_theta(Eigen::VectorXd theta) {
    return {Kind::Custom, std::move(theta), {}};
  }
  static AlternativeSpec local_drift(double c) {
    return {Kind::LocalDrift, {}, Eigen::VectorXd::Constant(1, c)};
  }
  static AlternativeSpec local_drift(Eigen::VectorXd c) {
    return {Kind::LocalDrift, {}, std::move(c)};
  }
};

/// Population model for the identification oracle: zero-mean covariates with
/// covariance sigma_x, y = [delta0' theta0'] x + eps.
struct PopulationSpec {
  Eigen::MatrixXd sigma_x;  ///< (k_d + k_t) square, symmetric positive definite
  Eigen::VectorXd delta0;
  Eigen::VectorXd theta0;
  double sigma_eps_sq = 1.0;
};

/// Pseudo-true coefficients of parsimonious model i: the population
/// least-squares minimizer beta*_(i) = H_(i)^{-1} E[x_(i) y].
struct PseudoTrue {
  Eigen::VectorXd delta_star;  ///< k_d
  double theta_star = 0.0;
};

/// One truncated standard normal draw via rejection sampling: N(0,1)
/// conditioned on [-bound, bound].
double truncated_normal_draw(std::mt19937_64& stream, double bound);

/// n iid truncated standard normal draws.
Eigen::VectorXd sample_truncated_normal(Eigen::Index n, double bound, std::mt19937_64& stream);

/// Generates a Dataset: covariates per the spec, then
/// y_t = 1'x_delta,t + theta_0'x_theta,t + eps_t with eps iid N(0,1).
/// Deterministic given (spec, alt, n); the result passes validate().
/// Throws ValidationError on bad spec fields, GenerationError if the mixing
/// matrix rank repair fails twice.
Dataset generate(const CovariateSpec& spec, const AlternativeSpec& alt, Eigen::Index n);

/// Materializes theta_0 for an alternative at dimension k_theta and sample
/// size n. For LocalDrift the scale Mhat_n (fourth moment of the max
/// l1-norm of the per-model regressor vector, Theorem 6's drift scale) is
/// estimated as the sample mean over a pilot draw of 10^4 observations
/// seeded from spec.seed only, so repeated resolutions agree. Callers that
/// need one theta_0 across many samples (the Monte Carlo harness) resolve
/// once with a fixed spec and pass the result as Custom.
Eigen::VectorXd resolve_theta(const AlternativeSpec& alt, const CovariateSpec& spec,
                              Eigen::Index n);

/// Identification oracle (population analogue of the parsimonious fit).
/// i is 1-based. Throws Error when H_(i) is singular.
PseudoTrue pseudo_true(const PopulationSpec& ps, ModelIndex i);

/// Test-dimension growth rules: KOne is round(exp(3.2 n^(1/7 - 1e-10))),
/// KTwo is round(.02 n^2), both rounded half away from zero.
enum class GrowthRule { KOne, KTwo };
long long k_growth(long long n, GrowthRule rule);

namespace detail {

/// Mixing matrix actually used by `generate` for the given spec: entries iid
/// U[-1,1]; if numerically rank deficient, one shared U[0,1] draw is added
/// to the diagonal; a second failure throws GenerationError. `which` selects
/// the block: 0 whole vector (CrossBlockDependent), 1 nuisance block,
/// 2 test block (BlockDependent). Exposed so tests can reconstruct A.
Eigen::MatrixXd mixing_matrix_for(const CovariateSpec& spec, int which);

/// Covariate matrix (n rows, k_delta + k_theta columns, nuisance block
/// first) drawn from streams derived from `seed`.
Eigen::MatrixXd draw_covariates(const CovariateSpec& spec, Eigen::Index n, std::uint64_t seed);

}  // namespace detail

}  // namespace pmax::dgp
