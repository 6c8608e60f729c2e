#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <vector>

#include "pmax/dataset.hpp"

namespace pmax {

// Fits the restricted model (y on the nuisance block only) and all k_theta
// parsimonious models y ~ [x_delta, x_theta_i] by partitioned least squares.
//
// Everything that depends on the design alone is computed once into a
// GramCache; per-response work (the bootstrap hot path) is then a handful of
// cross products and O(k_delta * k_theta) arithmetic, independent of which
// replicate is being fit. Residual vectors are never materialized per model:
// coefficients and SSR come from cross products and the Schur identity
//   SSR_i = SSR0 - theta_i^2 * denom_i.

/// Design-side (and original-response) cross products, built once per
/// Dataset. Immutable after construction; shared read-only across threads.
struct GramCache {
  Eigen::MatrixXd g;        ///< k_d x k_d, X_delta'X_delta (jittered iff jitter > 0)
  Eigen::LLT<Eigen::MatrixXd> chol_g;  ///< Cholesky factor of g
  Eigen::VectorXd a;        ///< k_d, X_delta'y
  Eigen::MatrixXd b;        ///< k_d x k_t, column i = X_delta'x_theta_i
  Eigen::VectorXd c;        ///< k_t, c_i = x_theta_i'x_theta_i
  Eigen::VectorXd d;        ///< k_t, d_i = x_theta_i'y
  double yy = 0.0;          ///< y'y

  // Derived once so no solve against g happens per replicate.
  Eigen::MatrixXd u;        ///< k_d x k_t, u_i = G^{-1} b_i
  Eigen::VectorXd denom;    ///< k_t, Schur complements c_i - b_i'u_i
  Eigen::VectorXd g_inv_a;  ///< k_d, G^{-1} a (restricted coefficients)
  double jitter = 0.0;      ///< diagonal shift applied on the retry path, else 0
};

/// Restricted fit imposing theta = 0: coefficients, fitted values and
/// residuals of y on x_delta alone. k_delta = 0 gives the empty fit with
/// fitted0 = 0 and resid0 = y.
struct RestrictedFit {
  Eigen::VectorXd delta0_hat;  ///< k_d
  Eigen::VectorXd fitted0;     ///< n
  Eigen::VectorXd resid0;      ///< n
};

/// Coefficients and variance quantities of all k_theta parsimonious models.
/// Entries at degenerate indices (Schur complement at or below the relative
/// tolerance) are zero-filled and listed in `degenerate`.
struct FitSet {
  Eigen::VectorXd theta_hat;  ///< k_t
  Eigen::MatrixXd delta_hat;  ///< k_d x k_t, column i = delta_(i)
  Eigen::VectorXd v_hat_sq;   ///< k_t, residual variances SSR_i / n
  Eigen::VectorXd s_hat;      ///< k_t, standard errors of sqrt(n) theta_hat_i
  Eigen::VectorXd denom;      ///< k_t, copied from the cache
  std::vector<Eigen::Index> degenerate;  ///< ascending 0-based model indices

  bool is_degenerate(Eigen::Index i0) const {
    return std::binary_search(degenerate.begin(), degenerate.end(), i0);
  }
};

/// Relative Schur-complement tolerance: model i is degenerate when
/// denom_i <= kDegeneracyTol * c_i.
inline constexpr double kDegeneracyTol = 1e-10;

/// One pass over the design: cross products, Cholesky of the nuisance Gram
/// matrix (one jitter retry of +1e-10 * trace(G)/k_d on the diagonal before
/// giving up), and the per-model Schur complements.
/// Throws CollinearityError if G is not positive definite after the retry.
GramCache build_gram(const Dataset& ds);

RestrictedFit fit_restricted(const Dataset& ds, const GramCache& g);

/// Fits every parsimonious model. y_override, when given, replaces the
/// response: the y-dependent cross products (a, d, yy) are recomputed in one
/// pass and everything else is reused from the cache. Passing the original y
/// reproduces the default call bit for bit.
FitSet fit_all(const Dataset& ds, const GramCache& g,
               const Eigen::VectorXd* y_override = nullptr);

namespace detail {

/// Reusable scratch for the replicate hot loop; sized on first use.
struct RefitScratch {
  Eigen::VectorXd a;   // k_d
  Eigen::VectorXd d;   // k_t
  Eigen::VectorXd ua;  // k_t, u'a
};

/// Recomputes only theta_hat for response y into `theta` (resized k_t;
/// degenerate slots zeroed). This is the exact code path fit_all takes for
/// its coefficients, so the two agree bit for bit.
void refit_theta(const Dataset& ds, const GramCache& g, const Eigen::VectorXd& y,
                 RefitScratch& ws, Eigen::VectorXd& theta);

}  // namespace detail

}  // namespace pmax
