#pragma once

#include <Eigen/Dense>

#include "pmax/bootstrap.hpp"
#include "pmax/dataset.hpp"

namespace pmax {

/// Full-model OLS Wald test of theta = 0, feasible only when
/// k_delta + k_theta < n. Used as the low-dimension baseline.
struct WaldOutcome {
  double w_n = 0.0;     ///< quadratic form, >= 0
  double w_s = 0.0;     ///< normalized statistic (w_n - k_theta) / sqrt(2 k_theta)
  double p_boot = 1.0;  ///< parametric-wild-bootstrap p-value (strict count)
  /// Reference only: chi-square(k_theta) upper tail at w_n. The asymptotic
  /// test is severely distorted in these designs; reported, never used for
  /// decisions.
  double p_asymp = 1.0;
  /// Reference only: standard normal upper tail at w_s.
  double p_asymp_normal = 1.0;
  Eigen::VectorXd boot_stats;  ///< R replicate values of w_n
  double sigma_sq_hat = 0.0;   ///< full-model SSR / n
  BootstrapSpec spec;
  double elapsed = 0.0;
};

inline bool wald_feasible(Eigen::Index n, Eigen::Index k_delta, Eigen::Index k_theta) {
  return k_delta + k_theta < n;
}

/// Homoskedastic Wald statistic w_n = theta_hat' [sigma^2 ((X'X)^{-1})_{theta
/// block}]^{-1} theta_hat with variance divisor n, plus its bootstrap p-value
/// from the same restricted-null wild replicates as the max tests. Counting
/// w* > w is equivalent to counting the normalized form, so one count serves
/// both statistics. The bootstrap here is always the parametric wild scheme;
/// spec.mode is not consulted.
///
/// Throws ValidationError when k_delta + k_theta >= n, CollinearityError when
/// the full design is rank deficient, DegeneracyError on an exact fit.
WaldOutcome wald_test(const Dataset& ds, const BootstrapSpec& spec);

}  // namespace pmax
