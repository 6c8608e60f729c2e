#pragma once

#include <Eigen/Dense>

#include "pmax/dataset.hpp"
#include "pmax/pols.hpp"

namespace pmax {

/// Weighting of the per-model statistics. Flat uses w_i = 1 (max-test);
/// InvSE uses w_i = 1 / s_hat_i, the inverted standard error of
/// sqrt(n) theta_hat_i (max-t-test). InvSE requires every model to be
/// non-degenerate with strictly positive s_hat.
///
/// The non-stochastic weight limits these estimates converge to exist only
/// in the asymptotic theory; the code never represents them.
enum class WeightMode { Flat, InvSE };

/// The weighted max statistic t_n = max_i |sqrt(n) * w_i * theta_hat_i|,
/// together with the per-model values and the weights actually used, which
/// the bootstrap reuses verbatim. Degenerate models carry weight 0 and never
/// attain the max.
struct MaxStat {
  double t_n = 0.0;
  ModelIndex argmax = 1;       ///< 1-based; smallest index on exact ties
  Eigen::VectorXd per_model;   ///< k_t, |sqrt(n) * w_i * theta_hat_i| >= 0
  Eigen::VectorXd weights;     ///< k_t, w_i (0 at degenerate entries)
  WeightMode mode = WeightMode::InvSE;
};

/// Forms the max statistic from a FitSet. Throws DegeneracyError under InvSE
/// if any model is degenerate or has s_hat <= 0 (exact fit), naming the
/// model; under Flat only if every model is degenerate.
MaxStat max_statistic(const FitSet& fs, WeightMode mode, Eigen::Index n);

namespace detail {

/// max_i |sqrt_n * weights_i * theta_i| with smallest-index tie breaking;
/// the replicate hot path shares this exact scan with max_statistic.
double weighted_absmax(const Eigen::VectorXd& theta, const Eigen::VectorXd& weights,
                       double sqrt_n, Eigen::Index* argmax0 = nullptr);

}  // namespace detail

}  // namespace pmax
