#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pmax/dataset.hpp"
#include "pmax/maxtest.hpp"
#include "pmax/pols.hpp"

namespace pmax {

/// ParametricWild regenerates the response under the null,
///   y*_t = fitted0_t + resid0_t * eta_t,  eta_t iid N(0,1),
/// and refits every parsimonious model. ScoreMultiplier perturbs the
/// least-squares score instead,
///   Gtilde_(i) = -(1/n) sum_t eta_t * vhat_(i),t * x_(i),t,
/// and maps it through Hhat_(i)^{-1}; it is asymptotically equivalent but
/// needs per-model residual vectors, hence O(n * k_theta) per replicate and
/// noticeably slower. Both schemes draw replicate j's multipliers from a
/// stream derived only from (seed, j).
enum class BootstrapMode { ParametricWild, ScoreMultiplier };

struct BootstrapSpec {
  int replicates = 1000;  ///< R >= 1
  std::uint64_t seed = 0;
  BootstrapMode mode = BootstrapMode::ParametricWild;
  /// Bootstrap statistics reuse the original-sample weights; standard errors
  /// are never recomputed inside a replicate. Fixed by construction.
  static constexpr bool weight_reuse = true;
};

struct TestOutcome {
  MaxStat stat;                ///< original-sample statistic
  Eigen::VectorXd boot_stats;  ///< R replicate statistics Ttilde_j
  double p_value = 1.0;        ///< (1/R) #{j : Ttilde_j > stat.t_n}, strict
  BootstrapSpec spec;
  double elapsed = 0.0;        ///< wall seconds
};

/// Restricted-null parametric wild bootstrap p-value (mode ParametricWild).
/// All inputs must come from the same Dataset. Deterministic given
/// (ds, spec) at any worker count.
TestOutcome bootstrap_pvalue(const Dataset& ds, const GramCache& g, const RestrictedFit& rf,
                             const FitSet& fs, const MaxStat& stat, const BootstrapSpec& spec);

/// Score-multiplier variant (mode ScoreMultiplier); same p-value contract.
TestOutcome bootstrap_pvalue_multiplier(const Dataset& ds, const GramCache& g, const FitSet& fs,
                                        const MaxStat& stat, const BootstrapSpec& spec);

/// Runs the wild scheme once while scoring several statistics (e.g. Flat and
/// InvSE weights) against the same replicate refits. Element k of the result
/// is bit-identical to bootstrap_pvalue(ds, g, rf, fs, stats[k], spec):
/// replicate multiplier streams depend only on (seed, j), never on what is
/// being scored.
std::vector<TestOutcome> bootstrap_pvalue_set(const Dataset& ds, const GramCache& g,
                                              const RestrictedFit& rf, const FitSet& fs,
                                              const std::vector<MaxStat>& stats,
                                              const BootstrapSpec& spec);

/// Strict-inequality exceedance count over replicates divided by R.
double exceedance_pvalue(const Eigen::VectorXd& boot_stats, double t_n);

namespace detail {

/// Statistic of one wild replicate with the multipliers supplied; the test
/// hook behind bootstrap_pvalue's hot loop.
double wild_replicate_stat(const Dataset& ds, const GramCache& g, const RestrictedFit& rf,
                           const MaxStat& stat, const Eigen::VectorXd& eta);

/// Statistic of one score-multiplier replicate with the multipliers
/// supplied.
double multiplier_replicate_stat(const Dataset& ds, const GramCache& g, const FitSet& fs,
                                 const MaxStat& stat, const Eigen::VectorXd& eta);

}  // namespace detail

}  // namespace pmax
