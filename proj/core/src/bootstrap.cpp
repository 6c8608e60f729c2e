#include "pmax/bootstrap.hpp"

#include <chrono>
#include <cmath>

#include "pmax/errors.hpp"
#include "pmax/rng.hpp"

namespace pmax {

double exceedance_pvalue(const Eigen::VectorXd& boot_stats, double t_n) {
  const Eigen::Index r = boot_stats.size();
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < r; ++j) {
    if (boot_stats(j) > t_n) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(r);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_inputs(const Dataset& ds, const FitSet& fs, const BootstrapSpec& spec,
                  BootstrapMode expected) {
  if (spec.replicates < 1) throw ValidationError("replicates must be >= 1");
  if (spec.mode != expected) throw ValidationError("bootstrap spec mode does not match the call");
  if (fs.theta_hat.size() != ds.k_theta()) {
    throw ValidationError("fit set does not match the dataset's test block");
  }
}

void draw_eta(std::uint64_t seed, int j, Eigen::VectorXd& eta) {
  std::mt19937_64 gen = rng::substream(seed, rng::kTagBootstrap, static_cast<std::uint64_t>(j));
  std::normal_distribution<double> nd;
  for (Eigen::Index t = 0; t < eta.size(); ++t) eta(t) = nd(gen);
}

// Per-model residuals and products needed by the multiplier scheme,
// materialized once per call (documented cost of the slower mode).
struct MultiplierPrecomp {
  Eigen::MatrixXd v;  // n x k_t, vhat_(i),t = y_t - beta_(i)'x_(i),t
  Eigen::MatrixXd p;  // n x k_t, p.col(i) = x_theta_i .* vhat_i
};

MultiplierPrecomp multiplier_precompute(const Dataset& ds, const FitSet& fs) {
  const Eigen::Index n = ds.n();
  const Eigen::Index kt = ds.k_theta();
  MultiplierPrecomp pre;
  pre.v.resize(n, kt);
  if (ds.k_delta() > 0) {
    pre.v.noalias() = -ds.x_delta * fs.delta_hat;
    pre.v.colwise() += ds.y;
  } else {
    pre.v.colwise() = ds.y;
  }
  for (Eigen::Index i = 0; i < kt; ++i) {
    pre.v.col(i) -= ds.x_theta.col(i) * fs.theta_hat(i);
  }
  pre.p = ds.x_theta.cwiseProduct(pre.v);
  return pre;
}

// theta coordinate of Hhat_(i)^{-1} Gtilde_(i), scaled by n via the Schur
// complement: coord_i = -( (x_i .* vhat_i)'eta - u_i' X_delta'(eta .* vhat_i) ) / denom_i.
void multiplier_coords(const Dataset& ds, const GramCache& g, const MultiplierPrecomp& pre,
                       const Eigen::VectorXd& eta, Eigen::VectorXd& coord,
                       Eigen::VectorXd& tmp_n, Eigen::VectorXd& tmp_kd) {
  const Eigen::Index kt = ds.k_theta();
  coord.resize(kt);
  if (ds.k_delta() == 0) {
    coord.noalias() = pre.p.transpose() * eta;
    for (Eigen::Index i = 0; i < kt; ++i) {
      coord(i) = g.denom(i) > kDegeneracyTol * g.c(i) ? -coord(i) / g.denom(i) : 0.0;
    }
    return;
  }
  for (Eigen::Index i = 0; i < kt; ++i) {
    if (!(g.denom(i) > kDegeneracyTol * g.c(i))) {
      coord(i) = 0.0;
      continue;
    }
    tmp_n = eta.cwiseProduct(pre.v.col(i));
    const double g_theta = ds.x_theta.col(i).dot(tmp_n);
    tmp_kd.noalias() = ds.x_delta.transpose() * tmp_n;
    coord(i) = -(g_theta - g.u.col(i).dot(tmp_kd)) / g.denom(i);
  }
}

}  // namespace

namespace detail {

double wild_replicate_stat(const Dataset& ds, const GramCache& g, const RestrictedFit& rf,
                           const MaxStat& stat, const Eigen::VectorXd& eta) {
  Eigen::VectorXd ystar = (rf.fitted0.array() + rf.resid0.array() * eta.array()).matrix();
  RefitScratch ws;
  Eigen::VectorXd theta;
  refit_theta(ds, g, ystar, ws, theta);
  return weighted_absmax(theta, stat.weights, std::sqrt(static_cast<double>(ds.n())));
}

double multiplier_replicate_stat(const Dataset& ds, const GramCache& g, const FitSet& fs,
                                 const MaxStat& stat, const Eigen::VectorXd& eta) {
  MultiplierPrecomp pre = multiplier_precompute(ds, fs);
  Eigen::VectorXd coord, tmp_n, tmp_kd;
  multiplier_coords(ds, g, pre, eta, coord, tmp_n, tmp_kd);
  return weighted_absmax(coord, stat.weights, std::sqrt(static_cast<double>(ds.n())));
}

}  // namespace detail

std::vector<TestOutcome> bootstrap_pvalue_set(const Dataset& ds, const GramCache& g,
                                              const RestrictedFit& rf, const FitSet& fs,
                                              const std::vector<MaxStat>& stats,
                                              const BootstrapSpec& spec) {
  check_inputs(ds, fs, spec, BootstrapMode::ParametricWild);
  if (stats.empty()) throw ValidationError("no statistics to score");
  if (rf.resid0.size() != ds.n()) throw ValidationError("restricted fit does not match dataset");

  const auto t0 = Clock::now();
  const int r = spec.replicates;
  const Eigen::Index n = ds.n();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const Eigen::Index n_stats = static_cast<Eigen::Index>(stats.size());
  Eigen::MatrixXd boot(r, n_stats);

#pragma omp parallel
  {
    Eigen::VectorXd eta(n), ystar(n), theta;
    detail::RefitScratch ws;
#pragma omp for schedule(static)
    for (int j = 0; j < r; ++j) {
      draw_eta(spec.seed, j, eta);
      ystar = (rf.fitted0.array() + rf.resid0.array() * eta.array()).matrix();
      detail::refit_theta(ds, g, ystar, ws, theta);
      for (Eigen::Index s = 0; s < n_stats; ++s) {
        boot(j, s) = detail::weighted_absmax(theta, stats[static_cast<std::size_t>(s)].weights,
                                             sqrt_n);
      }
    }
  }

  const double elapsed = seconds_since(t0);
  std::vector<TestOutcome> out(stats.size());
  for (std::size_t s = 0; s < stats.size(); ++s) {
    out[s].stat = stats[s];
    out[s].boot_stats = boot.col(static_cast<Eigen::Index>(s));
    out[s].p_value = exceedance_pvalue(out[s].boot_stats, stats[s].t_n);
    out[s].spec = spec;
    out[s].elapsed = elapsed;
  }
  return out;
}

TestOutcome bootstrap_pvalue(const Dataset& ds, const GramCache& g, const RestrictedFit& rf,
                             const FitSet& fs, const MaxStat& stat, const BootstrapSpec& spec) {
  return bootstrap_pvalue_set(ds, g, rf, fs, {stat}, spec).front();
}

TestOutcome bootstrap_pvalue_multiplier(const Dataset& ds, const GramCache& g, const FitSet& fs,
                                        const MaxStat& stat, const BootstrapSpec& spec) {
  check_inputs(ds, fs, spec, BootstrapMode::ScoreMultiplier);

  const auto t0 = Clock::now();
  const int r = spec.replicates;
  const Eigen::Index n = ds.n();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const MultiplierPrecomp pre = multiplier_precompute(ds, fs);

  TestOutcome out;
  out.boot_stats.resize(r);

#pragma omp parallel
  {
    Eigen::VectorXd eta(n), coord, tmp_n, tmp_kd;
#pragma omp for schedule(static)
    for (int j = 0; j < r; ++j) {
      draw_eta(spec.seed, j, eta);
      multiplier_coords(ds, g, pre, eta, coord, tmp_n, tmp_kd);
      out.boot_stats(j) = detail::weighted_absmax(coord, stat.weights, sqrt_n);
    }
  }

  out.stat = stat;
  out.p_value = exceedance_pvalue(out.boot_stats, stat.t_n);
  out.spec = spec;
  out.elapsed = seconds_since(t0);
  return out;
}

}  // namespace pmax
