#include "pmax/wald.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <limits>

#include "pmax/errors.hpp"
#include "pmax/rng.hpp"

namespace pmax {

namespace {

using Clock = std::chrono::steady_clock;

// Shared quantities of the full-design normal equations, factored once.
struct WaldCache {
  Eigen::LLT<Eigen::MatrixXd> chol_g;  // nuisance Gram block
  Eigen::LLT<Eigen::MatrixXd> chol_s;  // Schur complement of the theta block
  Eigen::MatrixXd p;                   // k_d x k_t, G^{-1} B
  Eigen::VectorXd fitted0;             // restricted fit under theta = 0
  Eigen::VectorXd resid0;
};

// w_n for one response vector. theta'S theta is evaluated as theta'rhs
// (theta solves S theta = rhs), clamped at zero against rounding.
double wald_statistic(const Dataset& ds, const WaldCache& wc, const Eigen::VectorXd& y,
                      double* sigma_sq_out) {
  const Eigen::Index kd = ds.k_delta();
  const double n = static_cast<double>(ds.n());

  Eigen::VectorXd d_theta = ds.x_theta.transpose() * y;
  double ssr0;
  Eigen::VectorXd rhs;
  if (kd > 0) {
    Eigen::VectorXd a = ds.x_delta.transpose() * y;
    Eigen::VectorXd ginva = wc.chol_g.solve(a);
    rhs = d_theta - wc.p.transpose() * a;
    ssr0 = y.squaredNorm() - a.dot(ginva);
  } else {
    rhs = d_theta;
    ssr0 = y.squaredNorm();
  }
  Eigen::VectorXd theta = wc.chol_s.solve(rhs);
  double quad = theta.dot(rhs);
  if (quad < 0.0) quad = 0.0;
  double ssr = ssr0 - quad;
  if (ssr < 0.0) ssr = 0.0;
  const double sigma_sq = ssr / n;
  if (sigma_sq_out != nullptr) *sigma_sq_out = sigma_sq;
  if (!(sigma_sq > 0.0)) return std::numeric_limits<double>::infinity();
  return quad / sigma_sq;
}

}  // namespace

WaldOutcome wald_test(const Dataset& ds, const BootstrapSpec& spec) {
  const Eigen::Index n = ds.n();
  const Eigen::Index kd = ds.k_delta();
  const Eigen::Index kt = ds.k_theta();
  if (!wald_feasible(n, kd, kt)) {
    throw ValidationError("Wald test needs k_delta + k_theta < n (" + std::to_string(kd) + " + " +
                          std::to_string(kt) + " >= " + std::to_string(n) + ")");
  }
  if (spec.replicates < 1) throw ValidationError("replicates must be >= 1");

  const auto t0 = Clock::now();

  WaldCache wc;
  Eigen::MatrixXd s;  // Schur complement of the theta block in X'X
  if (kd > 0) {
    Eigen::MatrixXd g = ds.x_delta.transpose() * ds.x_delta;
    wc.chol_g.compute(g);
    if (wc.chol_g.info() != Eigen::Success) {
      g.diagonal().array() += 1e-10 * g.trace() / static_cast<double>(kd);
      wc.chol_g.compute(g);
      if (wc.chol_g.info() != Eigen::Success) {
        throw CollinearityError("nuisance block of the full design is rank deficient");
      }
    }
    Eigen::MatrixXd b = ds.x_delta.transpose() * ds.x_theta;
    wc.p = wc.chol_g.solve(b);
    s.noalias() = ds.x_theta.transpose() * ds.x_theta;
    s.noalias() -= b.transpose() * wc.p;
    Eigen::VectorXd a = ds.x_delta.transpose() * ds.y;
    wc.fitted0.noalias() = ds.x_delta * wc.chol_g.solve(a);
    wc.resid0 = ds.y - wc.fitted0;
  } else {
    s.noalias() = ds.x_theta.transpose() * ds.x_theta;
    wc.fitted0 = Eigen::VectorXd::Zero(n);
    wc.resid0 = ds.y;
  }
  wc.chol_s.compute(s);
  if (wc.chol_s.info() != Eigen::Success) {
    throw CollinearityError("full design is rank deficient (test block collinear)");
  }

  WaldOutcome out;
  out.w_n = wald_statistic(ds, wc, ds.y, &out.sigma_sq_hat);
  if (!std::isfinite(out.w_n)) {
    throw DegeneracyError("exact full-model fit; Wald statistic undefined");
  }
  const double ktd = static_cast<double>(kt);
  out.w_s = (out.w_n - ktd) / std::sqrt(2.0 * ktd);

  const int r = spec.replicates;
  out.boot_stats.resize(r);
#pragma omp parallel
  {
    Eigen::VectorXd eta(n), ystar(n);
#pragma omp for schedule(static)
    for (int j = 0; j < r; ++j) {
      std::mt19937_64 gen =
          rng::substream(spec.seed, rng::kTagBootstrap, static_cast<std::uint64_t>(j));
      std::normal_distribution<double> nd;
      for (Eigen::Index t = 0; t < n; ++t) eta(t) = nd(gen);
      ystar = (wc.fitted0.array() + wc.resid0.array() * eta.array()).matrix();
      out.boot_stats(j) = wald_statistic(ds, wc, ystar, nullptr);
    }
  }
  out.p_boot = exceedance_pvalue(out.boot_stats, out.w_n);

  const boost::math::chi_squared chi(ktd);
  out.p_asymp = boost::math::cdf(boost::math::complement(chi, out.w_n));
  const boost::math::normal gauss;
  out.p_asymp_normal = boost::math::cdf(boost::math::complement(gauss, out.w_s));

  out.spec = spec;
  out.elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

}  // namespace pmax
