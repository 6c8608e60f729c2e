#include "pmax/pols.hpp"

#include <cmath>

#include "pmax/errors.hpp"

namespace pmax {

namespace {

// Cholesky of the nuisance Gram matrix with one jitter retry. Mutates g_mat
// when the retry fires so the cache stores the matrix actually factored.
double factor_gram(Eigen::MatrixXd& g_mat, Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::Index k = g_mat.rows();
  if (k == 0) return 0.0;
  llt.compute(g_mat);
  if (llt.info() == Eigen::Success) return 0.0;
  const double jitter = 1e-10 * g_mat.trace() / static_cast<double>(k);
  g_mat.diagonal().array() += jitter;
  llt.compute(g_mat);
  if (llt.info() != Eigen::Success) {
    throw CollinearityError(
        "nuisance Gram matrix is not positive definite (collinear nuisance columns)");
  }
  return jitter;
}

}  // namespace

GramCache build_gram(const Dataset& ds) {
  const Eigen::Index kd = ds.k_delta();
  const Eigen::Index kt = ds.k_theta();

  GramCache g;
  g.g.noalias() = ds.x_delta.transpose() * ds.x_delta;
  g.jitter = factor_gram(g.g, g.chol_g);
  g.a.noalias() = ds.x_delta.transpose() * ds.y;
  g.b.noalias() = ds.x_delta.transpose() * ds.x_theta;
  g.c = ds.x_theta.colwise().squaredNorm();
  g.d.noalias() = ds.x_theta.transpose() * ds.y;
  g.yy = ds.y.squaredNorm();

  if (kd > 0) {
    g.u = g.chol_g.solve(g.b);
    g.g_inv_a = g.chol_g.solve(g.a);
    g.denom.resize(kt);
    for (Eigen::Index i = 0; i < kt; ++i) {
      g.denom(i) = g.c(i) - g.b.col(i).dot(g.u.col(i));
    }
  } else {
    g.u.resize(0, kt);
    g.g_inv_a.resize(0);
    g.denom = g.c;
  }
  return g;
}

RestrictedFit fit_restricted(const Dataset& ds, const GramCache& g) {
  RestrictedFit rf;
  rf.delta0_hat = g.g_inv_a;
  if (ds.k_delta() > 0) {
    rf.fitted0.noalias() = ds.x_delta * rf.delta0_hat;
    rf.resid0 = ds.y - rf.fitted0;
  } else {
    rf.fitted0 = Eigen::VectorXd::Zero(ds.n());
    rf.resid0 = ds.y;
  }
  return rf;
}

namespace detail {

void refit_theta(const Dataset& ds, const GramCache& g, const Eigen::VectorXd& y,
                 RefitScratch& ws, Eigen::VectorXd& theta) {
  const Eigen::Index kd = ds.k_delta();
  const Eigen::Index kt = ds.k_theta();
  ws.d.noalias() = ds.x_theta.transpose() * y;
  theta.resize(kt);
  if (kd > 0) {
    ws.a.noalias() = ds.x_delta.transpose() * y;
    ws.ua.noalias() = g.u.transpose() * ws.a;
    for (Eigen::Index i = 0; i < kt; ++i) {
      theta(i) = g.denom(i) > kDegeneracyTol * g.c(i) ? (ws.d(i) - ws.ua(i)) / g.denom(i) : 0.0;
    }
  } else {
    for (Eigen::Index i = 0; i < kt; ++i) {
      theta(i) = g.denom(i) > kDegeneracyTol * g.c(i) ? ws.d(i) / g.denom(i) : 0.0;
    }
  }
}

}  // namespace detail

FitSet fit_all(const Dataset& ds, const GramCache& g, const Eigen::VectorXd* y_override) {
  const Eigen::Index kd = ds.k_delta();
  const Eigen::Index kt = ds.k_theta();
  const double n = static_cast<double>(ds.n());

  // Response-side cross products: cached for the original y, recomputed in
  // one pass for an override. The expressions match build_gram's exactly, so
  // an override equal to y reproduces the default fit bit for bit.
  Eigen::VectorXd a_loc, d_loc, ginva_loc;
  const Eigen::VectorXd* a = &g.a;
  const Eigen::VectorXd* d = &g.d;
  const Eigen::VectorXd* ginva = &g.g_inv_a;
  double yy = g.yy;
  if (y_override != nullptr) {
    if (y_override->size() != ds.n()) {
      throw ValidationError("y_override has length " + std::to_string(y_override->size()) +
                            ", expected n = " + std::to_string(ds.n()));
    }
    a_loc.noalias() = ds.x_delta.transpose() * (*y_override);
    d_loc.noalias() = ds.x_theta.transpose() * (*y_override);
    ginva_loc = kd > 0 ? Eigen::VectorXd(g.chol_g.solve(a_loc)) : Eigen::VectorXd();
    yy = y_override->squaredNorm();
    a = &a_loc;
    d = &d_loc;
    ginva = &ginva_loc;
  }

  FitSet fs;
  fs.theta_hat.resize(kt);
  fs.delta_hat.resize(kd, kt);
  fs.v_hat_sq.resize(kt);
  fs.s_hat.resize(kt);
  fs.denom = g.denom;

  Eigen::VectorXd ua;
  if (kd > 0) ua.noalias() = g.u.transpose() * (*a);

  // Restricted SSR; per-model SSR follows from the Schur identity.
  const double ssr0 = kd > 0 ? yy - a->dot(*ginva) : yy;

  for (Eigen::Index i = 0; i < kt; ++i) {
    if (!(g.denom(i) > kDegeneracyTol * g.c(i))) {
      fs.degenerate.push_back(i);
      fs.theta_hat(i) = 0.0;
      if (kd > 0) fs.delta_hat.col(i).setZero();
      fs.v_hat_sq(i) = 0.0;
      fs.s_hat(i) = 0.0;
      continue;
    }
    const double th = kd > 0 ? ((*d)(i)-ua(i)) / g.denom(i) : (*d)(i) / g.denom(i);
    fs.theta_hat(i) = th;
    if (kd > 0) fs.delta_hat.col(i) = *ginva - g.u.col(i) * th;
    double ssr = ssr0 - th * th * g.denom(i);
    if (ssr < 0.0) ssr = 0.0;
    fs.v_hat_sq(i) = ssr / n;
    fs.s_hat(i) = std::sqrt(n * fs.v_hat_sq(i) / g.denom(i));
  }
  return fs;
}

}  // namespace pmax
