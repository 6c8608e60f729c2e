#include "pmax/dgp.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "pmax/errors.hpp"
#include "pmax/rng.hpp"

namespace pmax::dgp {

namespace {

// Relative pivot floor of the mixing-matrix rank check.
constexpr double kRankTol = 1e-12;
constexpr Eigen::Index kDriftPilotObs = 10000;

bool numerically_full_rank(const Eigen::MatrixXd& a) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
  return diag.minCoeff() > kRankTol * diag.maxCoeff();
}

// Entries iid U[-1,1], filled column by column. On rank deficiency one
// shared U[0,1] draw is added to the whole diagonal; a second failure is an
// error, not another retry.
Eigen::MatrixXd mixing_matrix(Eigen::Index k, std::uint64_t seed, int which) {
  auto stream = rng::substream(seed, rng::kTagMixing, static_cast<std::uint64_t>(which));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index col = 0; col < k; ++col)
    for (Eigen::Index row = 0; row < k; ++row) a(row, col) = unit(stream);
  if (numerically_full_rank(a)) return a;
  auto repair = rng::substream(seed, rng::kTagRepair, static_cast<std::uint64_t>(which));
  std::uniform_real_distribution<double> positive(0.0, 1.0);
  a.diagonal().array() += positive(repair);
  if (numerically_full_rank(a)) return a;
  throw GenerationError("mixing matrix rank deficient after diagonal repair");
}

// Column-by-column truncated normal fill, shared by every draw site so the
// stream consumption order is frozen.
void fill_truncated(Eigen::MatrixXd& m, double bound, std::mt19937_64& stream) {
  std::normal_distribution<double> nd;
  for (Eigen::Index col = 0; col < m.cols(); ++col)
    for (Eigen::Index row = 0; row < m.rows(); ++row) {
      double x;
      do {
        x = nd(stream);
      } while (std::abs(x) > bound);
      m(row, col) = x;
    }
}

// x = A w + v for one block of `dim` covariates; observations are columns
// of the primitive draws, the result is observation-major.
Eigen::MatrixXd mixed_block(Eigen::Index dim, Eigen::Index n, double bound, std::uint64_t seed,
                            int which) {
  const Eigen::MatrixXd a = mixing_matrix(dim, seed, which);
  auto stream = rng::substream(seed, rng::kTagCovariate, static_cast<std::uint64_t>(which));
  Eigen::MatrixXd w(dim, n);
  fill_truncated(w, bound, stream);
  Eigen::MatrixXd v(dim, n);
  fill_truncated(v, bound, stream);
  return (a * w + v).transpose();
}

void check_spec(const CovariateSpec& spec) {
  if (spec.k_delta < 0) throw ValidationError("k_delta must be nonnegative");
  if (spec.k_theta < 1) throw ValidationError("k_theta must be at least 1");
  if (!(spec.bound > 0.0)) throw ValidationError("truncation bound must be positive");
}

}  // namespace

double truncated_normal_draw(std::mt19937_64& stream, double bound) {
  std::normal_distribution<double> nd;
  double x;
  do {
    x = nd(stream);
  } while (std::abs(x) > bound);
  return x;
}

Eigen::VectorXd sample_truncated_normal(Eigen::Index n, double bound, std::mt19937_64& stream) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double x;
    do {
      x = nd(stream);
    } while (std::abs(x) > bound);
    out[t] = x;
  }
  return out;
}

namespace detail {

Eigen::MatrixXd mixing_matrix_for(const CovariateSpec& spec, int which) {
  check_spec(spec);
  switch (spec.dependence) {
    case Dependence::CrossBlockDependent:
      if (which != 0) throw ValidationError("cross-block dependence has a single mixing matrix");
      return mixing_matrix(spec.k_delta + spec.k_theta, spec.seed, 0);
    case Dependence::BlockDependent:
      if (which == 1) return mixing_matrix(spec.k_delta, spec.seed, 1);
      if (which == 2) return mixing_matrix(spec.k_theta, spec.seed, 2);
      throw ValidationError("block dependence indexes blocks 1 (nuisance) and 2 (test)");
    case Dependence::Independent:
      break;
  }
  throw ValidationError("independent covariates have no mixing matrix");
}

Eigen::MatrixXd draw_covariates(const CovariateSpec& spec, Eigen::Index n, std::uint64_t seed) {
  const Eigen::Index k = spec.k_delta + spec.k_theta;
  switch (spec.dependence) {
    case Dependence::Independent: {
      auto stream = rng::substream(seed, rng::kTagCovariate, 0);
      Eigen::MatrixXd x(n, k);
      fill_truncated(x, spec.bound, stream);
      return x;
    }
    case Dependence::BlockDependent: {
      Eigen::MatrixXd x(n, k);
      if (spec.k_delta > 0)
        x.leftCols(spec.k_delta) = mixed_block(spec.k_delta, n, spec.bound, seed, 1);
      x.rightCols(spec.k_theta) = mixed_block(spec.k_theta, n, spec.bound, seed, 2);
      return x;
    }
    case Dependence::CrossBlockDependent:
      return mixed_block(k, n, spec.bound, seed, 0);
  }
  throw ValidationError("unknown dependence kind");
}

}  // namespace detail

Eigen::VectorXd resolve_theta(const AlternativeSpec& alt, const CovariateSpec& spec,
                              Eigen::Index n) {
  check_spec(spec);
  const Eigen::Index kt = spec.k_theta;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kt);
  switch (alt.kind) {
    case AlternativeSpec::Kind::Null:
      return theta;
    case AlternativeSpec::Kind::AltOne:
      theta[0] = 0.0015;
      return theta;
    case AlternativeSpec::Kind::AltTwo:
      for (Eigen::Index i = 0; i < kt; ++i)
        theta[i] = 0.0002 * static_cast<double>(i + 1) / static_cast<double>(kt);
      return theta;
    case AlternativeSpec::Kind::AltThree:
      theta.head(std::min<Eigen::Index>(10, kt)).setConstant(0.00015);
      return theta;
    case AlternativeSpec::Kind::Custom:
      if (alt.custom.size() != kt)
        throw ValidationError("custom theta_0 length does not match k_theta");
      return alt.custom;
    case AlternativeSpec::Kind::LocalDrift:
      break;
  }
  if (alt.drift_c.size() != 1 && alt.drift_c.size() != kt)
    throw ValidationError("drift scale must have length 1 or k_theta");
  if (n < 1) throw ValidationError("sample size must be positive");
  // Mhat_n: mean over a pilot draw of the fourth power of the largest
  // per-model regressor l1-norm, max_i |x_(i),t|_1^4. The max over models
  // shares the nuisance part, so it is |x_delta,t|_1 + max_i |x_theta,i,t|.
  const Eigen::MatrixXd pilot =
      detail::draw_covariates(spec, kDriftPilotObs, rng::mix(spec.seed, rng::kTagDrift));
  double acc = 0.0;
  for (Eigen::Index t = 0; t < kDriftPilotObs; ++t) {
    double l1 = pilot.row(t).head(spec.k_delta).cwiseAbs().sum() +
                pilot.row(t).tail(kt).cwiseAbs().maxCoeff();
    double sq = l1 * l1;
    acc += sq * sq;
  }
  const double mhat = acc / static_cast<double>(kDriftPilotObs);
  const double base =
      std::sqrt(std::log(static_cast<double>(kt)) * mhat / static_cast<double>(n));
  if (alt.drift_c.size() == 1) return Eigen::VectorXd::Constant(kt, alt.drift_c[0] * base);
  return alt.drift_c * base;
}

Dataset generate(const CovariateSpec& spec, const AlternativeSpec& alt, Eigen::Index n) {
  check_spec(spec);
  if (n < spec.k_delta + 2) throw ValidationError("need n >= k_delta + 2 observations");
  const Eigen::VectorXd theta0 = resolve_theta(alt, spec, n);
  const Eigen::MatrixXd x = detail::draw_covariates(spec, n, spec.seed);

  auto noise = rng::substream(spec.seed, rng::kTagNoise);
  std::normal_distribution<double> nd;
  Eigen::VectorXd eps(n);
  for (Eigen::Index t = 0; t < n; ++t) eps[t] = nd(noise);

  Dataset ds;
  ds.x_delta = x.leftCols(spec.k_delta);
  ds.x_theta = x.rightCols(spec.k_theta);
  ds.y = ds.x_delta.rowwise().sum() + ds.x_theta * theta0 + eps;
  ds.response_name = "y";
  ds.delta_names.resize(static_cast<std::size_t>(spec.k_delta));
  for (Eigen::Index j = 0; j < spec.k_delta; ++j)
    ds.delta_names[static_cast<std::size_t>(j)] = "z" + std::to_string(j + 1);
  ds.theta_names.resize(static_cast<std::size_t>(spec.k_theta));
  for (Eigen::Index j = 0; j < spec.k_theta; ++j)
    ds.theta_names[static_cast<std::size_t>(j)] = "x" + std::to_string(j + 1);
  require_valid(ds);
  return ds;
}

PseudoTrue pseudo_true(const PopulationSpec& ps, ModelIndex i) {
  const Eigen::Index kd = ps.delta0.size();
  const Eigen::Index kt = ps.theta0.size();
  const Eigen::Index k = kd + kt;
  if (ps.sigma_x.rows() != k || ps.sigma_x.cols() != k)
    throw ValidationError("sigma_x dimension does not match delta0 and theta0");
  if (i < 1 || i > kt) throw ValidationError("model index out of range");
  const Eigen::Index col = kd + i - 1;

  Eigen::VectorXd beta0(k);
  beta0 << ps.delta0, ps.theta0;
  const Eigen::VectorXd m_full = ps.sigma_x * beta0;

  Eigen::MatrixXd h(kd + 1, kd + 1);
  h.topLeftCorner(kd, kd) = ps.sigma_x.topLeftCorner(kd, kd);
  h.block(0, kd, kd, 1) = ps.sigma_x.block(0, col, kd, 1);
  h.block(kd, 0, 1, kd) = ps.sigma_x.block(col, 0, 1, kd);
  h(kd, kd) = ps.sigma_x(col, col);

  Eigen::VectorXd m(kd + 1);
  m.head(kd) = m_full.head(kd);
  m[kd] = m_full[col];

  Eigen::LLT<Eigen::MatrixXd> chol(h);
  if (chol.info() != Eigen::Success)
    throw Error("population Gram of the parsimonious model is singular");
  const Eigen::VectorXd beta = chol.solve(m);
  return {beta.head(kd), beta[kd]};
}

long long k_growth(long long n, GrowthRule rule) {
  if (n < 1) throw ValidationError("sample size must be positive");
  const double nd = static_cast<double>(n);
  switch (rule) {
    case GrowthRule::KOne:
      return std::llround(std::exp(3.2 * std::pow(nd, 1.0 / 7.0 - 1e-10)));
    case GrowthRule::KTwo:
      return std::llround(0.02 * nd * nd);
  }
  throw ValidationError("unknown growth rule");
}

}  // namespace pmax::dgp
