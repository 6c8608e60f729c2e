#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pmax/bootstrap.hpp"
#include "pmax/errors.hpp"
#include "pmax/maxtest.hpp"
#include "pmax/pols.hpp"
#include "pmax/rng.hpp"

namespace {

struct Fitted {
  pmax::Dataset ds;
  pmax::GramCache g;
  pmax::RestrictedFit rf;
  pmax::FitSet fs;
  pmax::MaxStat stat;
};

Fitted fit_fixture(std::uint64_t seed, Eigen::Index n, Eigen::Index kd, Eigen::Index kt,
                   pmax::WeightMode mode = pmax::WeightMode::InvSE) {
  Fitted f;
  f.ds = testutil::random_dataset(seed, n, kd, kt);
  f.g = pmax::build_gram(f.ds);
  f.rf = pmax::fit_restricted(f.ds, f.g);
  f.fs = pmax::fit_all(f.ds, f.g);
  f.stat = pmax::max_statistic(f.fs, mode, n);
  return f;
}

// Reference eta stream: same substream recipe the library documents.
Eigen::VectorXd reference_eta(std::uint64_t seed, int j, Eigen::Index n) {
  std::mt19937_64 gen = pmax::rng::substream(seed, pmax::rng::kTagBootstrap,
                                             static_cast<std::uint64_t>(j));
  std::normal_distribution<double> nd;
  Eigen::VectorXd eta(n);
  for (Eigen::Index t = 0; t < n; ++t) eta(t) = nd(gen);
  return eta;
}

// Dense replicate statistic: perturb the response, refit every parsimonious
// model from scratch, apply the original weights.
double dense_wild_stat(const pmax::Dataset& ds, const Eigen::VectorXd& ystar,
                       const pmax::MaxStat& stat) {
  pmax::Dataset mod = ds;
  mod.y = ystar;
  Eigen::VectorXd theta(ds.k_theta());
  for (Eigen::Index i = 0; i < ds.k_theta(); ++i) {
    theta(i) = oracle::parsimonious_fit(mod, i).theta;
  }
  return oracle::weighted_max(theta, stat.weights, ds.n(), nullptr);
}

}  // namespace

TEST_SUITE("bootstrap") {

TEST_CASE("exceedance p-value counts strict exceedances") {
  Eigen::VectorXd boots(4);
  boots << 1.0, 2.0, 3.0, 4.0;
  CHECK(pmax::exceedance_pvalue(boots, 2.5) == 0.5);
  CHECK(pmax::exceedance_pvalue(boots, 2.0) == 0.5);  // ties do not count
  CHECK(pmax::exceedance_pvalue(boots, 4.5) == 0.0);
  CHECK(pmax::exceedance_pvalue(boots, 0.5) == 1.0);
}

TEST_CASE("wild replicates match a from-scratch refit") {
  const auto f = fit_fixture(7, 35, 3, 6);
  pmax::BootstrapSpec spec;
  spec.replicates = 8;
  spec.seed = 99;
  const auto out = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec);
  REQUIRE(out.boot_stats.size() == 8);
  for (int j = 0; j < 8; ++j) {
    const Eigen::VectorXd eta = reference_eta(spec.seed, j, f.ds.n());
    const Eigen::VectorXd ystar =
        (f.rf.fitted0.array() + f.rf.resid0.array() * eta.array()).matrix();
    const double ref = dense_wild_stat(f.ds, ystar, f.stat);
    CHECK(testutil::close_rel(out.boot_stats(j), ref, 1e-9));
  }
  CHECK(out.p_value == pmax::exceedance_pvalue(out.boot_stats, f.stat.t_n));
}

TEST_CASE("without a nuisance block the response is scaled directly") {
  const auto f = fit_fixture(11, 30, 0, 5, pmax::WeightMode::Flat);
  REQUIRE(f.rf.fitted0.isZero(0.0));
  pmax::BootstrapSpec spec;
  spec.replicates = 5;
  spec.seed = 4242;
  const auto out = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec);
  for (int j = 0; j < 5; ++j) {
    const Eigen::VectorXd eta = reference_eta(spec.seed, j, f.ds.n());
    const Eigen::VectorXd ystar = (f.ds.y.array() * eta.array()).matrix();
    const double ref = dense_wild_stat(f.ds, ystar, f.stat);
    CHECK(testutil::close_rel(out.boot_stats(j), ref, 1e-9));
  }
}

TEST_CASE("multiplier replicates match the dense score coordinate") {
  const auto f = fit_fixture(13, 40, 2, 5);
  pmax::BootstrapSpec spec;
  spec.replicates = 6;
  spec.seed = 314;
  spec.mode = pmax::BootstrapMode::ScoreMultiplier;
  const auto out = pmax::bootstrap_pvalue_multiplier(f.ds, f.g, f.fs, f.stat, spec);
  const double sqrt_n = std::sqrt(static_cast<double>(f.ds.n()));
  for (int j = 0; j < 6; ++j) {
    const Eigen::VectorXd eta = reference_eta(spec.seed, j, f.ds.n());
    double best = -1.0;
    for (Eigen::Index i = 0; i < f.ds.k_theta(); ++i) {
      const double coord = oracle::multiplier_coord_dense(f.ds, eta, i);
      best = std::max(best, std::abs(sqrt_n * f.stat.weights(i) * coord));
    }
    CHECK(testutil::close_rel(out.boot_stats(j), best, 1e-9));
  }
}

TEST_CASE("multiplier mode also works without a nuisance block") {
  const auto f = fit_fixture(17, 25, 0, 4, pmax::WeightMode::Flat);
  pmax::BootstrapSpec spec;
  spec.replicates = 4;
  spec.seed = 11;
  spec.mode = pmax::BootstrapMode::ScoreMultiplier;
  const auto out = pmax::bootstrap_pvalue_multiplier(f.ds, f.g, f.fs, f.stat, spec);
  const double sqrt_n = std::sqrt(static_cast<double>(f.ds.n()));
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd eta = reference_eta(spec.seed, j, f.ds.n());
    double best = -1.0;
    for (Eigen::Index i = 0; i < f.ds.k_theta(); ++i) {
      const double coord = oracle::multiplier_coord_dense(f.ds, eta, i);
      best = std::max(best, std::abs(sqrt_n * f.stat.weights(i) * coord));
    }
    CHECK(testutil::close_rel(out.boot_stats(j), best, 1e-9));
  }
}

TEST_CASE("identical seeds give bitwise identical replicate paths") {
  const auto f = fit_fixture(23, 30, 2, 6);
  pmax::BootstrapSpec spec;
  spec.replicates = 32;
  spec.seed = 777;
  const auto a = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec);
  const auto b = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec);
  CHECK((a.boot_stats.array() == b.boot_stats.array()).all());
  CHECK(a.p_value == b.p_value);
  spec.seed = 778;
  const auto c = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec);
  CHECK_FALSE((a.boot_stats.array() == c.boot_stats.array()).all());
}

#ifdef _OPENMP
TEST_CASE("thread count does not change the replicate path") {
  const auto f = fit_fixture(29, 30, 2, 6);
  pmax::BootstrapSpec spec;
  spec.replicates = 40;
  spec.seed = 5150;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec);
  omp_set_num_threads(4);
  const auto four = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec);
  spec.mode = pmax::BootstrapMode::ScoreMultiplier;
  omp_set_num_threads(1);
  const auto m_one = pmax::bootstrap_pvalue_multiplier(f.ds, f.g, f.fs, f.stat, spec);
  omp_set_num_threads(4);
  const auto m_four = pmax::bootstrap_pvalue_multiplier(f.ds, f.g, f.fs, f.stat, spec);
  omp_set_num_threads(saved);
  CHECK((one.boot_stats.array() == four.boot_stats.array()).all());
  CHECK((m_one.boot_stats.array() == m_four.boot_stats.array()).all());
}
#endif

TEST_CASE("a shared wild pass scores several statistics identically") {
  const auto f = fit_fixture(31, 35, 2, 7);
  const auto flat = pmax::max_statistic(f.fs, pmax::WeightMode::Flat, f.ds.n());
  const auto invse = pmax::max_statistic(f.fs, pmax::WeightMode::InvSE, f.ds.n());
  pmax::BootstrapSpec spec;
  spec.replicates = 25;
  spec.seed = 909;
  const auto pair = pmax::bootstrap_pvalue_set(f.ds, f.g, f.rf, f.fs, {flat, invse}, spec);
  const auto lone_flat = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, flat, spec);
  const auto lone_invse = pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, invse, spec);
  REQUIRE(pair.size() == 2);
  CHECK((pair[0].boot_stats.array() == lone_flat.boot_stats.array()).all());
  CHECK((pair[1].boot_stats.array() == lone_invse.boot_stats.array()).all());
  CHECK(pair[0].p_value == lone_flat.p_value);
  CHECK(pair[1].p_value == lone_invse.p_value);
}

TEST_CASE("spec validation") {
  const auto f = fit_fixture(37, 20, 1, 3);
  pmax::BootstrapSpec spec;
  spec.replicates = 0;
  CHECK_THROWS_AS(pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec),
                  pmax::ValidationError);
  spec.replicates = 10;
  spec.mode = pmax::BootstrapMode::ScoreMultiplier;
  CHECK_THROWS_AS(pmax::bootstrap_pvalue(f.ds, f.g, f.rf, f.fs, f.stat, spec),
                  pmax::ValidationError);
  spec.mode = pmax::BootstrapMode::ParametricWild;
  CHECK_THROWS_AS(pmax::bootstrap_pvalue_multiplier(f.ds, f.g, f.fs, f.stat, spec),
                  pmax::ValidationError);
}

}  // TEST_SUITE
