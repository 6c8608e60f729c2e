#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pmax/bootstrap.hpp"
#include "pmax/errors.hpp"
#include "pmax/wald.hpp"

namespace {

// Orthogonal fixture with an exactly zero theta estimate: the test columns
// are orthogonal to the nuisance column and to the response, so the full fit
// has theta_hat = 0 and w_n = 0 without rounding.
pmax::Dataset orthogonal_zero_theta() {
  const Eigen::Index n = 8;
  pmax::Dataset ds;
  ds.x_delta = Eigen::MatrixXd::Ones(n, 1);
  ds.x_theta.resize(n, 2);
  ds.x_theta.col(0) << 1, -1, 1, -1, 1, -1, 1, -1;
  ds.x_theta.col(1) << 1, 1, -1, -1, 1, 1, -1, -1;
  Eigen::VectorXd r(n);
  r << 1, 1, 1, 1, -1, -1, -1, -1;
  ds.y = 3.0 * Eigen::VectorXd::Ones(n) + r;
  ds.response_name = "y";
  ds.delta_names = {"z1"};
  ds.theta_names = {"x1", "x2"};
  return ds;
}

}  // namespace

TEST_SUITE("wald") {

TEST_CASE("zero theta estimate gives w_n = 0 and w_s = -sqrt(k/2)") {
  const auto ds = orthogonal_zero_theta();
  pmax::BootstrapSpec spec;
  spec.replicates = 20;
  spec.seed = 1;
  const auto out = pmax::wald_test(ds, spec);
  CHECK(out.w_n == 0.0);
  CHECK(out.w_s == -1.0);  // (0 - 2) / sqrt(4), exact in floating point
  CHECK(out.sigma_sq_hat == doctest::Approx(1.0).epsilon(1e-14));  // r'r / n = 8/8
  CHECK(out.p_asymp == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(out.p_asymp_normal == doctest::Approx(0.84134474606854293).epsilon(1e-12));
}

TEST_CASE("matches the dense oracle on random data") {
  for (std::uint64_t seed : {3u, 5u, 8u}) {
    const auto ds = testutil::random_dataset(seed, 60, 3, 7);
    pmax::BootstrapSpec spec;
    spec.replicates = 1;
    const auto out = pmax::wald_test(ds, spec);
    const double ref = oracle::wald_dense(ds);
    CHECK(testutil::close_rel(out.w_n, ref, 1e-9));
    const double kt = static_cast<double>(ds.k_theta());
    CHECK(out.w_s == (out.w_n - kt) / std::sqrt(2.0 * kt));
    const auto full = oracle::dense_ols(
        [&] {
          Eigen::MatrixXd x(ds.n(), ds.k_delta() + ds.k_theta());
          x.leftCols(ds.k_delta()) = ds.x_delta;
          x.rightCols(ds.k_theta()) = ds.x_theta;
          return x;
        }(),
        ds.y);
    CHECK(testutil::close_rel(out.sigma_sq_hat, full.ssr / static_cast<double>(ds.n()), 1e-9));
  }
}

TEST_CASE("no nuisance block matches the dense oracle") {
  const auto ds = testutil::random_dataset(21, 40, 0, 5);
  pmax::BootstrapSpec spec;
  spec.replicates = 1;
  const auto out = pmax::wald_test(ds, spec);
  CHECK(testutil::close_rel(out.w_n, oracle::wald_dense(ds), 1e-9));
}

TEST_CASE("bootstrap p-value is the strict exceedance frequency") {
  const auto ds = testutil::random_dataset(9, 50, 2, 4);
  pmax::BootstrapSpec spec;
  spec.replicates = 64;
  spec.seed = 2024;
  const auto out = pmax::wald_test(ds, spec);
  REQUIRE(out.boot_stats.size() == 64);
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < 64; ++j) {
    if (out.boot_stats(j) > out.w_n) ++count;
  }
  CHECK(out.p_boot == static_cast<double>(count) / 64.0);

  // Counting on the standardized scale gives the same p-value: the map
  // w -> (w - k) / sqrt(2k) is strictly increasing.
  const double kt = static_cast<double>(ds.k_theta());
  Eigen::Index count_s = 0;
  for (Eigen::Index j = 0; j < 64; ++j) {
    if ((out.boot_stats(j) - kt) / std::sqrt(2.0 * kt) > out.w_s) ++count_s;
  }
  CHECK(count_s == count);
}

TEST_CASE("feasibility boundary") {
  CHECK(pmax::wald_feasible(10, 4, 5));
  CHECK_FALSE(pmax::wald_feasible(10, 4, 6));
  CHECK_FALSE(pmax::wald_feasible(10, 4, 7));
  const auto ds = testutil::random_dataset(33, 10, 4, 6);
  pmax::BootstrapSpec spec;
  spec.replicates = 4;
  CHECK_THROWS_AS(pmax::wald_test(ds, spec), pmax::ValidationError);
}

TEST_CASE("exact full-model fit is refused") {
  auto ds = testutil::random_dataset(41, 20, 2, 3);
  ds.y = ds.x_delta.rowwise().sum();  // zero residual by construction
  pmax::BootstrapSpec spec;
  spec.replicates = 4;
  CHECK_THROWS_AS(pmax::wald_test(ds, spec), pmax::DegeneracyError);
}

TEST_CASE("identical seeds reproduce the replicate path bitwise") {
  const auto ds = testutil::random_dataset(55, 40, 2, 5);
  pmax::BootstrapSpec spec;
  spec.replicates = 32;
  spec.seed = 31337;
  const auto a = pmax::wald_test(ds, spec);
  const auto b = pmax::wald_test(ds, spec);
  CHECK((a.boot_stats.array() == b.boot_stats.array()).all());
  CHECK(a.p_boot == b.p_boot);
}

#ifdef _OPENMP
TEST_CASE("thread count does not change the replicate path") {
  const auto ds = testutil::random_dataset(56, 40, 2, 5);
  pmax::BootstrapSpec spec;
  spec.replicates = 40;
  spec.seed = 8888;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = pmax::wald_test(ds, spec);
  omp_set_num_threads(4);
  const auto four = pmax::wald_test(ds, spec);
  omp_set_num_threads(saved);
  CHECK((one.boot_stats.array() == four.boot_stats.array()).all());
  CHECK(one.w_n == four.w_n);
}
#endif

TEST_CASE("asymptotic p-values stay in [0, 1]") {
  for (std::uint64_t seed : {61u, 62u, 63u}) {
    const auto ds = testutil::random_dataset(seed, 45, 1, 6);
    pmax::BootstrapSpec spec;
    spec.replicates = 2;
    const auto out = pmax::wald_test(ds, spec);
    CHECK(out.p_asymp >= 0.0);
    CHECK(out.p_asymp <= 1.0);
    CHECK(out.p_asymp_normal >= 0.0);
    CHECK(out.p_asymp_normal <= 1.0);
  }
}

}  // TEST_SUITE
