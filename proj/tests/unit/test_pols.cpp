#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pmax/errors.hpp"
#include "pmax/pols.hpp"

using testutil::close_rel;

TEST_SUITE("pols") {

TEST_CASE("cross products on a hand fixture") {
  pmax::Dataset ds;
  ds.x_delta = Eigen::MatrixXd::Ones(5, 1);
  ds.x_theta.resize(5, 1);
  ds.x_theta << 1, 2, 3, 4, 5;
  ds.y.resize(5);
  ds.y << 2, 4, 6, 8, 10;
  const auto g = pmax::build_gram(ds);
  CHECK(g.g(0, 0) == 5.0);
  CHECK(g.a[0] == 30.0);
  CHECK(g.b(0, 0) == 15.0);
  CHECK(g.c[0] == 55.0);
  CHECK(g.d[0] == 110.0);
  CHECK(g.yy == 220.0);
  CHECK(g.jitter == 0.0);
  // Schur complement: 55 - 15^2/5 = 10; theta_hat: (110 - 30*15/5)/10 = 2.
  CHECK(g.denom[0] == doctest::Approx(10.0).epsilon(1e-14));
  const auto fs = pmax::fit_all(ds, g);
  CHECK(fs.theta_hat[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fs.delta_hat(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("matches the dense oracle on random instances") {
  std::mt19937_64 pick(42);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index n = 25 + static_cast<Eigen::Index>(pick() % 56);
    const Eigen::Index kd = static_cast<Eigen::Index>(pick() % 6);
    const Eigen::Index kt = 1 + static_cast<Eigen::Index>(pick() % 15);
    const auto ds = testutil::random_dataset(pick(), n, kd, kt);
    const auto g = pmax::build_gram(ds);
    const auto cp = oracle::cross_products(ds);
    if (kd > 0) {
      CHECK((g.g - cp.g).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + cp.g.cwiseAbs().maxCoeff()));
      CHECK((g.b - cp.b).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + cp.b.cwiseAbs().maxCoeff()));
    }
    CHECK((g.c - cp.c).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + cp.c.cwiseAbs().maxCoeff()));
    CHECK((g.d - cp.d).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + cp.d.cwiseAbs().maxCoeff()));

    const auto fs = pmax::fit_all(ds, g);
    REQUIRE(fs.degenerate.empty());
    for (Eigen::Index i = 0; i < kt; ++i) {
      const auto pf = oracle::parsimonious_fit(ds, i);
      CHECK(close_rel(fs.theta_hat[i], pf.theta, 1e-10));
      CHECK(close_rel(fs.denom[i], pf.denom, 1e-10));
      CHECK(close_rel(fs.v_hat_sq[i], pf.v_hat_sq, 1e-10));
      CHECK(close_rel(fs.s_hat[i], pf.s_hat, 1e-10));
      for (Eigen::Index j = 0; j < kd; ++j)
        CHECK(close_rel(fs.delta_hat(j, i), pf.delta[j], 1e-9));
    }
  }
}

TEST_CASE("restricted fit projects onto the nuisance block") {
  const auto ds = testutil::random_dataset(9, 40, 3, 5);
  const auto g = pmax::build_gram(ds);
  const auto rf = pmax::fit_restricted(ds, g);
  CHECK((rf.fitted0 + rf.resid0 - ds.y).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd orth = ds.x_delta.transpose() * rf.resid0;
  CHECK(orth.cwiseAbs().maxCoeff() < 1e-8);

  const auto empty = testutil::random_dataset(10, 20, 0, 4);
  const auto ge = pmax::build_gram(empty);
  const auto rfe = pmax::fit_restricted(empty, ge);
  CHECK(rfe.delta0_hat.size() == 0);
  CHECK((rfe.fitted0.array() == 0.0).all());
  CHECK((rfe.resid0.array() == empty.y.array()).all());
}

TEST_CASE("y_override with the original response is bit-identical") {
  const auto ds = testutil::random_dataset(11, 50, 4, 8);
  const auto g = pmax::build_gram(ds);
  const auto base = pmax::fit_all(ds, g);
  const auto again = pmax::fit_all(ds, g, &ds.y);
  CHECK((base.theta_hat.array() == again.theta_hat.array()).all());
  CHECK((base.s_hat.array() == again.s_hat.array()).all());
  CHECK((base.v_hat_sq.array() == again.v_hat_sq.array()).all());
}

TEST_CASE("refit_theta reproduces fit_all on a replacement response") {
  const auto ds = testutil::random_dataset(12, 45, 2, 7);
  const auto g = pmax::build_gram(ds);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Eigen::VectorXd ystar(ds.n());
  for (Eigen::Index t = 0; t < ds.n(); ++t) ystar[t] = nd(rng);
  const auto full = pmax::fit_all(ds, g, &ystar);
  pmax::detail::RefitScratch ws;
  Eigen::VectorXd theta(ds.k_theta());
  pmax::detail::refit_theta(ds, g, ystar, ws, theta);
  CHECK((theta.array() == full.theta_hat.array()).all());
}

TEST_CASE("degenerate test columns are flagged and zero-filled") {
  auto ds = testutil::random_dataset(13, 30, 2, 4);
  ds.x_theta.col(2) = 0.25 * ds.x_delta.col(0) - 2.0 * ds.x_delta.col(1);
  const auto g = pmax::build_gram(ds);
  const auto fs = pmax::fit_all(ds, g);
  REQUIRE(fs.degenerate == std::vector<Eigen::Index>{2});
  CHECK(fs.is_degenerate(2));
  CHECK_FALSE(fs.is_degenerate(1));
  CHECK(fs.theta_hat[2] == 0.0);
  CHECK(fs.s_hat[2] == 0.0);
  CHECK(g.denom[2] <= pmax::kDegeneracyTol * g.c[2]);
}

TEST_CASE("power-of-two rescaling is exactly equivariant") {
  const auto ds = testutil::random_dataset(14, 40, 3, 6);
  const auto g = pmax::build_gram(ds);
  const auto base = pmax::fit_all(ds, g);

  auto scaled = ds;
  scaled.y *= 2.0;
  const auto gs = pmax::build_gram(scaled);
  const auto fs = pmax::fit_all(scaled, gs);
  CHECK((fs.theta_hat.array() == 2.0 * base.theta_hat.array()).all());

  auto xscaled = ds;
  xscaled.x_theta.col(1) *= 2.0;
  const auto gx = pmax::build_gram(xscaled);
  const auto fx = pmax::fit_all(xscaled, gx);
  CHECK(fx.theta_hat[1] == 0.5 * base.theta_hat[1]);
  CHECK(fx.theta_hat[0] == base.theta_hat[0]);
}

TEST_CASE("model permutation permutes the outputs") {
  const auto ds = testutil::random_dataset(15, 35, 2, 5);
  auto perm = ds;
  const std::vector<Eigen::Index> order = {3, 0, 4, 1, 2};
  for (Eigen::Index i = 0; i < 5; ++i) {
    perm.x_theta.col(i) = ds.x_theta.col(order[static_cast<std::size_t>(i)]);
    perm.theta_names[static_cast<std::size_t>(i)] =
        ds.theta_names[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  const auto base = pmax::fit_all(ds, pmax::build_gram(ds));
  const auto shuffled = pmax::fit_all(perm, pmax::build_gram(perm));
  // Not bitwise: a column's position decides which SIMD kernel tail computes
  // its cross products, so the low bits move with the permutation.
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(close_rel(shuffled.theta_hat[i], base.theta_hat[order[static_cast<std::size_t>(i)]],
                    1e-12));
    CHECK(close_rel(shuffled.s_hat[i], base.s_hat[order[static_cast<std::size_t>(i)]], 1e-12));
  }
}

TEST_CASE("gram factorization falls back to one jitter retry") {
  auto ds = testutil::random_dataset(16, 25, 2, 3);
  ds.x_delta.col(0).setZero();  // zero leading pivot fails the first factorization
  const auto g = pmax::build_gram(ds);
  CHECK(g.jitter > 0.0);

  auto hopeless = testutil::random_dataset(17, 25, 2, 3);
  hopeless.x_delta.setZero();  // zero trace leaves the retry nothing to add
  CHECK_THROWS_AS(pmax::build_gram(hopeless), pmax::CollinearityError);
}

TEST_CASE("k_delta = 0 reduces to per-column simple regression") {
  const auto ds = testutil::random_dataset(18, 30, 0, 6);
  const auto g = pmax::build_gram(ds);
  const auto fs = pmax::fit_all(ds, g);
  for (Eigen::Index i = 0; i < ds.k_theta(); ++i) {
    const double c = ds.x_theta.col(i).squaredNorm();
    const double d = ds.x_theta.col(i).dot(ds.y);
    CHECK(close_rel(g.denom[i], c, 1e-12));
    CHECK(close_rel(fs.theta_hat[i], d / c, 1e-12));
    CHECK(fs.delta_hat.rows() == 0);
  }
}

}  // TEST_SUITE
