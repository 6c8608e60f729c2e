#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>

#include "pmax/dataset.hpp"

namespace testutil {

// Random regression dataset built directly from std::mt19937_64, so fixture
// construction shares no code with the generator under test. theta0 == null
// means the zero vector.
inline pmax::Dataset random_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index kd,
                                    Eigen::Index kt, const Eigen::VectorXd* theta0 = nullptr) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x5eed);
  std::normal_distribution<double> nd;
  pmax::Dataset ds;
  ds.x_delta.resize(n, kd);
  ds.x_theta.resize(n, kt);
  ds.y.resize(n);
  for (Eigen::Index j = 0; j < kd; ++j)
    for (Eigen::Index t = 0; t < n; ++t) ds.x_delta(t, j) = nd(rng);
  for (Eigen::Index i = 0; i < kt; ++i)
    for (Eigen::Index t = 0; t < n; ++t) ds.x_theta(t, i) = nd(rng);
  for (Eigen::Index t = 0; t < n; ++t) {
    double mean = 0.0;
    for (Eigen::Index j = 0; j < kd; ++j) mean += ds.x_delta(t, j);
    if (theta0 != nullptr)
      for (Eigen::Index i = 0; i < kt; ++i) mean += ds.x_theta(t, i) * (*theta0)[i];
    ds.y[t] = mean + nd(rng);
  }
  ds.response_name = "y";
  for (Eigen::Index j = 0; j < kd; ++j) ds.delta_names.push_back("z" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < kt; ++i) ds.theta_names.push_back("x" + std::to_string(i + 1));
  return ds;
}

// |a - b| <= tol * max(1, |a|, |b|)
inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testutil
