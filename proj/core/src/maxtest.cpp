#include "pmax/maxtest.hpp"

#include <cmath>

#include "pmax/errors.hpp"

namespace pmax {

namespace detail {

double weighted_absmax(const Eigen::VectorXd& theta, const Eigen::VectorXd& weights,
                       double sqrt_n, Eigen::Index* argmax0) {
  double best = -1.0;
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double v = std::abs(sqrt_n * weights(i) * theta(i));
    if (v > best) {
      best = v;
      at = i;
    }
  }
  if (argmax0 != nullptr) *argmax0 = at;
  return best;
}

}  // namespace detail

MaxStat max_statistic(const FitSet& fs, WeightMode mode, Eigen::Index n) {
  const Eigen::Index kt = fs.theta_hat.size();
  if (kt == 0) throw ValidationError("empty fit set");
  if (fs.degenerate.size() == static_cast<std::size_t>(kt)) {
    throw DegeneracyError("every parsimonious model is degenerate");
  }

  MaxStat st;
  st.mode = mode;
  st.weights.resize(kt);
  if (mode == WeightMode::InvSE) {
    if (!fs.degenerate.empty()) {
      throw DegeneracyError("inverse-SE weights require non-degenerate fits; model " +
                            std::to_string(fs.degenerate.front() + 1) + " is degenerate");
    }
    for (Eigen::Index i = 0; i < kt; ++i) {
      if (!(fs.s_hat(i) > 0.0)) {
        throw DegeneracyError("model " + std::to_string(i + 1) +
                              " has zero standard error (exact fit); inverse-SE weights undefined");
      }
      st.weights(i) = 1.0 / fs.s_hat(i);
    }
  } else {
    st.weights.setOnes();
    for (Eigen::Index i0 : fs.degenerate) st.weights(i0) = 0.0;
  }

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  st.per_model.resize(kt);
  for (Eigen::Index i = 0; i < kt; ++i) {
    st.per_model(i) = std::abs(sqrt_n * st.weights(i) * fs.theta_hat(i));
  }
  Eigen::Index at0 = 0;
  st.t_n = detail::weighted_absmax(fs.theta_hat, st.weights, sqrt_n, &at0);
  st.argmax = at0 + 1;
  return st;
}

}  // namespace pmax
