#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pmax/dgp.hpp"

namespace pmax::harness {

/// Test families the Monte Carlo harness knows how to run.
///  - PMax:   max statistic with flat weights, wild bootstrap p-value.
///  - PMaxT:  max statistic with inverse-standard-error weights (t-type).
///  - WaldBoot: bootstrapped full-model Wald, only feasible when
///    k_delta + k_theta < n.
enum class TestKind { PMax, PMaxT, WaldBoot };

std::string test_name(TestKind kind);

/// One covariate case: truncation bound of the primitive draws plus the
/// dependence structure.
struct CovariateCase {
  double bound = std::numeric_limits<double>::infinity();
  dgp::Dependence dependence = dgp::Dependence::Independent;
};

/// Test dimension axis entry: a fixed k_theta or a growth rule resolved
/// against each n in the design.
struct KThetaRule {
  enum class Kind { Fixed, Growth };
  Kind kind = Kind::Fixed;
  Eigen::Index value = 1;
  dgp::GrowthRule rule = dgp::GrowthRule::KOne;

  static KThetaRule fixed(Eigen::Index v) { return {Kind::Fixed, v, dgp::GrowthRule::KOne}; }
  static KThetaRule growth(dgp::GrowthRule r) { return {Kind::Growth, 1, r}; }
  Eigen::Index resolve(Eigen::Index n) const;
};

/// Full factorial Monte Carlo design. Cells are the product
/// n_list x k_delta_list x k_theta_rules x covariate_cases x alternatives;
/// every cell runs every requested test at every alpha.
struct McDesign {
  std::vector<Eigen::Index> n_list;
  std::vector<Eigen::Index> k_delta_list;
  std::vector<KThetaRule> k_theta_rules;
  std::vector<CovariateCase> covariate_cases;
  std::vector<dgp::AlternativeSpec> alternatives;
  std::vector<TestKind> tests = {TestKind::PMax, TestKind::PMaxT};
  int mc_samples = 1000;
  int replicates = 1000;
  std::vector<double> alphas = {0.01, 0.05, 0.10};
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// One resolved grid point.
struct McCell {
  Eigen::Index n = 0;
  Eigen::Index k_delta = 0;
  Eigen::Index k_theta = 0;
  CovariateCase covariates;
  dgp::AlternativeSpec alternative;
  std::string alt_label;
};

std::string alternative_label(const dgp::AlternativeSpec& alt);

/// Stable cell identifier, e.g. "n=100 kd=0 kt=35 dep=cross U=inf alt=null".
/// Per-sample seeds are derived from hash(design seed, this string, sample
/// index), so cells are independently re-runnable.
std::string cell_identifier(const McCell& cell);

/// Results of one cell. Statistical content is deterministic given the
/// design (any thread count); the timing field is measured and is not.
struct McCellReport {
  std::string cell_id;
  McCell cell;
  std::vector<TestKind> tests;
  std::vector<double> alphas;
  int mc_samples = 0;
  int replicates = 0;

  /// mc_samples x tests; NaN where the test failed or was infeasible.
  Eigen::MatrixXd p_values;
  /// tests x alphas, rejections / valid_samples; NaN when no sample is valid.
  Eigen::MatrixXd rejection;
  Eigen::VectorXd mean_p;    ///< per test, over valid samples
  Eigen::VectorXd median_p;  ///< per test, over valid samples
  std::vector<long long> valid_samples;  ///< per test
  long long degenerate_models = 0;  ///< parsimonious fits with a degenerate test column, summed
  double mean_sample_seconds = 0.0;
  std::vector<std::string> test_errors;  ///< per test: first error message, "" if clean
  std::string cell_error;                ///< nonempty when the whole cell failed
};

std::vector<McCell> expand_grid(const McDesign& design);

/// Runs every sample of one cell: generate, fit, bootstrap the requested
/// tests, record p-values. Samples run in parallel; per-test failures are
/// recorded per sample, they never abort the cell.
McCellReport run_cell(const McDesign& design, const McCell& cell);

struct McGridResult {
  std::vector<McCellReport> cells;
  std::string text;      ///< aligned tables, one block per (alternative, case, k_delta, n)
  std::string csv;       ///< one row per cell x test x alpha
  std::string manifest;  ///< JSON: seed, design, versions, per-cell timings
};

/// Maps run_cell over the grid (cells sequential, samples parallel) and
/// renders the tables. Per-cell errors annotate the cell, the grid never
/// aborts.
McGridResult run_grid(const McDesign& design);

std::string render_text(const std::vector<McCellReport>& reports);
std::string render_csv(const std::vector<McCellReport>& reports);

}  // namespace pmax::harness
