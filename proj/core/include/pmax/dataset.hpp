#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pmax/errors.hpp"

namespace pmax {

// 1-based identifier of a parsimonious model, equivalently of the test
// covariate column it adds. Public reporting (argmax, error messages) uses
// this convention; internal loops are plain 0-based indices.
using ModelIndex = Eigen::Index;

/// Regression data with the nuisance/test split fixed at construction.
///
/// x_theta is column-major so model i streams one contiguous column.
/// A Dataset is immutable by convention once built and safe to share across
/// concurrent readers. There is no implicit intercept; callers wanting one
/// add a column of ones to the nuisance block.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x_delta;  ///< n x k_delta nuisance block (k_delta >= 0)
  Eigen::MatrixXd x_theta;  ///< n x k_theta test block (k_theta >= 1)

  std::string response_name = "y";
  std::vector<std::string> delta_names;
  std::vector<std::string> theta_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index k_delta() const { return x_delta.cols(); }
  Eigen::Index k_theta() const { return x_theta.cols(); }

  /// Name of test column i (1-based); synthesizes "x<i>" when unnamed.
  std::string theta_name(ModelIndex i) const;
};

/// Column roles for load_csv. With test_all_remaining set, every column that
/// is neither the response nor listed as nuisance becomes a test column, in
/// file order; otherwise the test list is used verbatim.
struct CsvSchema {
  std::string response;
  std::vector<std::string> nuisance;
  std::vector<std::string> test;
  bool test_all_remaining = false;
};

/// Reads a UTF-8, comma-separated file with a header row; '.' decimal point,
/// cells parsed as IEEE-754 doubles. Throws SchemaError for missing or
/// duplicated columns, ParseError (with 1-based row and column) for
/// malformed cells, ValidationError when the resulting Dataset breaks an
/// invariant.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes header plus rows at 17 significant digits, so that
/// load_csv(save_csv(ds)) reproduces ds bit for bit.
void save_csv(const Dataset& ds, const std::string& path);

/// Invariant report: all values finite, n >= k_delta + 2 (one residual
/// degree of freedom per parsimonious model), no identically zero column,
/// consistent shapes. Returns one message per violation naming the invariant
/// and the offending column; empty means valid. Never throws.
std::vector<std::string> validate(const Dataset& ds);

/// Throws ValidationError carrying every violation if validate(ds) is
/// nonempty.
void require_valid(const Dataset& ds);

}  // namespace pmax
