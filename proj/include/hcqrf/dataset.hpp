#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace hcqrf {

// Right-censored survival sample: observed time y = min(T, C), event flag
// delta = 1{T <= C}, effect modifiers x (n x p) and predictive design z
// (n x q) whose first column is the constant 1 (intercept).
struct SurvivalDataset {
  Eigen::VectorXd y;
  Eigen::VectorXi delta;
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  std::vector<std::string> modifier_names;   // size p
  std::vector<std::string> predictor_names;  // size q, first is "intercept"

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index q() const { return z.cols(); }

  // Throws DataError on shape mismatch, non-finite values, negative times,
  // delta outside {0,1}, or a non-constant intercept column.
  void validate() const;
};

// Covariate-only rows (prediction inputs): modifiers plus predictors, with
// the intercept column prepended on load.
struct CovariateTable {
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  std::vector<std::string> modifier_names;
  std::vector<std::string> predictor_names;

  Eigen::Index n() const { return x.rows(); }
};

// Column layout of the CSV files.  Modifier and predictor columns are
// recognized by name prefix, in header order; the intercept is implicit.
struct CsvSchema {
  std::string time_column = "time";
  std::string status_column = "status";
  std::string modifier_prefix = "x_";
  std::string predictor_prefix = "z_";
};

// Loads a survival CSV (columns: time, status, x_*, z_*).  Parse errors name
// the offending row (1-based, excluding the header) and column.
SurvivalDataset load_dataset(const std::string& path, const CsvSchema& schema = {});

// Loads a covariate CSV (columns: x_*, z_*; time/status allowed and ignored).
CovariateTable load_covariates(const std::string& path, const CsvSchema& schema = {});

void write_dataset_csv(const std::string& path, const SurvivalDataset& data);

void write_covariates_csv(const std::string& path, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& z,
                          const std::vector<std::string>& modifier_names,
                          const std::vector<std::string>& predictor_names);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace hcqrf
