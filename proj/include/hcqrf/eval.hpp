#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hcqrf/forest.hpp"
#include "hcqrf/scenarios.hpp"

namespace hcqrf {

// ===== error metrics =====

struct CoefficientMetrics {
  std::string coefficient;
  double mse = 0.0;
  double mae = 0.0;
  bool has_relative = false;  // suppressed when min |true| <= 1e-8
  double rmse = 0.0;          // mean of squared relative errors
  double rmae = 0.0;          // mean of absolute relative errors
};

// Per-column error means of `estimates` against `truth` over the test set.
std::vector<CoefficientMetrics> mse_mae(const Eigen::MatrixXd& estimates,
                                        const Eigen::MatrixXd& truth,
                                        const std::vector<std::string>& names);

// ===== Kaplan-Meier =====

struct KmCurve {
  std::vector<double> times;     // sorted distinct event times
  std::vector<double> survival;  // S(t) just after each event time
  std::vector<int> at_risk;
  std::vector<int> events;
};

KmCurve km_estimate(const Eigen::VectorXd& times, const Eigen::VectorXi& status);

// inf{t : 1 - S(t) >= tau}; throws "quantile beyond follow-up" when 1 - S
// never reaches tau.
double km_quantile(const KmCurve& curve, double tau);

// ===== calibration statistic =====

inline constexpr int kCalibrationGridSize = 19;

// {0.05, 0.10, ..., 0.95}
std::array<double, kCalibrationGridSize> calibration_grid();

// Left-continuous sup-inversion of a 19-point quantile curve (monotonized by
// a running maximum, linearly interpolated, clamped to [0.05, 0.95]).
double invert_quantile_curve(const Eigen::VectorXd& curve, double t);

// Core statistic: average of the inverted member curves at the stratum's
// KM tau-quantile.  `curves` holds one 19-point quantile curve per member.
double calibration_tau_hat_curves(const std::vector<Eigen::VectorXd>& curves,
                                  const Eigen::VectorXd& times,
                                  const Eigen::VectorXi& status, double tau);

// Forest-driven variant: member curves come from the fitted model, one
// conditional quantile per grid level.
double calibration_tau_hat(const Forest& forest, const SurvivalDataset& stratum,
                           double tau);

// ===== Monte Carlo benchmark =====

struct BenchmarkConfig {
  ScenarioSpec scenario;
  std::vector<std::string> methods;  // subset of {hcqrf, hcqrf_c, marginal_c}
  int reps = 1;
  std::uint64_t seed = 1;
  ForestConfig forest;
  CdfForestConfig cdf;
  unsigned threads = 1;  // across reps
};

struct MetricRow {
  std::string method;
  std::string coefficient;  // beta_0, ..., beta_{q-1}, or "quantile"
  double mse = 0.0;
  double mae = 0.0;
  bool has_relative = false;
  double rmse = 0.0;
  double rmae = 0.0;
  std::vector<double> per_rep_mse;  // rep-level values behind the mean
};

struct MetricTable {
  ScenarioId scenario = ScenarioId::S1_tree_binary;
  double tau = 0.5;
  int n_reps = 0;
  BenchmarkConfig config;
  std::vector<MetricRow> rows;
  double wall_seconds = 0.0;
};

MetricTable monte_carlo_benchmark(const BenchmarkConfig& config);

// method,coefficient,mse,mae,rmse,rmae (relative cells empty when suppressed)
void write_benchmark_csv(const MetricTable& table, const std::string& path);

// Ordered-JSON run manifest: config, seeds, build version, wall time.
void write_benchmark_manifest(const MetricTable& table, const std::string& path,
                              const std::string& version);

}  // namespace hcqrf
