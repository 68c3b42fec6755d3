#include "hcqrf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "hcqrf/errors.hpp"
#include "hcqrf/parallel.hpp"
#include "hcqrf/rng.hpp"

namespace hcqrf {

namespace {

constexpr std::uint64_t kRepSeedTag = 0x4D435245ULL;   // per-repetition substream
constexpr std::uint64_t kCdfSeedTag = 0x43444646ULL;   // censoring model substream
constexpr std::uint64_t kFitSeedTag = 0x464F5253ULL;   // quantile forest substream
constexpr double kRelativeFloor = 1e-8;

}  // namespace

// ===== error metrics =====

std::vector<CoefficientMetrics> mse_mae(const Eigen::MatrixXd& estimates,
                                        const Eigen::MatrixXd& truth,
                                        const std::vector<std::string>& names) {
  if (estimates.rows() != truth.rows() || estimates.cols() != truth.cols()) {
    throw DataError("metric shape mismatch: estimates are " +
                    std::to_string(estimates.rows()) + "x" +
                    std::to_string(estimates.cols()) + ", truth is " +
                    std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
  }
  if (estimates.rows() == 0) throw DataError("metrics need at least one row");
  const Eigen::Index n = estimates.rows();
  const Eigen::Index q = estimates.cols();
  std::vector<CoefficientMetrics> out(static_cast<std::size_t>(q));
  for (Eigen::Index j = 0; j < q; ++j) {
    CoefficientMetrics& cell = out[static_cast<std::size_t>(j)];
    cell.coefficient = static_cast<std::size_t>(j) < names.size()
                           ? names[static_cast<std::size_t>(j)]
                           : "beta_" + std::to_string(j);
    double min_abs_true = std::numeric_limits<double>::infinity();
    double mse = 0.0;
    double mae = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double err = estimates(i, j) - truth(i, j);
      mse += err * err;
      mae += std::abs(err);
      min_abs_true = std::min(min_abs_true, std::abs(truth(i, j)));
    }
    cell.mse = mse / static_cast<double>(n);
    cell.mae = mae / static_cast<double>(n);
    if (min_abs_true > kRelativeFloor) {
      cell.has_relative = true;
      double rmse = 0.0;
      double rmae = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double rel = (estimates(i, j) - truth(i, j)) / std::abs(truth(i, j));
        rmse += rel * rel;
        rmae += std::abs(rel);
      }
      cell.rmse = rmse / static_cast<double>(n);
      cell.rmae = rmae / static_cast<double>(n);
    }
  }
  return out;
}

// ===== Kaplan-Meier =====

KmCurve km_estimate(const Eigen::VectorXd& times, const Eigen::VectorXi& status) {
  const Eigen::Index n = times.size();
  if (n == 0) throw DataError("Kaplan-Meier needs a nonempty sample");
  if (status.size() != n) throw DataError("Kaplan-Meier time/status size mismatch");
  std::vector<std::pair<double, int>> obs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(times(i))) throw DataError("Kaplan-Meier time must be finite");
    if (status(i) != 0 && status(i) != 1) {
      throw DataError("Kaplan-Meier status must be 0/1");
    }
    obs[static_cast<std::size_t>(i)] = {times(i), status(i)};
  }
  std::sort(obs.begin(), obs.end());

  KmCurve curve;
  double survival = 1.0;
  std::size_t i = 0;
  Eigen::Index remaining = n;
  while (i < obs.size()) {
    const double t = obs[i].first;
    int died = 0;
    int gone = 0;
    while (i < obs.size() && obs[i].first == t) {
      died += obs[i].second;
      ++gone;
      ++i;
    }
    if (died > 0) {
      survival *= 1.0 - static_cast<double>(died) / static_cast<double>(remaining);
      curve.times.push_back(t);
      curve.survival.push_back(survival);
      curve.at_risk.push_back(static_cast<int>(remaining));
      curve.events.push_back(died);
    }
    remaining -= gone;
  }
  return curve;
}

double km_quantile(const KmCurve& curve, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  for (std::size_t j = 0; j < curve.times.size(); ++j) {
    if (1.0 - curve.survival[j] >= tau) return curve.times[j];
  }
  throw NumericalError("quantile beyond follow-up");
}

// ===== calibration statistic =====

std::array<double, kCalibrationGridSize> calibration_grid() {
  std::array<double, kCalibrationGridSize> grid{};
  for (int g = 0; g < kCalibrationGridSize; ++g) {
    grid[static_cast<std::size_t>(g)] = 0.05 * static_cast<double>(g + 1);
  }
  return grid;
}

double invert_quantile_curve(const Eigen::VectorXd& curve, double t) {
  if (curve.size() != kCalibrationGridSize) {
    throw DataError("quantile curve must have " +
                    std::to_string(kCalibrationGridSize) + " grid values");
  }
  const auto grid = calibration_grid();
  std::array<double, kCalibrationGridSize> mono{};
  double running = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < kCalibrationGridSize; ++g) {
    running = std::max(running, curve(g));
    mono[static_cast<std::size_t>(g)] = running;
  }
  int last = -1;  // largest grid index with mono <= t
  for (int g = 0; g < kCalibrationGridSize; ++g) {
    if (mono[static_cast<std::size_t>(g)] <= t) last = g;
  }
  if (last < 0) return grid.front();
  if (last == kCalibrationGridSize - 1) return grid.back();
  const double lo = mono[static_cast<std::size_t>(last)];
  const double hi = mono[static_cast<std::size_t>(last + 1)];
  const double fraction = (t - lo) / (hi - lo);  // hi > t >= lo by maximality
  return grid[static_cast<std::size_t>(last)] +
         fraction * (grid[static_cast<std::size_t>(last + 1)] -
                     grid[static_cast<std::size_t>(last)]);
}

double calibration_tau_hat_curves(const std::vector<Eigen::VectorXd>& curves,
                                  const Eigen::VectorXd& times,
                                  const Eigen::VectorXi& status, double tau) {
  if (curves.empty()) throw DataError("calibration stratum is empty");
  const KmCurve km = km_estimate(times, status);
  const double t = km_quantile(km, tau);
  double total = 0.0;
  for (const auto& curve : curves) total += invert_quantile_curve(curve, t);
  return total / static_cast<double>(curves.size());
}

double calibration_tau_hat(const Forest& forest, const SurvivalDataset& stratum,
                           double tau) {
  stratum.validate();
  if (stratum.p() != forest.data.p() || stratum.q() != forest.data.q()) {
    throw DataError("calibration stratum does not match the fitted forest");
  }
  const auto grid = calibration_grid();
  std::vector<Eigen::VectorXd> u_grid;
  u_grid.reserve(grid.size());
  for (const double level : grid) u_grid.push_back(redistribution_at(forest, level));

  std::vector<Eigen::VectorXd> curves(static_cast<std::size_t>(stratum.n()));
  parallel_for(static_cast<std::size_t>(stratum.n()), forest.config.threads,
               [&](std::size_t i) {
                 const Eigen::VectorXd x0 = stratum.x.row(static_cast<Eigen::Index>(i));
                 const Eigen::VectorXd z0 = stratum.z.row(static_cast<Eigen::Index>(i));
                 const ForestWeightVector weights = forest_weights(forest, x0);
                 Eigen::VectorXd curve(kCalibrationGridSize);
                 for (int g = 0; g < kCalibrationGridSize; ++g) {
                   const QuantileFit fit = fit_at_weights(
                       forest, weights, u_grid[static_cast<std::size_t>(g)],
                       grid[static_cast<std::size_t>(g)]);
                   curve(g) = z0.dot(fit.beta);
                 }
                 curves[i] = std::move(curve);
               });
  return calibration_tau_hat_curves(curves, stratum.y, stratum.delta, tau);
}

// ===== Monte Carlo benchmark =====

namespace {

bool known_method(const std::string& name) {
  return name == "hcqrf" || name == "hcqrf_c" || name == "marginal_c";
}

// Fits one method on one repetition's data and returns its (q + 1) metric
// cells: the coefficients and then the conditional quantile.
std::vector<CoefficientMetrics> run_method(const std::string& method,
                                           const SimulatedData& sim,
                                           const BenchmarkConfig& config,
                                           std::uint64_t rep_seed) {
  const double tau = config.scenario.tau;
  SurvivalDataset train = sim.train;
  RedistributionWeights weights;
  ForestConfig forest_config = config.forest;
  if (method == "hcqrf") {
    const CdfModel cdf =
        fit_conditional_cdf(train, config.cdf, mix_seed(rep_seed, kCdfSeedTag));
    weights = redistribution_weights(train, cdf, tau);
  } else {
    // Latent times follow the same convention as observed times: rare
    // negative draws are clamped to zero to keep the sample valid.
    train.y = sim.latent_time.cwiseMax(0.0);
    train.delta.setOnes();
    weights = complete_data_weights(train, tau);
    if (method == "marginal_c") forest_config.split_rule = SplitRule::kMarginal;
  }
  const Forest forest =
      grow_forest(train, weights, forest_config, tau, mix_seed(rep_seed, kFitSeedTag));

  const TruthTable& test = sim.test;
  const Eigen::Index n2 = test.x_star.rows();
  const Eigen::Index q = train.q();
  Eigen::MatrixXd estimates(n2, q);
  Eigen::VectorXd q_hat(n2);
  for (Eigen::Index i = 0; i < n2; ++i) {
    const QuantileFit fit = estimate_beta(forest, test.x_star.row(i));
    estimates.row(i) = fit.beta.transpose();
    q_hat(i) = test.z_star.row(i).dot(fit.beta);
  }
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < q; ++j) names.push_back("beta_" + std::to_string(j));
  std::vector<CoefficientMetrics> cells = mse_mae(estimates, test.beta_true, names);
  std::vector<CoefficientMetrics> quantile_cell =
      mse_mae(q_hat, test.q_true, {"quantile"});
  cells.push_back(quantile_cell.front());
  return cells;
}

}  // namespace

MetricTable monte_carlo_benchmark(const BenchmarkConfig& config) {
  if (config.reps < 1) throw ConfigError("reps must be positive");
  if (config.methods.empty()) throw ConfigError("no methods requested");
  for (const auto& method : config.methods) {
    if (!known_method(method)) throw ConfigError("unknown method: " + method);
  }
  const auto start = std::chrono::steady_clock::now();

  const auto n_methods = config.methods.size();
  const auto reps = static_cast<std::size_t>(config.reps);
  // rep_cells[rep][method] -> (q + 1) metric cells
  std::vector<std::vector<std::vector<CoefficientMetrics>>> rep_cells(reps);

  parallel_for(reps, config.threads, [&](std::size_t r) {
    ScenarioSpec spec = config.scenario;
    spec.seed = mix_seed(config.seed, kRepSeedTag, r);
    try {
      const SimulatedData sim = simulate_scenario_full(spec);
      std::vector<std::vector<CoefficientMetrics>> cells;
      cells.reserve(n_methods);
      for (const auto& method : config.methods) {
        cells.push_back(run_method(method, sim, config, spec.seed));
      }
      rep_cells[r] = std::move(cells);
    } catch (const std::exception& err) {
      throw NumericalError("benchmark repetition " + std::to_string(r + 1) + " (seed " +
                           std::to_string(spec.seed) + ") failed: " + err.what());
    }
  });

  MetricTable table;
  table.scenario = config.scenario.scenario_id;
  table.tau = config.scenario.tau;
  table.n_reps = config.reps;
  table.config = config;
  const auto cells_per_method = rep_cells.front().front().size();
  for (std::size_t m = 0; m < n_methods; ++m) {
    for (std::size_t c = 0; c < cells_per_method; ++c) {
      MetricRow row;
      row.method = config.methods[m];
      row.coefficient = rep_cells.front()[m][c].coefficient;
      row.has_relative = true;
      for (std::size_t r = 0; r < reps; ++r) {
        const CoefficientMetrics& cell = rep_cells[r][m][c];
        row.mse += cell.mse;
        row.mae += cell.mae;
        row.per_rep_mse.push_back(cell.mse);
        if (cell.has_relative) {
          row.rmse += cell.rmse;
          row.rmae += cell.rmae;
        } else {
          row.has_relative = false;
        }
      }
      const auto dn = static_cast<double>(reps);
      row.mse /= dn;
      row.mae /= dn;
      if (row.has_relative) {
        row.rmse /= dn;
        row.rmae /= dn;
      } else {
        row.rmse = 0.0;
        row.rmae = 0.0;
      }
      table.rows.push_back(std::move(row));
    }
  }
  table.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

void write_benchmark_csv(const MetricTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << "method,coefficient,mse,mae,rmse,rmae\n";
  for (const auto& row : table.rows) {
    out << row.method << ',' << row.coefficient << ',' << format_double(row.mse) << ','
        << format_double(row.mae) << ',';
    if (row.has_relative) {
      out << format_double(row.rmse) << ',' << format_double(row.rmae);
    } else {
      out << ',';
    }
    out << '\n';
  }
  if (!out.good()) throw DataError("failed writing output file: " + path);
}

void write_benchmark_manifest(const MetricTable& table, const std::string& path,
                              const std::string& version) {
  nlohmann::ordered_json manifest;
  manifest["version"] = version;
  manifest["scenario"] = scenario_name(table.scenario);
  manifest["tau"] = table.tau;
  manifest["n_reps"] = table.n_reps;
  manifest["seed"] = table.config.seed;
  manifest["methods"] = table.config.methods;
  manifest["scenario_spec"] = {{"n1", table.config.scenario.n1},
                               {"n2", table.config.scenario.n2},
                               {"p", table.config.scenario.p},
                               {"tau", table.config.scenario.tau},
                               {"seed", table.config.scenario.seed}};
  manifest["forest"] = {
      {"n_trees", table.config.forest.n_trees},
      {"min_split", table.config.forest.min_split},
      {"subsample_rate", table.config.forest.subsample_rate},
      {"mtry", table.config.forest.mtry},
      {"min_leaf", table.config.forest.min_leaf},
      {"max_candidate_cuts", table.config.forest.max_candidate_cuts},
      {"split_rule",
       table.config.forest.split_rule == SplitRule::kHybrid ? "hybrid" : "marginal"},
  };
  manifest["cdf_forest"] = {{"n_trees", table.config.cdf.n_trees},
                            {"node_size", table.config.cdf.node_size},
                            {"mtry", table.config.cdf.mtry},
                            {"subsample_rate", table.config.cdf.subsample_rate}};
  manifest["wall_seconds"] = table.wall_seconds;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << manifest.dump(2) << '\n';
  if (!out.good()) throw DataError("failed writing output file: " + path);
}

}  // namespace hcqrf
