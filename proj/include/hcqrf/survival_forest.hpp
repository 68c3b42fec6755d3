#pragma once

#include <cstdint>
#include <vector>

#include "hcqrf/dataset.hpp"
#include "hcqrf/qr.hpp"

namespace hcqrf {

// Conditional CDF estimator: a self-contained random survival forest with
// log-rank splits over the packed covariates (x_1..x_p, z_1..z_{q-1}) and
// Nelson-Aalen cumulative-hazard step functions in the terminal nodes.
struct CdfForestConfig {
  int n_trees = 250;
  int node_size = 15;
  int mtry = 0;  // 0 resolves to ceil((p + q) / 3)
  double subsample_rate = 0.632;  // without replacement
  int max_candidate_cuts = 64;
  unsigned threads = 1;
};

// F is clamped to [0, 1 - kCdfClampEps] so the redistribution ratio stays finite.
inline constexpr double kCdfClampEps = 1e-6;

struct SurvivalTreeNode {
  int feature = -1;  // packed feature index; -1 marks a terminal node
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Terminal payload: nondecreasing cumulative hazard, step at each event time.
  std::vector<double> times;
  std::vector<double> chf;
};

struct SurvivalTree {
  std::vector<SurvivalTreeNode> nodes;
  std::vector<std::uint32_t> inbag;  // sorted training row ids
};

struct CdfModel {
  CdfForestConfig config;
  std::uint64_t seed = 0;
  int p = 0;
  int q = 0;
  std::vector<SurvivalTree> trees;

  bool row_inbag(int tree, std::uint32_t row) const;
};

// Deterministic given seed.  Throws DataError on all-censored data
// ("no events: CDF unidentifiable") or when n < 2 * node_size.
CdfModel fit_conditional_cdf(const SurvivalDataset& data,
                             const CdfForestConfig& config, std::uint64_t seed);

// Ensemble estimate F(t | x, z) = 1 - exp(-mean tree CHF), clamped.
double evaluate_cdf(const CdfModel& model, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& z, double t);

// Same, averaging only trees where training row `row` is out-of-bag.
// Throws NumericalError("no OOB trees") when the row is in-bag everywhere.
double evaluate_cdf_oob(const CdfModel& model, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& z, double t, std::uint32_t row);

// Redistribution-of-mass weights: u_i = 1 for events and for censored rows
// with F(Y_i) >= tau; otherwise (tau - F) / (1 - F), which lies in (0, tau).
struct RedistributionWeights {
  Eigen::VectorXd u;
  Eigen::VectorXd f_at_y;  // the F(Y_i | x_i, z_i) values used
  double tau = 0.5;
};

// Uses out-of-bag CDF evaluation per row, falling back to the full ensemble
// for rows that are in-bag in every tree.
RedistributionWeights redistribution_weights(const SurvivalDataset& data,
                                             const CdfModel& model, double tau);

// Dataset-level augmentation: unit observation weights, with the pseudo
// response y_inf = 10 * max(Y) computed over the full training data.
WeightedQrProblem augment_pseudo_observations(const SurvivalDataset& data,
                                              const RedistributionWeights& weights,
                                              double tau);

double pseudo_response_bound(const SurvivalDataset& data);  // 10 * max(Y)

}  // namespace hcqrf
