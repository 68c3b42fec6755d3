#pragma once

#include <cstdint>
#include <vector>

#include "hcqrf/dataset.hpp"
#include "hcqrf/qr.hpp"
#include "hcqrf/survival_forest.hpp"

namespace hcqrf {

enum class SplitRule {
  kHybrid,    // rank-score variable selection + loss-minimizing cut
  kMarginal,  // marginal response-quantile contrast, ignoring Z (ablation
              // approximation of quantile-forest-style splitting)
};

struct ForestConfig {
  int n_trees = 500;            // B
  int min_split = 20;           // a node is split-eligible when |N| > min_split
  double subsample_rate = 0.8;  // per-tree subsample, without replacement
  int mtry = 0;                 // 0 resolves to ceil(p / 3), minimum 1
  int min_leaf = 0;             // 0 resolves to max(5, q + 2)
  int max_candidate_cuts = 50;  // order-statistic midpoints per variable
  SplitRule split_rule = SplitRule::kHybrid;
  unsigned threads = 1;

  int resolved_mtry(int p) const;
  int resolved_min_leaf(int q) const;
};

struct SplitNode {
  int split_var = -1;  // modifier index; -1 marks a leaf
  double split_value = 0.0;
  int left = -1;
  int right = -1;
  std::vector<std::uint32_t> rows;  // leaf members (in-bag rows), else empty
};

// Loss bookkeeping for every executed split; the child sum can never exceed
// the parent loss because the child fits are exact minimizers.
struct SplitAudit {
  int node_id = 0;
  double parent_loss = 0.0;
  double child_loss_sum = 0.0;
};

struct Tree {
  std::vector<SplitNode> nodes;
  std::vector<std::uint32_t> inbag;  // sorted row ids
  std::vector<SplitAudit> split_audits;
};

// The fitted hybrid forest.  Training rows, redistribution weights, and the
// pseudo-response bound travel with the trees so that estimation at new
// points is self-contained.
struct Forest {
  ForestConfig config;
  double tau = 0.5;
  std::uint64_t seed = 0;
  double y_inf = 0.0;  // 10 * max(Y), fixed at fit time
  SurvivalDataset data;
  RedistributionWeights weights;
  std::vector<Tree> trees;

  bool row_inbag(int tree, std::uint32_t row) const;
};

// Adaptive nearest-neighbor weights of a query point: nonnegative, summing
// to 1, sparse over the training rows that share a leaf with x0.
struct ForestWeightVector {
  std::vector<std::uint32_t> index;  // ascending training row ids
  std::vector<double> weight;        // matching positive weights

  double sum() const;
};

// u = 1 for every row: bypasses the censoring machinery for complete data.
RedistributionWeights complete_data_weights(const SurvivalDataset& data, double tau);

// Grows B trees on independent subsamples with per-tree RNG substreams.
// Deterministic in (data, weights, config, tau, seed) regardless of threads.
Forest grow_forest(const SurvivalDataset& data, const RedistributionWeights& weights,
                   const ForestConfig& config, double tau, std::uint64_t seed);

// Leaf membership of a query point in one tree.
const std::vector<std::uint32_t>& tree_leaf_rows(const Tree& tree,
                                                 const Eigen::VectorXd& x0);

ForestWeightVector forest_weights(const Forest& forest, const Eigen::VectorXd& x0);

// Weights restricted to trees where `row` is out-of-bag; throws
// NumericalError("no OOB trees for row ...") when the row is in-bag everywhere.
ForestWeightVector forest_weights_oob(const Forest& forest, const Eigen::VectorXd& x0,
                                      std::uint32_t row);

// Doubly-weighted coefficient estimate at x0: forest weights times
// redistribution weights on observed rows, complements on pseudo rows.
// Requires at least 5q rows with positive forest weight.
QuantileFit estimate_beta(const Forest& forest, const Eigen::VectorXd& x0);

// Re-solve at a different quantile level reusing the forest geometry; the
// redistribution weights are re-derived from the stored F(Y_i) values.
QuantileFit estimate_beta(const Forest& forest, const Eigen::VectorXd& x0, double tau);

double predict_quantile(const Forest& forest, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& z0);
double predict_quantile(const Forest& forest, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& z0, double tau);

// Redistribution weights at an arbitrary level derived from stored CDF values.
Eigen::VectorXd redistribution_at(const Forest& forest, double tau);

// Doubly-weighted fit given explicit forest weights (shared by the estimate
// and importance paths).
QuantileFit fit_at_weights(const Forest& forest, const ForestWeightVector& weights,
                           const Eigen::VectorXd& u, double tau);

// The variable-screening step in isolation: fits the redistributed node
// regression on `rows`, scores every candidate modifier with the rank-score
// statistic, and returns the argmax (ties to the lowest index).  Returns -1
// when every candidate is constant within the node; throws
// NumericalError("node unsplittable") when the node fit is degenerate.
int split_variable_choice(const SurvivalDataset& data, const Eigen::VectorXd& u,
                          double tau, const std::vector<std::uint32_t>& rows,
                          const std::vector<std::uint32_t>& candidates);

}  // namespace hcqrf
