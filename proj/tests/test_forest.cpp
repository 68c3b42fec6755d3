#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "hcqrf/errors.hpp"
#include "hcqrf/forest.hpp"
#include "hcqrf/rng.hpp"
#include "hcqrf/scenarios.hpp"

using namespace hcqrf;

namespace {

SurvivalDataset linear_data(int n, std::uint64_t seed, bool censored) {
  Rng rng(seed);
  SurvivalDataset data;
  data.y.resize(n);
  data.delta.resize(n);
  data.x.resize(n, 3);
  data.z.resize(n, 2);
  data.z.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) data.x(i, j) = rng.uniform01();
    const double z1 = rng.normal();
    data.z(i, 1) = z1;
    const double t = 5.0 + 2.0 * z1 + 0.5 * rng.normal() + 10.0;
    double y = t;
    int d = 1;
    if (censored && rng.bernoulli(0.25)) {
      y = t * rng.uniform(0.5, 0.99);
      d = 0;
    }
    data.y[i] = std::max(y, 0.0);
    data.delta[i] = d;
  }
  data.modifier_names = {"x_1", "x_2", "x_3"};
  data.predictor_names = {"intercept", "z_1"};
  return data;
}

// Forest with hand-built single-leaf trees, for exact weight arithmetic.
Forest manual_forest(const SurvivalDataset& data,
                     const std::vector<std::vector<std::uint32_t>>& leaves) {
  Forest forest;
  forest.data = data;
  forest.tau = 0.5;
  forest.weights = complete_data_weights(data, forest.tau);
  forest.y_inf = 10.0 * data.y.maxCoeff();
  forest.config.n_trees = static_cast<int>(leaves.size());
  for (const auto& rows : leaves) {
    Tree tree;
    SplitNode leaf;
    leaf.rows = rows;
    tree.nodes.push_back(leaf);
    tree.inbag = rows;
    std::sort(tree.inbag.begin(), tree.inbag.end());
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

}  // namespace

TEST_CASE("config resolution fills the documented defaults") {
  ForestConfig config;
  CHECK(config.n_trees == 500);
  CHECK(config.min_split == 20);
  CHECK(config.subsample_rate == 0.8);
  CHECK(config.max_candidate_cuts == 50);
  CHECK(config.resolved_mtry(10) == 4);   // ceil(10/3)
  CHECK(config.resolved_mtry(3) == 1);
  CHECK(config.resolved_mtry(1) == 1);
  CHECK(config.resolved_min_leaf(2) == 5);   // max(5, q+2)
  CHECK(config.resolved_min_leaf(7) == 9);
  config.mtry = 2;
  config.min_leaf = 11;
  CHECK(config.resolved_mtry(10) == 2);
  CHECK(config.resolved_min_leaf(2) == 11);
}

TEST_CASE("single-tree weights spread evenly over the leaf") {
  const SurvivalDataset data = linear_data(8, 1, false);
  const Forest forest = manual_forest(data, {{3, 5, 6, 7}});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
  const ForestWeightVector w = forest_weights(forest, x0);
  REQUIRE(w.index.size() == 4);
  CHECK(w.index == std::vector<std::uint32_t>{3, 5, 6, 7});
  for (double v : w.weight) CHECK(v == 0.25);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two-tree weights average the leaf shares") {
  const SurvivalDataset data = linear_data(6, 2, false);
  const Forest forest = manual_forest(data, {{0, 1}, {0, 1, 2, 3}});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
  const ForestWeightVector w = forest_weights(forest, x0);
  REQUIRE(w.index.size() == 4);
  // (1/2)(1/2 + 1/4) for the shared rows, (1/2)(1/4) for the second-tree-only.
  CHECK(w.weight[0] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(w.weight[1] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(w.weight[2] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(w.weight[3] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rows outside every leaf get zero weight") {
  const SurvivalDataset data = linear_data(9, 3, false);
  const Forest forest = manual_forest(data, {{0, 1, 2}, {1, 2, 4}});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.1);
  const ForestWeightVector w = forest_weights(forest, x0);
  const std::set<std::uint32_t> support(w.index.begin(), w.index.end());
  CHECK(support == std::set<std::uint32_t>{0, 1, 2, 4});
  // Rows 3, 5..8 never share a leaf with x0 and are absent from the support.
}

TEST_CASE("minsplit above the sample size gives single-leaf trees") {
  const SurvivalDataset data = linear_data(30, 4, false);
  ForestConfig config;
  config.n_trees = 4;
  config.min_split = 31;
  config.subsample_rate = 0.8;
  const Forest forest =
      grow_forest(data, complete_data_weights(data, 0.5), config, 0.5, 12);
  for (const Tree& tree : forest.trees) {
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].split_var == -1);
    CHECK(tree.nodes[0].rows == tree.inbag);
    CHECK(tree.nodes[0].rows.size() == 24);  // floor-ish of 0.8 * 30
  }
}

TEST_CASE("grown trees respect the structural contracts") {
  const SurvivalDataset data = linear_data(200, 5, true);
  CdfForestConfig cdf_config;
  cdf_config.n_trees = 40;
  const CdfModel cdf = fit_conditional_cdf(data, cdf_config, 3);
  const RedistributionWeights weights = redistribution_weights(data, cdf, 0.5);

  ForestConfig config;
  config.n_trees = 10;
  const Forest forest = grow_forest(data, weights, config, 0.5, 99);
  REQUIRE(forest.trees.size() == 10);

  const int min_leaf = config.resolved_min_leaf(2);
  for (const Tree& tree : forest.trees) {
    std::vector<std::uint32_t> covered;
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      const SplitNode& node = tree.nodes[id];
      if (node.split_var >= 0) {
        CHECK(node.split_var < 3);
        REQUIRE(node.left >= 0);
        REQUIRE(node.right >= 0);
        CHECK(node.rows.empty());
      } else {
        CHECK(static_cast<int>(node.rows.size()) >= min_leaf);
        covered.insert(covered.end(), node.rows.begin(), node.rows.end());
      }
    }
    // Leaves partition the in-bag sample.
    std::sort(covered.begin(), covered.end());
    CHECK(covered == tree.inbag);
    // Every executed split improved (or preserved) the node loss.
    for (const SplitAudit& audit : tree.split_audits) {
      CHECK(audit.child_loss_sum <=
            audit.parent_loss + 1e-8 * (1.0 + std::abs(audit.parent_loss)));
    }
  }
}

TEST_CASE("weights normalize over many query points") {
  const SurvivalDataset data = linear_data(150, 6, true);
  CdfForestConfig cdf_config;
  cdf_config.n_trees = 30;
  const CdfModel cdf = fit_conditional_cdf(data, cdf_config, 4);
  ForestConfig config;
  config.n_trees = 25;
  const Forest forest =
      grow_forest(data, redistribution_weights(data, cdf, 0.5), config, 0.5, 7);

  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd x0(3);
    for (int j = 0; j < 3; ++j) x0[j] = rng.uniform01();
    const ForestWeightVector w = forest_weights(forest, x0);
    CHECK(std::abs(w.sum() - 1.0) <= 1e-10);
    CHECK(std::is_sorted(w.index.begin(), w.index.end()));
    for (double v : w.weight) CHECK(v > 0.0);
  }
}

TEST_CASE("forest growth is independent of the thread count") {
  const SurvivalDataset data = linear_data(120, 7, false);
  const RedistributionWeights weights = complete_data_weights(data, 0.5);
  ForestConfig config;
  config.n_trees = 12;
  config.threads = 1;
  const Forest a = grow_forest(data, weights, config, 0.5, 2024);
  config.threads = 4;
  const Forest b = grow_forest(data, weights, config, 0.5, 2024);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    CHECK(a.trees[t].inbag == b.trees[t].inbag);
    REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
    for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
      CHECK(a.trees[t].nodes[k].split_var == b.trees[t].nodes[k].split_var);
      CHECK(a.trees[t].nodes[k].split_value == b.trees[t].nodes[k].split_value);
      CHECK(a.trees[t].nodes[k].rows == b.trees[t].nodes[k].rows);
    }
  }
}

TEST_CASE("different seeds give different forests") {
  const SurvivalDataset data = linear_data(100, 8, false);
  const RedistributionWeights weights = complete_data_weights(data, 0.5);
  ForestConfig config;
  config.n_trees = 5;
  const Forest a = grow_forest(data, weights, config, 0.5, 1);
  const Forest b = grow_forest(data, weights, config, 0.5, 2);
  bool differs = false;
  for (std::size_t t = 0; t < a.trees.size() && !differs; ++t) {
    differs = a.trees[t].inbag != b.trees[t].inbag;
  }
  CHECK(differs);
}

TEST_CASE("single-leaf intercept-only estimate is the sample quantile") {
  // 21 uncensored rows, intercept-only design: the tau = 0.5 estimate must be
  // the unique sample median.
  const int n = 21;
  Rng rng(101);
  SurvivalDataset data;
  data.y.resize(n);
  data.delta = Eigen::VectorXi::Ones(n);
  data.x.resize(n, 1);
  data.z = Eigen::MatrixXd::Ones(n, 1);
  for (int i = 0; i < n; ++i) {
    data.y[i] = std::abs(rng.normal(4.0, 2.0));
    data.x(i, 0) = rng.uniform01();
  }
  data.modifier_names = {"x_1"};
  data.predictor_names = {"intercept"};

  ForestConfig config;
  config.n_trees = 3;
  config.min_split = n + 1;
  config.subsample_rate = 1.0;
  const Forest forest =
      grow_forest(data, complete_data_weights(data, 0.5), config, 0.5, 5);
  const QuantileFit fit = estimate_beta(forest, Eigen::VectorXd::Constant(1, 0.5));

  std::vector<double> sorted(data.y.data(), data.y.data() + n);
  std::sort(sorted.begin(), sorted.end());
  CHECK(fit.beta[0] == doctest::Approx(sorted[10]).epsilon(1e-12));
}

TEST_CASE("estimate matches the explicit doubly-weighted fit") {
  const SurvivalDataset data = linear_data(150, 9, true);
  CdfForestConfig cdf_config;
  cdf_config.n_trees = 30;
  const CdfModel cdf = fit_conditional_cdf(data, cdf_config, 6);
  ForestConfig config;
  config.n_trees = 20;
  const Forest forest =
      grow_forest(data, redistribution_weights(data, cdf, 0.5), config, 0.5, 11);

  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.4);
  const QuantileFit direct = estimate_beta(forest, x0);
  const ForestWeightVector w = forest_weights(forest, x0);
  const QuantileFit manual = fit_at_weights(forest, w, forest.weights.u, forest.tau);
  CHECK(direct.beta == manual.beta);
  CHECK(direct.objective == manual.objective);
}

TEST_CASE("scaling the forest weights leaves the estimate unchanged") {
  const SurvivalDataset data = linear_data(120, 10, false);
  ForestConfig config;
  config.n_trees = 15;
  const Forest forest =
      grow_forest(data, complete_data_weights(data, 0.5), config, 0.5, 13);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.6);
  ForestWeightVector w = forest_weights(forest, x0);
  const QuantileFit base = fit_at_weights(forest, w, forest.weights.u, 0.5);
  for (double& v : w.weight) v *= 17.0;
  const QuantileFit scaled = fit_at_weights(forest, w, forest.weights.u, 0.5);
  for (Eigen::Index j = 0; j < base.beta.size(); ++j) {
    CHECK(scaled.beta[j] == doctest::Approx(base.beta[j]).epsilon(1e-10));
  }
}

TEST_CASE("prediction is linear in the predictor vector") {
  const SurvivalDataset data = linear_data(130, 11, false);
  ForestConfig config;
  config.n_trees = 15;
  const Forest forest =
      grow_forest(data, complete_data_weights(data, 0.5), config, 0.5, 17);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
  const QuantileFit fit = estimate_beta(forest, x0);

  Eigen::VectorXd z_int(2), z_shift(2);
  z_int << 1.0, 0.0;
  z_shift << 1.0, 2.5;
  const double p0 = predict_quantile(forest, x0, z_int);
  const double p1 = predict_quantile(forest, x0, z_shift);
  CHECK(p0 == doctest::Approx(fit.beta[0]).epsilon(1e-12));
  CHECK(p1 - p0 == doctest::Approx(2.5 * fit.beta[1]).epsilon(1e-10));
}

TEST_CASE("requesting another quantile reuses the forest geometry") {
  const SurvivalDataset data = linear_data(150, 12, true);
  CdfForestConfig cdf_config;
  cdf_config.n_trees = 30;
  const CdfModel cdf = fit_conditional_cdf(data, cdf_config, 8);
  ForestConfig config;
  config.n_trees = 20;
  const Forest forest =
      grow_forest(data, redistribution_weights(data, cdf, 0.5), config, 0.5, 19);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
  const Eigen::VectorXd z0 = (Eigen::VectorXd(2) << 1.0, 0.0).finished();

  // The stored-F weights at the fit level must reproduce the fit weights.
  const Eigen::VectorXd u_same = redistribution_at(forest, forest.tau);
  CHECK(u_same == forest.weights.u);

  const double lo = predict_quantile(forest, x0, z0, 0.25);
  const double hi = predict_quantile(forest, x0, z0, 0.75);
  CHECK(std::isfinite(lo));
  CHECK(std::isfinite(hi));
  CHECK(lo <= hi + 1e-9);  // same geometry, higher level

  CHECK_THROWS_AS(predict_quantile(forest, x0, z0, 1.5), ConfigError);
}

TEST_CASE("too small a leaf support refuses to estimate") {
  const SurvivalDataset data = linear_data(30, 13, false);
  const Forest forest = manual_forest(data, {{0, 1, 2, 3}});  // 4 < 5q = 10
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
  CHECK_THROWS_WITH_AS(estimate_beta(forest, x0),
                       doctest::Contains("insufficient effective sample"),
                       NumericalError);
}

TEST_CASE("query dimension is validated") {
  const SurvivalDataset data = linear_data(40, 14, false);
  const Forest forest = manual_forest(data, {{0, 1, 2, 3}});
  CHECK_THROWS_WITH_AS(forest_weights(forest, Eigen::VectorXd::Ones(2)),
                       doctest::Contains("wrong dimension"), DataError);
}

TEST_CASE("oob weights equal full weights when the row is never in-bag") {
  const SurvivalDataset data = linear_data(12, 15, false);
  const Forest forest = manual_forest(data, {{0, 1, 2, 3}, {2, 3, 4, 5}});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
  const ForestWeightVector full = forest_weights(forest, x0);
  const ForestWeightVector oob = forest_weights_oob(forest, x0, 11);
  CHECK(full.index == oob.index);
  CHECK(full.weight == oob.weight);  // bitwise: same accumulation path
}

TEST_CASE("oob weights throw when the row is in-bag everywhere") {
  const SurvivalDataset data = linear_data(12, 16, false);
  const Forest forest = manual_forest(data, {{0, 1, 2, 3}, {0, 1, 4, 5}});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
  CHECK_THROWS_WITH_AS(forest_weights_oob(forest, x0, 0),
                       doctest::Contains("no OOB trees for row"), NumericalError);
}

TEST_CASE("marginal split rule grows valid trees") {
  const SurvivalDataset data = linear_data(150, 17, false);
  ForestConfig config;
  config.n_trees = 8;
  config.split_rule = SplitRule::kMarginal;
  const Forest forest =
      grow_forest(data, complete_data_weights(data, 0.5), config, 0.5, 23);
  int splits = 0;
  for (const Tree& tree : forest.trees) {
    for (const SplitNode& node : tree.nodes) {
      if (node.split_var >= 0) ++splits;
    }
  }
  CHECK(splits > 0);
  const ForestWeightVector w =
      forest_weights(forest, Eigen::VectorXd::Constant(3, 0.5));
  CHECK(std::abs(w.sum() - 1.0) <= 1e-10);
}

TEST_CASE("tree-effect estimate recovers the step surface") {
  // Scenario-style check on complete data: strong signal in x1/x2, true
  // treatment effect 10 at (0.5, 0.5, ...).
  ScenarioSpec spec;
  spec.scenario_id = ScenarioId::S1_tree_binary;
  spec.n1 = 400;
  spec.n2 = 10;
  spec.p = 10;
  spec.seed = 77;
  const SimulatedData sim = simulate_scenario_full(spec);
  SurvivalDataset train = sim.train;
  train.y = sim.latent_time;  // uncensored arm
  train.delta.setOnes();

  ForestConfig config;
  config.n_trees = 50;
  config.threads = 4;
  const Forest forest =
      grow_forest(train, complete_data_weights(train, 0.5), config, 0.5, 31);
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(10, 0.5);
  const QuantileFit fit = estimate_beta(forest, x0);
  CHECK(fit.beta[1] == doctest::Approx(10.0).epsilon(0.2));  // within 10 +- 2
  CHECK(fit.beta[0] == doctest::Approx(5.0).epsilon(0.2));
}

TEST_CASE("invalid configurations are rejected") {
  const SurvivalDataset data = linear_data(50, 18, false);
  const RedistributionWeights weights = complete_data_weights(data, 0.5);
  ForestConfig config;
  config.n_trees = 0;
  CHECK_THROWS_AS(grow_forest(data, weights, config, 0.5, 1), ConfigError);
  config.n_trees = 5;
  CHECK_THROWS_AS(grow_forest(data, weights, config, 1.5, 1), ConfigError);
  config.subsample_rate = 0.0;
  CHECK_THROWS_AS(grow_forest(data, weights, config, 0.5, 1), ConfigError);
}
