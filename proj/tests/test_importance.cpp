#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "hcqrf/errors.hpp"
#include "hcqrf/importance.hpp"
#include "hcqrf/rng.hpp"
#include "hcqrf/scenarios.hpp"

using namespace hcqrf;

namespace {

// Small complete-data forest on the binary-treatment step design.
struct Fixture {
  SurvivalDataset data;
  Forest forest;
};

Fixture step_fixture(int n, int p, int n_trees, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.scenario_id = ScenarioId::S1_tree_binary;
  spec.n1 = n;
  spec.n2 = 1;
  spec.p = p;
  spec.seed = seed;
  SimulatedData sim = simulate_scenario_full(spec);
  Fixture fx;
  fx.data = sim.train;
  fx.data.y = sim.latent_time.cwiseMax(0.0);
  fx.data.delta.setOnes();
  ForestConfig config;
  config.n_trees = n_trees;
  config.threads = 2;
  fx.forest = grow_forest(fx.data, complete_data_weights(fx.data, 0.5), config,
                          0.5, seed + 1);
  return fx;
}

std::vector<std::vector<std::uint32_t>> identity_perms(int m, int n) {
  std::vector<std::uint32_t> id(static_cast<std::size_t>(n));
  std::iota(id.begin(), id.end(), 0u);
  return std::vector<std::vector<std::uint32_t>>(static_cast<std::size_t>(m), id);
}

}  // namespace

TEST_CASE("identity permutations give exactly zero importance") {
  const Fixture fx = step_fixture(120, 4, 25, 5);
  const auto perms = identity_perms(3, 120);
  const std::vector<double> vi =
      permutation_importance(fx.forest, fx.data, 0.5, 3, 17, &perms);
  REQUIRE(vi.size() == 4);
  for (double v : vi) CHECK(v == 0.0);

  const ImportanceReport report =
      decomposed_importance(fx.forest, fx.data, 0.5, 3, 17, &perms);
  REQUIRE(report.entries.size() == 4);
  for (const ImportanceEntry& e : report.entries) {
    CHECK(e.total_vi == 0.0);
    CHECK(e.vi_z0 == 0.0);
    CHECK(e.vi_z1 == 0.0);
    CHECK(e.interaction_vi == 0.0);
  }
  CHECK(report.decomposed);
  CHECK(report.m_permutations == 3);
  CHECK(report.covered_rows + report.skipped_rows == 120);
  CHECK(report.covered_rows >= 114);  // at least 95% coverage
}

TEST_CASE("decomposition partitions the total importance") {
  const Fixture fx = step_fixture(150, 4, 25, 6);
  const ImportanceReport report =
      decomposed_importance(fx.forest, fx.data, 0.5, 4, 23);
  for (const ImportanceEntry& e : report.entries) {
    CHECK(e.interaction_vi == std::abs(e.vi_z1 - e.vi_z0));
    CHECK(std::isfinite(e.total_vi));
  }
}

TEST_CASE("the same seed reproduces the report and matches the totals") {
  const Fixture fx = step_fixture(130, 3, 25, 7);
  const ImportanceReport a = decomposed_importance(fx.forest, fx.data, 0.5, 5, 99);
  const ImportanceReport b = decomposed_importance(fx.forest, fx.data, 0.5, 5, 99);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    CHECK(a.entries[k].total_vi == b.entries[k].total_vi);
    CHECK(a.entries[k].vi_z0 == b.entries[k].vi_z0);
    CHECK(a.entries[k].vi_z1 == b.entries[k].vi_z1);
  }
  // The plain totals use the same permutation stream.
  const std::vector<double> totals =
      permutation_importance(fx.forest, fx.data, 0.5, 5, 99);
  REQUIRE(totals.size() == a.entries.size());
  for (std::size_t k = 0; k < totals.size(); ++k) {
    CHECK(totals[k] == a.entries[k].total_vi);
  }
  // Different seed, different shuffles.
  const std::vector<double> other =
      permutation_importance(fx.forest, fx.data, 0.5, 5, 100);
  bool differs = false;
  for (std::size_t k = 0; k < totals.size(); ++k) {
    differs = differs || totals[k] != other[k];
  }
  CHECK(differs);
}

TEST_CASE("arm sums add up to the total") {
  const Fixture fx = step_fixture(140, 3, 25, 8);
  const ImportanceReport report =
      decomposed_importance(fx.forest, fx.data, 0.5, 4, 41);
  // Count covered rows per arm: the importance engine skips the same rows in
  // every sum, so the partition identity holds with the raw arm sizes only
  // when no row is skipped.  Verify through the report's own bookkeeping.
  REQUIRE(report.covered_rows > 0);
  if (report.skipped_rows == 0) {
    int n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < fx.data.n(); ++i) {
      (fx.data.z(i, 1) == 0.0 ? n0 : n1)++;
    }
    for (const ImportanceEntry& e : report.entries) {
      CHECK(n0 * e.vi_z0 + n1 * e.vi_z1 ==
            doctest::Approx(e.total_vi).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("signal modifiers outrank noise") {
  const Fixture fx = step_fixture(300, 6, 40, 9);
  const ImportanceReport report =
      decomposed_importance(fx.forest, fx.data, 0.5, 8, 3);
  REQUIRE(report.entries.size() == 6);
  std::vector<int> order(6);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return report.entries[a].total_vi > report.entries[b].total_vi;
  });
  CHECK(std::set<int>{order[0], order[1]} == std::set<int>{0, 1});

  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return report.entries[a].interaction_vi > report.entries[b].interaction_vi;
  });
  CHECK(std::set<int>{order[0], order[1]} == std::set<int>{0, 1});

  // The step surface lives in the treatment arm: the intercept arm carries
  // far less of the signal modifiers' importance.
  const double z1_signal = report.entries[0].vi_z1 + report.entries[1].vi_z1;
  const double z0_signal =
      std::abs(report.entries[0].vi_z0) + std::abs(report.entries[1].vi_z0);
  CHECK(z1_signal > z0_signal);
}

TEST_CASE("out-of-bag estimates agree with the full forest when always OOB") {
  // Hand-built forest whose leaves never contain the probed row.
  Rng rng(31);
  SurvivalDataset data;
  const int n = 14;
  data.y.resize(n);
  data.delta = Eigen::VectorXi::Ones(n);
  data.x.resize(n, 2);
  data.z.resize(n, 2);
  data.z.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    data.y[i] = std::abs(rng.normal(5.0, 1.0));
    data.x(i, 0) = rng.uniform01();
    data.x(i, 1) = rng.uniform01();
    data.z(i, 1) = rng.normal();
  }
  data.modifier_names = {"x_1", "x_2"};
  data.predictor_names = {"intercept", "z_1"};

  Forest forest;
  forest.data = data;
  forest.tau = 0.5;
  forest.weights = complete_data_weights(data, 0.5);
  forest.y_inf = 10.0 * data.y.maxCoeff();
  for (const auto& rows : {std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
                           std::vector<std::uint32_t>{2, 3, 4, 5, 6, 7, 8, 9, 10, 11}}) {
    Tree tree;
    SplitNode leaf;
    leaf.rows = rows;
    tree.nodes.push_back(leaf);
    tree.inbag = rows;
    forest.trees.push_back(std::move(tree));
  }
  forest.config.n_trees = 2;

  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(2, 0.5);
  const QuantileFit full = estimate_beta(forest, x0);
  const QuantileFit oob = oob_beta(forest, 13, x0, 0.5);  // row 13 never in-bag
  CHECK(full.beta == oob.beta);
  CHECK(full.objective == oob.objective);

  // Row 0 is in-bag in tree 0 only; its OOB estimate uses tree 1 alone.
  const QuantileFit oob0 = oob_beta(forest, 0, x0, 0.5);
  Forest single;
  single.data = data;
  single.tau = 0.5;
  single.weights = forest.weights;
  single.y_inf = forest.y_inf;
  single.trees.push_back(forest.trees[1]);
  single.config.n_trees = 1;
  const QuantileFit tree1_only = estimate_beta(single, x0);
  CHECK(oob0.beta == tree1_only.beta);
}

TEST_CASE("rows in-bag everywhere cannot be estimated out of bag") {
  const SurvivalDataset data = step_fixture(60, 3, 1, 10).data;
  ForestConfig config;
  config.n_trees = 4;
  config.subsample_rate = 1.0;
  const Forest forest =
      grow_forest(data, complete_data_weights(data, 0.5), config, 0.5, 77);
  CHECK_THROWS_WITH_AS(oob_beta(forest, 0, Eigen::VectorXd::Constant(3, 0.5), 0.5),
                       doctest::Contains("no OOB trees for row"), NumericalError);
  // And importance refuses to run without OOB coverage.
  CHECK_THROWS_WITH_AS(permutation_importance(forest, data, 0.5, 2, 1),
                       doctest::Contains("insufficient OOB coverage"),
                       NumericalError);
}

TEST_CASE("argument validation") {
  const Fixture fx = step_fixture(100, 3, 25, 11);
  CHECK_THROWS_WITH_AS(permutation_importance(fx.forest, fx.data, 0.5, 0, 1),
                       doctest::Contains("need at least one permutation"),
                       ConfigError);
  CHECK_THROWS_AS(permutation_importance(fx.forest, fx.data, 1.2, 2, 1),
                  ConfigError);

  SUBCASE("mismatched data") {
    SurvivalDataset other = fx.data;
    other.y.conservativeResize(50);
    other.delta.conservativeResize(50);
    other.x.conservativeResize(50, Eigen::NoChange);
    other.z.conservativeResize(50, Eigen::NoChange);
    CHECK_THROWS_WITH_AS(permutation_importance(fx.forest, other, 0.5, 2, 1),
                         doctest::Contains("does not match"), DataError);
  }
  SUBCASE("bad permutation hooks") {
    auto perms = identity_perms(1, 100);
    CHECK_THROWS_AS(permutation_importance(fx.forest, fx.data, 0.5, 2, 1, &perms),
                    ConfigError);  // M = 2 but one permutation supplied
    auto short_perms = identity_perms(2, 99);
    CHECK_THROWS_AS(
        permutation_importance(fx.forest, fx.data, 0.5, 2, 1, &short_perms),
        ConfigError);
    auto dup = identity_perms(2, 100);
    dup[0][0] = dup[0][1];  // not a bijection
    CHECK_THROWS_AS(permutation_importance(fx.forest, fx.data, 0.5, 2, 1, &dup),
                    ConfigError);
  }
}

TEST_CASE("continuous treatments report totals but refuse decomposition") {
  Rng rng(41);
  SurvivalDataset data;
  const int n = 120;
  data.y.resize(n);
  data.delta = Eigen::VectorXi::Ones(n);
  data.x.resize(n, 3);
  data.z.resize(n, 2);
  data.z.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) data.x(i, j) = rng.uniform01();
    data.z(i, 1) = rng.normal();  // continuous treatment
    data.y[i] = std::abs(5.0 + 2.0 * data.z(i, 1) + 0.5 * rng.normal());
  }
  data.modifier_names = {"x_1", "x_2", "x_3"};
  data.predictor_names = {"intercept", "z_1"};
  ForestConfig config;
  config.n_trees = 25;
  const Forest forest =
      grow_forest(data, complete_data_weights(data, 0.5), config, 0.5, 13);

  CHECK_NOTHROW(permutation_importance(forest, data, 0.5, 2, 3));
  CHECK_THROWS_WITH_AS(decomposed_importance(forest, data, 0.5, 2, 3),
                       doctest::Contains("decomposition requires binary treatment"),
                       ConfigError);
}
