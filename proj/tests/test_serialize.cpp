#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "hcqrf/errors.hpp"
#include "hcqrf/serialize.hpp"
#include "hcqrf/scenarios.hpp"

using namespace hcqrf;

namespace {

LoadedModel fitted_model(std::uint64_t seed, bool with_cdf) {
  ScenarioSpec spec;
  spec.scenario_id = ScenarioId::S1_tree_binary;
  spec.n1 = 120;
  spec.n2 = 1;
  spec.p = 3;
  spec.seed = seed;
  SimulatedData sim = simulate_scenario_full(spec);

  LoadedModel model;
  if (with_cdf) {
    CdfForestConfig cdf_config;
    cdf_config.n_trees = 15;
    model.cdf = fit_conditional_cdf(sim.train, cdf_config, seed + 1);
    ForestConfig config;
    config.n_trees = 8;
    model.forest = grow_forest(sim.train,
                               redistribution_weights(sim.train, model.cdf, 0.5),
                               config, 0.5, seed + 2);
  } else {
    sim.train.y = sim.latent_time.cwiseMax(0.0);
    sim.train.delta.setOnes();
    ForestConfig config;
    config.n_trees = 8;
    model.forest = grow_forest(sim.train, complete_data_weights(sim.train, 0.5),
                               config, 0.5, seed + 2);
  }
  return model;
}

}  // namespace

TEST_CASE("model files round-trip exactly") {
  for (bool with_cdf : {false, true}) {
    CAPTURE(with_cdf);
    const LoadedModel model = fitted_model(3, with_cdf);
    const std::string path = "/tmp/hcqrf_test_model.json";
    save_model(model.forest, model.cdf, path);
    const LoadedModel back = load_model(path);
    std::remove(path.c_str());

    CHECK(back.forest.tau == model.forest.tau);
    CHECK(back.forest.seed == model.forest.seed);
    CHECK(back.forest.y_inf == model.forest.y_inf);
    CHECK(back.forest.data.y == model.forest.data.y);
    CHECK(back.forest.data.delta == model.forest.data.delta);
    CHECK(back.forest.data.x == model.forest.data.x);
    CHECK(back.forest.data.z == model.forest.data.z);
    CHECK(back.forest.data.modifier_names == model.forest.data.modifier_names);
    CHECK(back.forest.weights.u == model.forest.weights.u);
    CHECK(back.forest.weights.f_at_y == model.forest.weights.f_at_y);
    REQUIRE(back.forest.trees.size() == model.forest.trees.size());
    for (std::size_t t = 0; t < model.forest.trees.size(); ++t) {
      const Tree& a = model.forest.trees[t];
      const Tree& b = back.forest.trees[t];
      CHECK(a.inbag == b.inbag);
      REQUIRE(a.nodes.size() == b.nodes.size());
      for (std::size_t k = 0; k < a.nodes.size(); ++k) {
        CHECK(a.nodes[k].split_var == b.nodes[k].split_var);
        CHECK(a.nodes[k].split_value == b.nodes[k].split_value);
        CHECK(a.nodes[k].left == b.nodes[k].left);
        CHECK(a.nodes[k].right == b.nodes[k].right);
        CHECK(a.nodes[k].rows == b.nodes[k].rows);
      }
      REQUIRE(a.split_audits.size() == b.split_audits.size());
      for (std::size_t k = 0; k < a.split_audits.size(); ++k) {
        CHECK(a.split_audits[k].parent_loss == b.split_audits[k].parent_loss);
        CHECK(a.split_audits[k].child_loss_sum == b.split_audits[k].child_loss_sum);
      }
    }
    CHECK(back.cdf.trees.empty() == !with_cdf);
    if (with_cdf) {
      REQUIRE(back.cdf.trees.size() == model.cdf.trees.size());
      CHECK(back.cdf.seed == model.cdf.seed);
      CHECK(back.cdf.p == model.cdf.p);
      CHECK(back.cdf.q == model.cdf.q);
      for (std::size_t t = 0; t < model.cdf.trees.size(); ++t) {
        CHECK(back.cdf.trees[t].inbag == model.cdf.trees[t].inbag);
        REQUIRE(back.cdf.trees[t].nodes.size() == model.cdf.trees[t].nodes.size());
        for (std::size_t k = 0; k < model.cdf.trees[t].nodes.size(); ++k) {
          const auto& na = model.cdf.trees[t].nodes[k];
          const auto& nb = back.cdf.trees[t].nodes[k];
          CHECK(na.feature == nb.feature);
          CHECK(na.threshold == nb.threshold);
          CHECK(na.times == nb.times);
          CHECK(na.chf == nb.chf);
        }
      }
    }
  }
}

TEST_CASE("a reloaded model predicts identically") {
  const LoadedModel model = fitted_model(9, true);
  const std::string path = "/tmp/hcqrf_test_model2.json";
  save_model(model.forest, model.cdf, path);
  const LoadedModel back = load_model(path);
  std::remove(path.c_str());
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.4);
  const Eigen::VectorXd z0 = (Eigen::VectorXd(2) << 1.0, 1.0).finished();
  CHECK(predict_quantile(model.forest, x0, z0) ==
        predict_quantile(back.forest, x0, z0));
}

TEST_CASE("serializing twice gives identical bytes") {
  const LoadedModel model = fitted_model(4, true);
  const std::string a = model_to_json(model.forest, model.cdf);
  const std::string b = model_to_json(model.forest, model.cdf);
  CHECK(a == b);
  // And the parse -> serialize loop is a fixed point.
  const LoadedModel back = model_from_json(a);
  CHECK(model_to_json(back.forest, back.cdf) == a);
}

TEST_CASE("corrupt model files are reported as such") {
  const std::string path = "/tmp/hcqrf_test_corrupt.json";
  SUBCASE("not json") {
    std::ofstream(path) << "this is not json {";
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("model file corrupt"),
                         DataError);
  }
  SUBCASE("wrong kind") {
    std::ofstream(path) << "{\"format_version\":1,\"kind\":\"something-else\"}";
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("model file corrupt"),
                         DataError);
  }
  SUBCASE("future version") {
    std::ofstream(path) << "{\"format_version\":999,\"kind\":\"hcqrf-model\"}";
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("model file corrupt"),
                         DataError);
  }
  SUBCASE("missing fields") {
    std::ofstream(path) << "{\"format_version\":1,\"kind\":\"hcqrf-model\"}";
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("model file corrupt"),
                         DataError);
  }
  std::remove(path.c_str());
  CHECK_THROWS_WITH_AS(load_model("/tmp/hcqrf_no_model_here.json"),
                       doctest::Contains("cannot open"), DataError);
}
