#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hcqrf/dataset.hpp"
#include "hcqrf/errors.hpp"
#include "hcqrf/eval.hpp"
#include "hcqrf/forest.hpp"
#include "hcqrf/importance.hpp"
#include "hcqrf/parallel.hpp"
#include "hcqrf/rng.hpp"
#include "hcqrf/scenarios.hpp"
#include "hcqrf/serialize.hpp"
#include "hcqrf/survival_forest.hpp"

#ifndef HCQRF_VERSION
#define HCQRF_VERSION "unversioned"
#endif

namespace {

using hcqrf::ConfigError;
using hcqrf::DataError;
using hcqrf::NumericalError;
using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kCliCdfSeedTag = 0x434C4943ULL;

void emit_error(const std::string& type, const std::string& message) {
  const ordered_json line = {{"type", type}, {"error", message}};
  std::cerr << line.dump() << '\n';
}

std::uint64_t draw_seed() {
  std::random_device device;
  return (static_cast<std::uint64_t>(device()) << 32) ^ device();
}

struct ForestFlags {
  int n_trees = 500;
  int min_split = 20;
  double subsample_rate = 0.8;
  int mtry = 0;
  int min_leaf = 0;
  int max_candidate_cuts = 50;
  std::string split_rule = "hybrid";
  unsigned threads = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--trees,-b", n_trees, "number of trees (default 500)");
    cmd.add_option("--min-split", min_split,
                   "nodes with more rows than this are split-eligible (default 20)");
    cmd.add_option("--subsample-rate", subsample_rate,
                   "per-tree subsample fraction, without replacement (default 0.8)");
    cmd.add_option("--mtry", mtry, "candidate modifiers per split (default ceil(p/3))");
    cmd.add_option("--min-leaf", min_leaf, "minimum child size (default max(5, q+2))");
    cmd.add_option("--max-cuts", max_candidate_cuts,
                   "candidate cut values per variable (default 50)");
    cmd.add_option("--split-rule", split_rule, "hybrid|marginal (default hybrid)");
    cmd.add_option("--threads", threads, "worker threads; 0 = all cores");
  }

  hcqrf::ForestConfig config() const {
    hcqrf::ForestConfig out;
    out.n_trees = n_trees;
    out.min_split = min_split;
    out.subsample_rate = subsample_rate;
    out.mtry = mtry;
    out.min_leaf = min_leaf;
    out.max_candidate_cuts = max_candidate_cuts;
    if (split_rule == "hybrid") {
      out.split_rule = hcqrf::SplitRule::kHybrid;
    } else if (split_rule == "marginal") {
      out.split_rule = hcqrf::SplitRule::kMarginal;
    } else {
      throw ConfigError("unknown split rule: " + split_rule);
    }
    out.threads = threads;
    return out;
  }

  ordered_json manifest() const {
    return {{"n_trees", n_trees},
            {"min_split", min_split},
            {"subsample_rate", subsample_rate},
            {"mtry", mtry},
            {"min_leaf", min_leaf},
            {"max_candidate_cuts", max_candidate_cuts},
            {"split_rule", split_rule}};
  }
};

struct CdfFlags {
  int n_trees = 250;
  int node_size = 15;
  int mtry = 0;
  double subsample_rate = 0.632;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--rsf-trees", n_trees, "censoring-model trees (default 250)");
    cmd.add_option("--rsf-node-size", node_size,
                   "censoring-model terminal node size (default 15)");
    cmd.add_option("--rsf-mtry", mtry,
                   "censoring-model candidate features (default ceil((p+q)/3))");
    cmd.add_option("--rsf-subsample", subsample_rate,
                   "censoring-model subsample fraction (default 0.632)");
  }

  hcqrf::CdfForestConfig config(unsigned threads) const {
    hcqrf::CdfForestConfig out;
    out.n_trees = n_trees;
    out.node_size = node_size;
    out.mtry = mtry;
    out.subsample_rate = subsample_rate;
    out.threads = threads;
    return out;
  }

  ordered_json manifest() const {
    return {{"n_trees", n_trees},
            {"node_size", node_size},
            {"mtry", mtry},
            {"subsample_rate", subsample_rate}};
  }
};

void write_manifest(const std::string& path, ordered_json body) {
  ordered_json doc;
  doc["version"] = HCQRF_VERSION;
  for (auto& [key, value] : body.items()) doc[key] = std::move(value);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << doc.dump(2) << '\n';
  if (!out.good()) throw DataError("failed writing output file: " + path);
}

double censoring_rate(const hcqrf::SurvivalDataset& data) {
  double censored = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) censored += data.delta(i) == 0 ? 1 : 0;
  return censored / static_cast<double>(data.n());
}

// ===== fit =====

struct FitArgs {
  std::string input;
  std::string out;
  std::string manifest;
  double tau = 0.5;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool complete_data = false;
  ForestFlags forest;
  CdfFlags cdf;
};

int run_fit(const FitArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = args.seed_set ? args.seed : draw_seed();
  const hcqrf::SurvivalDataset data = hcqrf::load_dataset(args.input);

  hcqrf::RedistributionWeights weights;
  hcqrf::CdfModel cdf;
  if (args.complete_data) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (data.delta(i) != 1) {
        throw DataError("complete-data fit requires an uncensored input (row " +
                        std::to_string(i + 1) + " is censored)");
      }
    }
    weights = hcqrf::complete_data_weights(data, args.tau);
  } else {
    cdf = hcqrf::fit_conditional_cdf(data, args.cdf.config(args.forest.threads),
                                     hcqrf::mix_seed(seed, kCliCdfSeedTag));
    weights = hcqrf::redistribution_weights(data, cdf, args.tau);
  }
  const hcqrf::Forest forest =
      hcqrf::grow_forest(data, weights, args.forest.config(), args.tau, seed);
  hcqrf::save_model(forest, cdf, args.out);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string manifest_path =
      args.manifest.empty() ? args.out + ".manifest.json" : args.manifest;
  write_manifest(manifest_path,
                 {{"command", "fit"},
                  {"input", args.input},
                  {"output", args.out},
                  {"tau", args.tau},
                  {"seed", seed},
                  {"complete_data", args.complete_data},
                  {"forest", args.forest.manifest()},
                  {"cdf_forest", args.complete_data ? ordered_json(nullptr)
                                                    : args.cdf.manifest()},
                  {"n", data.n()},
                  {"p", data.p()},
                  {"q", data.q()},
                  {"censoring_rate", censoring_rate(data)},
                  {"wall_seconds", seconds}});

  std::size_t leaves = 0;
  std::size_t splits = 0;
  for (const auto& tree : forest.trees) {
    splits += tree.split_audits.size();
    for (const auto& node : tree.nodes) {
      if (node.split_var < 0) ++leaves;
    }
  }
  std::cout << "fitted " << forest.trees.size() << " trees on " << data.n()
            << " rows (p=" << data.p() << ", q=" << data.q()
            << ", censoring=" << hcqrf::format_double(censoring_rate(data))
            << ")\n"
            << "mean leaves/tree: "
            << static_cast<double>(leaves) / static_cast<double>(forest.trees.size())
            << "\nmodel: " << args.out << "\nmanifest: " << manifest_path << '\n';
  return 0;
}

// ===== predict =====

struct PredictArgs {
  std::string model;
  std::string points;
  std::string out;
  std::string manifest;
  double tau = -1.0;  // <0: use the model's tau
  bool oob = false;
  unsigned threads = 0;
};

int run_predict(const PredictArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  hcqrf::LoadedModel model = hcqrf::load_model(args.model);
  model.forest.config.threads = args.threads;
  const double tau = args.tau > 0.0 ? args.tau : model.forest.tau;

  const hcqrf::CovariateTable points = hcqrf::load_covariates(args.points);
  if (points.x.cols() != model.forest.data.p() ||
      points.z.cols() != model.forest.data.q()) {
    throw DataError("points file does not match the model: got p=" +
                    std::to_string(points.x.cols()) + ", q=" +
                    std::to_string(points.z.cols()) + ", expected p=" +
                    std::to_string(model.forest.data.p()) + ", q=" +
                    std::to_string(model.forest.data.q()));
  }
  const Eigen::Index n = points.x.rows();
  if (args.oob && n != model.forest.data.n()) {
    throw DataError("--oob needs one input row per training row");
  }

  const Eigen::Index q = model.forest.data.q();
  Eigen::MatrixXd beta(n, q);
  Eigen::VectorXd quantile(n);
  hcqrf::parallel_for(static_cast<std::size_t>(n), args.threads, [&](std::size_t i) {
    const Eigen::VectorXd x0 = points.x.row(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd z0 = points.z.row(static_cast<Eigen::Index>(i));
    const hcqrf::QuantileFit fit =
        args.oob ? hcqrf::oob_beta(model.forest, static_cast<std::uint32_t>(i), x0, tau)
                 : hcqrf::estimate_beta(model.forest, x0, tau);
    beta.row(static_cast<Eigen::Index>(i)) = fit.beta.transpose();
    quantile(static_cast<Eigen::Index>(i)) = z0.dot(fit.beta);
  });

  std::ofstream out(args.out);
  if (!out) throw DataError("cannot open output file: " + args.out);
  for (Eigen::Index j = 0; j < q; ++j) out << "beta_" << j << ',';
  out << "quantile\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) out << hcqrf::format_double(beta(i, j)) << ',';
    out << hcqrf::format_double(quantile(i)) << '\n';
  }
  if (!out.good()) throw DataError("failed writing output file: " + args.out);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string manifest_path =
      args.manifest.empty() ? args.out + ".manifest.json" : args.manifest;
  write_manifest(manifest_path, {{"command", "predict"},
                                 {"model", args.model},
                                 {"points", args.points},
                                 {"output", args.out},
                                 {"tau", tau},
                                 {"oob", args.oob},
                                 {"rows", n},
                                 {"wall_seconds", seconds}});
  std::cout << "predicted " << n << " rows at tau=" << tau << " -> " << args.out << '\n';
  return 0;
}

// ===== importance =====

struct ImportanceArgs {
  std::string model;
  std::string input;
  std::string out;
  std::string manifest;
  double tau = -1.0;
  int permutations = 100;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
};

bool has_binary_treatment(const hcqrf::SurvivalDataset& data) {
  if (data.q() != 2) return false;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double z = data.z(i, 1);
    if (z != 0.0 && z != 1.0) return false;
  }
  return true;
}

int run_importance(const ImportanceArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = args.seed_set ? args.seed : draw_seed();
  hcqrf::LoadedModel model = hcqrf::load_model(args.model);
  model.forest.config.threads = args.threads;
  const double tau = args.tau > 0.0 ? args.tau : model.forest.tau;
  const hcqrf::SurvivalDataset data =
      args.input.empty() ? model.forest.data : hcqrf::load_dataset(args.input);

  std::ofstream out(args.out);
  if (!out) throw DataError("cannot open output file: " + args.out);
  out << "modifier,total_vi,vi_z0,vi_z1,interaction_vi\n";

  std::vector<std::pair<double, std::string>> ranking;
  int covered = 0;
  int skipped = 0;
  if (has_binary_treatment(data)) {
    const hcqrf::ImportanceReport report =
        hcqrf::decomposed_importance(model.forest, data, tau, args.permutations, seed);
    covered = report.covered_rows;
    skipped = report.skipped_rows;
    for (const auto& entry : report.entries) {
      out << entry.modifier << ',' << hcqrf::format_double(entry.total_vi) << ','
          << hcqrf::format_double(entry.vi_z0) << ','
          << hcqrf::format_double(entry.vi_z1) << ','
          << hcqrf::format_double(entry.interaction_vi) << '\n';
      ranking.emplace_back(entry.interaction_vi, entry.modifier);
    }
  } else {
    const std::vector<double> totals =
        hcqrf::permutation_importance(model.forest, data, tau, args.permutations, seed);
    for (std::size_t k = 0; k < totals.size(); ++k) {
      const std::string name = k < data.modifier_names.size()
                                   ? data.modifier_names[k]
                                   : "x_" + std::to_string(k + 1);
      out << name << ',' << hcqrf::format_double(totals[k]) << ",,,\n";
      ranking.emplace_back(totals[k], name);
    }
  }
  if (!out.good()) throw DataError("failed writing output file: " + args.out);

  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::cout << "top modifiers:\n";
  const std::size_t shown = std::min<std::size_t>(ranking.size(), 10);
  for (std::size_t r = 0; r < shown; ++r) {
    std::cout << "  " << (r + 1) << ". " << ranking[r].second << "  "
              << hcqrf::format_double(ranking[r].first) << '\n';
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string manifest_path =
      args.manifest.empty() ? args.out + ".manifest.json" : args.manifest;
  write_manifest(manifest_path, {{"command", "importance"},
                                 {"model", args.model},
                                 {"input", args.input},
                                 {"output", args.out},
                                 {"tau", tau},
                                 {"permutations", args.permutations},
                                 {"seed", seed},
                                 {"covered_rows", covered},
                                 {"skipped_rows", skipped},
                                 {"wall_seconds", seconds}});
  return 0;
}

// ===== simulate =====

struct SimulateArgs {
  std::string scenario = "S1";
  int n1 = 500;
  int n2 = -1;  // <0: scenario default
  int p = 10;
  double tau = 0.5;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_prefix = "scenario";
};

void write_truth_csv(const hcqrf::TruthTable& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  const Eigen::Index q = truth.beta_true.cols();
  for (Eigen::Index j = 0; j < q; ++j) out << "beta_" << j << ',';
  out << "quantile\n";
  for (Eigen::Index i = 0; i < truth.beta_true.rows(); ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      out << hcqrf::format_double(truth.beta_true(i, j)) << ',';
    }
    out << hcqrf::format_double(truth.q_true(i)) << '\n';
  }
  if (!out.good()) throw DataError("failed writing output file: " + path);
}

int run_simulate(const SimulateArgs& args) {
  const std::uint64_t seed = args.seed_set ? args.seed : draw_seed();
  hcqrf::ScenarioSpec spec;
  spec.scenario_id = hcqrf::parse_scenario_id(args.scenario);
  spec.n1 = args.n1;
  spec.n2 = args.n2 > 0 ? args.n2 : hcqrf::scenario_default_n2(spec.scenario_id);
  spec.p = args.p;
  spec.tau = args.tau;
  spec.seed = seed;
  const hcqrf::SimulatedData sim = hcqrf::simulate_scenario_full(spec);

  const std::string train_path = args.out_prefix + "_train.csv";
  const std::string test_path = args.out_prefix + "_test.csv";
  const std::string truth_path = args.out_prefix + "_truth.csv";
  hcqrf::write_dataset_csv(train_path, sim.train);
  hcqrf::write_covariates_csv(test_path, sim.test.x_star, sim.test.z_star,
                            sim.train.modifier_names,
                            sim.train.predictor_names);
  write_truth_csv(sim.test, truth_path);

  write_manifest(args.out_prefix + ".manifest.json",
                 {{"command", "simulate"},
                  {"scenario", hcqrf::scenario_name(spec.scenario_id)},
                  {"n1", spec.n1},
                  {"n2", spec.n2},
                  {"p", spec.p},
                  {"tau", spec.tau},
                  {"seed", seed},
                  {"train", train_path},
                  {"test", test_path},
                  {"truth", truth_path},
                  {"censoring_rate", censoring_rate(sim.train)}});
  std::cout << "wrote " << train_path << ", " << test_path << ", " << truth_path
            << " (censoring=" << hcqrf::format_double(censoring_rate(sim.train))
            << ")\n";
  return 0;
}

// ===== benchmark =====

struct BenchmarkArgs {
  std::string scenario = "S1";
  int n1 = 500;
  int n2 = -1;
  int p = 10;
  double tau = 0.5;
  int reps = 1;
  std::string methods = "hcqrf,hcqrf_c,marginal_c";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string manifest;
  ForestFlags forest;
  CdfFlags cdf;
  unsigned rep_threads = 0;
};

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_benchmark(const BenchmarkArgs& args) {
  const std::uint64_t seed = args.seed_set ? args.seed : draw_seed();
  hcqrf::BenchmarkConfig config;
  config.scenario.scenario_id = hcqrf::parse_scenario_id(args.scenario);
  config.scenario.n1 = args.n1;
  config.scenario.n2 =
      args.n2 > 0 ? args.n2 : hcqrf::scenario_default_n2(config.scenario.scenario_id);
  config.scenario.p = args.p;
  config.scenario.tau = args.tau;
  config.methods = split_csv_list(args.methods);
  config.reps = args.reps;
  config.seed = seed;
  config.forest = args.forest.config();
  config.cdf = args.cdf.config(args.forest.threads);
  config.threads = args.rep_threads;

  const hcqrf::MetricTable table = hcqrf::monte_carlo_benchmark(config);

  std::ostringstream default_name;
  default_name << "benchmark_" << hcqrf::scenario_name(table.scenario) << '_'
               << hcqrf::format_double(table.tau) << ".csv";
  const std::string out_path = args.out.empty() ? default_name.str() : args.out;
  hcqrf::write_benchmark_csv(table, out_path);
  const std::string manifest_path =
      args.manifest.empty() ? out_path + ".manifest.json" : args.manifest;
  hcqrf::write_benchmark_manifest(table, manifest_path, HCQRF_VERSION);

  std::cout << "scenario " << hcqrf::scenario_name(table.scenario) << ", tau "
            << table.tau << ", " << table.n_reps << " reps, "
            << hcqrf::format_double(table.wall_seconds) << " s\n";
  std::cout << "method          coefficient   mse         mae\n";
  for (const auto& row : table.rows) {
    std::ostringstream line;
    line << row.method;
    line << std::string(row.method.size() < 16 ? 16 - row.method.size() : 1, ' ');
    line << row.coefficient;
    line << std::string(row.coefficient.size() < 14 ? 14 - row.coefficient.size() : 1,
                        ' ');
    std::cout << line.str() << hcqrf::format_double(row.mse) << "  "
              << hcqrf::format_double(row.mae) << '\n';
  }
  std::cout << "table: " << out_path << "\nmanifest: " << manifest_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid censored quantile regression forest"};
  app.require_subcommand(1);

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model from a survival CSV");
  fit_cmd->add_option("--input", fit.input, "training CSV (time,status,x_*,z_*)")
      ->required();
  fit_cmd->add_option("--out", fit.out, "model file to write")->required();
  fit_cmd->add_option("--tau", fit.tau, "quantile level (default 0.5)");
  fit_cmd->add_option("--seed", fit.seed, "RNG seed (default: drawn and recorded)")
      ->each([&fit](const std::string&) { fit.seed_set = true; });
  fit_cmd->add_flag("--complete-data", fit.complete_data,
                    "skip the censoring model; all rows must be events");
  fit_cmd->add_option("--manifest", fit.manifest, "manifest path");
  fit.forest.add_to(*fit_cmd);
  fit.cdf.add_to(*fit_cmd);

  PredictArgs predict;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "estimate coefficients at new points");
  predict_cmd->add_option("--model", predict.model, "model file")->required();
  predict_cmd->add_option("--points", predict.points, "covariate CSV (x_*,z_*)")
      ->required();
  predict_cmd->add_option("--out", predict.out, "output CSV")->required();
  predict_cmd->add_option("--tau", predict.tau, "quantile level (default: model's)");
  predict_cmd->add_flag("--oob", predict.oob,
                        "out-of-bag estimates; input rows must be the training rows");
  predict_cmd->add_option("--threads", predict.threads, "worker threads; 0 = all cores");
  predict_cmd->add_option("--manifest", predict.manifest, "manifest path");

  ImportanceArgs importance;
  CLI::App* importance_cmd =
      app.add_subcommand("importance", "permutation variable importance");
  importance_cmd->add_option("--model", importance.model, "model file")->required();
  importance_cmd->add_option("--input", importance.input,
                             "training CSV (default: rows embedded in the model)");
  importance_cmd->add_option("--out", importance.out, "output CSV")->required();
  importance_cmd->add_option("--tau", importance.tau,
                             "quantile level (default: model's)");
  importance_cmd->add_option("--permutations,-m", importance.permutations,
                             "permutations per modifier (default 100)");
  importance_cmd
      ->add_option("--seed", importance.seed, "RNG seed (default: drawn and recorded)")
      ->each([&importance](const std::string&) { importance.seed_set = true; });
  importance_cmd->add_option("--threads", importance.threads,
                             "worker threads; 0 = all cores");
  importance_cmd->add_option("--manifest", importance.manifest, "manifest path");

  SimulateArgs simulate;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "generate a synthetic benchmark scenario");
  simulate_cmd->add_option("--scenario", simulate.scenario,
                           "S1|S2|S3|S3a|S3b|S3c|Sup1|Sup2");
  simulate_cmd->add_option("--n1", simulate.n1, "training rows (default 500)");
  simulate_cmd->add_option("--n2", simulate.n2, "test rows (default per scenario)");
  simulate_cmd->add_option("--p", simulate.p, "modifier count (default 10)");
  simulate_cmd->add_option("--tau", simulate.tau, "quantile level (default 0.5)");
  simulate_cmd
      ->add_option("--seed", simulate.seed, "RNG seed (default: drawn and recorded)")
      ->each([&simulate](const std::string&) { simulate.seed_set = true; });
  simulate_cmd->add_option("--out-prefix", simulate.out_prefix,
                           "prefix for _train/_test/_truth CSVs");

  BenchmarkArgs benchmark;
  CLI::App* benchmark_cmd =
      app.add_subcommand("benchmark", "Monte Carlo accuracy table");
  benchmark_cmd->add_option("--scenario", benchmark.scenario,
                            "S1|S2|S3|S3a|S3b|S3c|Sup1|Sup2");
  benchmark_cmd->add_option("--n1", benchmark.n1, "training rows (default 500)");
  benchmark_cmd->add_option("--n2", benchmark.n2, "test rows (default per scenario)");
  benchmark_cmd->add_option("--p", benchmark.p, "modifier count (default 10)");
  benchmark_cmd->add_option("--tau", benchmark.tau, "quantile level (default 0.5)");
  benchmark_cmd->add_option("--reps", benchmark.reps, "Monte Carlo repetitions");
  benchmark_cmd->add_option("--methods", benchmark.methods,
                            "comma list of hcqrf,hcqrf_c,marginal_c");
  benchmark_cmd
      ->add_option("--seed", benchmark.seed, "RNG seed (default: drawn and recorded)")
      ->each([&benchmark](const std::string&) { benchmark.seed_set = true; });
  benchmark_cmd->add_option("--out", benchmark.out, "output CSV path");
  benchmark_cmd->add_option("--manifest", benchmark.manifest, "manifest path");
  benchmark_cmd->add_option("--rep-threads", benchmark.rep_threads,
                            "parallel repetitions; 0 = all cores");
  benchmark.forest.add_to(*benchmark_cmd);
  benchmark.cdf.add_to(*benchmark_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);
    emit_error("config", err.what());
    return 2;
  }

  try {
    if (app.got_subcommand(fit_cmd)) return run_fit(fit);
    if (app.got_subcommand(predict_cmd)) return run_predict(predict);
    if (app.got_subcommand(importance_cmd)) return run_importance(importance);
    if (app.got_subcommand(simulate_cmd)) return run_simulate(simulate);
    if (app.got_subcommand(benchmark_cmd)) return run_benchmark(benchmark);
    emit_error("config", "no subcommand selected");
    return 2;
  } catch (const ConfigError& err) {
    emit_error("config", err.what());
    return 2;
  } catch (const DataError& err) {
    emit_error("data", err.what());
    return 3;
  } catch (const NumericalError& err) {
    emit_error("numerical", err.what());
    return 4;
  } catch (const std::exception& err) {
    emit_error("internal", err.what());
    return 1;
  }
}
