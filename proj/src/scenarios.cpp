#include "hcqrf/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "hcqrf/errors.hpp"
#include "hcqrf/rng.hpp"

namespace hcqrf {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Substream tags; each block of randomness gets its own generator.
enum : std::uint64_t {
  kTagTrainX = 1,
  kTagTrainZ = 2,
  kTagNoise = 3,
  kTagCensor = 4,
  kTagTestX = 5,
  kTagTestZ = 6,
  kTagShock = 7,
};

bool is_s3_family(ScenarioId id) {
  return id == ScenarioId::S3_cosine || id == ScenarioId::S3a_hetero ||
         id == ScenarioId::S3b_heavy_tail || id == ScenarioId::S3c_dep_censor ||
         id == ScenarioId::Sup2_quantile_varying;
}

double modifier_upper(ScenarioId id) { return is_s3_family(id) ? 2.0 : 1.0; }

double chi_squared2_quantile(double p) { return -2.0 * std::log(1.0 - p); }

}  // namespace

ScenarioId parse_scenario_id(const std::string& text) {
  std::string key = text;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (key == "s1") return ScenarioId::S1_tree_binary;
  if (key == "s2") return ScenarioId::S2_boosting;
  if (key == "s3") return ScenarioId::S3_cosine;
  if (key == "s3a") return ScenarioId::S3a_hetero;
  if (key == "s3b") return ScenarioId::S3b_heavy_tail;
  if (key == "s3c") return ScenarioId::S3c_dep_censor;
  if (key == "sup1") return ScenarioId::Sup1_constant;
  if (key == "sup2") return ScenarioId::Sup2_quantile_varying;
  throw ConfigError("unknown scenario id '" + text + "'");
}

std::string scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::S1_tree_binary: return "S1";
    case ScenarioId::S2_boosting: return "S2";
    case ScenarioId::S3_cosine: return "S3";
    case ScenarioId::S3a_hetero: return "S3a";
    case ScenarioId::S3b_heavy_tail: return "S3b";
    case ScenarioId::S3c_dep_censor: return "S3c";
    case ScenarioId::Sup1_constant: return "Sup1";
    case ScenarioId::Sup2_quantile_varying: return "Sup2";
  }
  throw ConfigError("unknown scenario id");
}

int scenario_q(ScenarioId id) {
  switch (id) {
    case ScenarioId::S1_tree_binary: return 2;
    case ScenarioId::S2_boosting: return 4;
    case ScenarioId::Sup1_constant: return 2;
    default: return 3;
  }
}

int scenario_min_p(ScenarioId id) {
  switch (id) {
    case ScenarioId::S1_tree_binary: return 2;
    case ScenarioId::S2_boosting: return 2;
    case ScenarioId::Sup1_constant: return 1;
    default: return 3;
  }
}

int scenario_default_n2(ScenarioId id) {
  return id == ScenarioId::Sup1_constant ? 200 : 400;
}

Eigen::VectorXd true_beta(ScenarioId id, const Eigen::VectorXd& x, double tau) {
  if (x.size() < scenario_min_p(id)) {
    throw DataError("dimension mismatch: scenario " + scenario_name(id) +
                    " needs at least " + std::to_string(scenario_min_p(id)) +
                    " modifiers");
  }
  Eigen::VectorXd beta(scenario_q(id));
  switch (id) {
    case ScenarioId::S1_tree_binary:
      beta << 5.0, 15.0 - 5.0 * ((x[0] > 0.2 && x[1] > 0.2) ? 1.0 : 0.0);
      return beta;
    case ScenarioId::S2_boosting:
      if (x[0] * x[0] + x[1] * x[1] < 1.0) {
        beta << 5.0, 1.0, 3.0, 5.0;
      } else {
        beta << 5.0, 0.0, 10.0, 0.0;
      }
      return beta;
    case ScenarioId::Sup1_constant:
      beta << 5.0, 10.0;
      return beta;
    case ScenarioId::Sup2_quantile_varying:
      beta << 1.0 + 3.0 * x[2],
          10.0 - 7.5 * std::cos(kPi / 2.0 * (x[0] - 0.5)),
          0.5 * x[1] * (3.0 - x[1]) + 1.0 + x[1] * chi_squared1_quantile(tau) / 10.0;
      return beta;
    default:  // S3 family
      beta << 1.0 + 3.0 * x[2],
          10.0 - 7.5 * std::cos(kPi / 2.0 * (x[0] - 0.5)),
          0.5 * x[1] * (3.0 - x[1]) + 1.0;
      return beta;
  }
}

SimulatedData simulate_scenario_full(const ScenarioSpec& spec) {
  const ScenarioId id = spec.scenario_id;
  if (spec.n1 < 1 || spec.n2 < 0) throw ConfigError("sample sizes must be positive");
  if (spec.p < scenario_min_p(id)) {
    throw ConfigError("scenario " + scenario_name(id) + " requires p >= " +
                      std::to_string(scenario_min_p(id)));
  }
  if (!(spec.tau > 0.0 && spec.tau < 1.0)) {
    throw ConfigError("tau must lie in (0, 1)");
  }
  const int n1 = spec.n1;
  const int n2 = spec.n2;
  const int p = spec.p;
  const int q = scenario_q(id);
  const double tau = spec.tau;
  const double x_hi = modifier_upper(id);

  Rng root(spec.seed);
  Rng rng_x = root.stream(kTagTrainX);
  Rng rng_z = root.stream(kTagTrainZ);
  Rng rng_e = root.stream(kTagNoise);
  Rng rng_c = root.stream(kTagCensor);
  Rng rng_tx = root.stream(kTagTestX);
  Rng rng_tz = root.stream(kTagTestZ);
  Rng rng_s = root.stream(kTagShock);

  SimulatedData out;
  SurvivalDataset& train = out.train;
  train.x.resize(n1, p);
  train.z.resize(n1, q);
  train.y.resize(n1);
  train.delta.resize(n1);
  out.latent_time.resize(n1);

  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < p; ++j) train.x(i, j) = rng_x.uniform(0.0, x_hi);
  }
  for (int i = 0; i < n1; ++i) {
    train.z(i, 0) = 1.0;
    switch (id) {
      case ScenarioId::S1_tree_binary:
        train.z(i, 1) = rng_z.bernoulli(0.5) ? 1.0 : 0.0;
        break;
      case ScenarioId::S2_boosting:
      case ScenarioId::Sup1_constant:
        for (int j = 1; j < q; ++j) train.z(i, j) = rng_z.uniform(0.0, 1.0);
        break;
      default:
        for (int j = 1; j < q; ++j) train.z(i, j) = rng_z.uniform(0.0, 2.0);
        break;
    }
  }

  for (int i = 0; i < n1; ++i) {
    Eigen::VectorXd beta = true_beta(id, train.x.row(i).transpose(), tau);
    if (id == ScenarioId::Sup2_quantile_varying) {
      // The generative coefficient carries a raw chi^2(1) shock; the truth
      // table replaces it with its tau-quantile.
      beta[2] = 0.5 * train.x(i, 1) * (3.0 - train.x(i, 1)) + 1.0 +
                train.x(i, 1) * rng_s.chi_squared1() / 10.0;
    }
    double eps = 0.0;
    switch (id) {
      case ScenarioId::S1_tree_binary:
      case ScenarioId::S2_boosting:
        // eta ~ N(0, 0.25); subtracting eta's own tau-quantile zeroes the
        // tau-quantile of the error, keeping the closed-form truth exact.
        eps = rng_e.normal(0.0, 0.5) - 0.5 * normal_quantile(tau);
        break;
      case ScenarioId::S3_cosine:
      case ScenarioId::S3c_dep_censor:
        eps = rng_e.normal();
        break;
      case ScenarioId::S3a_hetero:
        eps = train.x(i, 1) * rng_e.normal() / 2.0;
        break;
      case ScenarioId::S3b_heavy_tail:
        eps = rng_e.student_t2();
        break;
      case ScenarioId::Sup1_constant:
        eps = rng_e.chi_squared2() - chi_squared2_quantile(tau);
        break;
      case ScenarioId::Sup2_quantile_varying:
        eps = rng_e.uniform01() - tau;
        break;
    }
    const double t = train.z.row(i).dot(beta) + eps;
    double c = 0.0;
    switch (id) {
      case ScenarioId::S1_tree_binary: c = rng_c.uniform(0.0, 50.0); break;
      case ScenarioId::S2_boosting: c = rng_c.uniform(0.0, 40.0); break;
      case ScenarioId::S3_cosine:
      case ScenarioId::S3a_hetero:
      case ScenarioId::S3b_heavy_tail: c = rng_c.uniform(0.0, 60.0); break;
      case ScenarioId::S3c_dep_censor:
        c = -std::log(1.0 - rng_c.uniform01()) /
            (0.017 * std::exp(0.1 * train.x(i, 0)));
        break;
      case ScenarioId::Sup1_constant: c = rng_c.uniform(0.0, 48.0); break;
      case ScenarioId::Sup2_quantile_varying: c = rng_c.uniform(0.0, 67.0); break;
    }
    out.latent_time[i] = t;
    train.y[i] = std::min(t, c);
    train.delta[i] = (t <= c) ? 1 : 0;
    // Observed times below zero can occur for heavy-tailed errors; clamp away
    // negative values so the dataset stays a valid survival sample.
    if (train.y[i] < 0.0) train.y[i] = 0.0;
  }

  train.modifier_names.reserve(p);
  for (int j = 0; j < p; ++j) train.modifier_names.push_back("x_" + std::to_string(j + 1));
  train.predictor_names.push_back("intercept");
  for (int j = 1; j < q; ++j) train.predictor_names.push_back("z_" + std::to_string(j));
  train.validate();

  TruthTable& test = out.test;
  test.x_star.resize(n2, p);
  test.z_star.resize(n2, q);
  test.beta_true.resize(n2, q);
  test.q_true.resize(n2);
  for (int i = 0; i < n2; ++i) {
    for (int j = 0; j < p; ++j) test.x_star(i, j) = rng_tx.uniform(0.0, x_hi);
    test.z_star(i, 0) = 1.0;
    switch (id) {
      case ScenarioId::S1_tree_binary:
        test.z_star(i, 1) = rng_tz.bernoulli(0.5) ? 1.0 : 0.0;
        break;
      case ScenarioId::S2_boosting:
      case ScenarioId::Sup1_constant:
        for (int j = 1; j < q; ++j) test.z_star(i, j) = rng_tz.uniform(0.0, 1.0);
        break;
      default:
        for (int j = 1; j < q; ++j) test.z_star(i, j) = rng_tz.uniform(0.0, 2.0);
        break;
    }
    test.beta_true.row(i) = true_beta(id, test.x_star.row(i).transpose(), tau).transpose();
    test.q_true[i] = test.z_star.row(i).dot(test.beta_true.row(i));
  }
  return out;
}

std::pair<SurvivalDataset, TruthTable> simulate_scenario(const ScenarioSpec& spec) {
  SimulatedData full = simulate_scenario_full(spec);
  return {std::move(full.train), std::move(full.test)};
}

}  // namespace hcqrf
