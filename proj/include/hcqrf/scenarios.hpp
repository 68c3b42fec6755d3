#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "hcqrf/dataset.hpp"

namespace hcqrf {

// Built-in simulation designs.  All draw T = beta0(X) + Z' beta1(X) + eps and
// right-censor with an independent (S3c: X-dependent) censoring time.
//
//   S1   binary treatment, tree-structured effect 15 - 5*1{x1>.2}1{x2>.2}
//   S2   three predictors, coefficients switch on the disc x1^2 + x2^2 < 1
//   S3   smooth cosine/quadratic coefficient surfaces on U(0,2) inputs
//   S3a  S3 with heteroscedastic error x2 * xi / 2
//   S3b  S3 with t(2) heavy-tailed error
//   S3c  S3 with covariate-dependent exponential censoring
//   Sup1 constant coefficients (5, 10), chi^2(2) error
//   Sup2 S3 geometry with a chi^2(1) coefficient shock making beta2 vary in tau
//
// Error terms stated as eta - Q_eta(tau) in the design (S1, S2, Sup1, Sup2)
// are centered so that the closed-form coefficients are the exact tau-quantile
// truth at any tau.  The S3 family draws symmetric raw errors; its truth table
// is quantile-exact at tau = 0.5.
enum class ScenarioId {
  S1_tree_binary,
  S2_boosting,
  S3_cosine,
  S3a_hetero,
  S3b_heavy_tail,
  S3c_dep_censor,
  Sup1_constant,
  Sup2_quantile_varying,
};

// Accepts the short form ("S1", ..., "S3c", "Sup1", "Sup2"), case-insensitive.
ScenarioId parse_scenario_id(const std::string& text);
std::string scenario_name(ScenarioId id);

int scenario_q(ScenarioId id);       // predictor dimension incl. intercept
int scenario_min_p(ScenarioId id);   // modifiers referenced by the truth
int scenario_default_n2(ScenarioId id);

struct ScenarioSpec {
  ScenarioId scenario_id = ScenarioId::S1_tree_binary;
  int n1 = 500;
  int n2 = 400;
  int p = 10;
  double tau = 0.5;
  std::uint64_t seed = 1;
};

// Closed-form true coefficient vector beta_tau(x), size scenario_q(id).
Eigen::VectorXd true_beta(ScenarioId id, const Eigen::VectorXd& x, double tau);

// Held-out evaluation rows with their true coefficients and true quantile.
struct TruthTable {
  Eigen::MatrixXd x_star;     // n2 x p
  Eigen::MatrixXd z_star;     // n2 x q, intercept included
  Eigen::MatrixXd beta_true;  // n2 x q
  Eigen::VectorXd q_true;     // n2, rowwise z_star . beta_true
};

struct SimulatedData {
  SurvivalDataset train;
  Eigen::VectorXd latent_time;  // uncensored T for the training rows
  TruthTable test;
};

// Deterministic in spec.seed; independent substreams per variable block, so
// e.g. the training covariates do not change when n2 changes.
SimulatedData simulate_scenario_full(const ScenarioSpec& spec);

std::pair<SurvivalDataset, TruthTable> simulate_scenario(const ScenarioSpec& spec);

}  // namespace hcqrf
