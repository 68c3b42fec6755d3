#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

// Independent reference implementations, deliberately brute-force: the main
// code must reproduce these on small instances.

namespace oracles {

// Exhaustive vertex enumeration for weighted quantile regression: fits every
// full-rank q-subset of rows exactly and returns the smallest achieved
// weighted pinball loss.  Infeasible (rank-deficient) designs return nullopt.
std::optional<double> qr_vertex_objective(const Eigen::MatrixXd& design,
                                          const Eigen::VectorXd& response,
                                          const Eigen::VectorXd& weight, double tau);

// Dense-linear-algebra rank-score statistic: explicit centered interaction
// block, explicit projector onto the design span, explicit spectral
// pseudo-inverse.
double rank_score_statistic(const Eigen::VectorXd& x_column,
                            const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& scores);

// Empirical distribution function of a sample: F(t) = #{y_i <= t} / n.
double empirical_cdf(const std::vector<double>& sample, double t);

}  // namespace oracles
