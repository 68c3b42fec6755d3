#pragma once

#include <Eigen/Core>

namespace hcqrf {

// Censored regression rank scores for a fitted node:
//   a_i = tau - u_i * 1{y_i - z_i . beta < 0},  each in [tau - 1, tau].
Eigen::VectorXd censored_rank_scores(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                     const Eigen::Ref<const Eigen::VectorXd>& response,
                                     const Eigen::Ref<const Eigen::VectorXd>& u,
                                     const Eigen::VectorXd& beta, double tau);

struct RankScoreResult {
  double statistic = 0.0;       // T = S' Q^+ S, always >= 0
  Eigen::VectorXd s_vector;     // S = (Lambda - P_Z Lambda)' a
  int q_matrix_rank = 0;        // rank of Q = (Lambda - P_Z Lambda)' (Lambda - P_Z Lambda)
};

// Heterogeneity statistic of one candidate modifier within a node.  With
// Lambda = diag(x_k) Z and P_Z the projector onto the columns of Z,
//   S = (Lambda - P_Z Lambda)' a,   Q = (Lambda - P_Z Lambda)' (Lambda - P_Z Lambda),
//   T = S' Q^+ S,
// where Q^+ is the Moore-Penrose pseudo-inverse via eigendecomposition with
// eigenvalue cutoff 1e-10 * lambda_max.  The statistic is invariant under
// affine changes of x_k; the implementation centers and rescales the column
// first, which makes a constant column return exactly zero and keeps the
// projection residual well scaled.
RankScoreResult rank_score_statistic(const Eigen::Ref<const Eigen::VectorXd>& x_column,
                                     const Eigen::Ref<const Eigen::MatrixXd>& design,
                                     const Eigen::Ref<const Eigen::VectorXd>& scores);

}  // namespace hcqrf
