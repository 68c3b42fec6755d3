#include "hcqrf/rank_score.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hcqrf/errors.hpp"

namespace hcqrf {

Eigen::VectorXd censored_rank_scores(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                     const Eigen::Ref<const Eigen::VectorXd>& response,
                                     const Eigen::Ref<const Eigen::VectorXd>& u,
                                     const Eigen::VectorXd& beta, double tau) {
  const Eigen::Index n = design.rows();
  if (response.size() != n || u.size() != n || beta.size() != design.cols()) {
    throw DataError("censored_rank_scores: shape mismatch");
  }
  Eigen::VectorXd scores(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double residual = response[i] - design.row(i).dot(beta);
    scores[i] = tau - (residual < 0.0 ? u[i] : 0.0);
  }
  return scores;
}

RankScoreResult rank_score_statistic(const Eigen::Ref<const Eigen::VectorXd>& x_column,
                                     const Eigen::Ref<const Eigen::MatrixXd>& design,
                                     const Eigen::Ref<const Eigen::VectorXd>& scores) {
  const Eigen::Index n = design.rows();
  const Eigen::Index q = design.cols();
  if (x_column.size() != n || scores.size() != n) {
    throw DataError("rank_score_statistic: shape mismatch");
  }
  RankScoreResult result;
  result.s_vector = Eigen::VectorXd::Zero(q);

  // Affine normalization of the modifier column (the statistic is invariant).
  const double mean = x_column.mean();
  Eigen::VectorXd centered = x_column.array() - mean;
  const double spread = centered.cwiseAbs().maxCoeff();
  if (spread <= 1e-12 * std::max(1.0, std::fabs(mean))) {
    return result;  // constant modifier: Lambda lies in span(Z), T = 0
  }
  centered /= spread;

  // Residual of Lambda = diag(x_k) Z after projecting onto the columns of Z.
  Eigen::MatrixXd lambda = centered.asDiagonal() * design;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  Eigen::MatrixXd residual = lambda - design * cod.solve(lambda);

  // Projection residual at roundoff level means Lambda is numerically in
  // span(Z); report a clean zero rather than amplifying noise through Q^+.
  const double energy = lambda.squaredNorm();
  Eigen::MatrixXd qmat = residual.transpose() * residual;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(qmat);
  const double lambda_max = eigen.eigenvalues().maxCoeff();
  if (!(lambda_max > 1e-20 * std::max(energy, 1e-300))) {
    return result;
  }

  result.s_vector = residual.transpose() * scores;
  const double cutoff = 1e-10 * lambda_max;
  double statistic = 0.0;
  int rank = 0;
  for (Eigen::Index j = 0; j < q; ++j) {
    const double value = eigen.eigenvalues()[j];
    if (value > cutoff) {
      const double projection = eigen.eigenvectors().col(j).dot(result.s_vector);
      statistic += projection * projection / value;
      ++rank;
    }
  }
  result.statistic = statistic;
  result.q_matrix_rank = rank;
  return result;
}

}  // namespace hcqrf
