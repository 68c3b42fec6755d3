#pragma once

#include <Eigen/Core>
#include <vector>

namespace hcqrf {

// Pinball (check) loss: rho_tau(u) = u * (tau - 1{u < 0}).
inline double pinball_loss(double u, double tau) {
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

// Censored pinball loss of one observation under redistribution-of-mass:
// the censored point keeps mass u at y and sends mass 1 - u to y_inf.
inline double censored_pinball_loss(double y, double fitted, double u,
                                    double y_inf, double tau) {
  return u * pinball_loss(y - fitted, tau) +
         (1.0 - u) * pinball_loss(y_inf - fitted, tau);
}

// Weighted quantile regression instance:
//   minimize over beta   sum_i weight_i * rho_tau(response_i - design_i . beta)
struct WeightedQrProblem {
  Eigen::MatrixXd design;    // m x q
  Eigen::VectorXd response;  // m
  Eigen::VectorXd weight;    // m, nonnegative; entries below 1e-12 are dropped
  double tau = 0.5;
};

struct QuantileFit {
  Eigen::VectorXd beta;
  double objective = 0.0;         // achieved weighted pinball loss
  double effective_n = 0.0;  // total weight of retained rows
  std::vector<int> active_rows;    // q interpolated rows, ascending, original indices
  int iterations = 0;
};

// Builds the augmented problem behind the doubly-weighted estimator: row i
// enters with weight row_weight_i * u_i at its observed response, and rows
// with u_i < 1 additionally contribute a pseudo observation at y_inf with
// weight row_weight_i * (1 - u_i).  Pseudo rows are appended after the
// observed rows in input order.
WeightedQrProblem augment_pseudo_observations(const Eigen::MatrixXd& design,
                                              const Eigen::VectorXd& response,
                                              const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& row_weight,
                                              double y_inf, double tau);

// Exact weighted quantile regression by vertex exchange.  The minimizer is a
// basic solution interpolating q rows; the solver walks between such vertices
// along steepest-descent edges, switching to first-negative (Bland) pivoting
// after an iteration budget to rule out cycling.  Deterministic for a fixed
// input ordering; ties break toward the lowest row index.
//
// Throws NumericalError("degenerate design") when the retained rows do not
// span R^q and NumericalError("insufficient effective sample") when fewer
// than q rows carry weight >= 1e-12.
class QrSolver {
 public:
  void fit(const Eigen::Ref<const Eigen::MatrixXd>& design,
           const Eigen::Ref<const Eigen::VectorXd>& response,
           const Eigen::Ref<const Eigen::VectorXd>& weight, double tau,
           QuantileFit& out, const std::vector<int>* warm_basis = nullptr);

 private:
  std::vector<int> active_;       // original indices of retained rows
  std::vector<int> basis_;        // positions into active_, size q
  std::vector<char> in_basis_;    // flag per active row
  Eigen::VectorXd r_;             // residuals of active rows
  Eigen::VectorXd w_;             // weights of active rows
  Eigen::MatrixXd za_;            // active design rows
  Eigen::VectorXd ya_;            // active responses
  Eigen::MatrixXd dirs_;          // inverse of the basis matrix (columns = edge directions)
  Eigen::MatrixXd rates_;         // za_ * dirs_
  std::vector<std::pair<double, int>> breaks_;
};

QuantileFit weighted_qr_fit(const WeightedQrProblem& problem);

// Minimum weight for a row to participate in a fit.
inline constexpr double kQrWeightFloor = 1e-12;

}  // namespace hcqrf
