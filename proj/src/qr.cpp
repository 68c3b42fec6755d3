#include "hcqrf/qr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "hcqrf/errors.hpp"

namespace hcqrf {

namespace {

// One-sided directional derivative contribution of a single residual moving
// at rate t (residual r(s) = r - s * t).
inline double direction_rate(double r, double t, double tau) {
  if (r > 0.0) return -tau * t;
  if (r < 0.0) return (1.0 - tau) * t;
  return std::max((1.0 - tau) * t, -tau * t);
}

}  // namespace

WeightedQrProblem augment_pseudo_observations(const Eigen::MatrixXd& design,
                                              const Eigen::VectorXd& response,
                                              const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& row_weight,
                                              double y_inf, double tau) {
  const Eigen::Index n = design.rows();
  if (response.size() != n || u.size() != n || row_weight.size() != n) {
    throw DataError("augment_pseudo_observations: shape mismatch");
  }
  Eigen::Index extra = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u[i] < 1.0) ++extra;
  }
  WeightedQrProblem out;
  out.tau = tau;
  out.design.resize(n + extra, design.cols());
  out.response.resize(n + extra);
  out.weight.resize(n + extra);
  out.design.topRows(n) = design;
  out.response.head(n) = response;
  for (Eigen::Index i = 0; i < n; ++i) out.weight[i] = row_weight[i] * u[i];
  Eigen::Index next = n;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u[i] < 1.0) {
      out.design.row(next) = design.row(i);
      out.response[next] = y_inf;
      out.weight[next] = row_weight[i] * (1.0 - u[i]);
      ++next;
    }
  }
  return out;
}

void QrSolver::fit(const Eigen::Ref<const Eigen::MatrixXd>& design,
                   const Eigen::Ref<const Eigen::VectorXd>& response,
                   const Eigen::Ref<const Eigen::VectorXd>& weight, double tau,
                   QuantileFit& out, const std::vector<int>* warm_basis) {
  const Eigen::Index m_all = design.rows();
  const Eigen::Index q = design.cols();
  if (response.size() != m_all || weight.size() != m_all) {
    throw DataError("weighted_qr_fit: shape mismatch");
  }
  if (q < 1) throw DataError("weighted_qr_fit: empty design");
  if (!(tau > 0.0 && tau < 1.0)) {
    throw NumericalError("weighted_qr_fit: tau must lie in (0, 1)");
  }

  active_.clear();
  for (Eigen::Index i = 0; i < m_all; ++i) {
    const double w = weight[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw DataError("weighted_qr_fit: weights must be nonnegative and finite");
    }
    if (w >= kQrWeightFloor) active_.push_back(static_cast<int>(i));
  }
  const Eigen::Index m = static_cast<Eigen::Index>(active_.size());
  if (m < q) throw NumericalError("insufficient effective sample");

  za_.resize(m, q);
  ya_.resize(m);
  w_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    za_.row(i) = design.row(active_[i]);
    ya_[i] = response[active_[i]];
    w_[i] = weight[active_[i]];
  }

  // ----- initial basis -----
  basis_.clear();
  bool warm_ok = false;
  if (warm_basis != nullptr && static_cast<Eigen::Index>(warm_basis->size()) == q) {
    // Map original indices to active positions; reject dropped or duplicate rows.
    basis_.reserve(q);
    warm_ok = true;
    for (int orig : *warm_basis) {
      const auto it = std::lower_bound(active_.begin(), active_.end(), orig);
      if (it == active_.end() || *it != orig) {
        warm_ok = false;
        break;
      }
      basis_.push_back(static_cast<int>(it - active_.begin()));
    }
    if (warm_ok) {
      Eigen::MatrixXd b(q, q);
      for (Eigen::Index h = 0; h < q; ++h) b.row(h) = za_.row(basis_[h]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
      lu.setThreshold(1e-10);
      warm_ok = (lu.rank() == q);
    }
    if (!warm_ok) basis_.clear();
  }
  if (!warm_ok) {
    // First q linearly independent rows in index order (Gram-Schmidt test).
    Eigen::MatrixXd ortho(q, q);
    Eigen::Index got = 0;
    for (Eigen::Index i = 0; i < m && got < q; ++i) {
      Eigen::VectorXd v = za_.row(i).transpose();
      const double scale = v.norm();
      if (scale <= 0.0) continue;
      for (Eigen::Index j = 0; j < got; ++j) {
        v -= ortho.row(j).dot(za_.row(i)) * ortho.row(j).transpose();
      }
      if (v.norm() > 1e-10 * scale) {
        ortho.row(got) = v.transpose() / v.norm();
        basis_.push_back(static_cast<int>(i));
        ++got;
      }
    }
    if (got < q) throw NumericalError("degenerate design");
  }
  in_basis_.assign(static_cast<std::size_t>(m), 0);
  for (int pos : basis_) in_basis_[static_cast<std::size_t>(pos)] = 1;

  // ----- vertex exchange -----
  Eigen::MatrixXd b(q, q);
  Eigen::VectorXd yb(q);
  Eigen::VectorXd beta(q);
  r_.resize(m);
  const long bland_after = 3 * static_cast<long>(m + q) + 50;
  const long max_iter = 50 * static_cast<long>(m + q) + 1000;
  long iter = 0;

  while (true) {
    for (Eigen::Index h = 0; h < q; ++h) {
      b.row(h) = za_.row(basis_[h]);
      yb[h] = ya_[basis_[h]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
    lu.setThreshold(1e-12);
    if (lu.rank() < q) throw NumericalError("degenerate design");
    dirs_ = lu.inverse();
    beta = dirs_ * yb;
    r_ = ya_ - za_ * beta;
    for (int pos : basis_) r_[pos] = 0.0;
    rates_ = za_ * dirs_;

    // Steepest one-sided descent direction among the 2q basis edges.
    double best_g = 0.0;
    Eigen::Index best_h = -1;
    double best_sigma = 1.0;
    bool found = false;
    const bool bland = iter >= bland_after;
    for (Eigen::Index h = 0; h < q && !(bland && found); ++h) {
      for (double sigma : {1.0, -1.0}) {
        double g = 0.0;
        double scale = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double t = sigma * rates_(i, h);
          g += w_[i] * direction_rate(r_[i], t, tau);
          scale += w_[i] * std::abs(t);
        }
        if (g < -1e-10 * scale && (!found || g < best_g)) {
          best_g = g;
          best_h = h;
          best_sigma = sigma;
          found = true;
          if (bland) break;
        }
      }
    }
    if (!found) break;  // optimal vertex
    if (++iter > max_iter) {
      throw NumericalError("weighted_qr_fit: descent did not terminate");
    }

    // Piecewise-linear line search along the chosen edge: walk breakpoints
    // until the directional derivative turns nonnegative.
    breaks_.clear();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double t = best_sigma * rates_(i, best_h);
      if ((r_[i] > 0.0 && t > 0.0) || (r_[i] < 0.0 && t < 0.0)) {
        breaks_.emplace_back(r_[i] / t, static_cast<int>(i));
      }
    }
    std::sort(breaks_.begin(), breaks_.end());
    double slope = best_g;
    int entering = -1;
    for (const auto& [step, row] : breaks_) {
      const double t = best_sigma * rates_(row, best_h);
      slope += w_[row] * std::abs(t);
      if (slope >= 0.0) {
        entering = row;
        break;
      }
    }
    if (entering < 0) {
      throw NumericalError("weighted_qr_fit: unbounded descent");
    }
    in_basis_[static_cast<std::size_t>(basis_[best_h])] = 0;
    basis_[best_h] = entering;
    in_basis_[static_cast<std::size_t>(entering)] = 1;
  }

  out.beta = beta;
  out.iterations = static_cast<int>(iter);
  out.effective_n = w_.sum();
  double objective = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) objective += w_[i] * pinball_loss(r_[i], tau);
  out.objective = objective;
  out.active_rows.clear();
  for (int pos : basis_) out.active_rows.push_back(active_[pos]);
  std::sort(out.active_rows.begin(), out.active_rows.end());
}

QuantileFit weighted_qr_fit(const WeightedQrProblem& problem) {
  QrSolver solver;
  QuantileFit fit;
  solver.fit(problem.design, problem.response, problem.weight, problem.tau, fit);
  return fit;
}

}  // namespace hcqrf
