#include "hcqrf/forest.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <utility>

#include "hcqrf/errors.hpp"
#include "hcqrf/parallel.hpp"
#include "hcqrf/rank_score.hpp"
#include "hcqrf/rng.hpp"

namespace hcqrf {

namespace {

constexpr std::uint64_t kForestSeedTag = 0x51525446ULL;  // per-tree substream namespace

// Evenly spaced subset of {0, ..., available - 1}, at most cap entries.
void pick_evenly(std::size_t available, std::size_t cap, std::vector<std::size_t>& out) {
  out.clear();
  if (available <= cap) {
    for (std::size_t i = 0; i < available; ++i) out.push_back(i);
    return;
  }
  std::size_t previous = available;  // sentinel
  for (std::size_t t = 0; t < cap; ++t) {
    const std::size_t idx = ((t + 1) * available) / (cap + 1);
    if (idx != previous && idx < available) out.push_back(idx);
    previous = idx;
  }
}

// Lower type-1 sample quantile: the ceil(tau * m)-th order statistic.
double marginal_quantile(std::vector<double>& values, double tau) {
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(values.size());
  std::ptrdiff_t idx =
      static_cast<std::ptrdiff_t>(std::ceil(tau * static_cast<double>(m))) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, m - 1);
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[static_cast<std::size_t>(idx)];
}

// Mutable state shared by the nodes of one growing tree.
struct GrowContext {
  const SurvivalDataset& data;
  const Eigen::VectorXd& u;
  const ForestConfig& config;
  double tau;
  double y_inf;
  int mtry;
  int min_leaf;
  Rng& rng;

  QrSolver solver;
  Eigen::MatrixXd design;    // up to 2m rows: observed block then pseudo block
  Eigen::VectorXd response;
  Eigen::VectorXd weight;
  Eigen::VectorXd x_values;
  std::vector<std::uint32_t> candidate_vars;
  std::vector<double> distinct;
  std::vector<std::size_t> cut_ids;
  std::vector<std::uint32_t> left_rows;
  std::vector<std::uint32_t> right_rows;
  std::vector<double> buf_left;
  std::vector<double> buf_right;

  GrowContext(const SurvivalDataset& data_in, const Eigen::VectorXd& u_in,
              const ForestConfig& config_in, double tau_in, double y_inf_in,
              std::size_t max_rows, Rng& rng_in)
      : data(data_in),
        u(u_in),
        config(config_in),
        tau(tau_in),
        y_inf(y_inf_in),
        mtry(config_in.resolved_mtry(data_in.p())),
        min_leaf(config_in.resolved_min_leaf(data_in.q())),
        rng(rng_in),
        design(2 * max_rows, data_in.q()),
        response(2 * max_rows),
        weight(2 * max_rows),
        x_values(max_rows) {}
};

// Solves the redistributed quantile regression restricted to `rows`.  The
// observed block of the scratch buffers doubles as the node (Z, Y, u) view
// for the rank-score pass.  Returns false when the node problem is
// numerically unusable (rank-deficient design or vanishing weight).
bool fit_node(GrowContext& ctx, const std::vector<std::uint32_t>& rows, QuantileFit& out) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto row = rows[static_cast<std::size_t>(i)];
    ctx.design.row(i) = ctx.data.z.row(row);
    ctx.response(i) = ctx.data.y(row);
    ctx.weight(i) = ctx.u(row);
  }
  Eigen::Index k = m;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ui = ctx.weight(i);
    if (ui >= 1.0) continue;
    ctx.design.row(k) = ctx.design.row(i);
    ctx.response(k) = ctx.y_inf;
    ctx.weight(k) = 1.0 - ui;
    ++k;
  }
  try {
    ctx.solver.fit(ctx.design.topRows(k), ctx.response.head(k), ctx.weight.head(k),
                   ctx.tau, out);
  } catch (const NumericalError&) {
    return false;
  }
  return true;
}

// Rank-score variable screening: returns the candidate modifier with the
// largest statistic, or -1 when no candidate has two distinct values.
int select_split_variable(GrowContext& ctx, const std::vector<std::uint32_t>& rows,
                          const QuantileFit& node_fit) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  const Eigen::VectorXd scores = censored_rank_scores(
      ctx.design.topRows(m), ctx.response.head(m), ctx.weight.head(m), node_fit.beta,
      ctx.tau);
  ctx.candidate_vars =
      ctx.rng.sample_without_replacement(static_cast<std::uint32_t>(ctx.data.p()),
                                         static_cast<std::uint32_t>(ctx.mtry));
  int best_var = -1;
  double best_stat = -std::numeric_limits<double>::infinity();
  for (const auto var : ctx.candidate_vars) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = ctx.data.x(rows[static_cast<std::size_t>(i)], var);
      ctx.x_values(i) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) continue;  // constant within the node
    const RankScoreResult result =
        rank_score_statistic(ctx.x_values.head(m), ctx.design.topRows(m), scores);
    if (best_var < 0 || result.statistic > best_stat) {
      best_var = static_cast<int>(var);
      best_stat = result.statistic;
    }
  }
  return best_var;
}

// Cut search along one variable: minimizes the summed child losses over
// evenly thinned order-statistic midpoints, requiring min_leaf per child and
// solvable child problems.  Returns false when no cut is feasible.
struct CutChoice {
  double threshold = 0.0;
  double child_loss_sum = 0.0;
  std::vector<std::uint32_t> left;
  std::vector<std::uint32_t> right;
};

bool select_split_value(GrowContext& ctx, const std::vector<std::uint32_t>& rows,
                        int var, CutChoice& best) {
  ctx.distinct.clear();
  for (const auto row : rows) ctx.distinct.push_back(ctx.data.x(row, var));
  std::sort(ctx.distinct.begin(), ctx.distinct.end());
  ctx.distinct.erase(std::unique(ctx.distinct.begin(), ctx.distinct.end()),
                     ctx.distinct.end());
  if (ctx.distinct.size() < 2) return false;
  pick_evenly(ctx.distinct.size() - 1,
              static_cast<std::size_t>(ctx.config.max_candidate_cuts), ctx.cut_ids);

  bool found = false;
  QuantileFit fit_left;
  QuantileFit fit_right;
  for (const auto cut : ctx.cut_ids) {
    const double threshold = 0.5 * (ctx.distinct[cut] + ctx.distinct[cut + 1]);
    ctx.left_rows.clear();
    ctx.right_rows.clear();
    for (const auto row : rows) {
      if (ctx.data.x(row, var) <= threshold) {
        ctx.left_rows.push_back(row);
      } else {
        ctx.right_rows.push_back(row);
      }
    }
    if (ctx.left_rows.size() < static_cast<std::size_t>(ctx.min_leaf) ||
        ctx.right_rows.size() < static_cast<std::size_t>(ctx.min_leaf)) {
      continue;
    }
    if (!fit_node(ctx, ctx.left_rows, fit_left)) continue;
    if (!fit_node(ctx, ctx.right_rows, fit_right)) continue;
    const double total = fit_left.objective + fit_right.objective;
    if (!found || total < best.child_loss_sum) {
      found = true;
      best.threshold = threshold;
      best.child_loss_sum = total;
      best.left = ctx.left_rows;
      best.right = ctx.right_rows;
    }
  }
  return found;
}

// Marginal-contrast split (ablation): maximizes n_L * n_R * (q_L - q_R)^2
// over the same thinned cut grid, using raw response quantiles and ignoring
// the treatment design entirely.
bool select_marginal_split(GrowContext& ctx, const std::vector<std::uint32_t>& rows,
                           int& best_var, CutChoice& best) {
  ctx.candidate_vars =
      ctx.rng.sample_without_replacement(static_cast<std::uint32_t>(ctx.data.p()),
                                         static_cast<std::uint32_t>(ctx.mtry));
  best_var = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto var : ctx.candidate_vars) {
    ctx.distinct.clear();
    for (const auto row : rows) ctx.distinct.push_back(ctx.data.x(row, var));
    std::sort(ctx.distinct.begin(), ctx.distinct.end());
    ctx.distinct.erase(std::unique(ctx.distinct.begin(), ctx.distinct.end()),
                       ctx.distinct.end());
    if (ctx.distinct.size() < 2) continue;
    pick_evenly(ctx.distinct.size() - 1,
                static_cast<std::size_t>(ctx.config.max_candidate_cuts), ctx.cut_ids);
    for (const auto cut : ctx.cut_ids) {
      const double threshold = 0.5 * (ctx.distinct[cut] + ctx.distinct[cut + 1]);
      ctx.buf_left.clear();
      ctx.buf_right.clear();
      for (const auto row : rows) {
        if (ctx.data.x(row, var) <= threshold) {
          ctx.buf_left.push_back(ctx.data.y(row));
        } else {
          ctx.buf_right.push_back(ctx.data.y(row));
        }
      }
      if (ctx.buf_left.size() < static_cast<std::size_t>(ctx.min_leaf) ||
          ctx.buf_right.size() < static_cast<std::size_t>(ctx.min_leaf)) {
        continue;
      }
      const double q_left = marginal_quantile(ctx.buf_left, ctx.tau);
      const double q_right = marginal_quantile(ctx.buf_right, ctx.tau);
      const double gap = q_left - q_right;
      const double score = static_cast<double>(ctx.buf_left.size()) *
                           static_cast<double>(ctx.buf_right.size()) * gap * gap;
      if (score > best_score) {
        best_score = score;
        best_var = static_cast<int>(var);
        best.threshold = threshold;
      }
    }
  }
  if (best_var < 0 || !(best_score > 0.0)) return false;
  best.left.clear();
  best.right.clear();
  for (const auto row : rows) {
    if (ctx.data.x(row, static_cast<Eigen::Index>(best_var)) <= best.threshold) {
      best.left.push_back(row);
    } else {
      best.right.push_back(row);
    }
  }
  return true;
}

Tree grow_tree(GrowContext& ctx, std::vector<std::uint32_t> inbag) {
  Tree tree;
  tree.inbag = std::move(inbag);

  struct Pending {
    int id;
    std::vector<std::uint32_t> rows;
  };
  std::deque<Pending> queue;
  tree.nodes.emplace_back();
  queue.push_back({0, tree.inbag});

  while (!queue.empty()) {
    Pending item = std::move(queue.front());
    queue.pop_front();
    std::vector<std::uint32_t>& rows = item.rows;

    bool split_done = false;
    if (rows.size() > static_cast<std::size_t>(ctx.config.min_split)) {
      int var = -1;
      CutChoice cut;
      if (ctx.config.split_rule == SplitRule::kHybrid) {
        QuantileFit node_fit;
        if (fit_node(ctx, rows, node_fit)) {
          var = select_split_variable(ctx, rows, node_fit);
          if (var >= 0 && select_split_value(ctx, rows, var, cut)) {
            assert(cut.child_loss_sum <=
                   node_fit.objective + 1e-8 * (1.0 + std::abs(node_fit.objective)));
            tree.split_audits.push_back(
                {item.id, node_fit.objective, cut.child_loss_sum});
            split_done = true;
          }
        }
      } else {
        split_done = select_marginal_split(ctx, rows, var, cut);
      }
      if (split_done) {
        const int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int right_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        SplitNode& node = tree.nodes[static_cast<std::size_t>(item.id)];
        node.split_var = var;
        node.split_value = cut.threshold;
        node.left = left_id;
        node.right = right_id;
        queue.push_back({left_id, std::move(cut.left)});
        queue.push_back({right_id, std::move(cut.right)});
      }
    }
    if (!split_done) {
      tree.nodes[static_cast<std::size_t>(item.id)].rows = std::move(rows);
    }
  }
  return tree;
}

}  // namespace

int ForestConfig::resolved_mtry(int p) const {
  if (mtry > 0) return std::min(mtry, p);
  return std::min(p, std::max(1, (p + 2) / 3));
}

int ForestConfig::resolved_min_leaf(int q) const {
  if (min_leaf > 0) return min_leaf;
  return std::max(5, q + 2);
}

bool Forest::row_inbag(int tree, std::uint32_t row) const {
  const auto& bag = trees[static_cast<std::size_t>(tree)].inbag;
  return std::binary_search(bag.begin(), bag.end(), row);
}

double ForestWeightVector::sum() const {
  double total = 0.0;
  for (const auto w : weight) total += w;
  return total;
}

RedistributionWeights complete_data_weights(const SurvivalDataset& data, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  RedistributionWeights out;
  out.u = Eigen::VectorXd::Ones(data.n());
  out.f_at_y = Eigen::VectorXd::Constant(data.n(), 1.0 - kCdfClampEps);
  out.tau = tau;
  return out;
}

Forest grow_forest(const SurvivalDataset& data, const RedistributionWeights& weights,
                   const ForestConfig& config, double tau, std::uint64_t seed) {
  data.validate();
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (config.n_trees < 1) throw ConfigError("n_trees must be positive");
  if (config.min_split < 1) throw ConfigError("min_split must be positive");
  if (config.max_candidate_cuts < 1) {
    throw ConfigError("max_candidate_cuts must be positive");
  }
  if (!(config.subsample_rate > 0.0 && config.subsample_rate <= 1.0)) {
    throw ConfigError("subsample_rate must lie in (0, 1]");
  }
  const auto n = static_cast<std::uint32_t>(data.n());
  if (weights.u.size() != data.n() || weights.f_at_y.size() != data.n()) {
    throw DataError("redistribution weights do not match the dataset");
  }
  for (Eigen::Index i = 0; i < weights.u.size(); ++i) {
    if (!(weights.u(i) > 0.0 && weights.u(i) <= 1.0)) {
      throw DataError("redistribution weights must lie in (0, 1]");
    }
  }

  Forest forest;
  forest.config = config;
  forest.tau = tau;
  forest.seed = seed;
  forest.y_inf = pseudo_response_bound(data);
  forest.data = data;
  forest.weights = weights;
  forest.trees.resize(static_cast<std::size_t>(config.n_trees));

  auto bag_size = static_cast<std::uint32_t>(
      std::llround(config.subsample_rate * static_cast<double>(n)));
  bag_size = std::clamp<std::uint32_t>(bag_size, 2, n);

  parallel_for(static_cast<std::size_t>(config.n_trees), config.threads,
               [&](std::size_t b) {
                 Rng rng(mix_seed(seed, kForestSeedTag, b));
                 auto inbag = rng.sample_without_replacement(n, bag_size);
                 GrowContext ctx(forest.data, forest.weights.u, forest.config, tau,
                                 forest.y_inf, inbag.size(), rng);
                 forest.trees[b] = grow_tree(ctx, std::move(inbag));
               });
  return forest;
}

const std::vector<std::uint32_t>& tree_leaf_rows(const Tree& tree,
                                                 const Eigen::VectorXd& x0) {
  std::size_t id = 0;
  while (tree.nodes[id].split_var >= 0) {
    const SplitNode& node = tree.nodes[id];
    id = static_cast<std::size_t>(x0(node.split_var) <= node.split_value ? node.left
                                                                         : node.right);
  }
  return tree.nodes[id].rows;
}

namespace {

ForestWeightVector compress_weights(const Eigen::VectorXd& dense) {
  ForestWeightVector out;
  for (Eigen::Index i = 0; i < dense.size(); ++i) {
    if (dense(i) > 0.0) {
      out.index.push_back(static_cast<std::uint32_t>(i));
      out.weight.push_back(dense(i));
    }
  }
  return out;
}

void check_query_point(const Forest& forest, const Eigen::VectorXd& x0) {
  if (x0.size() != forest.data.p()) {
    throw DataError("query point has wrong dimension: got " +
                    std::to_string(x0.size()) + ", expected " +
                    std::to_string(forest.data.p()));
  }
}

}  // namespace

ForestWeightVector forest_weights(const Forest& forest, const Eigen::VectorXd& x0) {
  check_query_point(forest, x0);
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(forest.data.n());
  const double inv_b = 1.0 / static_cast<double>(forest.trees.size());
  for (const auto& tree : forest.trees) {
    const auto& rows = tree_leaf_rows(tree, x0);
    const double share = inv_b / static_cast<double>(rows.size());
    for (const auto row : rows) dense(row) += share;
  }
  return compress_weights(dense);
}

ForestWeightVector forest_weights_oob(const Forest& forest, const Eigen::VectorXd& x0,
                                      std::uint32_t row) {
  check_query_point(forest, x0);
  int used = 0;
  for (std::size_t b = 0; b < forest.trees.size(); ++b) {
    if (!forest.row_inbag(static_cast<int>(b), row)) ++used;
  }
  if (used == 0) {
    throw NumericalError("no OOB trees for row " + std::to_string(row));
  }
  // Share arithmetic mirrors forest_weights so that a row that is OOB
  // everywhere reproduces the all-tree weights bit for bit.
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(forest.data.n());
  const double inv_used = 1.0 / static_cast<double>(used);
  for (std::size_t b = 0; b < forest.trees.size(); ++b) {
    if (forest.row_inbag(static_cast<int>(b), row)) continue;
    const auto& rows = tree_leaf_rows(forest.trees[b], x0);
    const double share = inv_used / static_cast<double>(rows.size());
    for (const auto r : rows) dense(r) += share;
  }
  return compress_weights(dense);
}

Eigen::VectorXd redistribution_at(const Forest& forest, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  const auto n = forest.data.n();
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = forest.weights.f_at_y(i);
    if (forest.data.delta(i) == 1 || f >= tau) {
      u(i) = 1.0;
    } else {
      u(i) = (tau - f) / (1.0 - f);
    }
  }
  return u;
}

QuantileFit fit_at_weights(const Forest& forest, const ForestWeightVector& weights,
                           const Eigen::VectorXd& u, double tau) {
  const auto support = static_cast<Eigen::Index>(weights.index.size());
  const Eigen::Index q = forest.data.q();
  if (support < 5 * q) {
    throw NumericalError("insufficient effective sample: " + std::to_string(support) +
                         " support rows, need " + std::to_string(5 * q));
  }
  Eigen::Index total = support;
  for (Eigen::Index i = 0; i < support; ++i) {
    if (u(weights.index[static_cast<std::size_t>(i)]) < 1.0) ++total;
  }
  Eigen::MatrixXd design(total, q);
  Eigen::VectorXd response(total);
  Eigen::VectorXd row_weight(total);
  std::vector<std::uint32_t> pseudo_src;
  pseudo_src.reserve(static_cast<std::size_t>(total - support));
  for (Eigen::Index i = 0; i < support; ++i) {
    const auto idx = weights.index[static_cast<std::size_t>(i)];
    design.row(i) = forest.data.z.row(idx);
    response(i) = forest.data.y(idx);
    row_weight(i) = weights.weight[static_cast<std::size_t>(i)] * u(idx);
  }
  Eigen::Index k = support;
  for (Eigen::Index i = 0; i < support; ++i) {
    const auto idx = weights.index[static_cast<std::size_t>(i)];
    const double ui = u(idx);
    if (ui >= 1.0) continue;
    design.row(k) = forest.data.z.row(idx);
    response(k) = forest.y_inf;
    row_weight(k) = weights.weight[static_cast<std::size_t>(i)] * (1.0 - ui);
    pseudo_src.push_back(idx);
    ++k;
  }
  QrSolver solver;
  QuantileFit fit;
  solver.fit(design, response, row_weight, tau, fit);
  // Report active rows as training ids; pseudo rows are offset by n.
  for (auto& row : fit.active_rows) {
    if (row < static_cast<int>(support)) {
      row = static_cast<int>(weights.index[static_cast<std::size_t>(row)]);
    } else {
      row = static_cast<int>(forest.data.n()) +
            static_cast<int>(pseudo_src[static_cast<std::size_t>(row) -
                                        static_cast<std::size_t>(support)]);
    }
  }
  std::sort(fit.active_rows.begin(), fit.active_rows.end());
  return fit;
}

QuantileFit estimate_beta(const Forest& forest, const Eigen::VectorXd& x0) {
  const ForestWeightVector weights = forest_weights(forest, x0);
  return fit_at_weights(forest, weights, forest.weights.u, forest.tau);
}

QuantileFit estimate_beta(const Forest& forest, const Eigen::VectorXd& x0, double tau) {
  const Eigen::VectorXd u = redistribution_at(forest, tau);
  const ForestWeightVector weights = forest_weights(forest, x0);
  return fit_at_weights(forest, weights, u, tau);
}

namespace {

double quantile_from_fit(const Forest& forest, const QuantileFit& fit,
                         const Eigen::VectorXd& z0) {
  if (z0.size() != forest.data.q()) {
    throw DataError("treatment vector has wrong dimension: got " +
                    std::to_string(z0.size()) + ", expected " +
                    std::to_string(forest.data.q()));
  }
  return z0.dot(fit.beta);
}

}  // namespace

double predict_quantile(const Forest& forest, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& z0) {
  return quantile_from_fit(forest, estimate_beta(forest, x0), z0);
}

double predict_quantile(const Forest& forest, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& z0, double tau) {
  return quantile_from_fit(forest, estimate_beta(forest, x0, tau), z0);
}

int split_variable_choice(const SurvivalDataset& data, const Eigen::VectorXd& u,
                          double tau, const std::vector<std::uint32_t>& rows,
                          const std::vector<std::uint32_t>& candidates) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (u.size() != data.n()) {
    throw DataError("redistribution weights do not match the dataset");
  }
  if (rows.empty()) throw DataError("node is empty");
  if (candidates.empty()) throw ConfigError("candidate set is empty");
  for (const auto var : candidates) {
    if (var >= static_cast<std::uint32_t>(data.p())) {
      throw ConfigError("candidate modifier index out of range");
    }
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index q = data.q();
  const double y_inf = pseudo_response_bound(data);
  Eigen::MatrixXd design(2 * m, q);
  Eigen::VectorXd response(2 * m);
  Eigen::VectorXd weight(2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto row = rows[static_cast<std::size_t>(i)];
    design.row(i) = data.z.row(row);
    response(i) = data.y(row);
    weight(i) = u(row);
  }
  Eigen::Index k = m;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ui = weight(i);
    if (ui >= 1.0) continue;
    design.row(k) = design.row(i);
    response(k) = y_inf;
    weight(k) = 1.0 - ui;
    ++k;
  }
  QuantileFit fit;
  QrSolver solver;
  try {
    solver.fit(design.topRows(k), response.head(k), weight.head(k), tau, fit);
  } catch (const NumericalError&) {
    throw NumericalError("node unsplittable");
  }
  const Eigen::VectorXd scores = censored_rank_scores(
      design.topRows(m), response.head(m), weight.head(m), fit.beta, tau);

  std::vector<std::uint32_t> vars(candidates);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  Eigen::VectorXd x_values(m);
  int best_var = -1;
  double best_stat = -std::numeric_limits<double>::infinity();
  for (const auto var : vars) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = data.x(rows[static_cast<std::size_t>(i)], var);
      x_values(i) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) continue;
    const RankScoreResult result =
        rank_score_statistic(x_values.head(m), design.topRows(m), scores);
    if (best_var < 0 || result.statistic > best_stat) {
      best_var = static_cast<int>(var);
      best_stat = result.statistic;
    }
  }
  return best_var;
}

}  // namespace hcqrf
