#include "hcqrf/survival_forest.hpp"

#include <algorithm>
#include <cmath>

#include "hcqrf/errors.hpp"
#include "hcqrf/parallel.hpp"
#include "hcqrf/rng.hpp"

namespace hcqrf {

namespace {

constexpr std::uint64_t kTreeSeedTag = 0x52534654ULL;  // per-tree substream namespace

// Packed covariate lookup: features 0..p-1 are modifiers, p..p+q-2 the
// non-intercept predictors.
inline double feature_value(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                            Eigen::Index row, int feature, int p) {
  return feature < p ? x(row, feature) : z(row, feature - p + 1);
}

struct GrowContext {
  const SurvivalDataset& data;
  const CdfForestConfig& config;
  int p;
  int q;
  int n_features;
  int mtry;
};

// Log-rank statistic (squared standardized score) for the partition of the
// node rows induced by `left`.  Rows must be ordered by ascending time.
// Returns -1 when the variance is degenerate.
double log_rank_statistic(const std::vector<std::uint32_t>& sorted_rows,
                          const std::vector<char>& left,
                          const SurvivalDataset& data) {
  const std::size_t m = sorted_rows.size();
  std::size_t at_risk = m;
  std::size_t at_risk_left = 0;
  for (std::size_t j = 0; j < m; ++j) at_risk_left += left[j] ? 1u : 0u;
  double score = 0.0;
  double variance = 0.0;
  std::size_t j = 0;
  while (j < m) {
    std::size_t k = j;
    std::size_t deaths = 0;
    std::size_t deaths_left = 0;
    std::size_t group_left = 0;
    const double time = data.y[sorted_rows[j]];
    while (k < m && data.y[sorted_rows[k]] == time) {
      const bool is_event = data.delta[sorted_rows[k]] == 1;
      deaths += is_event ? 1u : 0u;
      if (left[k]) {
        ++group_left;
        deaths_left += is_event ? 1u : 0u;
      }
      ++k;
    }
    if (deaths > 0 && at_risk > 1) {
      const double n = static_cast<double>(at_risk);
      const double nl = static_cast<double>(at_risk_left);
      const double d = static_cast<double>(deaths);
      score += static_cast<double>(deaths_left) - d * nl / n;
      variance += d * (nl / n) * (1.0 - nl / n) * (n - d) / (n - 1.0);
    }
    at_risk -= (k - j);
    at_risk_left -= group_left;
    j = k;
  }
  if (variance <= 0.0) return -1.0;
  return score * score / variance;
}

// Nelson-Aalen steps for a terminal node.  A pure point mass of events gets
// its hazard pinned at -log(kCdfClampEps): the node sample is a degenerate
// distribution, so F should reach the clamp ceiling beyond that time.
void terminal_hazard(const std::vector<std::uint32_t>& sorted_rows,
                     const SurvivalDataset& data, SurvivalTreeNode& node) {
  const std::size_t m = sorted_rows.size();
  node.times.clear();
  node.chf.clear();
  double cumulative = 0.0;
  std::size_t j = 0;
  std::size_t at_risk = m;
  std::size_t distinct_times = 0;
  std::size_t events = 0;
  while (j < m) {
    std::size_t k = j;
    std::size_t deaths = 0;
    const double time = data.y[sorted_rows[j]];
    while (k < m && data.y[sorted_rows[k]] == time) {
      deaths += data.delta[sorted_rows[k]] == 1 ? 1u : 0u;
      ++k;
    }
    ++distinct_times;
    events += deaths;
    if (deaths > 0) {
      cumulative += static_cast<double>(deaths) / static_cast<double>(at_risk);
      node.times.push_back(time);
      node.chf.push_back(cumulative);
    }
    at_risk -= (k - j);
    j = k;
  }
  if (distinct_times == 1 && events == m && !node.chf.empty()) {
    node.chf.back() = std::max(node.chf.back(), -std::log(kCdfClampEps));
  }
}

// Evenly spaced subset of {0, ..., available - 1}, at most cap entries.
void pick_evenly(std::size_t available, std::size_t cap,
                 std::vector<std::size_t>& out) {
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

void grow_node(const GrowContext& ctx, SurvivalTree& tree, int node_id,
               std::vector<std::uint32_t> sorted_rows, Rng& rng) {
  const SurvivalDataset& data = ctx.data;
  const std::size_t m = sorted_rows.size();

  std::size_t events = 0;
  for (auto row : sorted_rows) events += data.delta[row] == 1 ? 1u : 0u;
  const bool can_split =
      m >= 2 * static_cast<std::size_t>(ctx.config.node_size) && events > 0;

  double best_stat = -1.0;
  int best_feature = -1;
  double best_threshold = 0.0;

  if (can_split) {
    const auto candidates = rng.sample_without_replacement(
        static_cast<std::size_t>(ctx.n_features), static_cast<std::size_t>(ctx.mtry));
    std::vector<double> values(m);
    std::vector<double> distinct;
    std::vector<std::size_t> cut_ids;
    std::vector<char> left(m);
    for (auto feature : candidates) {
      for (std::size_t j = 0; j < m; ++j) {
        values[j] = feature_value(data.x, data.z, sorted_rows[j],
                                  static_cast<int>(feature), ctx.p);
      }
      distinct = values;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (distinct.size() < 2) continue;
      pick_evenly(distinct.size() - 1, static_cast<std::size_t>(ctx.config.max_candidate_cuts),
                  cut_ids);
      for (auto cut : cut_ids) {
        const double threshold = 0.5 * (distinct[cut] + distinct[cut + 1]);
        std::size_t count_left = 0;
        for (std::size_t j = 0; j < m; ++j) {
          left[j] = values[j] <= threshold ? 1 : 0;
          count_left += left[j];
        }
        if (count_left < static_cast<std::size_t>(ctx.config.node_size) ||
            m - count_left < static_cast<std::size_t>(ctx.config.node_size)) {
          continue;
        }
        const double stat = log_rank_statistic(sorted_rows, left, data);
        if (stat > best_stat) {
          best_stat = stat;
          best_feature = static_cast<int>(feature);
          best_threshold = threshold;
        }
      }
    }
  }

  if (best_feature < 0) {
    terminal_hazard(sorted_rows, data, tree.nodes[node_id]);
    return;
  }

  std::vector<std::uint32_t> left_rows;
  std::vector<std::uint32_t> right_rows;
  left_rows.reserve(m);
  right_rows.reserve(m);
  for (auto row : sorted_rows) {
    const double v = feature_value(data.x, data.z, row, best_feature, ctx.p);
    (v <= best_threshold ? left_rows : right_rows).push_back(row);
  }
  sorted_rows.clear();
  sorted_rows.shrink_to_fit();

  tree.nodes[node_id].feature = best_feature;
  tree.nodes[node_id].threshold = best_threshold;
  const int left_id = static_cast<int>(tree.nodes.size());
  tree.nodes[node_id].left = left_id;
  tree.nodes[node_id].right = left_id + 1;
  tree.nodes.emplace_back();
  tree.nodes.emplace_back();
  grow_node(ctx, tree, left_id, std::move(left_rows), rng);
  grow_node(ctx, tree, left_id + 1, std::move(right_rows), rng);
}

int leaf_for(const SurvivalTree& tree, const Eigen::VectorXd& x,
             const Eigen::VectorXd& z, int p) {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const int f = tree.nodes[node].feature;
    const double v = f < p ? x[f] : z[f - p + 1];
    node = v <= tree.nodes[node].threshold ? tree.nodes[node].left
                                           : tree.nodes[node].right;
  }
  return node;
}

double leaf_chf_at(const SurvivalTreeNode& leaf, double t) {
  const auto it = std::upper_bound(leaf.times.begin(), leaf.times.end(), t);
  if (it == leaf.times.begin()) return 0.0;
  return leaf.chf[static_cast<std::size_t>(it - leaf.times.begin()) - 1];
}

double chf_to_cdf(double mean_chf) {
  const double f = 1.0 - std::exp(-mean_chf);
  return std::min(std::max(f, 0.0), 1.0 - kCdfClampEps);
}

}  // namespace

bool CdfModel::row_inbag(int tree, std::uint32_t row) const {
  const auto& bag = trees[static_cast<std::size_t>(tree)].inbag;
  return std::binary_search(bag.begin(), bag.end(), row);
}

CdfModel fit_conditional_cdf(const SurvivalDataset& data,
                             const CdfForestConfig& config, std::uint64_t seed) {
  data.validate();
  const Eigen::Index n = data.n();
  if (config.n_trees < 1) throw ConfigError("n_trees must be positive");
  if (config.node_size < 1) throw ConfigError("node_size must be positive");
  if (!(config.subsample_rate > 0.0 && config.subsample_rate <= 1.0)) {
    throw ConfigError("subsample_rate must lie in (0, 1]");
  }
  if (n < 2 * static_cast<Eigen::Index>(config.node_size)) {
    throw DataError("need at least 2*node_size observations to fit the CDF forest");
  }
  if ((data.delta.array() == 1).count() == 0) {
    throw DataError("no events: CDF unidentifiable");
  }

  CdfModel model;
  model.config = config;
  model.seed = seed;
  model.p = static_cast<int>(data.p());
  model.q = static_cast<int>(data.q());

  GrowContext ctx{data, config, model.p, model.q, model.p + model.q - 1, 0};
  const int default_mtry =
      static_cast<int>(std::ceil(static_cast<double>(model.p + model.q) / 3.0));
  ctx.mtry = config.mtry > 0 ? config.mtry : default_mtry;
  if (ctx.mtry > ctx.n_features) ctx.mtry = ctx.n_features;
  if (ctx.mtry < 1) ctx.mtry = 1;

  const std::size_t bag_size = std::max<std::size_t>(
      2, static_cast<std::size_t>(
             std::llround(config.subsample_rate * static_cast<double>(n))));

  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  parallel_for(static_cast<std::size_t>(config.n_trees), config.threads,
               [&](std::size_t b) {
                 Rng rng(mix_seed(seed, kTreeSeedTag, b));
                 SurvivalTree& tree = model.trees[b];
                 tree.inbag = rng.sample_without_replacement(
                     static_cast<std::size_t>(n), std::min<std::size_t>(bag_size, n));
                 std::vector<std::uint32_t> rows = tree.inbag;
                 std::sort(rows.begin(), rows.end(),
                           [&](std::uint32_t a, std::uint32_t c) {
                             return data.y[a] != data.y[c] ? data.y[a] < data.y[c]
                                                           : a < c;
                           });
                 tree.nodes.emplace_back();
                 grow_node(ctx, tree, 0, std::move(rows), rng);
               });
  return model;
}

double evaluate_cdf(const CdfModel& model, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& z, double t) {
  if (t < 0.0) throw DataError("evaluate_cdf: t must be nonnegative");
  double total = 0.0;
  for (const auto& tree : model.trees) {
    total += leaf_chf_at(tree.nodes[leaf_for(tree, x, z, model.p)], t);
  }
  return chf_to_cdf(total / static_cast<double>(model.trees.size()));
}

double evaluate_cdf_oob(const CdfModel& model, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& z, double t, std::uint32_t row) {
  if (t < 0.0) throw DataError("evaluate_cdf: t must be nonnegative");
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& tree : model.trees) {
    if (std::binary_search(tree.inbag.begin(), tree.inbag.end(), row)) continue;
    total += leaf_chf_at(tree.nodes[leaf_for(tree, x, z, model.p)], t);
    ++used;
  }
  if (used == 0) throw NumericalError("no OOB trees");
  return chf_to_cdf(total / static_cast<double>(used));
}

RedistributionWeights redistribution_weights(const SurvivalDataset& data,
                                             const CdfModel& model, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  const Eigen::Index n = data.n();
  RedistributionWeights out;
  out.tau = tau;
  out.u.resize(n);
  out.f_at_y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = data.x.row(i).transpose();
    const Eigen::VectorXd zi = data.z.row(i).transpose();
    bool has_oob = false;
    for (const auto& tree : model.trees) {
      if (!std::binary_search(tree.inbag.begin(), tree.inbag.end(),
                              static_cast<std::uint32_t>(i))) {
        has_oob = true;
        break;
      }
    }
    double f = has_oob ? evaluate_cdf_oob(model, xi, zi, data.y[i],
                                          static_cast<std::uint32_t>(i))
                       : evaluate_cdf(model, xi, zi, data.y[i]);
    // Keep F strictly inside (0, 1) so u stays in the open interval (0, tau).
    f = std::min(std::max(f, 1e-12), 1.0 - kCdfClampEps);
    out.f_at_y[i] = f;
    if (data.delta[i] == 1 || f >= tau) {
      out.u[i] = 1.0;
    } else {
      out.u[i] = (tau - f) / (1.0 - f);
    }
  }
  return out;
}

WeightedQrProblem augment_pseudo_observations(const SurvivalDataset& data,
                                              const RedistributionWeights& weights,
                                              double tau) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.n());
  return augment_pseudo_observations(data.z, data.y, weights.u, ones,
                                     pseudo_response_bound(data), tau);
}

double pseudo_response_bound(const SurvivalDataset& data) {
  return 10.0 * data.y.maxCoeff();
}

}  // namespace hcqrf
