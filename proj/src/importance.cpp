#include "hcqrf/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "hcqrf/errors.hpp"
#include "hcqrf/parallel.hpp"
#include "hcqrf/rng.hpp"

namespace hcqrf {

namespace {

constexpr std::uint64_t kPermSeedTag = 0x5045524DULL;  // permutation substream namespace

// Leaf lookup for row `row` of `x`, with coordinate `override_var` (when >= 0)
// replaced by `override_val`.  Optionally records the split variables seen on
// the path.
std::uint32_t walk_leaf(const Tree& tree, const Eigen::MatrixXd& x, std::uint32_t row,
                        int override_var, double override_val,
                        std::vector<std::uint32_t>* vars) {
  std::size_t id = 0;
  while (tree.nodes[id].split_var >= 0) {
    const SplitNode& node = tree.nodes[id];
    if (vars != nullptr) vars->push_back(static_cast<std::uint32_t>(node.split_var));
    const double v =
        node.split_var == override_var ? override_val : x(row, node.split_var);
    id = static_cast<std::size_t>(v <= node.split_value ? node.left : node.right);
  }
  return static_cast<std::uint32_t>(id);
}

double row_loss(const SurvivalDataset& data, const Eigen::VectorXd& u, double y_inf,
                double tau, Eigen::Index i, const Eigen::VectorXd& beta) {
  const double fitted = data.z.row(i).dot(beta);
  const double ui = u(i);
  double loss = ui * pinball_loss(data.y(i) - fitted, tau);
  if (ui < 1.0) loss += (1.0 - ui) * pinball_loss(y_inf - fitted, tau);
  return loss;
}

// Everything about one training row that the permutation loop reuses.
struct RowCache {
  bool covered = false;
  std::vector<std::uint32_t> oob_trees;
  std::vector<std::uint32_t> leaf_ids;      // aligned with oob_trees
  std::vector<std::uint32_t> var_offsets;   // per-tree segments of vars_flat
  std::vector<std::uint32_t> vars_flat;     // sorted distinct path variables
  std::vector<std::uint32_t> tested_union;  // sorted union across OOB trees
  std::vector<std::uint32_t> support;       // baseline OOB weight support
  std::vector<double> support_w;
  Eigen::VectorXd beta;
  std::vector<int> basis;  // training ids; pseudo rows offset by n
  double base_loss = 0.0;
};

struct Workspace {
  Eigen::VectorXd dense;
  std::vector<std::uint32_t> touched;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> changes;  // (oob idx, leaf)
  std::vector<std::uint32_t> support;
  std::vector<double> support_w;
  std::vector<std::uint32_t> pseudo_src;
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  Eigen::VectorXd weight;
  std::vector<int> warm;
  QrSolver solver;
  QuantileFit fit;

  explicit Workspace(Eigen::Index n, Eigen::Index q)
      : dense(Eigen::VectorXd::Zero(n)), design(2 * n, q), response(2 * n), weight(2 * n) {}
};

bool contains(const std::vector<std::uint32_t>& sorted, std::uint32_t value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

// Assembles and solves the doubly-weighted problem for the given support.
// Returns false when the fit is unusable (support below the 5q floor or a
// degenerate design).
bool fit_support(const Forest& forest, const Eigen::VectorXd& u, double tau,
                 const std::vector<std::uint32_t>& support,
                 const std::vector<double>& support_w, const std::vector<int>* warm,
                 Workspace& ws) {
  const auto m0 = static_cast<Eigen::Index>(support.size());
  const Eigen::Index q = forest.data.q();
  if (m0 < 5 * q) return false;
  ws.pseudo_src.clear();
  for (Eigen::Index i = 0; i < m0; ++i) {
    const auto idx = support[static_cast<std::size_t>(i)];
    ws.design.row(i) = forest.data.z.row(idx);
    ws.response(i) = forest.data.y(idx);
    ws.weight(i) = support_w[static_cast<std::size_t>(i)] * u(idx);
  }
  Eigen::Index k = m0;
  for (Eigen::Index i = 0; i < m0; ++i) {
    const auto idx = support[static_cast<std::size_t>(i)];
    const double ui = u(idx);
    if (ui >= 1.0) continue;
    ws.design.row(k) = forest.data.z.row(idx);
    ws.response(k) = forest.y_inf;
    ws.weight(k) = support_w[static_cast<std::size_t>(i)] * (1.0 - ui);
    ws.pseudo_src.push_back(idx);
    ++k;
  }
  try {
    ws.solver.fit(ws.design.topRows(k), ws.response.head(k), ws.weight.head(k), tau,
                  ws.fit, warm);
  } catch (const NumericalError&) {
    return false;
  }
  return true;
}

// Maps a training-id basis onto problem-row indices of the current support;
// returns false when a basis row has left the support.
bool map_basis(const Forest& forest, const Eigen::VectorXd& u,
               const std::vector<std::uint32_t>& support, const std::vector<int>& basis,
               std::vector<int>& out) {
  const auto n = static_cast<int>(forest.data.n());
  out.clear();
  for (const int id : basis) {
    const auto target = static_cast<std::uint32_t>(id < n ? id : id - n);
    const auto it = std::lower_bound(support.begin(), support.end(), target);
    if (it == support.end() || *it != target) return false;
    const auto pos = static_cast<std::size_t>(it - support.begin());
    if (id < n) {
      out.push_back(static_cast<int>(pos));
    } else {
      if (u(target) >= 1.0) return false;
      std::size_t rank = 0;
      for (std::size_t h = 0; h < pos; ++h) {
        if (u(support[h]) < 1.0) ++rank;
      }
      out.push_back(static_cast<int>(support.size() + rank));
    }
  }
  return true;
}

struct EngineOutput {
  std::vector<double> total;  // per modifier
  std::vector<double> arm0;   // per modifier, normalized; binary only
  std::vector<double> arm1;
  int covered = 0;
  int skipped = 0;
  bool binary = false;
};

EngineOutput importance_engine(const Forest& forest, const SurvivalDataset& data,
                               double tau, int m_permutations, std::uint64_t seed,
                               bool decompose,
                               const std::vector<std::vector<std::uint32_t>>* injected) {
  if (m_permutations < 1) throw ConfigError("need at least one permutation");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  data.validate();
  if (data.n() != forest.data.n() || data.q() != forest.data.q() ||
      data.p() != forest.data.p()) {
    throw DataError("importance data does not match the fitted forest");
  }
  const auto n = data.n();
  const int p = static_cast<int>(data.p());
  const Eigen::Index q = data.q();
  const auto n_trees = forest.trees.size();
  const int M = m_permutations;

  bool binary = q == 2;
  if (binary) {
    for (Eigen::Index i = 0; i < n && binary; ++i) {
      const double z = data.z(i, 1);
      binary = z == 0.0 || z == 1.0;
    }
  }
  if (decompose && !binary) {
    throw ConfigError("decomposition requires binary treatment");
  }

  const Eigen::VectorXd u =
      tau == forest.tau ? forest.weights.u : redistribution_at(forest, tau);

  // ----- out-of-bag tree lists -----
  std::vector<RowCache> cache(static_cast<std::size_t>(n));
  {
    std::vector<char> inbag(static_cast<std::size_t>(n));
    for (std::size_t b = 0; b < n_trees; ++b) {
      std::fill(inbag.begin(), inbag.end(), 0);
      for (const auto row : forest.trees[b].inbag) inbag[row] = 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!inbag[static_cast<std::size_t>(i)]) {
          cache[static_cast<std::size_t>(i)].oob_trees.push_back(
              static_cast<std::uint32_t>(b));
        }
      }
    }
  }
  Eigen::Index with_oob = 0;
  for (const auto& rc : cache) {
    if (!rc.oob_trees.empty()) ++with_oob;
  }
  if (static_cast<double>(with_oob) < 0.95 * static_cast<double>(n)) {
    throw NumericalError("insufficient OOB coverage: " + std::to_string(with_oob) +
                         " of " + std::to_string(n) + " rows have out-of-bag trees");
  }

  // ----- per-row baselines -----
  parallel_for(static_cast<std::size_t>(n), forest.config.threads, [&](std::size_t i) {
    RowCache& rc = cache[i];
    if (rc.oob_trees.empty()) return;
    const auto row = static_cast<std::uint32_t>(i);
    const double inv_used = 1.0 / static_cast<double>(rc.oob_trees.size());
    std::vector<std::uint32_t> vars;
    rc.var_offsets.push_back(0);
    Eigen::VectorXd dense = Eigen::VectorXd::Zero(n);
    std::vector<std::uint32_t> touched;
    for (const auto b : rc.oob_trees) {
      const Tree& tree = forest.trees[b];
      vars.clear();
      const auto leaf = walk_leaf(tree, data.x, row, -1, 0.0, &vars);
      rc.leaf_ids.push_back(leaf);
      std::sort(vars.begin(), vars.end());
      vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
      rc.vars_flat.insert(rc.vars_flat.end(), vars.begin(), vars.end());
      rc.var_offsets.push_back(static_cast<std::uint32_t>(rc.vars_flat.size()));
      const auto& rows = tree.nodes[leaf].rows;
      const double share = inv_used / static_cast<double>(rows.size());
      for (const auto r : rows) {
        dense(r) += share;
        touched.push_back(r);
      }
    }
    rc.tested_union = rc.vars_flat;
    std::sort(rc.tested_union.begin(), rc.tested_union.end());
    rc.tested_union.erase(std::unique(rc.tested_union.begin(), rc.tested_union.end()),
                          rc.tested_union.end());
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (const auto r : touched) {
      rc.support.push_back(r);
      rc.support_w.push_back(dense(r));
    }
    Workspace ws(n, q);
    if (!fit_support(forest, u, tau, rc.support, rc.support_w, nullptr, ws)) return;
    rc.beta = ws.fit.beta;
    rc.basis.reserve(ws.fit.active_rows.size());
    const auto m0 = static_cast<int>(rc.support.size());
    for (const int pos : ws.fit.active_rows) {
      if (pos < m0) {
        rc.basis.push_back(static_cast<int>(rc.support[static_cast<std::size_t>(pos)]));
      } else {
        rc.basis.push_back(static_cast<int>(n) +
                           static_cast<int>(ws.pseudo_src[static_cast<std::size_t>(
                               pos - m0)]));
      }
    }
    rc.base_loss = row_loss(data, u, forest.y_inf, tau, static_cast<Eigen::Index>(i),
                            rc.beta);
    rc.covered = true;
  });

  std::vector<std::uint32_t> covered_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cache[static_cast<std::size_t>(i)].covered) {
      covered_rows.push_back(static_cast<std::uint32_t>(i));
    }
  }
  if (covered_rows.empty()) throw NumericalError("no rows with usable OOB estimates");

  // ----- permutation stream (shared across modifiers) -----
  std::vector<std::vector<std::uint32_t>> perms;
  if (injected != nullptr) {
    if (static_cast<int>(injected->size()) != M) {
      throw ConfigError("permutation hook must supply exactly M permutations");
    }
    std::vector<char> seen(static_cast<std::size_t>(n));
    for (const auto& perm : *injected) {
      if (perm.size() != static_cast<std::size_t>(n)) {
        throw ConfigError("injected permutation has wrong length");
      }
      std::fill(seen.begin(), seen.end(), 0);
      for (const auto v : perm) {
        if (v >= static_cast<std::uint32_t>(n) || seen[v]) {
          throw ConfigError("injected sequence is not a permutation");
        }
        seen[v] = 1;
      }
    }
    perms = *injected;
  } else {
    perms.reserve(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      Rng rng(mix_seed(seed, kPermSeedTag, static_cast<std::uint64_t>(m)));
      perms.push_back(rng.permutation(static_cast<std::uint32_t>(n)));
    }
  }

  // ----- arm counts -----
  Eigen::Index n0 = 0;
  Eigen::Index n1 = 0;
  if (binary) {
    for (const auto i : covered_rows) {
      if (data.z(i, 1) == 0.0) {
        ++n0;
      } else {
        ++n1;
      }
    }
  }
  if (decompose && (n0 == 0 || n1 == 0)) {
    throw DataError("decomposition requires both treatment arms");
  }

  // ----- permuted loss increments, one slot per (modifier, permutation) -----
  // Each slot accumulates per-row differences (permuted loss minus baseline
  // loss) so an unchanged row contributes exactly 0.0 regardless of
  // accumulation order.
  struct Slot {
    double z0 = 0.0;
    double z1 = 0.0;
    double all = 0.0;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(p) * static_cast<std::size_t>(M));
  const auto slot_count = slots.size();
  parallel_for_blocks(slot_count, forest.config.threads, [&](std::size_t lo,
                                                             std::size_t hi) {
    Workspace ws(n, q);
    for (std::size_t s = lo; s < hi; ++s) {
      const int k = static_cast<int>(s / static_cast<std::size_t>(M));
      const auto& perm = perms[s % static_cast<std::size_t>(M)];
      Slot acc;
      for (const auto i : covered_rows) {
        const RowCache& rc = cache[i];
        double loss = rc.base_loss;
        const auto uk = static_cast<std::uint32_t>(k);
        if (contains(rc.tested_union, uk)) {
          const double v = data.x(perm[i], k);
          if (v != data.x(i, k)) {
            ws.changes.clear();
            for (std::size_t t = 0; t < rc.oob_trees.size(); ++t) {
              const auto seg_lo = rc.vars_flat.begin() + rc.var_offsets[t];
              const auto seg_hi = rc.vars_flat.begin() + rc.var_offsets[t + 1];
              if (!std::binary_search(seg_lo, seg_hi, uk)) continue;
              const Tree& tree = forest.trees[rc.oob_trees[t]];
              const auto leaf = walk_leaf(tree, data.x, i, k, v, nullptr);
              if (leaf != rc.leaf_ids[t]) {
                ws.changes.emplace_back(static_cast<std::uint32_t>(t), leaf);
              }
            }
            if (!ws.changes.empty()) {
              // Rebuild the weight vector from the baseline support.
              ws.touched.assign(rc.support.begin(), rc.support.end());
              for (std::size_t j = 0; j < rc.support.size(); ++j) {
                ws.dense(rc.support[j]) = rc.support_w[j];
              }
              const double inv_used =
                  1.0 / static_cast<double>(rc.oob_trees.size());
              for (const auto& [t, leaf] : ws.changes) {
                const Tree& tree = forest.trees[rc.oob_trees[t]];
                const auto& old_rows = tree.nodes[rc.leaf_ids[t]].rows;
                const double old_share =
                    inv_used / static_cast<double>(old_rows.size());
                for (const auto r : old_rows) ws.dense(r) -= old_share;
                const auto& new_rows = tree.nodes[leaf].rows;
                const double new_share =
                    inv_used / static_cast<double>(new_rows.size());
                for (const auto r : new_rows) {
                  ws.dense(r) += new_share;
                  ws.touched.push_back(r);
                }
              }
              std::sort(ws.touched.begin(), ws.touched.end());
              ws.touched.erase(std::unique(ws.touched.begin(), ws.touched.end()),
                               ws.touched.end());
              ws.support.clear();
              ws.support_w.clear();
              for (const auto r : ws.touched) {
                const double w = ws.dense(r);
                ws.dense(r) = 0.0;
                if (w > 0.0) {
                  ws.support.push_back(r);
                  ws.support_w.push_back(w);
                }
              }
              const std::vector<int>* warm = nullptr;
              if (map_basis(forest, u, ws.support, rc.basis, ws.warm)) {
                warm = &ws.warm;
              }
              if (fit_support(forest, u, tau, ws.support, ws.support_w, warm, ws)) {
                loss = row_loss(data, u, forest.y_inf, tau,
                                static_cast<Eigen::Index>(i), ws.fit.beta);
              }
            }
          }
        }
        const double diff = loss - rc.base_loss;
        if (binary) {
          if (data.z(i, 1) == 0.0) {
            acc.z0 += diff;
          } else {
            acc.z1 += diff;
          }
        } else {
          acc.all += diff;
        }
      }
      if (binary) acc.all = acc.z0 + acc.z1;
      slots[s] = acc;
    }
  });

  // ----- reduction -----
  EngineOutput out;
  out.binary = binary;
  out.covered = static_cast<int>(covered_rows.size());
  out.skipped = static_cast<int>(n) - out.covered;
  out.total.resize(static_cast<std::size_t>(p));
  if (binary) {
    out.arm0.resize(static_cast<std::size_t>(p));
    out.arm1.resize(static_cast<std::size_t>(p));
  }
  const double inv_m = 1.0 / static_cast<double>(M);
  for (int k = 0; k < p; ++k) {
    double sum_all = 0.0;
    double sum_z0 = 0.0;
    double sum_z1 = 0.0;
    for (int m = 0; m < M; ++m) {
      const Slot& slot =
          slots[static_cast<std::size_t>(k) * static_cast<std::size_t>(M) +
                static_cast<std::size_t>(m)];
      sum_all += slot.all;
      sum_z0 += slot.z0;
      sum_z1 += slot.z1;
    }
    out.total[static_cast<std::size_t>(k)] = inv_m * sum_all;
    if (binary) {
      out.arm0[static_cast<std::size_t>(k)] =
          inv_m * sum_z0 / static_cast<double>(n0);
      out.arm1[static_cast<std::size_t>(k)] =
          inv_m * sum_z1 / static_cast<double>(n1);
    }
  }
  return out;
}

}  // namespace

QuantileFit oob_beta(const Forest& forest, std::uint32_t row, const Eigen::VectorXd& x,
                     double tau) {
  const ForestWeightVector weights = forest_weights_oob(forest, x, row);
  const Eigen::VectorXd u =
      tau == forest.tau ? forest.weights.u : redistribution_at(forest, tau);
  return fit_at_weights(forest, weights, u, tau);
}

std::vector<double> permutation_importance(
    const Forest& forest, const SurvivalDataset& data, double tau, int m_permutations,
    std::uint64_t seed, const std::vector<std::vector<std::uint32_t>>* permutations) {
  return importance_engine(forest, data, tau, m_permutations, seed, false, permutations)
      .total;
}

ImportanceReport decomposed_importance(
    const Forest& forest, const SurvivalDataset& data, double tau, int m_permutations,
    std::uint64_t seed, const std::vector<std::vector<std::uint32_t>>* permutations) {
  const EngineOutput engine =
      importance_engine(forest, data, tau, m_permutations, seed, true, permutations);
  ImportanceReport report;
  report.m_permutations = m_permutations;
  report.tau = tau;
  report.covered_rows = engine.covered;
  report.skipped_rows = engine.skipped;
  report.decomposed = true;
  const auto p = engine.total.size();
  report.entries.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    ImportanceEntry& entry = report.entries[k];
    entry.modifier = k < data.modifier_names.size() ? data.modifier_names[k]
                                                    : "x_" + std::to_string(k + 1);
    entry.total_vi = engine.total[k];
    entry.vi_z0 = engine.arm0[k];
    entry.vi_z1 = engine.arm1[k];
    entry.interaction_vi = std::abs(entry.vi_z1 - entry.vi_z0);
  }
  return report;
}

}  // namespace hcqrf
