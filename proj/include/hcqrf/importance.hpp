#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hcqrf/forest.hpp"

namespace hcqrf {

struct ImportanceEntry {
  std::string modifier;
  double total_vi = 0.0;       // mean loss increase, summed over rows
  double vi_z0 = 0.0;          // arm-size-normalized loss increase, Z = 0
  double vi_z1 = 0.0;          // arm-size-normalized loss increase, Z = 1
  double interaction_vi = 0.0;  // |vi_z1 - vi_z0|
};

struct ImportanceReport {
  std::vector<ImportanceEntry> entries;  // one per modifier, column order
  int m_permutations = 0;
  double tau = 0.5;
  int covered_rows = 0;  // rows entering the loss sums
  int skipped_rows = 0;  // rows without OOB trees or with unusable fits
  bool decomposed = false;
};

// Coefficient estimate at x using only trees where `row` is out-of-bag.
QuantileFit oob_beta(const Forest& forest, std::uint32_t row, const Eigen::VectorXd& x,
                     double tau);

// Mean increase of the out-of-bag censored pinball loss when modifier k is
// shuffled, per modifier, over m_permutations shared shuffles.  The optional
// `permutations` hook injects explicit row permutations for testing.
std::vector<double> permutation_importance(
    const Forest& forest, const SurvivalDataset& data, double tau, int m_permutations,
    std::uint64_t seed,
    const std::vector<std::vector<std::uint32_t>>* permutations = nullptr);

// Adds the per-arm decomposition for binary treatments; the same permutation
// stream drives the totals and both arms.
ImportanceReport decomposed_importance(
    const Forest& forest, const SurvivalDataset& data, double tau, int m_permutations,
    std::uint64_t seed,
    const std::vector<std::vector<std::uint32_t>>* permutations = nullptr);

}  // namespace hcqrf
