#pragma once

#include <string>

#include "hcqrf/forest.hpp"
#include "hcqrf/survival_forest.hpp"

namespace hcqrf {

struct LoadedModel {
  Forest forest;
  CdfModel cdf;
};

// Single self-describing JSON document: quantile forest, censoring-CDF
// forest, redistribution weights, training data, and configs behind a format
// version.  Deterministic fits produce byte-identical files; numeric values
// round-trip exactly.  The runtime thread counts are deliberately excluded.
std::string model_to_json(const Forest& forest, const CdfModel& cdf);

void save_model(const Forest& forest, const CdfModel& cdf, const std::string& path);

LoadedModel model_from_json(const std::string& text);

LoadedModel load_model(const std::string& path);

}  // namespace hcqrf
