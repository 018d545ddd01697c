#pragma once

#include <string>

#include "hiersel/basis_dictionary.hpp"
#include "hiersel/data_io.hpp"
#include "hiersel/hierarchy.hpp"
#include "hiersel/lasso_path.hpp"
#include "hiersel/pruning.hpp"

// Text formats shared by the C interface and the CLI. JSON keys keep a fixed
// order so identical inputs give byte-identical files.
namespace hsel {

/// [{"factors": [{"var": 1, "kind": "step", "param": 0.5}, ...]}, ...]
/// Interval factors carry "param": [lo, hi].
std::string dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(const std::string& text);

/// {"dimension": p, "coefficients": [{"index": j, "value": v}, ...]}
std::string coefficients_to_json(const SparseCoefficients& beta);
SparseCoefficients coefficients_from_json(const std::string& text);

std::string prune_trace_to_json(const PruneTrace& trace);

/// Long format, header `T,col_index,coefficient`, one row per nonzero
/// coefficient per knot.
std::string path_to_csv(const RegularizationPath& path);
std::string thresholds_to_json(const RegularizationPath& path, std::size_t mark);

std::string truth_to_json(const SyntheticTruth& truth);

std::string hierarchy_config_to_json(const HierarchyConfig& config);
HierarchyConfig hierarchy_config_from_json(const std::string& text);

/// Per-iteration {m, dictionary_size, selected, r2, l1, ...} plus the chosen
/// iteration.
std::string hierarchy_report_to_json(const HierarchyResult& result, const HierarchyConfig& config);
/// {"descriptors": [...], "coefficients": [...], "intercept": b0}
std::string final_model_to_json(const FinalModel& model);
FinalModel final_model_from_json(const std::string& text);

}  // namespace hsel
